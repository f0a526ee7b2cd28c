// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dvi/tensor.hpp"

namespace dvi {

/// v_ctx tiled out to length D: values[i] = v_ctx[i mod 2C].
struct ModulationVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

ModulationVector broadcast(const std::vector<double>& v_ctx, std::size_t target_dim);

/// Affine-free layer normalization of one token row: subtract the mean,
/// divide by sqrt(population variance + eps_norm). Rows shorter than 2 are
/// rejected. Arithmetic and result stay in 64-bit.
std::vector<double> token_norm(std::span<const float> row, double eps_norm = 1e-5);

/// Norm(f_id) for all rows, cached once since it does not depend on t.
struct NormalizedId {
    std::uint32_t tokens = 0;
    std::uint32_t dim = 0;
    std::vector<double> values;  // row-major

    const double* row(std::uint32_t r) const { return values.data() + static_cast<std::size_t>(r) * dim; }
};

NormalizedId normalize_tokens(const TokenMatrix& id, double eps_norm = 1e-5);

/// Modulated embedding: row r = Norm(f_id[r]) + (lambda * psi) * m_vis.
/// Values are kept in 64-bit working precision; to_token_matrix() narrows
/// to the 32-bit storage format for serialization.
///
/// Canonical arithmetic order (tests reconstruct it bit-for-bit):
///   scale = lambda_applied * psi_coeff
///   value[r][i] = norm[r][i] + scale * m_vis[i]
/// and a zero lambda returns the normalized rows unchanged.
struct FusedEmbedding {
    std::uint32_t tokens = 0;
    std::uint32_t dim = 0;
    std::vector<double> values;  // row-major
    double lambda_applied = 0.0;
    double psi_coeff = 0.5;

    const double* row(std::uint32_t r) const { return values.data() + static_cast<std::size_t>(r) * dim; }

    TokenMatrix to_token_matrix() const;
};

FusedEmbedding pffm(const TokenMatrix& f_id, const ModulationVector& m_vis, double lambda_t,
                    double psi = 0.5, double eps_norm = 1e-5);

FusedEmbedding pffm_from_normalized(const NormalizedId& norm_id, const ModulationVector& m_vis,
                                    double lambda_t, double psi = 0.5);

/// Concatenation baseline: the N ID tokens followed by m_vis as one extra
/// token, nothing normalized. Exists to measure the distribution mismatch
/// that modulation avoids.
TokenMatrix concat_baseline(const TokenMatrix& f_id, const ModulationVector& m_vis);

struct ConcatDiagnostics {
    double appended_token_norm = 0.0;
    double mean_id_token_norm = 0.0;
};

/// L2 norms of the appended token vs. the mean over the preceding ID tokens.
ConcatDiagnostics concat_diagnostics(const TokenMatrix& concatenated);

}  // namespace dvi
