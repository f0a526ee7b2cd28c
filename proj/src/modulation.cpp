// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/modulation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dvi {

ModulationVector broadcast(const std::vector<double>& v_ctx, std::size_t target_dim) {
    if (v_ctx.empty()) {
        throw std::invalid_argument("broadcast: v_ctx must not be empty");
    }
    if (target_dim == 0) {
        throw std::invalid_argument("broadcast: target dim must be positive");
    }
    ModulationVector m;
    m.values.resize(target_dim);
    for (std::size_t i = 0; i < target_dim; ++i) {
        m.values[i] = v_ctx[i % v_ctx.size()];
    }
    return m;
}

std::vector<double> token_norm(std::span<const float> row, double eps_norm) {
    if (row.size() < 2) {
        throw std::invalid_argument("token_norm: need at least 2 elements, got " +
                                    std::to_string(row.size()));
    }
    if (eps_norm <= 0.0) {
        throw std::invalid_argument("token_norm: eps must be positive");
    }
    double sum = 0.0;
    for (float v : row) {
        sum += static_cast<double>(v);
    }
    const double mean = sum / static_cast<double>(row.size());
    double sq = 0.0;
    for (float v : row) {
        const double d = static_cast<double>(v) - mean;
        sq += d * d;
    }
    const double denom = std::sqrt(sq / static_cast<double>(row.size()) + eps_norm);

    std::vector<double> out(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
        out[i] = (static_cast<double>(row[i]) - mean) / denom;
    }
    return out;
}

NormalizedId normalize_tokens(const TokenMatrix& id, double eps_norm) {
    NormalizedId norm;
    norm.tokens = id.rows;
    norm.dim = id.cols;
    norm.values.resize(static_cast<std::size_t>(id.rows) * id.cols);
    for (std::uint32_t r = 0; r < id.rows; ++r) {
        const auto row_vals = token_norm(std::span<const float>(id.row(r), id.cols), eps_norm);
        std::copy(row_vals.begin(), row_vals.end(),
                  norm.values.begin() + static_cast<std::size_t>(r) * id.cols);
    }
    return norm;
}

TokenMatrix FusedEmbedding::to_token_matrix() const {
    TokenMatrix m(tokens, dim);
    for (std::size_t i = 0; i < values.size(); ++i) {
        m.data[i] = static_cast<float>(values[i]);
    }
    return m;
}

FusedEmbedding pffm_from_normalized(const NormalizedId& norm_id, const ModulationVector& m_vis,
                                    double lambda_t, double psi) {
    if (m_vis.dim() != norm_id.dim) {
        throw std::invalid_argument("pffm: modulation dim " + std::to_string(m_vis.dim()) +
                                    " does not match token dim " + std::to_string(norm_id.dim));
    }
    if (lambda_t < 0.0) {
        throw std::invalid_argument("pffm: lambda must be non-negative");
    }

    FusedEmbedding fused;
    fused.tokens = norm_id.tokens;
    fused.dim = norm_id.dim;
    fused.lambda_applied = lambda_t;
    fused.psi_coeff = psi;
    fused.values.resize(norm_id.values.size());

    if (lambda_t == 0.0) {
        fused.values = norm_id.values;
        return fused;
    }

    const double scale = lambda_t * psi;
    for (std::uint32_t r = 0; r < norm_id.tokens; ++r) {
        const double* src = norm_id.row(r);
        double* dst = fused.values.data() + static_cast<std::size_t>(r) * norm_id.dim;
        for (std::uint32_t i = 0; i < norm_id.dim; ++i) {
            dst[i] = src[i] + scale * m_vis.values[i];
        }
    }
    return fused;
}

FusedEmbedding pffm(const TokenMatrix& f_id, const ModulationVector& m_vis, double lambda_t,
                    double psi, double eps_norm) {
    return pffm_from_normalized(normalize_tokens(f_id, eps_norm), m_vis, lambda_t, psi);
}

TokenMatrix concat_baseline(const TokenMatrix& f_id, const ModulationVector& m_vis) {
    if (m_vis.dim() != f_id.cols) {
        throw std::invalid_argument("concat_baseline: modulation dim does not match token dim");
    }
    TokenMatrix out(f_id.rows + 1, f_id.cols);
    std::copy(f_id.data.begin(), f_id.data.end(), out.data.begin());
    float* tail = out.row(f_id.rows);
    for (std::uint32_t i = 0; i < f_id.cols; ++i) {
        tail[i] = static_cast<float>(m_vis.values[i]);
    }
    return out;
}

namespace {

double l2_norm(const float* row, std::uint32_t n) {
    double sq = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(row[i]);
        sq += v * v;
    }
    return std::sqrt(sq);
}

}  // namespace

ConcatDiagnostics concat_diagnostics(const TokenMatrix& concatenated) {
    if (concatenated.rows < 2) {
        throw std::invalid_argument("concat_diagnostics: need at least one ID token plus the tail");
    }
    ConcatDiagnostics d;
    d.appended_token_norm = l2_norm(concatenated.row(concatenated.rows - 1), concatenated.cols);
    double sum = 0.0;
    for (std::uint32_t r = 0; r + 1 < concatenated.rows; ++r) {
        sum += l2_norm(concatenated.row(r), concatenated.cols);
    }
    d.mean_id_token_norm = sum / static_cast<double>(concatenated.rows - 1);
    return d;
}

}  // namespace dvi
