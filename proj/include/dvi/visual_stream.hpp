// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "dvi/rng.hpp"
#include "dvi/tensor.hpp"

namespace dvi {

/// Geometry of shortest-edge scaling followed by a center crop to S x S.
/// Scaled dims use round-half-up; the shorter side lands on S exactly.
struct CropPlan {
    std::uint32_t src_h = 0;
    std::uint32_t src_w = 0;
    std::uint32_t scaled_h = 0;
    std::uint32_t scaled_w = 0;
    std::uint32_t crop_top = 0;
    std::uint32_t crop_left = 0;
    std::uint32_t target = 0;  // S
};

CropPlan plan_crop(std::uint32_t src_h, std::uint32_t src_w, std::uint32_t target);

/// Fixed channel-mixing matrix for the stand-in encoder. Seeded rows are
/// normalized to sum to 1, so constant inputs map to constant latents.
struct MixingMatrix {
    std::uint32_t out_channels = 0;
    std::uint32_t in_channels = 0;
    std::vector<double> weights;  // row-major out x in

    double at(std::uint32_t o, std::uint32_t i) const {
        return weights[static_cast<std::size_t>(o) * in_channels + i];
    }

    static MixingMatrix seeded(const SeededGenerator& gen, std::uint32_t out_channels,
                               std::uint32_t in_channels = 3);
    static MixingMatrix identity(std::uint32_t n);
};

/// Deterministic encoder surrogate: center crop per plan, f x f block
/// averaging per input channel, then the channel mix. Output is
/// out_channels x S/f x S/f. The pixel array must already be rasterized at
/// the plan's scaled dims; factor must divide S.
LatentTensor mock_encode(const LatentTensor& pixels, const CropPlan& plan,
                         const MixingMatrix& mixing, std::uint32_t factor = 8);

/// Per-channel spatial statistics of a latent. sigma_c includes the eps
/// stabilizer inside the square root, so sigma_c >= sqrt(eps) always.
struct VisualContext {
    std::vector<double> mu;
    std::vector<double> sigma;
    double eps = 1e-6;

    std::size_t channel_count() const { return mu.size(); }

    /// Concatenated descriptor: [mu | sigma], length 2C.
    std::vector<double> v_ctx() const;
};

/// mu_c = mean over space, sigma_c = sqrt(population variance + eps).
/// All accumulation is 64-bit.
VisualContext extract_stats(const LatentTensor& z, double eps = 1e-6);

void to_json(nlohmann::json& j, const VisualContext& v);
void from_json(const nlohmann::json& j, VisualContext& v);

}  // namespace dvi
