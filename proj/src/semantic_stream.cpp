// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/semantic_stream.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dvi {

namespace {

void check_config(const SemanticConfig& cfg) {
    if (cfg.feature_dim == 0 || cfg.embed_dim == 0) {
        throw std::invalid_argument("semantic config: dimensions must be positive");
    }
    if (cfg.total_tokens == 0 || cfg.local_tokens == 0 || cfg.local_tokens > cfg.total_tokens) {
        throw std::invalid_argument("semantic config: need 0 < local_tokens <= total_tokens");
    }
    if (cfg.clamp <= 0.0) {
        throw std::invalid_argument("semantic config: clamp must be positive");
    }
}

}  // namespace

RawIdFeatures mock_extract(const std::string& identity_label, const SeededGenerator& gen,
                           const SemanticConfig& cfg) {
    if (identity_label.empty()) {
        throw std::invalid_argument("mock_extract: identity label must not be empty");
    }
    check_config(cfg);

    SeededGenerator local = gen.derive("identity:" + identity_label);
    RawIdFeatures raw;
    raw.global_feature.resize(cfg.feature_dim);
    local.fill_gaussian(raw.global_feature, 1.0, cfg.clamp);

    raw.local_features = TokenMatrix(cfg.local_tokens, cfg.feature_dim);
    local.fill_gaussian(raw.local_features.data, 1.0, cfg.clamp);
    return raw;
}

FrozenProjection FrozenProjection::seeded(const SeededGenerator& gen, const SemanticConfig& cfg) {
    check_config(cfg);

    FrozenProjection proj;
    proj.feature_dim = cfg.feature_dim;
    proj.embed_dim = cfg.embed_dim;
    proj.slot_weights.reserve(cfg.total_tokens);

    const double weight_scale = 1.0 / std::sqrt(static_cast<double>(cfg.feature_dim));
    for (std::uint32_t slot = 0; slot < cfg.total_tokens; ++slot) {
        SeededGenerator slot_gen = gen.derive("projection.slot" + std::to_string(slot));
        TokenMatrix w(cfg.embed_dim, cfg.feature_dim);
        slot_gen.fill_gaussian(w.data, weight_scale, 0.0);
        proj.slot_weights.push_back(std::move(w));
    }

    SeededGenerator offset_gen = gen.derive("projection.offset");
    proj.delta_offset.resize(cfg.embed_dim);
    offset_gen.fill_gaussian(proj.delta_offset,
                             0.01 / std::sqrt(static_cast<double>(cfg.embed_dim)), 0.0);
    return proj;
}

IdEmbedding fuse_project(const RawIdFeatures& raw, const FrozenProjection& proj) {
    if (proj.slot_weights.empty()) {
        throw std::invalid_argument("fuse_project: projection has no token slots");
    }
    if (raw.global_feature.size() != proj.feature_dim) {
        throw std::invalid_argument("fuse_project: global feature width " +
                                    std::to_string(raw.global_feature.size()) +
                                    " does not match projection input " +
                                    std::to_string(proj.feature_dim));
    }
    if (raw.local_features.cols != proj.feature_dim) {
        throw std::invalid_argument("fuse_project: local feature width does not match projection");
    }
    const std::uint32_t total = static_cast<std::uint32_t>(proj.slot_weights.size());
    if (raw.local_features.rows > total) {
        throw std::invalid_argument("fuse_project: more local rows than token slots");
    }

    IdEmbedding out;
    out.matrix = TokenMatrix(total, proj.embed_dim);
    for (std::uint32_t slot = 0; slot < total; ++slot) {
        const TokenMatrix& w = proj.slot_weights[slot];
        if (w.rows != proj.embed_dim || w.cols != proj.feature_dim) {
            throw std::invalid_argument("fuse_project: slot weight shape mismatch");
        }
        const float* src = slot < raw.local_features.rows ? raw.local_features.row(slot)
                                                          : raw.global_feature.data();
        float* dst = out.matrix.row(slot);
        for (std::uint32_t d = 0; d < proj.embed_dim; ++d) {
            double acc = static_cast<double>(proj.delta_offset[d]);
            const float* wrow = w.row(d);
            for (std::uint32_t g = 0; g < proj.feature_dim; ++g) {
                acc += static_cast<double>(wrow[g]) * static_cast<double>(src[g]);
            }
            dst[d] = static_cast<float>(acc);
        }
    }
    return out;
}

}  // namespace dvi
