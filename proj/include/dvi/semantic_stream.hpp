// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dvi/rng.hpp"
#include "dvi/tensor.hpp"

namespace dvi {

struct SemanticConfig {
    std::uint32_t feature_dim = 512;  // G
    std::uint32_t local_tokens = 4;   // K
    std::uint32_t total_tokens = 8;   // N; tokens K..N-1 derive from the global feature
    std::uint32_t embed_dim = 2048;   // D
    double clamp = 4.0;               // |feature| bound for the stand-in extractor
};

/// Multi-level features from the stand-in extractor: one global vector and
/// K local rows, all of width G.
struct RawIdFeatures {
    std::vector<float> global_feature;
    TokenMatrix local_features;  // K x G
};

/// Features are a pure function of (label, gen.seed, cfg): the label is
/// hashed into a sub-seed, so equal labels replay and distinct labels
/// diverge. Empty labels are rejected.
RawIdFeatures mock_extract(const std::string& identity_label, const SeededGenerator& gen,
                           const SemanticConfig& cfg = {});

/// Frozen seeded linear maps G -> D, one per token slot, plus the shared
/// residual offset. Weight scale 1/sqrt(G); offset scale 0.01/sqrt(D).
struct FrozenProjection {
    std::uint32_t feature_dim = 0;          // G
    std::uint32_t embed_dim = 0;            // D
    std::vector<TokenMatrix> slot_weights;  // N matrices, each D x G
    std::vector<float> delta_offset;        // length D

    static FrozenProjection seeded(const SeededGenerator& gen, const SemanticConfig& cfg = {});
};

/// N x D identity embedding: slot k < K maps local row k, remaining slots
/// map the global feature; every token gets delta_offset added.
struct IdEmbedding {
    TokenMatrix matrix;
};

IdEmbedding fuse_project(const RawIdFeatures& raw, const FrozenProjection& proj);

}  // namespace dvi
