// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "dvi/semantic_stream.hpp"
#include "oracles.hpp"

using namespace dvi;

namespace {

SemanticConfig toy_config() {
    SemanticConfig cfg;
    cfg.feature_dim = 32;
    cfg.local_tokens = 4;
    cfg.total_tokens = 8;
    cfg.embed_dim = 64;
    return cfg;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

TEST_CASE("the same label replays identical features") {
    const SeededGenerator gen(303);
    const RawIdFeatures a = mock_extract("alice", gen, toy_config());
    const RawIdFeatures b = mock_extract("alice", gen, toy_config());
    CHECK(a.global_feature == b.global_feature);
    CHECK(a.local_features.data == b.local_features.data);
}

TEST_CASE("distinct labels diverge") {
    const SeededGenerator gen(303);
    const RawIdFeatures alice = mock_extract("alice", gen, toy_config());
    const RawIdFeatures bob = mock_extract("bob", gen, toy_config());
    CHECK(cosine(alice.global_feature, bob.global_feature) < 1.0);
    CHECK(alice.global_feature != bob.global_feature);
}

TEST_CASE("the same label under different seeds diverges") {
    const RawIdFeatures a = mock_extract("alice", SeededGenerator(1), toy_config());
    const RawIdFeatures b = mock_extract("alice", SeededGenerator(2), toy_config());
    CHECK(a.global_feature != b.global_feature);
}

TEST_CASE("features respect the configured clamp") {
    SemanticConfig cfg = toy_config();
    cfg.clamp = 2.0;
    const RawIdFeatures raw = mock_extract("clamped", SeededGenerator(9), cfg);
    for (float v : raw.global_feature) {
        CHECK(std::abs(v) <= 2.0f);
    }
    for (float v : raw.local_features.data) {
        CHECK(std::abs(v) <= 2.0f);
    }
}

TEST_CASE("empty labels and bad configs are rejected") {
    CHECK_THROWS_AS(mock_extract("", SeededGenerator(1), toy_config()), std::invalid_argument);
    SemanticConfig bad = toy_config();
    bad.local_tokens = 9;  // exceeds total_tokens
    CHECK_THROWS_AS(mock_extract("x", SeededGenerator(1), bad), std::invalid_argument);
}

TEST_CASE("zero raw features project to the offset exactly") {
    const SemanticConfig cfg = toy_config();
    const FrozenProjection proj = FrozenProjection::seeded(SeededGenerator(7), cfg);
    RawIdFeatures raw;
    raw.global_feature.assign(cfg.feature_dim, 0.0f);
    raw.local_features = TokenMatrix(cfg.local_tokens, cfg.feature_dim);
    const IdEmbedding id = fuse_project(raw, proj);
    REQUIRE(id.matrix.rows == cfg.total_tokens);
    for (std::uint32_t r = 0; r < id.matrix.rows; ++r) {
        for (std::uint32_t d = 0; d < cfg.embed_dim; ++d) {
            CHECK(id.matrix.at(r, d) == proj.delta_offset[d]);
        }
    }
}

TEST_CASE("identity projection with zero offset passes local rows through") {
    SemanticConfig cfg;
    cfg.feature_dim = 16;
    cfg.embed_dim = 16;
    cfg.local_tokens = 2;
    cfg.total_tokens = 4;

    FrozenProjection proj;
    proj.feature_dim = 16;
    proj.embed_dim = 16;
    proj.delta_offset.assign(16, 0.0f);
    for (std::uint32_t slot = 0; slot < 4; ++slot) {
        TokenMatrix eye(16, 16);
        for (std::uint32_t i = 0; i < 16; ++i) {
            eye.at(i, i) = 1.0f;
        }
        proj.slot_weights.push_back(std::move(eye));
    }

    const RawIdFeatures raw = mock_extract("alice", SeededGenerator(3), cfg);
    const IdEmbedding id = fuse_project(raw, proj);
    for (std::uint32_t r = 0; r < 2; ++r) {
        for (std::uint32_t d = 0; d < 16; ++d) {
            CHECK(id.matrix.at(r, d) == raw.local_features.at(r, d));
        }
    }
    for (std::uint32_t r = 2; r < 4; ++r) {
        for (std::uint32_t d = 0; d < 16; ++d) {
            CHECK(id.matrix.at(r, d) == raw.global_feature[d]);
        }
    }
}

TEST_CASE("projection matches the compensated mat-vec oracle at both embed widths") {
    for (const std::uint32_t embed_dim : {64u, 2048u}) {
        SemanticConfig cfg;
        cfg.feature_dim = 512;
        cfg.embed_dim = embed_dim;
        const RawIdFeatures raw = mock_extract("oracle", SeededGenerator(21), cfg);
        const FrozenProjection proj = FrozenProjection::seeded(SeededGenerator(22), cfg);
        const IdEmbedding id = fuse_project(raw, proj);

        REQUIRE(id.matrix.rows == cfg.total_tokens);
        REQUIRE(id.matrix.cols == embed_dim);
        for (std::uint32_t slot = 0; slot < cfg.total_tokens; ++slot) {
            const std::span<const float> src =
                slot < cfg.local_tokens
                    ? std::span<const float>(raw.local_features.row(slot), cfg.feature_dim)
                    : std::span<const float>(raw.global_feature);
            const std::vector<double> ref = oracle::matvec(proj.slot_weights[slot], src);
            for (std::uint32_t d = 0; d < embed_dim; ++d) {
                const double expected = ref[d] + proj.delta_offset[d];
                CHECK(std::abs(id.matrix.at(slot, d) - expected) < 1e-5);
            }
        }
    }
}

TEST_CASE("projection is linear in the raw features") {
    const SemanticConfig cfg = toy_config();
    const FrozenProjection proj = FrozenProjection::seeded(SeededGenerator(5), cfg);
    const RawIdFeatures raw = mock_extract("linear", SeededGenerator(6), cfg);

    RawIdFeatures scaled = raw;
    const float a = 1.75f;
    for (float& v : scaled.global_feature) {
        v *= a;
    }
    for (float& v : scaled.local_features.data) {
        v *= a;
    }

    const IdEmbedding base = fuse_project(raw, proj);
    const IdEmbedding big = fuse_project(scaled, proj);
    for (std::uint32_t r = 0; r < cfg.total_tokens; ++r) {
        for (std::uint32_t d = 0; d < cfg.embed_dim; ++d) {
            const double lhs = static_cast<double>(big.matrix.at(r, d)) - proj.delta_offset[d];
            const double rhs =
                a * (static_cast<double>(base.matrix.at(r, d)) - proj.delta_offset[d]);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
        }
    }
}

TEST_CASE("local and global features feed disjoint token ranges") {
    const SemanticConfig cfg = toy_config();
    const FrozenProjection proj = FrozenProjection::seeded(SeededGenerator(5), cfg);
    const RawIdFeatures raw = mock_extract("split", SeededGenerator(6), cfg);
    const IdEmbedding base = fuse_project(raw, proj);

    RawIdFeatures no_local = raw;
    std::fill(no_local.local_features.data.begin(), no_local.local_features.data.end(), 0.0f);
    const IdEmbedding globals_only = fuse_project(no_local, proj);
    for (std::uint32_t r = 0; r < cfg.local_tokens; ++r) {
        for (std::uint32_t d = 0; d < cfg.embed_dim; ++d) {
            CHECK(globals_only.matrix.at(r, d) == proj.delta_offset[d]);
        }
    }
    for (std::uint32_t r = cfg.local_tokens; r < cfg.total_tokens; ++r) {
        for (std::uint32_t d = 0; d < cfg.embed_dim; ++d) {
            CHECK(globals_only.matrix.at(r, d) == base.matrix.at(r, d));
        }
    }

    RawIdFeatures no_global = raw;
    std::fill(no_global.global_feature.begin(), no_global.global_feature.end(), 0.0f);
    const IdEmbedding locals_only = fuse_project(no_global, proj);
    for (std::uint32_t r = 0; r < cfg.local_tokens; ++r) {
        for (std::uint32_t d = 0; d < cfg.embed_dim; ++d) {
            CHECK(locals_only.matrix.at(r, d) == base.matrix.at(r, d));
        }
    }
    for (std::uint32_t r = cfg.local_tokens; r < cfg.total_tokens; ++r) {
        for (std::uint32_t d = 0; d < cfg.embed_dim; ++d) {
            CHECK(locals_only.matrix.at(r, d) == proj.delta_offset[d]);
        }
    }
}

TEST_CASE("mismatched projection input width names both dims") {
    const SemanticConfig cfg = toy_config();
    const FrozenProjection proj = FrozenProjection::seeded(SeededGenerator(5), cfg);
    SemanticConfig other = cfg;
    other.feature_dim = 48;
    const RawIdFeatures raw = mock_extract("x", SeededGenerator(6), other);
    CHECK_THROWS_WITH_AS(fuse_project(raw, proj), doctest::Contains("48"),
                         std::invalid_argument);
}

TEST_CASE("identical seeds rebuild identical projections") {
    const SemanticConfig cfg = toy_config();
    const FrozenProjection a = FrozenProjection::seeded(SeededGenerator(50), cfg);
    const FrozenProjection b = FrozenProjection::seeded(SeededGenerator(50), cfg);
    CHECK(a.delta_offset == b.delta_offset);
    for (std::uint32_t slot = 0; slot < cfg.total_tokens; ++slot) {
        CHECK(a.slot_weights[slot].data == b.slot_weights[slot].data);
    }
    const FrozenProjection c = FrozenProjection::seeded(SeededGenerator(51), cfg);
    CHECK(a.slot_weights[0].data != c.slot_weights[0].data);
}
