// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "dvi/dit.hpp"
#include "dvi/modulation.hpp"
#include "dvi/synth.hpp"
#include "oracles.hpp"

using namespace dvi;

namespace {

DitConfig toy_config() {
    DitConfig cfg;
    cfg.d_model = 16;
    cfg.heads = 2;
    cfg.layers = 2;
    cfg.patch = 2;
    cfg.id_dim = 32;
    cfg.weight_seed = 202;
    return cfg;
}

TokenMatrix identity_matrix(std::uint32_t n) {
    TokenMatrix m(n, n);
    for (std::uint32_t i = 0; i < n; ++i) {
        m.at(i, i) = 1.0f;
    }
    return m;
}

FusedEmbedding as_fused(const TokenMatrix& m) {
    FusedEmbedding f;
    f.tokens = m.rows;
    f.dim = m.cols;
    f.values.assign(m.data.begin(), m.data.end());
    return f;
}

}  // namespace

TEST_CASE("patch extraction counts and layout") {
    const LatentTensor z = synth_latent(SeededGenerator(1), 16, 4, 4, SynthFamily::gaussian);
    const TokenMatrix tokens = extract_patches(z, 2);
    CHECK(tokens.rows == 4);
    CHECK(tokens.cols == 64);

    // token (bi, bj) holds the patch flattened channel-major
    CHECK(tokens.at(0, 0) == z.at(0, 0, 0));
    CHECK(tokens.at(0, 1) == z.at(0, 0, 1));
    CHECK(tokens.at(0, 2) == z.at(0, 1, 0));
    CHECK(tokens.at(0, 3) == z.at(0, 1, 1));
    CHECK(tokens.at(0, 4) == z.at(1, 0, 0));
    CHECK(tokens.at(3, 0) == z.at(0, 2, 2));
}

TEST_CASE("token count is the patch-squared quotient for valid configs") {
    for (const std::uint32_t p : {1u, 2u, 4u}) {
        const LatentTensor z = synth_latent(SeededGenerator(2), 3, 8, 8, SynthFamily::uniform);
        CHECK(extract_patches(z, p).rows == (8 / p) * (8 / p));
    }
    const LatentTensor z = synth_latent(SeededGenerator(2), 3, 6, 4, SynthFamily::uniform);
    CHECK_THROWS_AS(extract_patches(z, 4), std::invalid_argument);
}

TEST_CASE("unit patches with an identity projection tokenize per-pixel channels") {
    const LatentTensor z = synth_latent(SeededGenerator(3), 4, 3, 3, SynthFamily::gaussian);
    const TokenMatrix tokens = patchify(z, 1, identity_matrix(4));
    REQUIRE(tokens.rows == 9);
    REQUIRE(tokens.cols == 4);
    for (std::uint32_t i = 0; i < 3; ++i) {
        for (std::uint32_t j = 0; j < 3; ++j) {
            for (std::uint32_t c = 0; c < 4; ++c) {
                CHECK(tokens.at(i * 3 + j, c) == z.at(c, i, j));
            }
        }
    }
}

TEST_CASE("unpatchify inverts patchify under an identity projection") {
    const LatentTensor z = synth_latent(SeededGenerator(4), 4, 3, 3, SynthFamily::gaussian);
    const TokenMatrix tokens = patchify(z, 1, identity_matrix(4));
    const LatentTensor back = unpatchify(tokens, 1, identity_matrix(4), 4, 3, 3);
    CHECK(back.data == z.data);
}

TEST_CASE("unpatchify recovers the grid shape under a seeded projection") {
    const DitConfig cfg = toy_config();
    const DitModel model = DitModel::seeded(cfg, 4);
    const LatentTensor z = synth_latent(SeededGenerator(5), 4, 8, 6, SynthFamily::gaussian);
    const TokenMatrix tokens = patchify(z, 2, model.patch_embed);
    const LatentTensor out = unpatchify(tokens, 2, model.patch_embed, 4, 8, 6);
    CHECK(out.same_shape(z));
}

TEST_CASE("attention with zero strength is standard attention") {
    const TokenMatrix q = synth_tokens(SeededGenerator(6), 3, 4, SynthFamily::gaussian);
    const TokenMatrix k = synth_tokens(SeededGenerator(7), 5, 4, SynthFamily::gaussian);
    const TokenMatrix v = synth_tokens(SeededGenerator(8), 5, 4, SynthFamily::gaussian);
    const TokenMatrix bias = synth_tokens(SeededGenerator(9), 5, 4, SynthFamily::gaussian);

    AttentionIO with_bias{q, k, v, &bias, 0.0};
    AttentionIO without{q, k, v, nullptr, 0.0};
    const TokenMatrix a = attend(with_bias);
    const TokenMatrix b = attend(without);
    CHECK(a.data == b.data);

    const auto ref = oracle::attend_ref(q, k, v, nullptr, 0.0);
    for (std::uint32_t r = 0; r < 3; ++r) {
        for (std::uint32_t c = 0; c < 4; ++c) {
            CHECK(std::abs(a.at(r, c) - ref[r][c]) < 1e-6);
        }
    }
}

TEST_CASE("single-token attention degenerates to the biased value row") {
    TokenMatrix q(1, 4), k(1, 4), v(1, 4), bias(1, 4);
    for (std::uint32_t c = 0; c < 4; ++c) {
        q.at(0, c) = 0.3f * static_cast<float>(c);
        k.at(0, c) = -0.2f * static_cast<float>(c);
        v.at(0, c) = 1.0f + static_cast<float>(c);
        bias.at(0, c) = 0.5f - static_cast<float>(c);
    }
    const double alpha = 0.8;
    const TokenMatrix out = attend({q, k, v, &bias, alpha});
    for (std::uint32_t c = 0; c < 4; ++c) {
        const float expected = static_cast<float>(
            static_cast<double>(v.at(0, c)) + alpha * static_cast<double>(bias.at(0, c)));
        CHECK(out.at(0, c) == expected);
    }
}

TEST_CASE("biased attention matches the dense oracle") {
    const TokenMatrix q = synth_tokens(SeededGenerator(10), 3, 4, SynthFamily::gaussian);
    const TokenMatrix k = synth_tokens(SeededGenerator(11), 3, 4, SynthFamily::gaussian);
    const TokenMatrix v = synth_tokens(SeededGenerator(12), 3, 4, SynthFamily::gaussian);
    const TokenMatrix bias = synth_tokens(SeededGenerator(13), 3, 4, SynthFamily::gaussian);
    const TokenMatrix out = attend({q, k, v, &bias, 0.8});
    const auto ref = oracle::attend_ref(q, k, v, &bias, 0.8);
    for (std::uint32_t r = 0; r < 3; ++r) {
        for (std::uint32_t c = 0; c < 4; ++c) {
            CHECK(std::abs(out.at(r, c) - ref[r][c]) < 1e-6);
        }
    }
}

TEST_CASE("attention output is affine in the bias strength") {
    const TokenMatrix q = synth_tokens(SeededGenerator(14), 4, 8, SynthFamily::gaussian);
    const TokenMatrix k = synth_tokens(SeededGenerator(15), 6, 8, SynthFamily::gaussian);
    const TokenMatrix v = synth_tokens(SeededGenerator(16), 6, 8, SynthFamily::gaussian);
    const TokenMatrix bias = synth_tokens(SeededGenerator(17), 6, 8, SynthFamily::gaussian);

    const TokenMatrix at0 = attend({q, k, v, &bias, 0.0});
    const TokenMatrix at1 = attend({q, k, v, &bias, 0.7});
    const TokenMatrix at2 = attend({q, k, v, &bias, 1.4});
    for (std::size_t i = 0; i < at0.data.size(); ++i) {
        const double lhs = static_cast<double>(at2.data[i]) - at0.data[i];
        const double rhs = 2.0 * (static_cast<double>(at1.data[i]) - at0.data[i]);
        CHECK(std::abs(lhs - rhs) < 1e-5);
    }
}

TEST_CASE("softmax weights sum to one via an all-ones value matrix") {
    const TokenMatrix q = synth_tokens(SeededGenerator(18), 5, 8, SynthFamily::gaussian);
    const TokenMatrix k = synth_tokens(SeededGenerator(19), 7, 8, SynthFamily::gaussian);
    const TokenMatrix ones = synth_tokens(SeededGenerator(1), 7, 3, SynthFamily::constant, 1.0f);
    const TokenMatrix out = attend({q, k, ones, nullptr, 0.0});
    for (float x : out.data) {
        CHECK(std::abs(x - 1.0f) < 1e-6);
    }
}

TEST_CASE("attention stays stable under large logits") {
    TokenMatrix q(1, 2), k(2, 2), v(2, 1);
    q.at(0, 0) = 60.0f;
    k.at(0, 0) = 60.0f;
    k.at(1, 0) = -60.0f;
    v.at(0, 0) = 1.0f;
    v.at(1, 0) = 2.0f;
    const TokenMatrix out = attend({q, k, v, nullptr, 0.0});
    CHECK(std::isfinite(out.at(0, 0)));
    CHECK(out.at(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("attention rejects malformed inputs") {
    const TokenMatrix q = synth_tokens(SeededGenerator(20), 2, 4, SynthFamily::gaussian);
    const TokenMatrix k = synth_tokens(SeededGenerator(21), 3, 4, SynthFamily::gaussian);
    const TokenMatrix v3 = synth_tokens(SeededGenerator(22), 3, 4, SynthFamily::gaussian);
    const TokenMatrix v2 = synth_tokens(SeededGenerator(22), 2, 4, SynthFamily::gaussian);
    CHECK_THROWS_AS(attend({q, k, v2, nullptr, 0.0}), std::invalid_argument);

    const TokenMatrix bias_bad = synth_tokens(SeededGenerator(23), 2, 4, SynthFamily::gaussian);
    CHECK_THROWS_AS(attend({q, k, v3, &bias_bad, 0.5}), std::invalid_argument);

    TokenMatrix q_nan = q;
    q_nan.at(0, 0) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(attend({q_nan, k, v3, nullptr, 0.0}), std::runtime_error);
}

TEST_CASE("identity cross-attention is invariant to identity-token permutation") {
    const DitConfig cfg = toy_config();
    const DitModel model = DitModel::seeded(cfg, 4);
    const DitLayerWeights& w = model.layers[0];

    const TokenMatrix image = synth_tokens(SeededGenerator(24), 6, 16, SynthFamily::gaussian);
    const TokenMatrix raw = synth_tokens(SeededGenerator(25), 5, 32, SynthFamily::gaussian);
    const FusedEmbedding fused = as_fused(synth_tokens(SeededGenerator(26), 5, 32, SynthFamily::gaussian));

    const TokenMatrix base = id_cross_attention(image, fused, raw, 0.8, w);

    std::vector<std::uint32_t> perm = {3, 0, 4, 1, 2};
    TokenMatrix raw_p(5, 32);
    FusedEmbedding fused_p = fused;
    for (std::uint32_t r = 0; r < 5; ++r) {
        std::copy(raw.row(perm[r]), raw.row(perm[r]) + 32, raw_p.row(r));
        std::copy(fused.row(perm[r]), fused.row(perm[r]) + 32,
                  fused_p.values.begin() + static_cast<std::size_t>(r) * 32);
    }
    const TokenMatrix moved = id_cross_attention(image, fused_p, raw_p, 0.8, w);
    for (std::size_t i = 0; i < base.data.size(); ++i) {
        CHECK(std::abs(base.data[i] - moved.data[i]) < 1e-6);
    }
}

TEST_CASE("with both injections silenced the output is plain cross-attention") {
    const DitConfig cfg = toy_config();
    const DitModel model = DitModel::seeded(cfg, 4);
    const DitLayerWeights& w = model.layers[0];

    const TokenMatrix image = synth_tokens(SeededGenerator(27), 4, 16, SynthFamily::gaussian);
    const TokenMatrix id = synth_tokens(SeededGenerator(28), 5, 32, SynthFamily::gaussian);
    const NormalizedId norm = normalize_tokens(id);
    ModulationVector zero_m;
    zero_m.values.assign(32, 0.0);
    const FusedEmbedding fused = pffm_from_normalized(norm, zero_m, 0.0);

    const TokenMatrix out = id_cross_attention(image, fused, id, 0.0, w);

    // manual plain cross-attention on the same projected streams
    TokenMatrix proj_fused(5, 16);
    for (std::uint32_t r = 0; r < 5; ++r) {
        for (std::uint32_t o = 0; o < 16; ++o) {
            double acc = 0.0;
            for (std::uint32_t i = 0; i < 32; ++i) {
                acc += static_cast<double>(w.id_proj.at(o, i)) * fused.row(r)[i];
            }
            proj_fused.at(r, o) = static_cast<float>(acc);
        }
    }
    AttentionIO io;
    io.alpha = 0.0;
    io.q = TokenMatrix(4, 16);
    io.k = TokenMatrix(5, 16);
    io.v = TokenMatrix(5, 16);
    const auto project_into = [](const TokenMatrix& x, const TokenMatrix& wm, TokenMatrix& out_m) {
        for (std::uint32_t r = 0; r < x.rows; ++r) {
            for (std::uint32_t o = 0; o < wm.rows; ++o) {
                double acc = 0.0;
                for (std::uint32_t i = 0; i < wm.cols; ++i) {
                    acc += static_cast<double>(wm.at(o, i)) * static_cast<double>(x.at(r, i));
                }
                out_m.at(r, o) = static_cast<float>(acc);
            }
        }
    };
    project_into(image, w.id_w_q, io.q);
    project_into(proj_fused, w.id_w_k, io.k);
    project_into(proj_fused, w.id_w_v, io.v);
    const TokenMatrix attn = attend(io);
    for (std::uint32_t r = 0; r < 4; ++r) {
        for (std::uint32_t c = 0; c < 16; ++c) {
            CHECK(out.at(r, c) == doctest::Approx(image.at(r, c) + attn.at(r, c)).epsilon(1e-6));
        }
    }
}

TEST_CASE("identity cross-attention matches the composed projection and attention oracle") {
    const DitConfig cfg = toy_config();
    const DitModel model = DitModel::seeded(cfg, 4);
    const DitLayerWeights& w = model.layers[1];

    const TokenMatrix image = synth_tokens(SeededGenerator(29), 6, 16, SynthFamily::gaussian);
    const TokenMatrix raw = synth_tokens(SeededGenerator(30), 5, 32, SynthFamily::gaussian);
    const FusedEmbedding fused =
        as_fused(synth_tokens(SeededGenerator(31), 5, 32, SynthFamily::gaussian));
    const double alpha = 0.8;

    const TokenMatrix out = id_cross_attention(image, fused, raw, alpha, w);

    const auto project = [](const TokenMatrix& w_m, const float* x, std::uint32_t n) {
        std::vector<float> out_v(w_m.rows);
        const std::vector<double> acc = oracle::matvec(w_m, std::span<const float>(x, n));
        for (std::uint32_t i = 0; i < w_m.rows; ++i) {
            out_v[i] = static_cast<float>(acc[i]);
        }
        return out_v;
    };

    TokenMatrix proj_fused(5, 16), proj_raw(5, 16), q(6, 16), k(5, 16), v(5, 16);
    std::vector<float> fused_row(32);
    for (std::uint32_t r = 0; r < 5; ++r) {
        for (std::uint32_t i = 0; i < 32; ++i) {
            fused_row[i] = static_cast<float>(fused.row(r)[i]);
        }
        const auto pf = project(w.id_proj, fused_row.data(), 32);
        const auto pr = project(w.id_proj, raw.row(r), 32);
        std::copy(pf.begin(), pf.end(), proj_fused.row(r));
        std::copy(pr.begin(), pr.end(), proj_raw.row(r));
    }
    for (std::uint32_t r = 0; r < 5; ++r) {
        const auto kk = project(w.id_w_k, proj_fused.row(r), 16);
        const auto vv = project(w.id_w_v, proj_fused.row(r), 16);
        std::copy(kk.begin(), kk.end(), k.row(r));
        std::copy(vv.begin(), vv.end(), v.row(r));
    }
    for (std::uint32_t r = 0; r < 6; ++r) {
        const auto qq = project(w.id_w_q, image.row(r), 16);
        std::copy(qq.begin(), qq.end(), q.row(r));
    }
    const auto ref = oracle::attend_ref(q, k, v, &proj_raw, alpha);
    for (std::uint32_t r = 0; r < 6; ++r) {
        for (std::uint32_t c = 0; c < 16; ++c) {
            CHECK(std::abs(out.at(r, c) - (image.at(r, c) + ref[r][c])) < 1e-5);
        }
    }
}

namespace {

struct ForwardFixture {
    DitModel model;
    LatentTensor z;
    TokenMatrix raw;
    FusedEmbedding fused;
    std::vector<double> alphas;

    ForwardFixture()
        : model(DitModel::seeded(toy_config(), 4)),
          z(synth_latent(SeededGenerator(32), 4, 8, 8, SynthFamily::gaussian)),
          raw(synth_tokens(SeededGenerator(33), 5, 32, SynthFamily::gaussian)),
          fused(as_fused(synth_tokens(SeededGenerator(34), 5, 32, SynthFamily::gaussian))),
          alphas(2, 0.8) {}
};

}  // namespace

TEST_CASE("zeroed weights emit a zero velocity") {
    const ForwardFixture f;
    const DitModel zero = DitModel::zeroed(toy_config(), 4);
    const LatentTensor out = zero.forward(f.z, f.fused, f.raw, 0.5, f.alphas);
    for (float v : out.data) {
        CHECK(v == 0.0f);
    }
}

TEST_CASE("forward passes are bit-identical for identical inputs") {
    const ForwardFixture f;
    const LatentTensor a = f.model.forward(f.z, f.fused, f.raw, 0.5, f.alphas);
    const LatentTensor b = f.model.forward(f.z, f.fused, f.raw, 0.5, f.alphas);
    CHECK(a.data == b.data);
    CHECK(a.same_shape(f.z));
}

TEST_CASE("perturbing one latent cell moves the output") {
    const ForwardFixture f;
    const LatentTensor a = f.model.forward(f.z, f.fused, f.raw, 0.5, f.alphas);
    LatentTensor z2 = f.z;
    z2.at(1, 3, 3) += 0.25f;
    const LatentTensor b = f.model.forward(z2, f.fused, f.raw, 0.5, f.alphas);
    CHECK(a.data != b.data);
}

TEST_CASE("distinct timesteps and prompt biases move the output") {
    const ForwardFixture f;
    const LatentTensor a = f.model.forward(f.z, f.fused, f.raw, 0.5, f.alphas);
    const LatentTensor b = f.model.forward(f.z, f.fused, f.raw, 0.6, f.alphas);
    CHECK(a.data != b.data);

    std::vector<float> prompt(16, 0.5f);
    const LatentTensor c = f.model.forward(f.z, f.fused, f.raw, 0.5, f.alphas, prompt);
    CHECK(a.data != c.data);
}

TEST_CASE("forward validates alpha count, prompt width, and channel count") {
    const ForwardFixture f;
    const std::vector<double> wrong_alphas(3, 0.8);
    CHECK_THROWS_AS(f.model.forward(f.z, f.fused, f.raw, 0.5, wrong_alphas),
                    std::invalid_argument);
    const std::vector<float> wrong_prompt(7, 0.0f);
    CHECK_THROWS_AS(f.model.forward(f.z, f.fused, f.raw, 0.5, f.alphas, wrong_prompt),
                    std::invalid_argument);
    const LatentTensor z5 = synth_latent(SeededGenerator(1), 5, 8, 8, SynthFamily::gaussian);
    CHECK_THROWS_AS(f.model.forward(z5, f.fused, f.raw, 0.5, f.alphas), std::invalid_argument);
}

TEST_CASE("time embedding is deterministic, bounded, and even-width only") {
    const std::vector<float> a = time_embedding(0.5, 16);
    const std::vector<float> b = time_embedding(0.5, 16);
    CHECK(a == b);
    for (float v : a) {
        CHECK(std::abs(v) <= 1.0f);
    }
    CHECK(time_embedding(0.25, 16) != a);
    CHECK_THROWS_AS(time_embedding(0.5, 15), std::invalid_argument);
    CHECK_THROWS_AS(time_embedding(0.5, 0), std::invalid_argument);
}

TEST_CASE("seeded models rebuild identically and differ across seeds") {
    const DitModel a = DitModel::seeded(toy_config(), 4);
    const DitModel b = DitModel::seeded(toy_config(), 4);
    CHECK(a.patch_embed.data == b.patch_embed.data);
    CHECK(a.layers[0].w_q.data == b.layers[0].w_q.data);
    CHECK(a.layers[0].id_proj.data == b.layers[0].id_proj.data);

    DitConfig other = toy_config();
    other.weight_seed = 999;
    const DitModel c = DitModel::seeded(other, 4);
    CHECK(a.patch_embed.data != c.patch_embed.data);
    CHECK(a.layers[1].mlp_w2.data != c.layers[1].mlp_w2.data);
}
