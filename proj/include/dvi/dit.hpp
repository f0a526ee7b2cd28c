// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dvi/modulation.hpp"
#include "dvi/tensor.hpp"

namespace dvi {

struct DitConfig {
    std::uint32_t d_model = 64;
    std::uint32_t heads = 4;
    std::uint32_t layers = 4;
    std::uint32_t patch = 2;
    std::uint32_t id_dim = 2048;  // D of the incoming ID embedding
    std::uint64_t weight_seed = 0;
    double eps_norm = 1e-5;

    /// Which embedding feeds the additive value-bias tokens: the raw ID
    /// projection (default) or the visually modulated one.
    enum class BiasSource { raw, fused };
    BiasSource bias_source = BiasSource::raw;
};

/// One scaled-dot-product attention call. K and V share a token count; the
/// optional bias tokens match V's shape and enter as V + alpha * f.
struct AttentionIO {
    TokenMatrix q;
    TokenMatrix k;
    TokenMatrix v;
    const TokenMatrix* bias_tokens = nullptr;
    double alpha = 0.0;
};

/// softmax(Q K^T / sqrt(d)) (V + alpha f), row-stabilized softmax, 64-bit
/// accumulation, 32-bit result.
TokenMatrix attend(const AttentionIO& io);

/// Raw p x p patch extraction: (h/p)(w/p) tokens of width C*p*p, patches in
/// row-major block order, each flattened (c, di, dj) row-major.
TokenMatrix extract_patches(const LatentTensor& z, std::uint32_t patch);

/// extract_patches followed by the frozen embed projection (d_model x C*p*p).
TokenMatrix patchify(const LatentTensor& z, std::uint32_t patch, const TokenMatrix& embed);

/// Transposed-projection inverse of patchify's shape: tokens back to
/// C x h x w via embed^T. Recovers the grid layout, not the values.
LatentTensor unpatchify(const TokenMatrix& tokens, std::uint32_t patch, const TokenMatrix& embed,
                        std::uint32_t channels, std::uint32_t height, std::uint32_t width);

/// Frozen sinusoidal embedding of a scalar time in [0, 1].
std::vector<float> time_embedding(double t, std::uint32_t dim);

struct DitLayerWeights {
    // self-attention, all d_model x d_model
    TokenMatrix w_q, w_k, w_v, w_o;
    // ID stream: D -> d_model projection, then per-path maps
    TokenMatrix id_proj;                 // d_model x D
    TokenMatrix id_w_q, id_w_k, id_w_v;  // d_model x d_model
    // MLP with 4x expansion
    TokenMatrix mlp_w1;  // 4*d_model x d_model
    TokenMatrix mlp_w2;  // d_model x 4*d_model
};

/// ID cross-attention with value-bias injection, residual included:
///   Q = image_tokens . Wq, K/V = proj(f_fused) . Wk/Wv,
///   bias tokens = proj(bias source) scaled by alpha_l inside attend,
///   output = image_tokens + attn.
/// f_fused and f_id_raw must carry the same token count.
TokenMatrix id_cross_attention(const TokenMatrix& image_tokens, const FusedEmbedding& f_fused,
                               const TokenMatrix& f_id_raw, double alpha_l,
                               const DitLayerWeights& weights,
                               DitConfig::BiasSource bias_source = DitConfig::BiasSource::raw);

/// Block stack hosting the injection: per layer, pre-norm multi-head
/// self-attention, ID cross-attention, pre-norm MLP, each residual. Weights
/// are frozen seeded gaussians at scale 1/sqrt(fan_in); forward passes are
/// pure and deterministic per (inputs, weight_seed).
struct DitModel {
    DitConfig config;
    std::uint32_t latent_channels = 0;
    TokenMatrix patch_embed;  // d_model x C*p*p
    std::vector<DitLayerWeights> layers;

    static DitModel seeded(const DitConfig& cfg, std::uint32_t latent_channels);

    /// All-zero weights; with them the whole stack emits a zero velocity.
    static DitModel zeroed(const DitConfig& cfg, std::uint32_t latent_channels);

    /// Predicted velocity, same shape as z. prompt_bias (length d_model, may
    /// be empty) is added to every image token alongside the time embedding.
    LatentTensor forward(const LatentTensor& z, const FusedEmbedding& f_fused,
                         const TokenMatrix& f_id_raw, double t,
                         std::span<const double> alpha_per_layer,
                         std::span<const float> prompt_bias = {}) const;
};

}  // namespace dvi
