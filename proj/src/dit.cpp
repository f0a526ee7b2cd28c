// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/dit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dvi/rng.hpp"

namespace dvi {

namespace {

/// out = tokens . w^T for a row-major (out_dim x in_dim) weight matrix.
TokenMatrix project(const TokenMatrix& tokens, const TokenMatrix& w) {
    if (tokens.cols != w.cols) {
        throw std::invalid_argument("project: token width " + std::to_string(tokens.cols) +
                                    " does not match weight input " + std::to_string(w.cols));
    }
    TokenMatrix out(tokens.rows, w.rows);
    for (std::uint32_t r = 0; r < tokens.rows; ++r) {
        const float* x = tokens.row(r);
        float* y = out.row(r);
        for (std::uint32_t o = 0; o < w.rows; ++o) {
            const float* wrow = w.row(o);
            double acc = 0.0;
            for (std::uint32_t i = 0; i < w.cols; ++i) {
                acc += static_cast<double>(wrow[i]) * static_cast<double>(x[i]);
            }
            y[o] = static_cast<float>(acc);
        }
    }
    return out;
}

/// Projection of a double-precision row block (FusedEmbedding rows).
TokenMatrix project_rows(const double* values, std::uint32_t rows, std::uint32_t cols,
                         const TokenMatrix& w) {
    if (cols != w.cols) {
        throw std::invalid_argument("project: token width " + std::to_string(cols) +
                                    " does not match weight input " + std::to_string(w.cols));
    }
    TokenMatrix out(rows, w.rows);
    for (std::uint32_t r = 0; r < rows; ++r) {
        const double* x = values + static_cast<std::size_t>(r) * cols;
        float* y = out.row(r);
        for (std::uint32_t o = 0; o < w.rows; ++o) {
            const float* wrow = w.row(o);
            double acc = 0.0;
            for (std::uint32_t i = 0; i < w.cols; ++i) {
                acc += static_cast<double>(wrow[i]) * x[i];
            }
            y[o] = static_cast<float>(acc);
        }
    }
    return out;
}

TokenMatrix norm_rows(const TokenMatrix& tokens, double eps_norm) {
    TokenMatrix out(tokens.rows, tokens.cols);
    for (std::uint32_t r = 0; r < tokens.rows; ++r) {
        const auto vals = token_norm(std::span<const float>(tokens.row(r), tokens.cols), eps_norm);
        float* dst = out.row(r);
        for (std::uint32_t c = 0; c < tokens.cols; ++c) {
            dst[c] = static_cast<float>(vals[c]);
        }
    }
    return out;
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
}

TokenMatrix seeded_matrix(const SeededGenerator& gen, std::string_view tag, std::uint32_t rows,
                          std::uint32_t cols) {
    TokenMatrix m(rows, cols);
    SeededGenerator local = gen.derive(tag);
    local.fill_gaussian(m.data, 1.0 / std::sqrt(static_cast<double>(cols)), 0.0);
    return m;
}

}  // namespace

TokenMatrix attend(const AttentionIO& io) {
    if (io.q.cols != io.k.cols) {
        throw std::invalid_argument("attend: Q and K widths differ");
    }
    if (io.k.rows != io.v.rows) {
        throw std::invalid_argument("attend: K and V token counts differ");
    }
    if (io.q.cols == 0 || io.k.rows == 0) {
        throw std::invalid_argument("attend: empty inputs");
    }
    if (io.alpha < 0.0) {
        throw std::invalid_argument("attend: alpha must be non-negative");
    }
    require_finite(io.q, "attend Q");
    require_finite(io.k, "attend K");
    require_finite(io.v, "attend V");
    if (io.bias_tokens != nullptr) {
        if (!io.bias_tokens->same_shape(io.v)) {
            throw std::invalid_argument("attend: bias tokens must match V's shape");
        }
        require_finite(*io.bias_tokens, "attend bias");
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(io.q.cols));
    const bool use_bias = io.bias_tokens != nullptr && io.alpha != 0.0;

    TokenMatrix out(io.q.rows, io.v.cols);
    std::vector<double> logits(io.k.rows);
    for (std::uint32_t r = 0; r < io.q.rows; ++r) {
        const float* qrow = io.q.row(r);
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::uint32_t j = 0; j < io.k.rows; ++j) {
            const float* krow = io.k.row(j);
            double dot = 0.0;
            for (std::uint32_t c = 0; c < io.q.cols; ++c) {
                dot += static_cast<double>(qrow[c]) * static_cast<double>(krow[c]);
            }
            logits[j] = dot * scale;
            row_max = std::max(row_max, logits[j]);
        }
        double denom = 0.0;
        for (std::uint32_t j = 0; j < io.k.rows; ++j) {
            logits[j] = std::exp(logits[j] - row_max);
            denom += logits[j];
        }
        float* orow = out.row(r);
        for (std::uint32_t c = 0; c < io.v.cols; ++c) {
            double acc = 0.0;
            for (std::uint32_t j = 0; j < io.k.rows; ++j) {
                double value = static_cast<double>(io.v.at(j, c));
                if (use_bias) {
                    value += io.alpha * static_cast<double>(io.bias_tokens->at(j, c));
                }
                acc += (logits[j] / denom) * value;
            }
            orow[c] = static_cast<float>(acc);
        }
    }
    return out;
}

TokenMatrix extract_patches(const LatentTensor& z, std::uint32_t patch) {
    if (patch == 0 || z.height % patch != 0 || z.width % patch != 0) {
        throw std::invalid_argument("extract_patches: patch " + std::to_string(patch) +
                                    " does not divide " + std::to_string(z.height) + "x" +
                                    std::to_string(z.width));
    }
    const std::uint32_t bh = z.height / patch;
    const std::uint32_t bw = z.width / patch;
    TokenMatrix tokens(bh * bw, z.channels * patch * patch);
    for (std::uint32_t bi = 0; bi < bh; ++bi) {
        for (std::uint32_t bj = 0; bj < bw; ++bj) {
            float* row = tokens.row(bi * bw + bj);
            for (std::uint32_t c = 0; c < z.channels; ++c) {
                for (std::uint32_t di = 0; di < patch; ++di) {
                    for (std::uint32_t dj = 0; dj < patch; ++dj) {
                        row[(c * patch + di) * patch + dj] =
                            z.at(c, bi * patch + di, bj * patch + dj);
                    }
                }
            }
        }
    }
    return tokens;
}

TokenMatrix patchify(const LatentTensor& z, std::uint32_t patch, const TokenMatrix& embed) {
    const TokenMatrix raw = extract_patches(z, patch);
    if (embed.cols != raw.cols) {
        throw std::invalid_argument("patchify: embed expects width " + std::to_string(embed.cols) +
                                    ", patches have " + std::to_string(raw.cols));
    }
    return project(raw, embed);
}

LatentTensor unpatchify(const TokenMatrix& tokens, std::uint32_t patch, const TokenMatrix& embed,
                        std::uint32_t channels, std::uint32_t height, std::uint32_t width) {
    if (patch == 0 || height % patch != 0 || width % patch != 0) {
        throw std::invalid_argument("unpatchify: patch does not divide the grid");
    }
    const std::uint32_t bh = height / patch;
    const std::uint32_t bw = width / patch;
    if (tokens.rows != bh * bw) {
        throw std::invalid_argument("unpatchify: token count " + std::to_string(tokens.rows) +
                                    " does not match grid of " + std::to_string(bh * bw));
    }
    if (tokens.cols != embed.rows || embed.cols != channels * patch * patch) {
        throw std::invalid_argument("unpatchify: embed shape mismatch");
    }

    LatentTensor out(channels, height, width);
    for (std::uint32_t r = 0; r < tokens.rows; ++r) {
        const std::uint32_t bi = r / bw;
        const std::uint32_t bj = r % bw;
        const float* trow = tokens.row(r);
        for (std::uint32_t k = 0; k < embed.cols; ++k) {
            double acc = 0.0;
            for (std::uint32_t d = 0; d < embed.rows; ++d) {
                acc += static_cast<double>(embed.at(d, k)) * static_cast<double>(trow[d]);
            }
            const std::uint32_t c = k / (patch * patch);
            const std::uint32_t di = (k / patch) % patch;
            const std::uint32_t dj = k % patch;
            out.at(c, bi * patch + di, bj * patch + dj) = static_cast<float>(acc);
        }
    }
    return out;
}

std::vector<float> time_embedding(double t, std::uint32_t dim) {
    if (dim < 2 || dim % 2 != 0) {
        throw std::invalid_argument("time_embedding: dim must be even and at least 2");
    }
    const std::uint32_t half = dim / 2;
    std::vector<float> out(dim);
    for (std::uint32_t i = 0; i < half; ++i) {
        const double freq =
            std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
        const double arg = 1000.0 * t * freq;
        out[i] = static_cast<float>(std::sin(arg));
        out[half + i] = static_cast<float>(std::cos(arg));
    }
    return out;
}

TokenMatrix id_cross_attention(const TokenMatrix& image_tokens, const FusedEmbedding& f_fused,
                               const TokenMatrix& f_id_raw, double alpha_l,
                               const DitLayerWeights& weights,
                               DitConfig::BiasSource bias_source) {
    if (f_fused.tokens != f_id_raw.rows || f_fused.dim != f_id_raw.cols) {
        throw std::invalid_argument("id_cross_attention: fused and raw ID shapes differ");
    }
    if (weights.id_proj.cols != f_fused.dim) {
        throw std::invalid_argument("id_cross_attention: ID projection expects width " +
                                    std::to_string(weights.id_proj.cols));
    }

    const TokenMatrix proj_fused =
        project_rows(f_fused.values.data(), f_fused.tokens, f_fused.dim, weights.id_proj);
    const TokenMatrix bias = bias_source == DitConfig::BiasSource::raw
                                 ? project(f_id_raw, weights.id_proj)
                                 : proj_fused;

    AttentionIO io;
    io.q = project(image_tokens, weights.id_w_q);
    io.k = project(proj_fused, weights.id_w_k);
    io.v = project(proj_fused, weights.id_w_v);
    io.bias_tokens = &bias;
    io.alpha = alpha_l;
    const TokenMatrix attn = attend(io);

    TokenMatrix out = image_tokens;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] += attn.data[i];
    }
    return out;
}

DitModel DitModel::seeded(const DitConfig& cfg, std::uint32_t latent_channels) {
    if (cfg.d_model == 0 || cfg.heads == 0 || cfg.d_model % cfg.heads != 0) {
        throw std::invalid_argument("DitModel: d_model must be a positive multiple of heads");
    }
    if (cfg.layers == 0 || cfg.patch == 0 || cfg.id_dim == 0 || latent_channels == 0) {
        throw std::invalid_argument("DitModel: config dimensions must be positive");
    }

    DitModel model;
    model.config = cfg;
    model.latent_channels = latent_channels;

    const SeededGenerator root(cfg.weight_seed);
    const std::uint32_t patch_in = latent_channels * cfg.patch * cfg.patch;
    model.patch_embed = seeded_matrix(root, "patch_embed", cfg.d_model, patch_in);

    model.layers.reserve(cfg.layers);
    for (std::uint32_t l = 0; l < cfg.layers; ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        DitLayerWeights w;
        w.w_q = seeded_matrix(root, prefix + "attn.wq", cfg.d_model, cfg.d_model);
        w.w_k = seeded_matrix(root, prefix + "attn.wk", cfg.d_model, cfg.d_model);
        w.w_v = seeded_matrix(root, prefix + "attn.wv", cfg.d_model, cfg.d_model);
        w.w_o = seeded_matrix(root, prefix + "attn.wo", cfg.d_model, cfg.d_model);
        w.id_proj = seeded_matrix(root, prefix + "id.proj", cfg.d_model, cfg.id_dim);
        w.id_w_q = seeded_matrix(root, prefix + "id.wq", cfg.d_model, cfg.d_model);
        w.id_w_k = seeded_matrix(root, prefix + "id.wk", cfg.d_model, cfg.d_model);
        w.id_w_v = seeded_matrix(root, prefix + "id.wv", cfg.d_model, cfg.d_model);
        w.mlp_w1 = seeded_matrix(root, prefix + "mlp.w1", 4 * cfg.d_model, cfg.d_model);
        w.mlp_w2 = seeded_matrix(root, prefix + "mlp.w2", cfg.d_model, 4 * cfg.d_model);
        model.layers.push_back(std::move(w));
    }
    return model;
}

DitModel DitModel::zeroed(const DitConfig& cfg, std::uint32_t latent_channels) {
    DitModel model = seeded(cfg, latent_channels);
    auto zero = [](TokenMatrix& m) { std::fill(m.data.begin(), m.data.end(), 0.0f); };
    zero(model.patch_embed);
    for (DitLayerWeights& w : model.layers) {
        zero(w.w_q);
        zero(w.w_k);
        zero(w.w_v);
        zero(w.w_o);
        zero(w.id_proj);
        zero(w.id_w_q);
        zero(w.id_w_k);
        zero(w.id_w_v);
        zero(w.mlp_w1);
        zero(w.mlp_w2);
    }
    return model;
}

namespace {

TokenMatrix self_attention(const TokenMatrix& tokens, const DitLayerWeights& w,
                           std::uint32_t heads) {
    const TokenMatrix q = project(tokens, w.w_q);
    const TokenMatrix k = project(tokens, w.w_k);
    const TokenMatrix v = project(tokens, w.w_v);

    const std::uint32_t d_head = q.cols / heads;
    TokenMatrix concat(q.rows, q.cols);
    for (std::uint32_t h = 0; h < heads; ++h) {
        AttentionIO io;
        io.q = TokenMatrix(q.rows, d_head);
        io.k = TokenMatrix(k.rows, d_head);
        io.v = TokenMatrix(v.rows, d_head);
        for (std::uint32_t r = 0; r < q.rows; ++r) {
            for (std::uint32_t c = 0; c < d_head; ++c) {
                io.q.at(r, c) = q.at(r, h * d_head + c);
                io.k.at(r, c) = k.at(r, h * d_head + c);
                io.v.at(r, c) = v.at(r, h * d_head + c);
            }
        }
        const TokenMatrix head_out = attend(io);
        for (std::uint32_t r = 0; r < q.rows; ++r) {
            for (std::uint32_t c = 0; c < d_head; ++c) {
                concat.at(r, h * d_head + c) = head_out.at(r, c);
            }
        }
    }
    return project(concat, w.w_o);
}

TokenMatrix mlp_block(const TokenMatrix& tokens, const DitLayerWeights& w) {
    TokenMatrix hidden = project(tokens, w.mlp_w1);
    for (float& v : hidden.data) {
        v = static_cast<float>(gelu(static_cast<double>(v)));
    }
    return project(hidden, w.mlp_w2);
}

}  // namespace

LatentTensor DitModel::forward(const LatentTensor& z, const FusedEmbedding& f_fused,
                               const TokenMatrix& f_id_raw, double t,
                               std::span<const double> alpha_per_layer,
                               std::span<const float> prompt_bias) const {
    if (z.channels != latent_channels) {
        throw std::invalid_argument("dit forward: latent has " + std::to_string(z.channels) +
                                    " channels, model expects " + std::to_string(latent_channels));
    }
    if (alpha_per_layer.size() != layers.size()) {
        throw std::invalid_argument("dit forward: need one alpha per layer");
    }
    if (!prompt_bias.empty() && prompt_bias.size() != config.d_model) {
        throw std::invalid_argument("dit forward: prompt bias width must equal d_model");
    }
    require_finite(z, "dit forward input");

    TokenMatrix tokens = patchify(z, config.patch, patch_embed);

    const std::vector<float> temb = time_embedding(t, config.d_model);
    for (std::uint32_t r = 0; r < tokens.rows; ++r) {
        float* row = tokens.row(r);
        for (std::uint32_t c = 0; c < config.d_model; ++c) {
            double v = static_cast<double>(row[c]) + static_cast<double>(temb[c]);
            if (!prompt_bias.empty()) {
                v += static_cast<double>(prompt_bias[c]);
            }
            row[c] = static_cast<float>(v);
        }
    }

    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DitLayerWeights& w = layers[l];

        const TokenMatrix attn = self_attention(norm_rows(tokens, config.eps_norm), w, config.heads);
        for (std::size_t i = 0; i < tokens.data.size(); ++i) {
            tokens.data[i] += attn.data[i];
        }

        tokens = id_cross_attention(tokens, f_fused, f_id_raw, alpha_per_layer[l], w,
                                    config.bias_source);

        const TokenMatrix mlp = mlp_block(norm_rows(tokens, config.eps_norm), w);
        for (std::size_t i = 0; i < tokens.data.size(); ++i) {
            tokens.data[i] += mlp.data[i];
        }
    }

    return unpatchify(tokens, config.patch, patch_embed, z.channels, z.height, z.width);
}

}  // namespace dvi
