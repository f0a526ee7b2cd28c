// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include "dvi/diag.hpp"
#include "dvi/rng.hpp"

namespace dvi {

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::full: return "full";
        case RunMode::no_visual: return "no_visual";
        case RunMode::concat: return "concat";
    }
    throw std::invalid_argument("to_string: bad run mode");
}

RunMode run_mode_from_string(const std::string& name) {
    if (name == "full") return RunMode::full;
    if (name == "no_visual") return RunMode::no_visual;
    if (name == "concat") return RunMode::concat;
    throw std::invalid_argument("unknown mode '" + name +
                                "' (expected full, no_visual, or concat)");
}

void RunConfig::validate() const {
    if (steps == 0) {
        throw std::invalid_argument("config: steps must be at least 1");
    }
    if (guidance < 0.0) {
        throw std::invalid_argument("config: guidance must be non-negative");
    }
    if (lambda_base < 0.0) {
        throw std::invalid_argument("config: lambda_base must be non-negative");
    }
    if (psi <= 0.0) {
        throw std::invalid_argument("config: psi must be positive");
    }
    if (alpha < 0.0 || alpha > 2.0) {
        throw std::invalid_argument("config: alpha must lie in [0, 2]");
    }
    if (eps_norm <= 0.0) {
        throw std::invalid_argument("config: eps_norm must be positive");
    }
    if (dims.channels == 0 || dims.height == 0 || dims.width == 0) {
        throw std::invalid_argument("config: latent dims must be positive");
    }
    if (dims.d_model == 0 || dims.heads == 0 || dims.d_model % dims.heads != 0) {
        throw std::invalid_argument("config: d_model must be a positive multiple of heads");
    }
    if (dims.layers == 0) {
        throw std::invalid_argument("config: need at least one layer");
    }
    if (dims.patch == 0 || dims.height % dims.patch != 0 || dims.width % dims.patch != 0) {
        throw std::invalid_argument("config: patch must divide the latent grid");
    }
    if (dims.embed_dim < 2) {
        throw std::invalid_argument("config: embed_dim must be at least 2");
    }
    if (dims.id_tokens == 0) {
        throw std::invalid_argument("config: need at least one ID token");
    }
}

DitConfig RunConfig::dit_config() const {
    DitConfig cfg;
    cfg.d_model = dims.d_model;
    cfg.heads = dims.heads;
    cfg.layers = dims.layers;
    cfg.patch = dims.patch;
    cfg.id_dim = dims.embed_dim;
    cfg.weight_seed = seeds.weights;
    cfg.eps_norm = eps_norm;
    cfg.bias_source = bias_source;
    return cfg;
}

LatentTensor cfg_combine(const LatentTensor& v_cond, const LatentTensor& v_uncond,
                         double guidance) {
    if (!v_cond.same_shape(v_uncond)) {
        throw std::invalid_argument("cfg_combine: branch shapes differ");
    }
    if (guidance == 1.0) {
        return v_cond;
    }
    if (guidance == 0.0) {
        return v_uncond;
    }
    LatentTensor out(v_cond.channels, v_cond.height, v_cond.width);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double u = static_cast<double>(v_uncond.data[i]);
        const double c = static_cast<double>(v_cond.data[i]);
        out.data[i] = static_cast<float>(u + guidance * (c - u));
    }
    return out;
}

LatentTensor euler_step(const LatentTensor& z, const LatentTensor& v, double t_i, double t_next) {
    if (!z.same_shape(v)) {
        throw std::invalid_argument("euler_step: latent and velocity shapes differ");
    }
    if (t_next >= t_i) {
        throw std::invalid_argument("euler_step: timestep must decrease, got " +
                                    format_number(t_i) + " -> " + format_number(t_next));
    }
    const double dt = t_next - t_i;
    LatentTensor out(z.channels, z.height, z.width);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = static_cast<float>(static_cast<double>(z.data[i]) +
                                         dt * static_cast<double>(v.data[i]));
    }
    return out;
}

namespace {

FusedEmbedding concat_as_fused(const TokenMatrix& concatenated, double psi) {
    FusedEmbedding fused;
    fused.tokens = concatenated.rows;
    fused.dim = concatenated.cols;
    fused.lambda_applied = 0.0;
    fused.psi_coeff = psi;
    fused.values.resize(concatenated.data.size());
    for (std::size_t i = 0; i < concatenated.data.size(); ++i) {
        fused.values[i] = static_cast<double>(concatenated.data[i]);
    }
    return fused;
}

}  // namespace

GenerateResult generate(const RunConfig& cfg, const VisualContext* stats, const IdEmbedding& id) {
    cfg.validate();
    if (cfg.mode != RunMode::no_visual && stats == nullptr) {
        throw std::invalid_argument("generate: mode " + to_string(cfg.mode) +
                                    " requires visual statistics");
    }
    if (id.matrix.rows != cfg.dims.id_tokens || id.matrix.cols != cfg.dims.embed_dim) {
        throw std::invalid_argument("generate: ID embedding is " + std::to_string(id.matrix.rows) +
                                    "x" + std::to_string(id.matrix.cols) + ", config expects " +
                                    std::to_string(cfg.dims.id_tokens) + "x" +
                                    std::to_string(cfg.dims.embed_dim));
    }

    const ScheduleGrid grid =
        build_grid(cfg.steps, cfg.lambda_base, cfg.dims.layers, cfg.alpha);
    const DitModel model = DitModel::seeded(cfg.dit_config(), cfg.dims.channels);

    LatentTensor z(cfg.dims.channels, cfg.dims.height, cfg.dims.width);
    SeededGenerator noise_gen = SeededGenerator(cfg.seeds.noise).derive("init_noise");
    noise_gen.fill_gaussian(z.data);

    std::vector<float> prompt_bias(cfg.dims.d_model);
    SeededGenerator prompt_gen = SeededGenerator(cfg.seeds.prompt).derive("prompt");
    prompt_gen.fill_gaussian(prompt_bias);

    const NormalizedId norm_id = normalize_tokens(id.matrix, cfg.eps_norm);
    ModulationVector m_vis;
    if (stats != nullptr) {
        m_vis = broadcast(stats->v_ctx(), cfg.dims.embed_dim);
    } else {
        m_vis.values.assign(cfg.dims.embed_dim, 0.0);
    }

    // Concat mode replaces the modulated stream with the raw tokens plus the
    // statistics vector appended as one extra token; both the K/V stream and
    // the value bias see the concatenated matrix.
    TokenMatrix concat_tokens;
    FusedEmbedding concat_fused;
    if (cfg.mode == RunMode::concat) {
        concat_tokens = concat_baseline(id.matrix, m_vis);
        concat_fused = concat_as_fused(concat_tokens, cfg.psi);
    }

    // The unconditional branch silences both ID pathways with a single zero
    // token and skips the prompt bias, giving guidance a genuinely different
    // negative branch.
    FusedEmbedding null_fused;
    null_fused.tokens = 1;
    null_fused.dim = cfg.dims.embed_dim;
    null_fused.psi_coeff = cfg.psi;
    null_fused.values.assign(cfg.dims.embed_dim, 0.0);
    const TokenMatrix null_raw(1, cfg.dims.embed_dim);
    const std::vector<double> null_alphas(cfg.dims.layers, 0.0);

    GenerateResult result;
    result.steps.reserve(cfg.steps);

    for (std::uint32_t i = 0; i < cfg.steps; ++i) {
        try {
            const double t_i = grid.t_values[i];
            const double t_next = grid.t_values[i + 1];

            double lambda_applied = 0.0;
            const FusedEmbedding* fused = nullptr;
            const TokenMatrix* raw = nullptr;
            FusedEmbedding step_fused;
            if (cfg.mode == RunMode::concat) {
                fused = &concat_fused;
                raw = &concat_tokens;
            } else {
                lambda_applied = cfg.mode == RunMode::full ? lambda_at(grid, i) : 0.0;
                step_fused = pffm_from_normalized(norm_id, m_vis, lambda_applied, cfg.psi);
                fused = &step_fused;
                raw = &id.matrix;
            }

            const LatentTensor v_cond = model.forward(z, *fused, *raw, t_i,
                                                      grid.alpha_per_layer, prompt_bias);
            const LatentTensor v_uncond =
                model.forward(z, null_fused, null_raw, t_i, null_alphas);
            const LatentTensor v = cfg_combine(v_cond, v_uncond, cfg.guidance);
            z = euler_step(z, v, t_i, t_next);

            StepDiagnostics diag;
            diag.step = i;
            diag.t = t_i;
            diag.lambda = lambda_applied;
            const MeanVar fused_stats = mean_var(std::span<const double>(fused->values));
            diag.fused_mean = fused_stats.mean;
            diag.fused_variance = fused_stats.variance;
            const MeanVar latent_stats = mean_var(std::span<const float>(z.data));
            diag.latent_mean = latent_stats.mean;
            diag.latent_variance = latent_stats.variance;
            diag.alpha_per_layer = grid.alpha_per_layer;
            result.steps.push_back(std::move(diag));
        } catch (const std::exception& e) {
            throw std::runtime_error("generate: step " + std::to_string(i) + ": " + e.what());
        }
    }

    result.latent = std::move(z);
    return result;
}

nlohmann::json diagnostics_json(const GenerateResult& result, const RunConfig& cfg) {
    nlohmann::json j;
    j["config"] = {
        {"steps", cfg.steps},
        {"guidance", cfg.guidance},
        {"lambda_base", cfg.lambda_base},
        {"psi", cfg.psi},
        {"alpha", cfg.alpha},
        {"mode", to_string(cfg.mode)},
        {"eps_norm", cfg.eps_norm},
        {"bias_source", cfg.bias_source == DitConfig::BiasSource::raw ? "raw" : "fused"},
        {"seeds",
         {{"noise", cfg.seeds.noise},
          {"weights", cfg.seeds.weights},
          {"id", cfg.seeds.id},
          {"prompt", cfg.seeds.prompt}}},
        {"dims",
         {{"channels", cfg.dims.channels},
          {"height", cfg.dims.height},
          {"width", cfg.dims.width},
          {"d_model", cfg.dims.d_model},
          {"heads", cfg.dims.heads},
          {"layers", cfg.dims.layers},
          {"patch", cfg.dims.patch},
          {"embed_dim", cfg.dims.embed_dim},
          {"id_tokens", cfg.dims.id_tokens}}},
    };

    const MeanVar final_stats = mean_var(std::span<const float>(result.latent.data));
    j["final_latent"] = {{"channels", result.latent.channels},
                         {"height", result.latent.height},
                         {"width", result.latent.width},
                         {"mean", final_stats.mean},
                         {"variance", final_stats.variance}};

    nlohmann::json steps = nlohmann::json::array();
    for (const StepDiagnostics& s : result.steps) {
        steps.push_back({{"step", s.step},
                         {"t", s.t},
                         {"lambda", s.lambda},
                         {"fused_mean", s.fused_mean},
                         {"fused_variance", s.fused_variance},
                         {"latent_mean", s.latent_mean},
                         {"latent_variance", s.latent_variance},
                         {"alpha_per_layer", s.alpha_per_layer}});
    }
    j["steps"] = std::move(steps);
    return j;
}

namespace {

double latent_l2(const LatentTensor& a, const LatentTensor& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("latent distance: shapes differ");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        sq += d * d;
    }
    return std::sqrt(sq);
}

}  // namespace

nlohmann::json run_ablation(const RunConfig& base, const VisualContext& stats,
                            const IdEmbedding& id) {
    RunConfig cfg = base;

    cfg.mode = RunMode::full;
    const GenerateResult full = generate(cfg, &stats, id);
    cfg.mode = RunMode::no_visual;
    const GenerateResult no_visual = generate(cfg, &stats, id);
    cfg.mode = RunMode::concat;
    const GenerateResult concat = generate(cfg, &stats, id);

    const auto mode_entry = [](const GenerateResult& r) {
        const MeanVar mv = mean_var(std::span<const float>(r.latent.data));
        return nlohmann::json{{"mean", mv.mean}, {"variance", mv.variance}};
    };

    const ModulationVector m_vis = broadcast(stats.v_ctx(), base.dims.embed_dim);
    const ConcatDiagnostics cd = concat_diagnostics(concat_baseline(id.matrix, m_vis));

    nlohmann::json j;
    j["steps"] = base.steps;
    j["lambda_base"] = base.lambda_base;
    j["modes"] = {{"full", mode_entry(full)},
                  {"no_visual", mode_entry(no_visual)},
                  {"concat", mode_entry(concat)}};
    j["distances"] = {{"full_vs_no_visual", latent_l2(full.latent, no_visual.latent)},
                      {"full_vs_concat", latent_l2(full.latent, concat.latent)},
                      {"no_visual_vs_concat", latent_l2(no_visual.latent, concat.latent)}};
    j["concat_diagnostic"] = {
        {"appended_token_norm", cd.appended_token_norm},
        {"mean_id_token_norm", cd.mean_id_token_norm},
        {"ratio", cd.appended_token_norm / cd.mean_id_token_norm},
    };
    return j;
}

}  // namespace dvi
