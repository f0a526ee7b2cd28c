// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dvi/config.hpp"
#include "dvi/diag.hpp"
#include "dvi/log.hpp"
#include "dvi/modulation.hpp"
#include "dvi/pipeline.hpp"
#include "dvi/scheduler.hpp"
#include "dvi/semantic_stream.hpp"
#include "dvi/synth.hpp"
#include "dvi/tensor_io.hpp"
#include "dvi/visual_stream.hpp"

namespace {

dvi::SynthFamily family_from_string(const std::string& name) {
    if (name == "uniform") return dvi::SynthFamily::uniform;
    if (name == "gaussian") return dvi::SynthFamily::gaussian;
    if (name == "constant") return dvi::SynthFamily::constant;
    if (name == "gradient") return dvi::SynthFamily::gradient;
    throw std::invalid_argument("unknown synth family '" + name +
                                "' (expected uniform, gaussian, constant, or gradient)");
}

void write_text(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << content;
    if (!out.good()) {
        throw std::runtime_error("failed writing " + path);
    }
}

dvi::VisualContext load_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open stats file " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
        return j.get<dvi::VisualContext>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("stats file " + path + ": " + e.what());
    }
}

// Flags shared by generate and ablate. Values land in the RunConfig only
// when the flag was actually passed, so a --config file keeps precedence
// below explicit command-line overrides.
struct RunOptions {
    std::string config_path;
    std::uint32_t steps = 25;
    double guidance = 4.0;
    double lambda_base = 1.0;
    double psi = 0.5;
    double alpha = 0.8;
    double eps_norm = 1e-5;
    std::string mode = "full";
    std::string bias_source = "raw";
    std::uint64_t seed_noise = 101;
    std::uint64_t seed_weights = 202;
    std::uint64_t seed_id = 303;
    std::uint64_t seed_prompt = 404;
    std::uint32_t channels = 16;
    std::uint32_t height = 16;
    std::uint32_t width = 16;
    std::uint32_t d_model = 64;
    std::uint32_t heads = 4;
    std::uint32_t layers = 4;
    std::uint32_t patch = 2;
    std::uint32_t embed_dim = 2048;
    std::uint32_t id_tokens = 8;

    std::string stats_path;
    std::string id_path;
    std::string label = "subject";

    void add_to(CLI::App& sub, bool with_mode) {
        sub.add_option("--config", config_path, "key=value run configuration file");
        sub.add_option("--steps", steps, "sampler steps");
        sub.add_option("--guidance", guidance, "classifier-free guidance scale");
        sub.add_option("--lambda-base", lambda_base, "modulation weight at t=1");
        sub.add_option("--psi", psi, "modulation scaling coefficient");
        sub.add_option("--alpha", alpha, "ID injection strength per layer");
        sub.add_option("--eps-norm", eps_norm, "layer-norm variance stabilizer");
        if (with_mode) {
            sub.add_option("--mode", mode, "full, no_visual, or concat");
        }
        sub.add_option("--bias-source", bias_source, "attention value-bias source: raw or fused");
        sub.add_option("--seed-noise", seed_noise, "initial latent noise seed");
        sub.add_option("--seed-weights", seed_weights, "backbone weight seed");
        sub.add_option("--seed-id", seed_id, "identity feature seed");
        sub.add_option("--seed-prompt", seed_prompt, "prompt embedding seed");
        sub.add_option("--channels", channels, "latent channels");
        sub.add_option("--height", height, "latent height");
        sub.add_option("--width", width, "latent width");
        sub.add_option("--d-model", d_model, "backbone hidden width");
        sub.add_option("--heads", heads, "attention heads");
        sub.add_option("--layers", layers, "backbone layers");
        sub.add_option("--patch", patch, "patch side");
        sub.add_option("--embed-dim", embed_dim, "ID embedding dim");
        sub.add_option("--id-tokens", id_tokens, "ID token count");
        sub.add_option("--stats", stats_path, "visual statistics JSON");
        sub.add_option("--id", id_path, "ID embedding .dvt (synthesized from --label if absent)");
        sub.add_option("--label", label, "identity label for the synthesized embedding");
    }

    dvi::RunConfig resolve(const CLI::App& sub, bool with_mode) const {
        dvi::RunConfig cfg;
        if (!config_path.empty()) {
            cfg = dvi::load_run_config(config_path);
        }
        if (sub.count("--steps")) cfg.steps = steps;
        if (sub.count("--guidance")) cfg.guidance = guidance;
        if (sub.count("--lambda-base")) cfg.lambda_base = lambda_base;
        if (sub.count("--psi")) cfg.psi = psi;
        if (sub.count("--alpha")) cfg.alpha = alpha;
        if (sub.count("--eps-norm")) cfg.eps_norm = eps_norm;
        if (with_mode && sub.count("--mode")) cfg.mode = dvi::run_mode_from_string(mode);
        if (sub.count("--bias-source")) {
            if (bias_source == "raw") {
                cfg.bias_source = dvi::DitConfig::BiasSource::raw;
            } else if (bias_source == "fused") {
                cfg.bias_source = dvi::DitConfig::BiasSource::fused;
            } else {
                throw std::invalid_argument("--bias-source expects raw or fused");
            }
        }
        if (sub.count("--seed-noise")) cfg.seeds.noise = seed_noise;
        if (sub.count("--seed-weights")) cfg.seeds.weights = seed_weights;
        if (sub.count("--seed-id")) cfg.seeds.id = seed_id;
        if (sub.count("--seed-prompt")) cfg.seeds.prompt = seed_prompt;
        if (sub.count("--channels")) cfg.dims.channels = channels;
        if (sub.count("--height")) cfg.dims.height = height;
        if (sub.count("--width")) cfg.dims.width = width;
        if (sub.count("--d-model")) cfg.dims.d_model = d_model;
        if (sub.count("--heads")) cfg.dims.heads = heads;
        if (sub.count("--layers")) cfg.dims.layers = layers;
        if (sub.count("--patch")) cfg.dims.patch = patch;
        if (sub.count("--embed-dim")) cfg.dims.embed_dim = embed_dim;
        if (sub.count("--id-tokens")) cfg.dims.id_tokens = id_tokens;
        return cfg;
    }

    dvi::IdEmbedding resolve_id(const dvi::RunConfig& cfg) const {
        if (!id_path.empty()) {
            return dvi::IdEmbedding{dvi::read_matrix(id_path)};
        }
        dvi::SemanticConfig scfg;
        scfg.total_tokens = cfg.dims.id_tokens;
        scfg.local_tokens = std::min(scfg.local_tokens, cfg.dims.id_tokens);
        scfg.embed_dim = cfg.dims.embed_dim;
        const dvi::SeededGenerator root(cfg.seeds.id);
        const dvi::RawIdFeatures raw = dvi::mock_extract(label, root, scfg);
        const dvi::FrozenProjection proj = dvi::FrozenProjection::seeded(root, scfg);
        return dvi::fuse_project(raw, proj);
    }
};

void run_extract_stats(const std::string& latent_path, const std::string& synth_family,
                       std::uint64_t seed, std::uint32_t channels, std::uint32_t height,
                       std::uint32_t width, double value, double eps, const std::string& out) {
    if (latent_path.empty() == synth_family.empty()) {
        throw std::invalid_argument("extract-stats: provide exactly one of --latent or --synth");
    }
    dvi::LatentTensor z;
    if (!latent_path.empty()) {
        z = dvi::read_latent(latent_path);
    } else {
        z = dvi::synth_latent(dvi::SeededGenerator(seed), channels, height, width,
                              family_from_string(synth_family), static_cast<float>(value));
    }

    const dvi::VisualContext ctx = dvi::extract_stats(z, eps);
    const nlohmann::json j = ctx;
    write_text(out, j.dump(2) + "\n");
    dvi::log_info("extract-stats: " + std::to_string(z.channels) + " channels -> " +
                  (out.empty() ? "stdout" : out));
}

void run_make_id(const std::string& label, std::uint64_t seed, std::uint32_t feature_dim,
                 std::uint32_t local_tokens, std::uint32_t tokens, std::uint32_t embed_dim,
                 double clamp, const std::string& out) {
    dvi::SemanticConfig cfg;
    cfg.feature_dim = feature_dim;
    cfg.local_tokens = local_tokens;
    cfg.total_tokens = tokens;
    cfg.embed_dim = embed_dim;
    cfg.clamp = clamp;

    const dvi::SeededGenerator root(seed);
    const dvi::RawIdFeatures raw = dvi::mock_extract(label, root, cfg);
    const dvi::FrozenProjection proj = dvi::FrozenProjection::seeded(root, cfg);
    const dvi::IdEmbedding id = dvi::fuse_project(raw, proj);

    dvi::write_tensor(out, id.matrix);
    dvi::log_info("make-id: '" + label + "' -> " + std::to_string(tokens) + "x" +
                  std::to_string(embed_dim) + " at " + out);
}

void run_modulate(const std::string& id_path, const std::string& stats_path, double t,
                  double lambda_base, double psi, double eps_norm, const std::string& out,
                  std::string diag_out) {
    if (t < 0.0) {
        throw std::invalid_argument("modulate: --t must be non-negative");
    }
    const dvi::TokenMatrix id = dvi::read_matrix(id_path);
    const dvi::VisualContext stats = load_stats(stats_path);

    const dvi::ModulationVector m_vis = dvi::broadcast(stats.v_ctx(), id.cols);
    const double lambda_applied = lambda_base * t;
    const dvi::FusedEmbedding fused = dvi::pffm(id, m_vis, lambda_applied, psi, eps_norm);

    dvi::write_tensor(out, fused.to_token_matrix());

    nlohmann::json diag;
    diag["lambda_applied"] = fused.lambda_applied;
    diag["psi"] = fused.psi_coeff;
    diag["eps_norm"] = eps_norm;
    nlohmann::json tokens = nlohmann::json::array();
    for (std::uint32_t r = 0; r < fused.tokens; ++r) {
        const dvi::MeanVar mv =
            dvi::mean_var(std::span<const double>(fused.row(r), fused.dim));
        tokens.push_back({{"token", r}, {"mean", mv.mean}, {"variance", mv.variance}});
    }
    diag["tokens"] = std::move(tokens);
    if (diag_out.empty()) {
        diag_out = out + ".json";
    }
    write_text(diag_out, diag.dump(2) + "\n");
    dvi::log_info("modulate: lambda " + dvi::format_number(lambda_applied) + " -> " + out);
}

void run_schedule(std::uint32_t steps, double lambda_base, std::uint32_t layers, double alpha,
                  const std::string& out) {
    const dvi::ScheduleGrid grid = dvi::build_grid(steps, lambda_base, layers, alpha);
    std::ostringstream csv;
    dvi::write_schedule_csv(csv, grid);
    write_text(out, csv.str());
    dvi::log_info("schedule: " + std::to_string(steps) + " steps -> " +
                  (out.empty() ? "stdout" : out));
}

void run_generate(const RunOptions& opts, const CLI::App& sub, const std::string& out,
                  const std::string& diag_out) {
    const dvi::RunConfig cfg = opts.resolve(sub, true);
    cfg.validate();

    std::optional<dvi::VisualContext> stats;
    if (!opts.stats_path.empty()) {
        stats = load_stats(opts.stats_path);
    } else if (cfg.mode != dvi::RunMode::no_visual) {
        throw std::invalid_argument("generate: mode " + dvi::to_string(cfg.mode) +
                                    " requires --stats (visual statistics JSON)");
    }

    const dvi::IdEmbedding id = opts.resolve_id(cfg);
    const dvi::GenerateResult result =
        dvi::generate(cfg, stats.has_value() ? &*stats : nullptr, id);

    dvi::write_tensor(out, result.latent);
    if (!diag_out.empty()) {
        write_text(diag_out, dvi::diagnostics_json(result, cfg).dump(2) + "\n");
    }
    const dvi::MeanVar mv = dvi::mean_var(std::span<const float>(result.latent.data));
    dvi::log_info("generate: mode " + dvi::to_string(cfg.mode) + ", " +
                  std::to_string(cfg.steps) + " steps, final latent mean " +
                  dvi::format_number(mv.mean) + " -> " + out);
}

void run_ablate(const RunOptions& opts, const CLI::App& sub, const std::string& out) {
    const dvi::RunConfig cfg = opts.resolve(sub, false);
    cfg.validate();
    if (opts.stats_path.empty()) {
        throw std::invalid_argument("ablate: --stats is required (all modes are compared)");
    }
    const dvi::VisualContext stats = load_stats(opts.stats_path);
    const dvi::IdEmbedding id = opts.resolve_id(cfg);

    const nlohmann::json j = dvi::run_ablation(cfg, stats, id);
    write_text(out, j.dump(2) + "\n");
    dvi::log_info("ablate: lambda_base " + dvi::format_number(cfg.lambda_base) + " -> " +
                  (out.empty() ? "stdout" : out));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dvi: dual-stream identity injection for a toy diffusion-transformer sampler"};
    app.require_subcommand(1);

    // extract-stats
    auto* stats_cmd =
        app.add_subcommand("extract-stats", "Per-channel mean/std statistics of a latent");
    std::string es_latent, es_synth, es_out;
    std::uint64_t es_seed = 7;
    std::uint32_t es_c = 16, es_h = 32, es_w = 32;
    double es_value = 0.0, es_eps = 1e-6;
    stats_cmd->add_option("--latent", es_latent, "input latent .dvt (rank 3)");
    stats_cmd->add_option("--synth", es_synth,
                          "synthesize the input: uniform, gaussian, constant, gradient");
    stats_cmd->add_option("--seed", es_seed, "seed for synthesized input");
    stats_cmd->add_option("--channels", es_c, "synthesized channels");
    stats_cmd->add_option("--height", es_h, "synthesized height");
    stats_cmd->add_option("--width", es_w, "synthesized width");
    stats_cmd->add_option("--value", es_value, "fill value for the constant family");
    stats_cmd->add_option("--eps", es_eps, "variance stabilizer");
    stats_cmd->add_option("--out", es_out, "output JSON path (stdout if absent)");
    stats_cmd->callback([&] {
        run_extract_stats(es_latent, es_synth, es_seed, es_c, es_h, es_w, es_value, es_eps,
                          es_out);
    });

    // make-id
    auto* id_cmd = app.add_subcommand("make-id", "Deterministic identity embedding from a label");
    std::string mi_label = "subject", mi_out;
    std::uint64_t mi_seed = 303;
    std::uint32_t mi_g = 512, mi_k = 4, mi_n = 8, mi_d = 2048;
    double mi_clamp = 4.0;
    id_cmd->add_option("--label", mi_label, "identity label");
    id_cmd->add_option("--seed", mi_seed, "feature/projection seed");
    id_cmd->add_option("--feature-dim", mi_g, "raw feature width");
    id_cmd->add_option("--local-tokens", mi_k, "local feature rows");
    id_cmd->add_option("--tokens", mi_n, "output token count");
    id_cmd->add_option("--embed-dim", mi_d, "output embedding dim");
    id_cmd->add_option("--clamp", mi_clamp, "raw feature clamp");
    id_cmd->add_option("--out", mi_out, "output .dvt path")->required();
    id_cmd->callback(
        [&] { run_make_id(mi_label, mi_seed, mi_g, mi_k, mi_n, mi_d, mi_clamp, mi_out); });

    // modulate
    auto* mod_cmd =
        app.add_subcommand("modulate", "Apply visual-statistics modulation to an ID embedding");
    std::string mo_id, mo_stats, mo_out, mo_diag;
    double mo_t = 1.0, mo_lambda = 1.0, mo_psi = 0.5, mo_eps = 1e-5;
    mod_cmd->add_option("--id", mo_id, "ID embedding .dvt")->required();
    mod_cmd->add_option("--stats", mo_stats, "visual statistics JSON")->required();
    mod_cmd->add_option("--t", mo_t, "timestep in [0, 1]");
    mod_cmd->add_option("--lambda-base", mo_lambda, "modulation weight at t=1");
    mod_cmd->add_option("--psi", mo_psi, "modulation scaling coefficient");
    mod_cmd->add_option("--eps-norm", mo_eps, "layer-norm variance stabilizer");
    mod_cmd->add_option("--out", mo_out, "output fused .dvt path")->required();
    mod_cmd->add_option("--diag-out", mo_diag, "diagnostics JSON path (default: <out>.json)");
    mod_cmd->callback(
        [&] { run_modulate(mo_id, mo_stats, mo_t, mo_lambda, mo_psi, mo_eps, mo_out, mo_diag); });

    // schedule
    auto* sch_cmd = app.add_subcommand("schedule", "Timestep grid and modulation-weight CSV");
    std::string sc_out;
    std::uint32_t sc_steps = 25, sc_layers = 4;
    double sc_lambda = 1.0, sc_alpha = 0.8;
    sch_cmd->add_option("--steps", sc_steps, "sampler steps");
    sch_cmd->add_option("--lambda-base", sc_lambda, "modulation weight at t=1");
    sch_cmd->add_option("--layers", sc_layers, "layer count (for alpha validation)");
    sch_cmd->add_option("--alpha", sc_alpha, "ID injection strength");
    sch_cmd->add_option("--out", sc_out, "output CSV path (stdout if absent)");
    sch_cmd->callback([&] { run_schedule(sc_steps, sc_lambda, sc_layers, sc_alpha, sc_out); });

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Euler/CFG sampling with identity injection");
    RunOptions gen_opts;
    gen_opts.add_to(*gen_cmd, true);
    std::string gen_out, gen_diag;
    gen_cmd->add_option("--out", gen_out, "final latent .dvt path")->required();
    gen_cmd->add_option("--diag-out", gen_diag, "per-step diagnostics JSON path");
    gen_cmd->callback([&] { run_generate(gen_opts, *gen_cmd, gen_out, gen_diag); });

    // ablate
    auto* abl_cmd =
        app.add_subcommand("ablate", "Run full / no_visual / concat modes and compare");
    RunOptions abl_opts;
    abl_opts.add_to(*abl_cmd, false);
    std::string abl_out;
    abl_cmd->add_option("--out", abl_out, "comparison JSON path (stdout if absent)");
    abl_cmd->callback([&] { run_ablate(abl_opts, *abl_cmd, abl_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
