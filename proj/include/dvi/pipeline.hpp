// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "dvi/dit.hpp"
#include "dvi/modulation.hpp"
#include "dvi/scheduler.hpp"
#include "dvi/semantic_stream.hpp"
#include "dvi/tensor.hpp"
#include "dvi/visual_stream.hpp"

namespace dvi {

enum class RunMode { full, no_visual, concat };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& name);

struct Seeds {
    std::uint64_t noise = 101;
    std::uint64_t weights = 202;
    std::uint64_t id = 303;
    std::uint64_t prompt = 404;
};

struct ModelDims {
    std::uint32_t channels = 16;  // C
    std::uint32_t height = 16;
    std::uint32_t width = 16;
    std::uint32_t d_model = 64;
    std::uint32_t heads = 4;
    std::uint32_t layers = 4;
    std::uint32_t patch = 2;
    std::uint32_t embed_dim = 2048;  // D
    std::uint32_t id_tokens = 8;     // N
};

struct RunConfig {
    std::uint32_t steps = 25;
    double guidance = 4.0;
    double lambda_base = 1.0;
    double psi = 0.5;
    double alpha = 0.8;
    RunMode mode = RunMode::full;
    Seeds seeds;
    ModelDims dims;
    double eps_norm = 1e-5;
    DitConfig::BiasSource bias_source = DitConfig::BiasSource::raw;

    void validate() const;  // throws std::invalid_argument
    DitConfig dit_config() const;
};

/// One record per sampler step. lambda is the modulation weight actually
/// applied to the fused embedding that step (0 in no_visual/concat modes).
struct StepDiagnostics {
    std::uint32_t step = 0;
    double t = 0.0;
    double lambda = 0.0;
    double fused_mean = 0.0;
    double fused_variance = 0.0;
    double latent_mean = 0.0;
    double latent_variance = 0.0;
    std::vector<double> alpha_per_layer;
};

struct GenerateResult {
    LatentTensor latent;
    std::vector<StepDiagnostics> steps;
};

/// v_uncond + g * (v_cond - v_uncond); g = 1 and g = 0 return the
/// corresponding branch exactly (bitwise), not via the formula.
LatentTensor cfg_combine(const LatentTensor& v_cond, const LatentTensor& v_uncond, double guidance);

/// One explicit Euler update z + (t_next - t_i) * v on the descending grid.
LatentTensor euler_step(const LatentTensor& z, const LatentTensor& v, double t_i, double t_next);

/// Full sampling loop: per step, schedule lambda, re-modulate the ID
/// embedding, run the backbone conditionally and with zeroed ID streams,
/// combine with classifier-free guidance, Euler-update. Byte-deterministic
/// per config. stats may be null only in no_visual mode.
GenerateResult generate(const RunConfig& cfg, const VisualContext* stats, const IdEmbedding& id);

nlohmann::json diagnostics_json(const GenerateResult& result, const RunConfig& cfg);

/// Runs all three modes under shared seeds; reports per-mode final-latent
/// statistics, pairwise L2 distances, and the concat distribution-mismatch
/// diagnostic.
nlohmann::json run_ablation(const RunConfig& base, const VisualContext& stats, const IdEmbedding& id);

}  // namespace dvi
