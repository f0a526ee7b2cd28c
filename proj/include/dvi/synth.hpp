// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dvi/rng.hpp"
#include "dvi/tensor.hpp"

namespace dvi {

enum class SynthFamily {
    uniform,   // iid uniform [0, 1)
    gaussian,  // iid standard normal
    constant,  // every cell = constant_value
    gradient,  // cell (c, i, j) = c + i/h + j/w
};

/// Deterministic per (gen.seed, dims, family); the generator is taken by
/// value so repeated calls with the same arguments are pure.
LatentTensor synth_latent(SeededGenerator gen, std::uint32_t channels, std::uint32_t height,
                          std::uint32_t width, SynthFamily family, float constant_value = 0.0f);

/// Rank-2 counterpart (gradient fills cell (r, c) = r + c/cols).
TokenMatrix synth_tokens(SeededGenerator gen, std::uint32_t rows, std::uint32_t cols,
                         SynthFamily family, float constant_value = 0.0f);

}  // namespace dvi
