// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/synth.hpp"

namespace dvi {

LatentTensor synth_latent(SeededGenerator gen, std::uint32_t channels, std::uint32_t height,
                          std::uint32_t width, SynthFamily family, float constant_value) {
    LatentTensor t(channels, height, width);
    switch (family) {
        case SynthFamily::uniform:
            gen.fill_uniform(t.data);
            break;
        case SynthFamily::gaussian:
            gen.fill_gaussian(t.data);
            break;
        case SynthFamily::constant:
            std::fill(t.data.begin(), t.data.end(), constant_value);
            break;
        case SynthFamily::gradient:
            for (std::uint32_t c = 0; c < channels; ++c) {
                for (std::uint32_t i = 0; i < height; ++i) {
                    for (std::uint32_t j = 0; j < width; ++j) {
                        t.at(c, i, j) = static_cast<float>(
                            static_cast<double>(c) + static_cast<double>(i) / height +
                            static_cast<double>(j) / width);
                    }
                }
            }
            break;
    }
    return t;
}

TokenMatrix synth_tokens(SeededGenerator gen, std::uint32_t rows, std::uint32_t cols,
                         SynthFamily family, float constant_value) {
    TokenMatrix m(rows, cols);
    switch (family) {
        case SynthFamily::uniform:
            gen.fill_uniform(m.data);
            break;
        case SynthFamily::gaussian:
            gen.fill_gaussian(m.data);
            break;
        case SynthFamily::constant:
            std::fill(m.data.begin(), m.data.end(), constant_value);
            break;
        case SynthFamily::gradient:
            for (std::uint32_t r = 0; r < rows; ++r) {
                for (std::uint32_t c = 0; c < cols; ++c) {
                    m.at(r, c) = static_cast<float>(static_cast<double>(r) +
                                                    static_cast<double>(c) / cols);
                }
            }
            break;
    }
    return m;
}

}  // namespace dvi
