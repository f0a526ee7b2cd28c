// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dvi {

std::uint64_t SeededGenerator::next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double SeededGenerator::next_unit() {
    // top 53 bits -> [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededGenerator::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = next_unit();  // 1 - u1 in (0, 1], keeps the log finite
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

SeededGenerator SeededGenerator::derive(std::string_view tag) const {
    // FNV-1a over the tag bytes, folded into the parent seed.
    std::uint64_t h = 0xcbf29ce484222325ull ^ seed_;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return SeededGenerator(h);
}

void SeededGenerator::fill_uniform(std::span<float> out) {
    for (float& v : out) {
        v = next_unit_f();
    }
}

void SeededGenerator::fill_gaussian(std::span<float> out, double scale, double clamp) {
    for (float& v : out) {
        double g = next_gaussian() * scale;
        if (clamp > 0.0) {
            g = std::clamp(g, -clamp, clamp);
        }
        v = static_cast<float>(g);
    }
}

}  // namespace dvi
