// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace dvi {

/// Deterministic value stream built on the splitmix64 state transition.
/// The uniform stream is bit-exact across platforms (pure integer mixing
/// plus a fixed 53-bit scale); gaussian draws additionally go through libm
/// sqrt/log/sin/cos. No call path touches OS entropy, so identical seeds
/// replay identical streams.
class SeededGenerator {
public:
    explicit SeededGenerator(std::uint64_t seed) : seed_(seed), state_(seed) {}

    static constexpr std::string_view algorithm = "splitmix64";

    std::uint64_t seed() const { return seed_; }

    /// Child generator whose seed is an FNV-1a hash of (seed, tag).
    /// Streams with distinct tags are independent for practical purposes.
    SeededGenerator derive(std::string_view tag) const;

    std::uint64_t next_u64();

    /// Uniform double in [0, 1), 53 significant bits.
    double next_unit();

    float next_unit_f() { return static_cast<float>(next_unit()); }

    /// Standard normal via Box-Muller; pairs are drawn and the spare cached.
    double next_gaussian();

    void fill_uniform(std::span<float> out);

    /// Gaussian fill, scaled; clamp > 0 truncates to [-clamp, clamp] after scaling.
    void fill_gaussian(std::span<float> out, double scale = 1.0, double clamp = 0.0);

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dvi
