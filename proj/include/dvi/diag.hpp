// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>

namespace dvi {

/// Shortest round-trip decimal form; integral values keep a ".0" suffix so
/// CSV columns stay visibly floating-point ("1.0", "0.8", "0.0").
std::string format_number(double v);

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;  // population variance
};

MeanVar mean_var(std::span<const float> values);
MeanVar mean_var(std::span<const double> values);

}  // namespace dvi
