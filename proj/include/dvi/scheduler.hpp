// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

namespace dvi {

/// Uniform descending timestep grid with the linear-decay modulation weight
/// lambda(t) = lambda_base * t, plus per-layer injection strengths.
/// t_0 = 1.0 and t_T = 0.0 exactly; lambda hits zero only at the terminal
/// boundary, so every sampler step i < T still sees a positive weight when
/// lambda_base > 0.
struct ScheduleGrid {
    std::uint32_t steps = 0;              // T
    std::vector<double> t_values;         // length T+1, strictly decreasing
    double lambda_base = 1.0;
    std::vector<double> alpha_per_layer;  // entries in [0, 2]
};

ScheduleGrid build_grid(std::uint32_t steps, double lambda_base, std::uint32_t layers,
                        double alpha = 0.8);

/// lambda_base * t_i for 0 <= i <= T; out-of-range indices are rejected.
double lambda_at(const ScheduleGrid& grid, std::uint32_t step);

/// CSV rows "step,t,lambda", one per grid boundary (T+1 data rows).
void write_schedule_csv(std::ostream& out, const ScheduleGrid& grid);

}  // namespace dvi
