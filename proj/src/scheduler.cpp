// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/scheduler.hpp"

#include <stdexcept>
#include <string>

#include "dvi/diag.hpp"

namespace dvi {

ScheduleGrid build_grid(std::uint32_t steps, double lambda_base, std::uint32_t layers,
                        double alpha) {
    if (steps == 0) {
        throw std::invalid_argument("build_grid: need at least one step");
    }
    if (lambda_base < 0.0) {
        throw std::invalid_argument("build_grid: lambda_base must be non-negative");
    }
    if (alpha < 0.0 || alpha > 2.0) {
        throw std::invalid_argument("build_grid: alpha must lie in [0, 2], got " +
                                    format_number(alpha));
    }

    ScheduleGrid grid;
    grid.steps = steps;
    grid.lambda_base = lambda_base;
    grid.t_values.resize(steps + 1);
    for (std::uint32_t i = 0; i <= steps; ++i) {
        grid.t_values[i] = static_cast<double>(steps - i) / static_cast<double>(steps);
    }
    grid.alpha_per_layer.assign(layers, alpha);
    return grid;
}

double lambda_at(const ScheduleGrid& grid, std::uint32_t step) {
    if (step >= grid.t_values.size()) {
        throw std::out_of_range("lambda_at: step " + std::to_string(step) +
                                " outside grid of " + std::to_string(grid.t_values.size()) +
                                " boundaries");
    }
    return grid.lambda_base * grid.t_values[step];
}

void write_schedule_csv(std::ostream& out, const ScheduleGrid& grid) {
    out << "step,t,lambda\n";
    for (std::uint32_t i = 0; i < grid.t_values.size(); ++i) {
        out << i << ',' << format_number(grid.t_values[i]) << ','
            << format_number(lambda_at(grid, i)) << '\n';
    }
}

}  // namespace dvi
