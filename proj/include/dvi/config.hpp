// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <istream>

#include "dvi/pipeline.hpp"

namespace dvi {

/// Flat key=value run configuration. '#' starts a comment, blank lines are
/// skipped, unknown keys and malformed values are rejected. Keys mirror
/// RunConfig; see the README for the full list.
RunConfig parse_run_config(std::istream& in);

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace dvi
