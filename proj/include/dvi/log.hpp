// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace dvi {

// Verbosity comes from the DVI_LOG environment variable: quiet, info
// (default), or trace. Messages go to stderr; stdout stays clean for data.
enum class LogLevel { quiet = 0, info = 1, trace = 2 };

LogLevel log_level();

void log_info(const std::string& message);
void log_trace(const std::string& message);

}  // namespace dvi
