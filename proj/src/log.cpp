// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/log.hpp"

#include <cstdlib>
#include <iostream>

namespace dvi {

LogLevel log_level() {
    const char* raw = std::getenv("DVI_LOG");
    if (raw == nullptr) {
        return LogLevel::info;
    }
    const std::string value(raw);
    if (value == "quiet") {
        return LogLevel::quiet;
    }
    if (value == "trace") {
        return LogLevel::trace;
    }
    return LogLevel::info;
}

void log_info(const std::string& message) {
    if (log_level() >= LogLevel::info) {
        std::cerr << "[info] " << message << '\n';
    }
}

void log_trace(const std::string& message) {
    if (log_level() >= LogLevel::trace) {
        std::cerr << "[trace] " << message << '\n';
    }
}

}  // namespace dvi
