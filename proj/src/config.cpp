// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/config.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>

namespace dvi {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return {};
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    const auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw std::invalid_argument("config key '" + key + "': expected an unsigned integer, got '" +
                                    value + "'");
    }
    return out;
}

std::uint32_t parse_u32(const std::string& key, const std::string& value) {
    const std::uint64_t wide = parse_u64(key, value);
    if (wide > 0xFFFFFFFFull) {
        throw std::invalid_argument("config key '" + key + "': value out of range");
    }
    return static_cast<std::uint32_t>(wide);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double out = std::stod(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return out;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected a number, got '" + value +
                                    "'");
    }
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) {
            line = line.substr(0, comment);
        }
        const std::string stripped = trim(line);
        if (stripped.empty()) {
            continue;
        }
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key=value, got '" + stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": empty key or value");
        }

        if (key == "steps") {
            cfg.steps = parse_u32(key, value);
        } else if (key == "guidance") {
            cfg.guidance = parse_double(key, value);
        } else if (key == "lambda_base") {
            cfg.lambda_base = parse_double(key, value);
        } else if (key == "psi") {
            cfg.psi = parse_double(key, value);
        } else if (key == "alpha") {
            cfg.alpha = parse_double(key, value);
        } else if (key == "eps_norm") {
            cfg.eps_norm = parse_double(key, value);
        } else if (key == "mode") {
            cfg.mode = run_mode_from_string(value);
        } else if (key == "bias_source") {
            if (value == "raw") {
                cfg.bias_source = DitConfig::BiasSource::raw;
            } else if (value == "fused") {
                cfg.bias_source = DitConfig::BiasSource::fused;
            } else {
                throw std::invalid_argument("config key 'bias_source': expected raw or fused");
            }
        } else if (key == "seed.noise") {
            cfg.seeds.noise = parse_u64(key, value);
        } else if (key == "seed.weights") {
            cfg.seeds.weights = parse_u64(key, value);
        } else if (key == "seed.id") {
            cfg.seeds.id = parse_u64(key, value);
        } else if (key == "seed.prompt") {
            cfg.seeds.prompt = parse_u64(key, value);
        } else if (key == "dims.channels") {
            cfg.dims.channels = parse_u32(key, value);
        } else if (key == "dims.height") {
            cfg.dims.height = parse_u32(key, value);
        } else if (key == "dims.width") {
            cfg.dims.width = parse_u32(key, value);
        } else if (key == "dims.d_model") {
            cfg.dims.d_model = parse_u32(key, value);
        } else if (key == "dims.heads") {
            cfg.dims.heads = parse_u32(key, value);
        } else if (key == "dims.layers") {
            cfg.dims.layers = parse_u32(key, value);
        } else if (key == "dims.patch") {
            cfg.dims.patch = parse_u32(key, value);
        } else if (key == "dims.embed_dim") {
            cfg.dims.embed_dim = parse_u32(key, value);
        } else if (key == "dims.id_tokens") {
            cfg.dims.id_tokens = parse_u32(key, value);
        } else {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file " + path.string());
    }
    return parse_run_config(in);
}

}  // namespace dvi
