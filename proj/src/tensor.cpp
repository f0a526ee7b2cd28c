// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace dvi {

LatentTensor::LatentTensor(std::uint32_t c, std::uint32_t h, std::uint32_t w)
    : channels(c), height(h), width(w) {
    if (c == 0 || h == 0 || w == 0) {
        throw std::invalid_argument("LatentTensor dims must be positive, got " + std::to_string(c) +
                                    "x" + std::to_string(h) + "x" + std::to_string(w));
    }
    data.assign(static_cast<std::size_t>(c) * h * w, 0.0f);
}

TokenMatrix::TokenMatrix(std::uint32_t r, std::uint32_t c) : rows(r), cols(c) {
    if (r == 0 || c == 0) {
        throw std::invalid_argument("TokenMatrix dims must be positive, got " + std::to_string(r) +
                                    "x" + std::to_string(c));
    }
    data.assign(static_cast<std::size_t>(r) * c, 0.0f);
}

namespace {

void check_finite(const std::vector<float>& values, const std::string& what) {
    for (float v : values) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(what + ": non-finite values");
        }
    }
}

}  // namespace

void require_finite(const LatentTensor& t, const std::string& what) {
    check_finite(t.data, what);
}

void require_finite(const TokenMatrix& m, const std::string& what) {
    check_finite(m.data, what);
}

}  // namespace dvi
