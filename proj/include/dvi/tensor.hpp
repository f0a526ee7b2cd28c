// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace dvi {

/// Dense C x h x w grid, row-major with channel outermost. 32-bit storage;
/// accumulating arithmetic elsewhere widens to 64-bit.
struct LatentTensor {
    std::uint32_t channels = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<float> data;

    LatentTensor() = default;
    LatentTensor(std::uint32_t c, std::uint32_t h, std::uint32_t w);

    std::size_t size() const { return data.size(); }

    float at(std::uint32_t c, std::uint32_t i, std::uint32_t j) const {
        return data[(static_cast<std::size_t>(c) * height + i) * width + j];
    }
    float& at(std::uint32_t c, std::uint32_t i, std::uint32_t j) {
        return data[(static_cast<std::size_t>(c) * height + i) * width + j];
    }

    bool same_shape(const LatentTensor& other) const {
        return channels == other.channels && height == other.height && width == other.width;
    }
};

/// Dense rows x cols matrix, row-major. Generic token container (ID
/// embeddings, attention inputs, patch tokens).
struct TokenMatrix {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<float> data;

    TokenMatrix() = default;
    TokenMatrix(std::uint32_t r, std::uint32_t c);

    std::size_t size() const { return data.size(); }

    float at(std::uint32_t r, std::uint32_t c) const {
        return data[static_cast<std::size_t>(r) * cols + c];
    }
    float& at(std::uint32_t r, std::uint32_t c) {
        return data[static_cast<std::size_t>(r) * cols + c];
    }

    const float* row(std::uint32_t r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
    float* row(std::uint32_t r) { return data.data() + static_cast<std::size_t>(r) * cols; }

    bool same_shape(const TokenMatrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

/// Throws std::runtime_error mentioning `what` if any value is NaN/Inf.
void require_finite(const LatentTensor& t, const std::string& what);
void require_finite(const TokenMatrix& m, const std::string& what);

}  // namespace dvi
