// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "dvi/tensor.hpp"

namespace dvi {

// .dvt container: 4 magic bytes "DVT1", u8 rank (2 or 3), rank u32
// little-endian dims, then the payload as little-endian IEEE-754 binary32
// in row-major order. Byte layout is fixed regardless of host endianness.
inline constexpr unsigned char kDvtMagic[4] = {'D', 'V', 'T', '1'};

using TensorVariant = std::variant<TokenMatrix, LatentTensor>;

std::vector<std::uint8_t> encode_tensor(const TokenMatrix& m);
std::vector<std::uint8_t> encode_tensor(const LatentTensor& t);

/// Inverse of encode_tensor. Throws std::runtime_error: "not a DVT file" on
/// bad magic, "payload length mismatch" when the byte count disagrees with
/// the declared dims, "non-finite values" on NaN/Inf payload entries.
TensorVariant decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const TokenMatrix& m);
void write_tensor(const std::filesystem::path& path, const LatentTensor& t);

TensorVariant read_tensor(const std::filesystem::path& path);

/// Rank-checked readers; throw naming the path when the rank is wrong.
LatentTensor read_latent(const std::filesystem::path& path);
TokenMatrix read_matrix(const std::filesystem::path& path);

}  // namespace dvi
