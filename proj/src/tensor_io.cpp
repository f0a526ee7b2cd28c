// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dvi {

static_assert(std::numeric_limits<float>::is_iec559, "binary32 storage requires IEEE-754 floats");

namespace {

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::uint8_t> encode(std::span<const std::uint32_t> dims,
                                 std::span<const float> payload) {
    std::size_t expected = 1;
    for (std::uint32_t d : dims) {
        expected *= d;
    }
    if (expected != payload.size()) {
        throw std::runtime_error("encode_tensor: payload length mismatch");
    }
    for (float v : payload) {
        if (!std::isfinite(v)) {
            throw std::runtime_error("encode_tensor: non-finite values");
        }
    }

    std::vector<std::uint8_t> out;
    out.reserve(4 + 1 + 4 * dims.size() + 4 * payload.size());
    for (unsigned char b : kDvtMagic) {
        out.push_back(b);
    }
    out.push_back(static_cast<std::uint8_t>(dims.size()));
    for (std::uint32_t d : dims) {
        put_u32_le(out, d);
    }
    for (float v : payload) {
        put_u32_le(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const TokenMatrix& m) {
    const std::uint32_t dims[2] = {m.rows, m.cols};
    return encode(dims, m.data);
}

std::vector<std::uint8_t> encode_tensor(const LatentTensor& t) {
    const std::uint32_t dims[3] = {t.channels, t.height, t.width};
    return encode(dims, t.data);
}

TensorVariant decode_tensor(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kDvtMagic, 4) != 0) {
        throw std::runtime_error("not a DVT file");
    }
    if (bytes.size() < 5) {
        throw std::runtime_error("truncated header");
    }
    const std::uint8_t rank = bytes[4];
    if (rank != 2 && rank != 3) {
        throw std::runtime_error("unsupported rank " + std::to_string(rank) +
                                 " (expected 2 or 3)");
    }
    const std::size_t header_size = 5 + 4 * static_cast<std::size_t>(rank);
    if (bytes.size() < header_size) {
        throw std::runtime_error("truncated header");
    }

    std::uint32_t dims[3] = {0, 0, 0};
    std::size_t count = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
        dims[i] = get_u32_le(bytes.data() + 5 + 4 * static_cast<std::size_t>(i));
        if (dims[i] == 0) {
            throw std::runtime_error("zero dimension in header");
        }
        count *= dims[i];
    }
    if (bytes.size() - header_size != 4 * count) {
        throw std::runtime_error("payload length mismatch: header declares " +
                                 std::to_string(4 * count) + " payload bytes, file has " +
                                 std::to_string(bytes.size() - header_size));
    }

    std::vector<float> payload(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t u = get_u32_le(bytes.data() + header_size + 4 * i);
        payload[i] = std::bit_cast<float>(u);
        if (!std::isfinite(payload[i])) {
            throw std::runtime_error("non-finite values in payload");
        }
    }

    if (rank == 2) {
        TokenMatrix m(dims[0], dims[1]);
        m.data = std::move(payload);
        return m;
    }
    LatentTensor t(dims[0], dims[1], dims[2]);
    t.data = std::move(payload);
    return t;
}

namespace {

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) {
        throw std::runtime_error("read failed for " + path.string());
    }
    return bytes;
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const TokenMatrix& m) {
    write_bytes(path, encode_tensor(m));
}

void write_tensor(const std::filesystem::path& path, const LatentTensor& t) {
    write_bytes(path, encode_tensor(t));
}

TensorVariant read_tensor(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    try {
        return decode_tensor(bytes);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

LatentTensor read_latent(const std::filesystem::path& path) {
    auto v = read_tensor(path);
    if (auto* t = std::get_if<LatentTensor>(&v)) {
        return std::move(*t);
    }
    throw std::runtime_error(path.string() + ": expected a rank-3 tensor, found rank 2");
}

TokenMatrix read_matrix(const std::filesystem::path& path) {
    auto v = read_tensor(path);
    if (auto* m = std::get_if<TokenMatrix>(&v)) {
        return std::move(*m);
    }
    throw std::runtime_error(path.string() + ": expected a rank-2 tensor, found rank 3");
}

}  // namespace dvi
