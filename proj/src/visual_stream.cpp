// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/visual_stream.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dvi {

CropPlan plan_crop(std::uint32_t src_h, std::uint32_t src_w, std::uint32_t target) {
    if (src_h == 0 || src_w == 0 || target == 0) {
        throw std::invalid_argument("plan_crop: dimensions must be positive");
    }
    const std::uint64_t min_side = std::min(src_h, src_w);
    if (min_side < 1) {
        throw std::invalid_argument("plan_crop: source smaller than one pixel");
    }

    // scaled = round(src * target / min_side), ties away from zero, done in
    // exact integer arithmetic: floor((2*src*target + min_side) / (2*min_side)).
    const auto scale_side = [&](std::uint64_t side) -> std::uint32_t {
        const std::uint64_t num = 2 * side * target + min_side;
        return static_cast<std::uint32_t>(num / (2 * min_side));
    };

    CropPlan plan;
    plan.src_h = src_h;
    plan.src_w = src_w;
    plan.target = target;
    plan.scaled_h = scale_side(src_h);
    plan.scaled_w = scale_side(src_w);
    if (plan.scaled_h < target || plan.scaled_w < target) {
        throw std::runtime_error("plan_crop: scaled image smaller than crop target");
    }
    plan.crop_top = (plan.scaled_h - target) / 2;
    plan.crop_left = (plan.scaled_w - target) / 2;
    return plan;
}

MixingMatrix MixingMatrix::seeded(const SeededGenerator& gen, std::uint32_t out_channels,
                                  std::uint32_t in_channels) {
    if (out_channels == 0 || in_channels == 0) {
        throw std::invalid_argument("MixingMatrix::seeded: channels must be positive");
    }
    MixingMatrix m;
    m.out_channels = out_channels;
    m.in_channels = in_channels;
    m.weights.resize(static_cast<std::size_t>(out_channels) * in_channels);
    SeededGenerator local = gen.derive("mixing");
    for (std::uint32_t o = 0; o < out_channels; ++o) {
        double row_sum = 0.0;
        for (std::uint32_t i = 0; i < in_channels; ++i) {
            const double w = 0.1 + local.next_unit();
            m.weights[static_cast<std::size_t>(o) * in_channels + i] = w;
            row_sum += w;
        }
        for (std::uint32_t i = 0; i < in_channels; ++i) {
            m.weights[static_cast<std::size_t>(o) * in_channels + i] /= row_sum;
        }
    }
    return m;
}

MixingMatrix MixingMatrix::identity(std::uint32_t n) {
    if (n == 0) {
        throw std::invalid_argument("MixingMatrix::identity: size must be positive");
    }
    MixingMatrix m;
    m.out_channels = n;
    m.in_channels = n;
    m.weights.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (std::uint32_t i = 0; i < n; ++i) {
        m.weights[static_cast<std::size_t>(i) * n + i] = 1.0;
    }
    return m;
}

LatentTensor mock_encode(const LatentTensor& pixels, const CropPlan& plan,
                         const MixingMatrix& mixing, std::uint32_t factor) {
    if (pixels.height != plan.scaled_h || pixels.width != plan.scaled_w) {
        throw std::invalid_argument(
            "mock_encode: pixel dims " + std::to_string(pixels.height) + "x" +
            std::to_string(pixels.width) + " do not match plan " +
            std::to_string(plan.scaled_h) + "x" + std::to_string(plan.scaled_w));
    }
    if (mixing.in_channels != pixels.channels) {
        throw std::invalid_argument("mock_encode: mixing matrix expects " +
                                    std::to_string(mixing.in_channels) + " input channels, got " +
                                    std::to_string(pixels.channels));
    }
    if (factor == 0 || plan.target % factor != 0) {
        throw std::invalid_argument("mock_encode: factor must divide the crop target");
    }

    const std::uint32_t side = plan.target / factor;
    const double block_area = static_cast<double>(factor) * factor;

    // Per input channel, block averages over the cropped square.
    std::vector<double> pooled(static_cast<std::size_t>(pixels.channels) * side * side);
    for (std::uint32_t c = 0; c < pixels.channels; ++c) {
        for (std::uint32_t bi = 0; bi < side; ++bi) {
            for (std::uint32_t bj = 0; bj < side; ++bj) {
                double sum = 0.0;
                for (std::uint32_t di = 0; di < factor; ++di) {
                    for (std::uint32_t dj = 0; dj < factor; ++dj) {
                        const std::uint32_t pi = plan.crop_top + bi * factor + di;
                        const std::uint32_t pj = plan.crop_left + bj * factor + dj;
                        sum += static_cast<double>(pixels.at(c, pi, pj));
                    }
                }
                pooled[(static_cast<std::size_t>(c) * side + bi) * side + bj] = sum / block_area;
            }
        }
    }

    LatentTensor out(mixing.out_channels, side, side);
    for (std::uint32_t o = 0; o < mixing.out_channels; ++o) {
        for (std::uint32_t bi = 0; bi < side; ++bi) {
            for (std::uint32_t bj = 0; bj < side; ++bj) {
                double acc = 0.0;
                for (std::uint32_t c = 0; c < pixels.channels; ++c) {
                    acc += mixing.at(o, c) *
                           pooled[(static_cast<std::size_t>(c) * side + bi) * side + bj];
                }
                out.at(o, bi, bj) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

std::vector<double> VisualContext::v_ctx() const {
    std::vector<double> out;
    out.reserve(mu.size() + sigma.size());
    out.insert(out.end(), mu.begin(), mu.end());
    out.insert(out.end(), sigma.begin(), sigma.end());
    return out;
}

VisualContext extract_stats(const LatentTensor& z, double eps) {
    if (eps <= 0.0) {
        throw std::invalid_argument("extract_stats: eps must be positive");
    }
    require_finite(z, "extract_stats");

    VisualContext ctx;
    ctx.eps = eps;
    ctx.mu.resize(z.channels);
    ctx.sigma.resize(z.channels);

    const std::size_t plane = static_cast<std::size_t>(z.height) * z.width;
    for (std::uint32_t c = 0; c < z.channels; ++c) {
        const float* base = z.data.data() + static_cast<std::size_t>(c) * plane;
        double sum = 0.0;
        for (std::size_t k = 0; k < plane; ++k) {
            sum += static_cast<double>(base[k]);
        }
        const double mean = sum / static_cast<double>(plane);
        double sq = 0.0;
        for (std::size_t k = 0; k < plane; ++k) {
            const double d = static_cast<double>(base[k]) - mean;
            sq += d * d;
        }
        const double var = sq / static_cast<double>(plane);
        ctx.mu[c] = mean;
        ctx.sigma[c] = std::sqrt(var + eps);
    }
    return ctx;
}

void to_json(nlohmann::json& j, const VisualContext& v) {
    j = nlohmann::json{{"C", v.mu.size()}, {"eps", v.eps}, {"mu", v.mu}, {"sigma", v.sigma}};
}

void from_json(const nlohmann::json& j, VisualContext& v) {
    const auto c = j.at("C").get<std::size_t>();
    j.at("eps").get_to(v.eps);
    j.at("mu").get_to(v.mu);
    j.at("sigma").get_to(v.sigma);
    if (v.mu.size() != c || v.sigma.size() != c) {
        throw std::invalid_argument("VisualContext: mu/sigma length does not match C");
    }
    if (v.eps <= 0.0) {
        throw std::invalid_argument("VisualContext: eps must be positive");
    }
}

}  // namespace dvi
