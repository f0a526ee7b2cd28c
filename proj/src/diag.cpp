// Copyright (C) 2026 DVI Project Contributors
// SPDX-License-Identifier: Apache-2.0

#include "dvi/diag.hpp"

#include <charconv>
#include <stdexcept>

namespace dvi {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) {
        throw std::runtime_error("format_number: conversion failed");
    }
    std::string s(buf, res.ptr);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
        s += ".0";
    }
    return s;
}

namespace {

template <typename T>
MeanVar mean_var_impl(std::span<const T> values) {
    if (values.empty()) {
        return {};
    }
    double sum = 0.0;
    for (T v : values) {
        sum += static_cast<double>(v);
    }
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (T v : values) {
        const double d = static_cast<double>(v) - mean;
        sq += d * d;
    }
    return {mean, sq / static_cast<double>(values.size())};
}

}  // namespace

MeanVar mean_var(std::span<const float> values) {
    return mean_var_impl(values);
}

MeanVar mean_var(std::span<const double> values) {
    return mean_var_impl(values);
}

}  // namespace dvi
