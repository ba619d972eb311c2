/*
 * Copyright 2026 The shype Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "shype/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace shype {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::uint64_t k = splitmix64(master_seed);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    block_ = stream_index;
}

void RngStream::refill() {
    // counter words: [draw block lo, draw block hi, stream lo, stream hi]
    std::uint64_t n = counter_ / 4;
    buffer_ = philox4x32({static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32),
                          static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32)},
                         key_);
    pos_ = 0;
}

std::uint32_t RngStream::next_u32() {
    if (pos_ >= 4) refill();
    ++counter_;
    return buffer_[pos_++];
}

std::uint64_t RngStream::next_u64() {
    std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
}

double RngStream::uniform01() {
    // 53 random bits, shifted by half an ulp so 0 and 1 never occur
    std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::standard_normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::array<double, 2> lognormal_log_params(double mean, double variance) {
    double s2 = std::log1p(variance / (mean * mean));
    return {std::log(mean) - 0.5 * s2, std::sqrt(s2)};
}

namespace {

double sample_gamma(double shape, double scale, RngStream& rng) {
    if (shape < 1.0) {
        double u = rng.uniform01();
        return sample_gamma(shape + 1.0, scale, rng) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = rng.standard_normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = rng.uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
}

[[noreturn]] void bad(DistKind kind, const std::string& why) {
    throw BadParameter(std::string(dist_name(kind)) + ": " + why);
}

}  // namespace

double sample_distribution(DistKind kind, std::span<const double> p, RngStream& rng) {
    if (p.size() != dist_arity(kind)) bad(kind, "wrong number of parameters");
    for (double v : p)
        if (!std::isfinite(v)) bad(kind, "non-finite parameter");
    switch (kind) {
    case DistKind::Dirac:
        return p[0];
    case DistKind::Uniform:
        if (p[0] > p[1]) bad(kind, "lower bound exceeds upper bound");
        return p[0] + (p[1] - p[0]) * rng.uniform01();
    case DistKind::Normal:
        if (p[1] < 0) bad(kind, "negative variance");
        return p[0] + std::sqrt(p[1]) * rng.standard_normal();
    case DistKind::LogNormal: {
        if (p[0] <= 0) bad(kind, "mean must be positive");
        if (p[1] < 0) bad(kind, "negative variance");
        auto [mu, s] = lognormal_log_params(p[0], p[1]);
        return std::exp(mu + s * rng.standard_normal());
    }
    case DistKind::Exponential:
        if (p[0] <= 0) bad(kind, "rate must be positive");
        return -std::log(rng.uniform01()) / p[0];
    case DistKind::Gamma:
        if (p[0] <= 0 || p[1] <= 0) bad(kind, "shape and scale must be positive");
        return sample_gamma(p[0], p[1], rng);
    }
    return 0.0;
}

double sample_distribution(const Expr& random_term, const Valuation& valuation, RngStream& rng) {
    std::vector<double> params;
    params.reserve(random_term.args().size());
    for (const auto& a : random_term.args()) params.push_back(eval_expression(a, valuation, &rng));
    return sample_distribution(random_term.distribution(), params, rng);
}

}  // namespace shype
