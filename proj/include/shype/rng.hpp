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

#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "shype/expr.hpp"

namespace shype {

/// Counter-based stream (Philox4x32-10). The key is derived from
/// (master seed, stream index), so stream i produces the same numbers no
/// matter which thread runs it or in which order streams are created.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1).
    double uniform01();
    double standard_normal();

    std::uint64_t draws() const { return counter_; }

private:
    void refill();

    std::array<std::uint32_t, 2> key_{};
    std::uint64_t counter_ = 0;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    unsigned pos_ = 4;
};

/// One Philox4x32-10 block; exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// One draw from the distribution with already-evaluated parameters.
/// Parameter conventions: Uniform(a, b); Normal(mean, variance);
/// LogNormal(mean, variance) of the lognormal variable itself;
/// Exponential(rate); Gamma(shape, scale); Dirac(p).
/// Throws BadParameter on illegal parameters.
double sample_distribution(DistKind kind, std::span<const double> params, RngStream& rng);

/// Evaluates the parameters of a Random expression under the valuation and
/// draws once.
double sample_distribution(const Expr& random_term, const Valuation& valuation, RngStream& rng);

/// (mu, sigma) of the underlying normal for LogNormal(mean, variance).
std::array<double, 2> lognormal_log_params(double mean, double variance);

}  // namespace shype
