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

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "shype/lts.hpp"

namespace shype {

enum class StateEquivKind { Equality, DotEq };

/// (variable, canonical key of the normalized influence function) to the
/// summed strength. Zero sums are dropped.
using StateSignature = std::map<std::pair<std::string, std::string>, double>;

StateSignature state_signature(const OperationalState& state, const Model& model);

bool states_equivalent(const OperationalState& a, const Model& ma, const OperationalState& b, const Model& mb,
                       StateEquivKind kind);

/// act(a) times a multiplicity. A constant rate has an empty form and
/// `value` is the rate itself; otherwise `form` is the canonical key of the
/// normalized activation and `value` the multiplicity.
struct RateValue {
    std::string form;
    double value = 0.0;

    friend bool operator==(const RateValue&, const RateValue&) = default;
    friend auto operator<=>(const RateValue&, const RateValue&) = default;
};

/// Aggregate rate of `event` from `config` into `block` (configurations of
/// the same LTS). Throws NonComparableRate for a general-duration event.
RateValue rate_to_class(const Lts& lts, int config, const std::string& event, const std::set<int>& block);

/// A configuration of the left (side 0) or right (side 1) model.
struct Member {
    int side;
    int config;

    friend bool operator==(const Member&, const Member&) = default;
    friend auto operator<=>(const Member&, const Member&) = default;
};

struct Partition {
    std::vector<std::vector<Member>> blocks;  // sorted, blocks ordered by first member

    int block_of(Member m) const;
};

struct Witness {
    std::vector<std::string> events;  // path from the initial pair to the mismatch
    std::string reason;
};

struct BisimResult {
    bool bisimilar = false;
    Partition partition;
    std::optional<Witness> witness;
};

struct BisimOptions {
    LtsOptions lts;
    /// When set, refinement picks splitter blocks in an order drawn from this
    /// seed instead of refining by full signatures round by round.
    std::optional<std::uint64_t> schedule_seed;
};

/// Strong bisimulation with identical states, events and rates matched
/// transition by transition.
BisimResult check_system_bisim(const Lts& p, const Lts& q, const BisimOptions& opts = {});
BisimResult check_system_bisim(const Model& p, const Model& q, const BisimOptions& opts = {});

/// Coarsest stochastic system bisimulation w.r.t. the state equivalence.
/// Throws NonComparableRate.
BisimResult check_stochastic_system_bisim(const Lts& p, const Lts& q, StateEquivKind kind,
                                          const BisimOptions& opts = {});
BisimResult check_stochastic_system_bisim(const Model& p, const Model& q, StateEquivKind kind,
                                          const BisimOptions& opts = {});

struct RelationVerdict {
    bool verified = false;
    std::optional<std::size_t> pair;  // index of the violating pair
    std::string reason;
};

using TermPair = std::pair<std::string, std::string>;

/// Checks the transfer conditions for the equivalence generated by the pairs
/// (left term, right term) with classes split by the state equivalence.
/// Throws UnknownDerivative for a term with no reachable configuration.
RelationVerdict verify_relation(const Lts& p, const Lts& q, const std::vector<TermPair>& pairs, StateEquivKind kind);
RelationVerdict verify_relation(const Model& p, const Model& q, const std::vector<TermPair>& pairs,
                                StateEquivKind kind);

/// Term pairs of every two members sharing a block.
std::vector<TermPair> relation_of(const Partition& partition, const Lts& p, const Lts& q);

/// Nodes are instantaneous events; an edge a -> b when a's reset may leave
/// b's guard satisfied.
struct IGraph {
    std::vector<std::string> nodes;
    std::set<std::pair<int, int>> edges;

    bool has_edge(const std::string& a, const std::string& b) const;
};

IGraph build_igraph(const Model& model, const IntervalOptions& opts = {});

enum class Behaviour { WellBehaved, Unknown };

struct WellBehavedVerdict {
    Behaviour verdict = Behaviour::Unknown;
    std::string reason;
    /// Instantaneous events on a cycle of instantaneous events in some
    /// sequential controller.
    std::set<std::string> unsafe;
    IGraph igraph;
    std::vector<std::vector<std::string>> cycles;
};

WellBehavedVerdict check_well_behaved(const Model& model, const IntervalOptions& opts = {});

std::string bisim_to_json(const BisimResult& r, const Lts& p, const Lts& q);
std::string well_behaved_to_json(const WellBehavedVerdict& v);

}  // namespace shype
