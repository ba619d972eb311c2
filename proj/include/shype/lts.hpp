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

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shype/model.hpp"

namespace shype {

/// Strength and influence type of one influence.
struct InfluenceValue {
    double strength = 0.0;
    std::string itype;
    std::vector<std::string> args;

    std::string itype_key() const { return shype::itype_key(itype, args); }

    friend bool operator==(const InfluenceValue&, const InfluenceValue&) = default;
    friend auto operator<=>(const InfluenceValue&, const InfluenceValue&) = default;
};

/// σ: influence name to (strength, influence type). Absent keys are unset.
using OperationalState = std::map<std::string, InfluenceValue>;

std::string to_string(const OperationalState& s);

/// σ[ι ↦ (r, I)]
OperationalState apply_update(const OperationalState& s, const std::string& influence, const InfluenceValue& v);

/// Γ(σ, τ, τ'); nullopt when both sides change an influence differently.
std::optional<OperationalState> merge_gamma(const OperationalState& sigma, const OperationalState& tau,
                                            const OperationalState& tau2);

using TermId = int;

/// Hash-consed process terms with cooperation sets resolved.
class TermTable {
public:
    /// The model must be instantiated (constant strengths).
    explicit TermTable(const Model& model);
    ~TermTable();

    TermId intern(const Term& t);
    std::string to_string(TermId id) const;
    TermKind kind(TermId id) const;
    std::size_t size() const;

    struct Move {
        std::string event;
        TermId target;
        OperationalState state;
    };
    /// One entry per derivation (multiset). Throws GammaUndefined.
    std::vector<Move> successors(TermId id, const OperationalState& state);

    const Model& model() const { return model_; }

private:
    struct Node;
    Model model_;
    std::vector<Node> nodes_;
    std::map<std::string, TermId> index_;
    std::map<std::string, TermId> defs_;
    std::set<std::string> unfolding_;

    TermId add(Node n);
    std::set<std::string> events_of(TermId id) const;
    void collect_events(TermId id, std::set<std::string>& out, std::set<TermId>& seen) const;
    TermId definition(const std::string& name);
    void successors_rec(TermId id, const OperationalState& state, std::vector<Move>& out, int depth);
    void print(TermId id, std::string& out, int ctx) const;
};

struct Configuration {
    TermId term;
    int state;  // index into Lts::states

    friend bool operator==(const Configuration&, const Configuration&) = default;
    friend auto operator<=>(const Configuration&, const Configuration&) = default;
};

struct LtsTransition {
    int source;
    std::string event;
    int target;
    int multiplicity;
};

struct LtsOptions {
    std::size_t state_space_cap = 1000000;
};

/// Labelled multitransition system over configurations reachable from the
/// configuration entered by init.
class Lts {
public:
    std::shared_ptr<TermTable> terms;
    std::vector<OperationalState> states;
    std::vector<Configuration> configs;
    std::vector<LtsTransition> transitions;  // sorted by (source, event, target)
    int initial = 0;
    Model model;  // instantiated
    OperationalState pre_init_state;

    std::string term_string(int config) const { return terms->to_string(configs[config].term); }
    const OperationalState& state_of(int config) const { return states[configs[config].state]; }
    std::optional<int> find(TermId term, const OperationalState& state) const;
    std::vector<int> outgoing(int config) const;  // transition indices

    std::size_t distinct_states() const { return states.size(); }
    std::set<std::string> events() const;
    std::set<std::string> influences() const;
};

/// Instantiates parameters when needed. Throws StateSpaceCapExceeded,
/// GammaUndefined, ModelError.
Lts build_lts(const Model& model, const LtsOptions& opts = {});

/// dV/dt for every variable as Σ r · ⟦I(args)⟧ over influences mapped to V.
std::map<std::string, Expr> ode_system_for(const OperationalState& state, const Model& model);

std::string lts_to_json(const Lts& lts);
std::string lts_to_dot(const Lts& lts);

}  // namespace shype
