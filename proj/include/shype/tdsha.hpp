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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shype/lts.hpp"

namespace shype {

/// Continuous transition: stoichiometry on one variable times a rate function.
struct Flow {
    std::string variable;
    double stoichiometry = 1.0;
    Expr rate;  // normalized
};

/// Guard, reset and weight or rate shared by discrete edges.
struct EdgeLabel {
    std::string event;
    bool stochastic = false;
    Formula guard;  // normalized; true for stochastic edges built from a model
    Reset reset;    // normalized
    double weight = 1.0;  // instantaneous
    Expr rate;            // stochastic, normalized

    std::string key() const;
};

struct Edge {
    int source;
    int target;
    int label;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Transition-driven stochastic hybrid automaton. Edges are kept sorted.
/// Instantaneous edges form a set, stochastic edges a multiset.
class Tdsha {
public:
    std::vector<std::string> variables;
    std::vector<std::string> modes;
    std::vector<std::vector<int>> mode_flows;  // per mode, indices into flows
    std::vector<Flow> flows;
    std::vector<EdgeLabel> labels;
    std::vector<Edge> instantaneous;
    std::vector<Edge> stochastic;
    std::set<std::string> instantaneous_events;
    std::set<std::string> stochastic_events;
    int init_mode = 0;
    Reset init_reset;

    std::size_t mode_count() const { return modes.size(); }
    int add_flow(Flow f);
    int add_label(EdgeLabel l);
    /// Sorts edges and removes duplicate instantaneous edges; checks rate consistency.
    void finalize();
    /// Σ stoichiometry · rate over the flows of the mode, aligned with `variables`.
    std::vector<double> vector_field(int mode, const Valuation& x) const;
    std::vector<double> vector_field(int mode, const std::map<std::string, double>& x) const;

private:
    std::map<std::string, int> flow_index_;
    std::map<std::string, int> label_index_;
};

/// SOS mapping: one mode per configuration. The model must not contain
/// duration-valued event conditions (see expand_general_durations).
Tdsha from_lts(const Lts& lts);

/// Synchronised product over `sync`. Throws ResetIncompatible, InitIncompatible.
Tdsha tdsha_product(const Tdsha& a, const Tdsha& b, const std::set<std::string>& sync);

/// Automaton of one subcomponent (modes are its influence triples).
Tdsha subcomponent_tdsha(const Model& model, const std::string& name);
/// Automaton of one sequential controller (modes are its derivatives).
Tdsha controller_tdsha(const Model& model, const Term& controller);

/// Products of per-subcomponent and per-controller automata following the
/// structure of the system term. Unreachable modes are kept.
Tdsha compositional_mapping(const Model& model);

/// Keeps modes reachable from the initial mode through discrete edges.
Tdsha prune_unreachable(const Tdsha& t);

struct Isomorphism {
    std::vector<int> mode_map;  // mode of a -> mode of b
};

/// Bijection on modes preserving flows, labelled edges with multiplicity and
/// the initial condition; expressions compared after normalization.
std::optional<Isomorphism> graph_isomorphic(const Tdsha& a, const Tdsha& b);

enum class MappingMethod { Sos, Compositional };

/// Instantiates, expands general durations and applies the chosen mapping
/// (compositional automata are pruned).
Tdsha build_tdsha(const Model& model, MappingMethod method = MappingMethod::Sos, const LtsOptions& opts = {});

std::string tdsha_to_json(const Tdsha& t);
std::string tdsha_to_dot(const Tdsha& t);

}  // namespace shype
