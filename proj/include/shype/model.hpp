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
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shype/expr.hpp"

namespace shype {

inline constexpr const char* kInitEvent = "init";

/// (influence, strength, itype(args)).
struct Activity {
    std::string influence;
    Expr strength;
    std::string itype;
    std::vector<std::string> itype_args;

    friend bool operator==(const Activity&, const Activity&) = default;
};

/// Synchronisation set of a cooperation. `shared` stands for <*>: the set is
/// computed from the events the two operands have in common.
struct SyncSet {
    bool shared = false;
    std::set<std::string> events;

    friend bool operator==(const SyncSet&, const SyncSet&) = default;
};

enum class TermKind { Nil, Prefix, Choice, Ref, Coop };

/// Process term shared by subcomponents, controllers and the system.
class Term {
public:
    Term();  // 0

    static Term nil();
    static Term prefix(std::string event, std::optional<Activity> activity, Term next);
    static Term choice(Term left, Term right);
    static Term ref(std::string name);
    static Term coop(Term left, SyncSet sync, Term right);

    TermKind kind() const;
    const std::string& event() const;  // Prefix
    const std::optional<Activity>& activity() const;
    const std::string& name() const;  // Ref
    const SyncSet& sync() const;      // Coop
    const Term& left() const;         // Choice, Coop; continuation of Prefix
    const Term& right() const;

    friend bool operator==(const Term& a, const Term& b);

private:
    struct Node;
    explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

std::string to_string(const Term& t);

struct Definition {
    std::string name;
    Term body;

    friend bool operator==(const Definition&, const Definition&) = default;
};

struct ItypeDef {
    std::string name;
    std::vector<std::string> params;
    Expr body;

    friend bool operator==(const ItypeDef&, const ItypeDef&) = default;
};

enum class ActivationKind { Guard, Rate, Duration };

struct EventCondition {
    ActivationKind kind = ActivationKind::Guard;
    Formula guard;  // Guard
    Expr rate;      // Rate (no random terms) or Duration (with random terms)
    Reset reset;

    friend bool operator==(const EventCondition&, const EventCondition&) = default;
};

struct Model {
    std::vector<std::pair<std::string, Expr>> params;
    std::vector<std::string> variables;
    std::vector<std::string> instantaneous_events;  // without init
    std::vector<std::string> stochastic_events;
    std::vector<ItypeDef> itypes;
    std::vector<Definition> subcomponents;
    std::vector<Definition> controllers;
    std::optional<Definition> system;
    std::map<std::string, std::string> iv;
    std::map<std::string, EventCondition> ec;
    std::vector<std::pair<std::string, Expr>> measures;

    bool is_stochastic(const std::string& event) const;
    bool is_instantaneous(const std::string& event) const;  // true for init
    const ItypeDef* itype(const std::string& name) const;
    const Definition* definition(const std::string& name) const;
    std::set<std::string> influence_names() const;

    friend bool operator==(const Model&, const Model&) = default;
};

/// Events of a term, following definitions through references.
std::set<std::string> events_of(const Term& t, const Model& model);

/// Value of ⟦I(args)⟧ with actual arguments substituted for the parameters.
/// Throws MissingInfluenceTypeDef.
Expr itype_function(const Model& model, const std::string& itype, const std::vector<std::string>& args);

/// Textual form `I(a, b)` used as the itype component of a state entry.
std::string itype_key(const std::string& itype, const std::vector<std::string>& args);

/// Evaluated parameter values in declaration order, with overrides applied.
/// Throws UnknownParameter for an override naming no declared parameter.
std::map<std::string, double> parameter_values(const Model& model, const std::map<std::string, double>& overrides = {});

/// Substitutes parameter values everywhere; the result has no parameters.
Model instantiate(const Model& model, const std::map<std::string, double>& overrides = {});

struct Violation {
    std::string clause;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks the well-definedness conditions. Violations are collected, never
/// thrown.
ValidationReport validate_well_defined(const Model& model);

/// Replaces each duration-valued event condition by an instantaneous event
/// driven by a timer. Throws NameClash when a fresh name is taken.
Model expand_general_durations(const Model& model);

/// Subcomponent / controller split of the system term `Sigma <L> init.Con`.
struct SystemShape {
    Term uncontrolled;  // nil when the model is controller-only
    SyncSet sync;
    Term controller;
    bool has_init = false;
};
std::optional<SystemShape> system_shape(const Model& model);

}  // namespace shype
