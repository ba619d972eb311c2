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

#include "shype/model.hpp"

#include <algorithm>
#include <functional>

namespace shype {

// --- Term -------------------------------------------------------------------

struct Term::Node {
    TermKind kind = TermKind::Nil;
    std::string text;  // event for Prefix, name for Ref
    std::optional<Activity> activity;
    SyncSet sync;
    std::vector<Term> children;
};

Term::Term() {
    static const auto nil_node = std::make_shared<const Node>();
    node_ = nil_node;
}

Term Term::nil() { return Term(); }

Term Term::prefix(std::string event, std::optional<Activity> activity, Term next) {
    auto n = std::make_shared<Node>();
    n->kind = TermKind::Prefix;
    n->text = std::move(event);
    n->activity = std::move(activity);
    n->children = {std::move(next)};
    return Term(std::move(n));
}

Term Term::choice(Term left, Term right) {
    auto n = std::make_shared<Node>();
    n->kind = TermKind::Choice;
    n->children = {std::move(left), std::move(right)};
    return Term(std::move(n));
}

Term Term::ref(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = TermKind::Ref;
    n->text = std::move(name);
    return Term(std::move(n));
}

Term Term::coop(Term left, SyncSet sync, Term right) {
    auto n = std::make_shared<Node>();
    n->kind = TermKind::Coop;
    n->sync = std::move(sync);
    n->children = {std::move(left), std::move(right)};
    return Term(std::move(n));
}

TermKind Term::kind() const { return node_->kind; }
const std::string& Term::event() const { return node_->text; }
const std::optional<Activity>& Term::activity() const { return node_->activity; }
const std::string& Term::name() const { return node_->text; }
const SyncSet& Term::sync() const { return node_->sync; }
const Term& Term::left() const { return node_->children.at(0); }
const Term& Term::right() const { return node_->children.at(1); }

bool operator==(const Term& a, const Term& b) {
    if (a.node_ == b.node_) return true;
    const auto& x = *a.node_;
    const auto& y = *b.node_;
    return x.kind == y.kind && x.text == y.text && x.activity == y.activity && x.sync == y.sync &&
           x.children == y.children;
}

namespace {

void print_term(const Term& t, std::string& out, int ctx);

void print_wrapped(const Term& t, std::string& out, int ctx, bool wrap) {
    if (wrap) out += '(';
    print_term(t, out, wrap ? 0 : ctx);
    if (wrap) out += ')';
}

std::string sync_text(const SyncSet& s) {
    if (s.shared) return " <*> ";
    if (s.events.empty()) return " || ";
    std::string out = " <";
    bool first = true;
    for (const auto& e : s.events) {
        if (!first) out += ", ";
        out += e;
        first = false;
    }
    return out + "> ";
}

// ctx: 0 cooperation operand position, 1 choice operand, 2 prefix continuation
void print_term(const Term& t, std::string& out, int ctx) {
    switch (t.kind()) {
    case TermKind::Nil:
        out += '0';
        return;
    case TermKind::Ref:
        out += t.name();
        return;
    case TermKind::Prefix:
        out += t.event();
        if (const auto& a = t.activity()) {
            out += ":(" + a->influence + ", " + to_string(a->strength) + ", " + itype_key(a->itype, a->itype_args) + ")";
        }
        out += '.';
        print_wrapped(t.left(), out, 2, t.left().kind() == TermKind::Choice || t.left().kind() == TermKind::Coop);
        return;
    case TermKind::Choice:
        print_wrapped(t.left(), out, 1, t.left().kind() == TermKind::Coop);
        out += " + ";
        print_wrapped(t.right(), out, 1, t.right().kind() == TermKind::Coop || t.right().kind() == TermKind::Choice);
        return;
    case TermKind::Coop:
        (void)ctx;
        print_wrapped(t.left(), out, 0, false);
        out += sync_text(t.sync());
        print_wrapped(t.right(), out, 0, t.right().kind() == TermKind::Coop);
        return;
    }
}

}  // namespace

std::string to_string(const Term& t) {
    std::string out;
    print_term(t, out, 0);
    return out;
}

// --- Model helpers ------------------------------------------------------------

bool Model::is_stochastic(const std::string& event) const {
    return std::find(stochastic_events.begin(), stochastic_events.end(), event) != stochastic_events.end();
}

bool Model::is_instantaneous(const std::string& event) const {
    return event == kInitEvent ||
           std::find(instantaneous_events.begin(), instantaneous_events.end(), event) != instantaneous_events.end();
}

const ItypeDef* Model::itype(const std::string& name) const {
    for (const auto& d : itypes)
        if (d.name == name) return &d;
    return nullptr;
}

const Definition* Model::definition(const std::string& name) const {
    for (const auto& d : subcomponents)
        if (d.name == name) return &d;
    for (const auto& d : controllers)
        if (d.name == name) return &d;
    if (system && system->name == name) return &*system;
    return nullptr;
}

namespace {

void visit_activities(const Term& t, const std::function<void(const Term&)>& f) {
    switch (t.kind()) {
    case TermKind::Prefix:
        f(t);
        visit_activities(t.left(), f);
        return;
    case TermKind::Choice:
    case TermKind::Coop:
        visit_activities(t.left(), f);
        visit_activities(t.right(), f);
        return;
    default:
        return;
    }
}

void collect_events(const Term& t, const Model& model, std::set<std::string>& out, std::set<std::string>& seen) {
    switch (t.kind()) {
    case TermKind::Nil:
        return;
    case TermKind::Prefix:
        out.insert(t.event());
        collect_events(t.left(), model, out, seen);
        return;
    case TermKind::Choice:
    case TermKind::Coop:
        collect_events(t.left(), model, out, seen);
        collect_events(t.right(), model, out, seen);
        return;
    case TermKind::Ref:
        if (!seen.insert(t.name()).second) return;
        if (const auto* d = model.definition(t.name())) collect_events(d->body, model, out, seen);
        return;
    }
}

}  // namespace

std::set<std::string> Model::influence_names() const {
    std::set<std::string> out;
    for (const auto& [k, v] : iv) out.insert(k);
    for (const auto& d : subcomponents)
        visit_activities(d.body, [&](const Term& p) {
            if (p.activity()) out.insert(p.activity()->influence);
        });
    return out;
}

std::set<std::string> events_of(const Term& t, const Model& model) {
    std::set<std::string> out;
    std::set<std::string> seen;
    collect_events(t, model, out, seen);
    return out;
}

std::string itype_key(const std::string& itype, const std::vector<std::string>& args) {
    if (args.empty()) return itype;
    std::string out = itype + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        out += args[i];
    }
    return out + ")";
}

Expr itype_function(const Model& model, const std::string& itype, const std::vector<std::string>& args) {
    const ItypeDef* def = model.itype(itype);
    if (!def) throw MissingInfluenceTypeDef("no definition for influence type '" + itype + "'");
    if (def->params.size() != args.size())
        throw MissingInfluenceTypeDef("influence type '" + itype + "' expects " + std::to_string(def->params.size()) +
                                      " arguments, got " + std::to_string(args.size()));
    std::map<std::string, std::string> rename;
    for (std::size_t i = 0; i < args.size(); ++i) rename[def->params[i]] = args[i];
    return substitute(def->body, [&](const std::string& n) -> std::optional<Expr> {
        auto it = rename.find(n);
        if (it == rename.end()) return std::nullopt;
        return Expr::ref(it->second);
    });
}

std::optional<SystemShape> system_shape(const Model& model) {
    if (!model.system) return std::nullopt;
    const Term& body = model.system->body;
    if (body.kind() == TermKind::Coop && body.right().kind() == TermKind::Prefix &&
        body.right().event() == kInitEvent && !body.right().activity()) {
        return SystemShape{body.left(), body.sync(), body.right().left(), true};
    }
    return SystemShape{Term::nil(), SyncSet{}, body, false};
}

// --- parameters -----------------------------------------------------------------

std::map<std::string, double> parameter_values(const Model& model, const std::map<std::string, double>& overrides) {
    for (const auto& [name, v] : overrides) {
        bool found = std::any_of(model.params.begin(), model.params.end(), [&](const auto& p) { return p.first == name; });
        if (!found) throw UnknownParameter("unknown parameter '" + name + "'");
    }
    std::map<std::string, double> values;
    for (const auto& [name, e] : model.params) {
        auto it = overrides.find(name);
        values[name] = it != overrides.end() ? it->second : eval_expression(e, values);
    }
    return values;
}

namespace {

Expr fold_constants(const Expr& e) {
    if (e.kind() == ExprKind::Num || e.kind() == ExprKind::Ref) return e;
    if (free_refs(e).empty() && !contains_random(e)) {
        try {
            return Expr::number(eval_expression(e, std::map<std::string, double>{}));
        } catch (const EvalError&) {
            return e;
        }
    }
    std::vector<Expr> args;
    for (const auto& a : e.args()) args.push_back(fold_constants(a));
    if (e.kind() == ExprKind::Random) return Expr::random(e.distribution(), std::move(args));
    return Expr::op(e.kind(), std::move(args));
}

Formula fold_constants(const Formula& f) {
    switch (f.kind()) {
    case FormulaKind::Cmp:
        return Formula::compare(f.op(), fold_constants(f.lhs()), fold_constants(f.rhs()));
    case FormulaKind::And:
    case FormulaKind::Or: {
        std::vector<Formula> parts;
        for (const auto& c : f.children()) parts.push_back(fold_constants(c));
        return f.kind() == FormulaKind::And ? Formula::conj(std::move(parts)) : Formula::disj(std::move(parts));
    }
    case FormulaKind::Not:
        return Formula::negate(fold_constants(f.children()[0]));
    default:
        return f;
    }
}

Term map_activities(const Term& t, const std::function<Activity(const Activity&)>& f) {
    switch (t.kind()) {
    case TermKind::Prefix: {
        std::optional<Activity> a = t.activity();
        if (a) a = f(*a);
        return Term::prefix(t.event(), std::move(a), map_activities(t.left(), f));
    }
    case TermKind::Choice:
        return Term::choice(map_activities(t.left(), f), map_activities(t.right(), f));
    case TermKind::Coop:
        return Term::coop(map_activities(t.left(), f), t.sync(), map_activities(t.right(), f));
    default:
        return t;
    }
}

}  // namespace

Model instantiate(const Model& model, const std::map<std::string, double>& overrides) {
    auto values = parameter_values(model, overrides);
    ExprSubstitution subst = [&](const std::string& n) -> std::optional<Expr> {
        auto it = values.find(n);
        if (it == values.end()) return std::nullopt;
        return Expr::number(it->second);
    };
    auto ex = [&](const Expr& e) { return fold_constants(substitute(e, subst)); };
    auto fo = [&](const Formula& f) { return fold_constants(substitute(f, subst)); };

    Model out = model;
    out.params.clear();
    auto act = [&](const Activity& a) {
        Activity b = a;
        b.strength = ex(a.strength);
        return b;
    };
    for (auto& d : out.subcomponents) d.body = map_activities(d.body, act);
    for (auto& d : out.controllers) d.body = map_activities(d.body, act);
    if (out.system) out.system->body = map_activities(out.system->body, act);
    for (auto& it : out.itypes) it.body = ex(it.body);
    for (auto& [event, c] : out.ec) {
        c.guard = fo(c.guard);
        c.rate = ex(c.rate);
        for (auto& atom : c.reset) atom.value = ex(atom.value);
    }
    for (auto& [name, e] : out.measures) e = ex(e);
    return out;
}

// --- validation -------------------------------------------------------------------

namespace {

struct Validator {
    const Model& m;
    std::vector<Violation> out;

    void add(std::string clause, std::string message) { out.push_back({std::move(clause), std::move(message)}); }

    std::set<std::string> declared_events() const {
        std::set<std::string> s(m.instantaneous_events.begin(), m.instantaneous_events.end());
        s.insert(m.stochastic_events.begin(), m.stochastic_events.end());
        s.insert(kInitEvent);
        return s;
    }

    std::set<std::string> numeric_names() const {
        std::set<std::string> s(m.variables.begin(), m.variables.end());
        for (const auto& [p, e] : m.params) s.insert(p);
        return s;
    }

    void check_refs(const std::set<std::string>& refs, const std::set<std::string>& allowed, const std::string& where) {
        for (const auto& r : refs)
            if (!allowed.count(r)) add("undeclared-name", "unknown name '" + r + "' in " + where);
    }

    void check_names() {
        std::map<std::string, std::vector<std::string>> owners;
        for (const auto& e : declared_events()) owners[e].push_back("event");
        for (const auto& i : m.influence_names()) owners[i].push_back("influence");
        for (const auto& t : m.itypes) owners[t.name].push_back("influence type");
        for (const auto& v : m.variables) owners[v].push_back("variable");
        for (const auto& [p, e] : m.params) owners[p].push_back("parameter");
        for (const auto& [name, kinds] : owners) {
            std::set<std::string> distinct(kinds.begin(), kinds.end());
            if (kinds.size() > 1) {
                std::string what;
                for (const auto& k : kinds) what += (what.empty() ? "" : ", ") + k;
                add(distinct.size() > 1 ? "disjoint-names" : "duplicate-declaration",
                    "name '" + name + "' declared as " + what);
            }
        }
        for (const auto& e : m.instantaneous_events)
            if (e == kInitEvent) add("reserved-name", "'init' cannot be declared as an event");
        for (const auto& e : m.stochastic_events)
            if (e == kInitEvent) add("reserved-name", "'init' cannot be declared as an event");
        std::map<std::string, int> defs;
        for (const auto& d : m.subcomponents) ++defs[d.name];
        for (const auto& d : m.controllers) ++defs[d.name];
        if (m.system) ++defs[m.system->name];
        for (const auto& [n, c] : defs)
            if (c > 1) add("duplicate-declaration", "process '" + n + "' defined more than once");
    }

    void check_term_names(const Term& t, const std::string& where, bool allow_activity) {
        auto events = declared_events();
        std::function<void(const Term&)> walk = [&](const Term& u) {
            switch (u.kind()) {
            case TermKind::Prefix:
                if (!events.count(u.event())) add("undeclared-name", "unknown event '" + u.event() + "' in " + where);
                if (u.activity() && !allow_activity)
                    add("controller-activity", "controller '" + where + "' has an activity on event '" + u.event() + "'");
                if (const auto& a = u.activity()) {
                    if (!m.iv.count(a->influence))
                        add("undeclared-name", "influence '" + a->influence + "' in " + where + " has no iv entry");
                    const ItypeDef* def = m.itype(a->itype);
                    if (!def)
                        add("undeclared-name", "unknown influence type '" + a->itype + "' in " + where);
                    else if (def->params.size() != a->itype_args.size())
                        add("itype-arity", "influence type '" + a->itype + "' used with " +
                                               std::to_string(a->itype_args.size()) + " arguments in " + where);
                    auto vars = std::set<std::string>(m.variables.begin(), m.variables.end());
                    for (const auto& arg : a->itype_args)
                        if (!vars.count(arg)) add("undeclared-name", "unknown variable '" + arg + "' in " + where);
                    std::set<std::string> params;
                    for (const auto& [p, e] : m.params) params.insert(p);
                    check_refs(free_refs(a->strength), params, "strength in " + where);
                }
                walk(u.left());
                return;
            case TermKind::Choice:
            case TermKind::Coop:
                if (u.kind() == TermKind::Coop && !u.sync().shared)
                    for (const auto& e : u.sync().events)
                        if (!events.count(e)) add("undeclared-name", "unknown event '" + e + "' in sync set in " + where);
                walk(u.left());
                walk(u.right());
                return;
            case TermKind::Ref:
                if (!m.definition(u.name())) add("undeclared-name", "unknown process '" + u.name() + "' in " + where);
                return;
            case TermKind::Nil:
                return;
            }
        };
        walk(t);
    }

    void check_subcomponent(const Definition& d) {
        std::vector<Term> prefixes;
        bool flat = true;
        std::function<void(const Term&)> walk = [&](const Term& t) {
            if (t.kind() == TermKind::Choice) {
                walk(t.left());
                walk(t.right());
            } else if (t.kind() == TermKind::Prefix && t.left().kind() == TermKind::Ref && t.left().name() == d.name &&
                       t.activity()) {
                prefixes.push_back(t);
            } else {
                flat = false;
            }
        };
        walk(d.body);
        if (!flat)
            add("flat-recursion",
                "subcomponent '" + d.name + "' must be a choice of prefixes with activities that recurse to itself");
        std::map<std::string, int> counts;
        std::set<std::string> influences;
        for (const auto& p : prefixes) {
            ++counts[p.event()];
            influences.insert(p.activity()->influence);
        }
        for (const auto& [e, c] : counts) {
            if (c > 1 && e == kInitEvent)
                add("init-prefix", "subcomponent '" + d.name + "' has more than one init prefix");
            else if (c > 1 && !m.is_stochastic(e))
                add("duplicate-event", "duplicate event in subcomponent: '" + e + "' appears " + std::to_string(c) +
                                           " times in '" + d.name + "'");
        }
        if (!counts.count(kInitEvent)) add("init-prefix", "subcomponent '" + d.name + "' has no init prefix");
        if (influences.size() > 1) add("single-influence", "subcomponent '" + d.name + "' updates more than one influence");
        check_term_names(d.body, d.name, true);
    }

    void check_controller(const Definition& d) {
        std::function<void(const Term&)> walk = [&](const Term& t) {
            switch (t.kind()) {
            case TermKind::Prefix:
                if (t.event() == kInitEvent) add("controller-init", "controller '" + d.name + "' uses the init event");
                walk(t.left());
                return;
            case TermKind::Choice:
                if (t.left().kind() == TermKind::Coop || t.right().kind() == TermKind::Coop)
                    add("controller-grammar", "controller '" + d.name + "' places a cooperation under a choice");
                walk(t.left());
                walk(t.right());
                return;
            case TermKind::Coop:
                walk(t.left());
                walk(t.right());
                return;
            default:
                return;
            }
        };
        walk(d.body);
        check_term_names(d.body, d.name, false);
    }

    // Leaves of a cooperation tree over references.
    void coop_leaves(const Term& t, std::vector<Term>& leaves) {
        if (t.kind() == TermKind::Coop) {
            coop_leaves(t.left(), leaves);
            coop_leaves(t.right(), leaves);
        } else {
            leaves.push_back(t);
        }
    }

    void check_sync_sets(const Term& t, const std::string& where) {
        if (t.kind() == TermKind::Coop) {
            if (!t.sync().shared) {
                auto l = events_of(t.left(), m);
                auto r = events_of(t.right(), m);
                std::set<std::string> shared;
                std::set_intersection(l.begin(), l.end(), r.begin(), r.end(), std::inserter(shared, shared.end()));
                if (shared != t.sync().events)
                    add("shared-event-synchronisation",
                        "cooperation in " + where + " does not synchronise on exactly the shared events");
            }
            check_sync_sets(t.left(), where);
            check_sync_sets(t.right(), where);
        } else if (t.kind() == TermKind::Ref) {
            const auto* d = m.definition(t.name());
            bool is_sub = std::any_of(m.subcomponents.begin(), m.subcomponents.end(),
                                      [&](const Definition& s) { return s.name == t.name(); });
            if (d && !is_sub && d->body.kind() == TermKind::Coop) check_sync_sets(d->body, t.name());
        }
    }

    void check_system() {
        auto shape = system_shape(m);
        if (!shape) {
            add("controlled-system-form", "no system definition");
            return;
        }
        check_term_names(m.system->body, m.system->name, false);
        if (!shape->has_init) {
            add("controlled-system-form", "system must have the form Sigma <*> init.Con");
            return;
        }
        // uncontrolled system: cooperation of distinct subcomponents
        std::vector<Term> leaves;
        std::function<void(const Term&)> expand = [&](const Term& t) {
            if (t.kind() == TermKind::Coop) {
                expand(t.left());
                expand(t.right());
                return;
            }
            if (t.kind() == TermKind::Ref) {
                bool is_sub = std::any_of(m.subcomponents.begin(), m.subcomponents.end(),
                                          [&](const Definition& s) { return s.name == t.name(); });
                const auto* d = m.definition(t.name());
                if (!is_sub && d && d->body.kind() == TermKind::Coop) {
                    expand(d->body);
                    return;
                }
            }
            leaves.push_back(t);
        };
        expand(shape->uncontrolled);
        std::map<std::string, int> occurrences;
        for (const auto& leaf : leaves) {
            bool is_sub = leaf.kind() == TermKind::Ref &&
                          std::any_of(m.subcomponents.begin(), m.subcomponents.end(),
                                      [&](const Definition& s) { return s.name == leaf.name(); });
            if (!is_sub)
                add("uncontrolled-form", "uncontrolled system contains '" + to_string(leaf) + "', not a subcomponent");
            else
                ++occurrences[leaf.name()];
        }
        for (const auto& [n, c] : occurrences)
            if (c > 1) add("single-occurrence", "subcomponent '" + n + "' occurs " + std::to_string(c) + " times");

        // one influence per subcomponent, not shared
        std::map<std::string, std::vector<std::string>> influence_owner;
        for (const auto& s : m.subcomponents) {
            std::set<std::string> infl;
            visit_activities(s.body, [&](const Term& p) {
                if (p.activity()) infl.insert(p.activity()->influence);
            });
            for (const auto& i : infl) influence_owner[i].push_back(s.name);
        }
        for (const auto& [i, owners] : influence_owner)
            if (owners.size() > 1) add("single-influence", "influence '" + i + "' is used by more than one subcomponent");

        check_sync_sets(shape->uncontrolled, "uncontrolled system");
        // top level synchronises on all shared events
        auto sigma_events = events_of(shape->uncontrolled, m);
        auto con_events = events_of(shape->controller, m);
        if (!shape->sync.shared) {
            auto right = con_events;
            right.insert(kInitEvent);
            std::set<std::string> shared;
            std::set_intersection(sigma_events.begin(), sigma_events.end(), right.begin(), right.end(),
                                  std::inserter(shared, shared.end()));
            if (shared != shape->sync.events)
                add("shared-event-synchronisation", "system does not synchronise on all shared events");
        }
        check_sync_sets(shape->controller, "controller");
        for (const auto& e : con_events)
            if (!sigma_events.count(e))
                add("event-agreement", "controller event not in uncontrolled system: '" + e + "'");
        for (const auto& e : sigma_events)
            if (e != kInitEvent && !con_events.count(e))
                add("event-agreement", "uncontrolled event not in controller: '" + e + "'");
        if (con_events.count(kInitEvent)) add("controller-init", "controller uses the init event");
        if (shape->controller.kind() == TermKind::Prefix && shape->controller.activity())
            add("controller-activity", "controller has an activity");
    }

    void check_event_conditions() {
        auto nums = numeric_names();
        for (const auto& e : m.instantaneous_events) {
            auto it = m.ec.find(e);
            if (it == m.ec.end())
                add("event-condition", "instantaneous event '" + e + "' has no event condition");
            else if (it->second.kind != ActivationKind::Guard)
                add("event-condition", "instantaneous event '" + e + "' needs a guard");
        }
        for (const auto& e : m.stochastic_events) {
            auto it = m.ec.find(e);
            if (it == m.ec.end())
                add("event-condition", "stochastic event '" + e + "' has no event condition");
            else if (it->second.kind == ActivationKind::Guard)
                add("event-condition", "stochastic event '" + e + "' needs a rate or a duration");
        }
        auto events = declared_events();
        for (const auto& [e, c] : m.ec) {
            if (!events.count(e)) add("undeclared-name", "event condition for unknown event '" + e + "'");
            std::set<std::string> refs;
            if (c.kind == ActivationKind::Guard) {
                collect_refs(c.guard, refs);
                if (contains_random(c.guard)) add("event-condition", "guard of '" + e + "' contains a random term");
            } else {
                collect_refs(c.rate, refs);
                if (c.kind == ActivationKind::Rate && contains_random(c.rate))
                    add("event-condition", "rate of '" + e + "' contains a random term");
            }
            std::set<std::string> assigned;
            for (const auto& a : c.reset) {
                if (!assigned.insert(a.variable).second)
                    add("reset-duplicate", "reset of '" + e + "' assigns '" + a.variable + "' more than once");
                if (!std::count(m.variables.begin(), m.variables.end(), a.variable))
                    add("undeclared-name", "reset of '" + e + "' assigns unknown variable '" + a.variable + "'");
                collect_refs(a.value, refs);
            }
            check_refs(refs, nums, "event condition of '" + e + "'");
        }
        if (auto it = m.ec.find(kInitEvent); it != m.ec.end()) {
            if (it->second.kind != ActivationKind::Guard || !it->second.guard.is_true())
                add("init-activation", "init must have activation condition true");
        }
        std::set<std::string> vars(m.variables.begin(), m.variables.end());
        for (const auto& [i, v] : m.iv)
            if (!vars.count(v)) add("undeclared-name", "iv maps '" + i + "' to unknown variable '" + v + "'");
        for (const auto& t : m.itypes) {
            std::set<std::string> allowed(t.params.begin(), t.params.end());
            for (const auto& [p, e] : m.params) allowed.insert(p);
            check_refs(free_refs(t.body), allowed, "influence type '" + t.name + "'");
        }
        for (const auto& [n, e] : m.measures) check_refs(free_refs(e), nums, "measure '" + n + "'");
        for (const auto& e : m.instantaneous_events)
            if (m.is_stochastic(e)) add("event-kinds", "event '" + e + "' is both instantaneous and stochastic");
    }

    void run() {
        check_names();
        for (const auto& d : m.subcomponents) check_subcomponent(d);
        for (const auto& d : m.controllers) check_controller(d);
        check_system();
        check_event_conditions();
        std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
            return std::tie(a.clause, a.message) < std::tie(b.clause, b.message);
        });
        out.erase(std::unique(out.begin(), out.end(),
                              [](const Violation& a, const Violation& b) {
                                  return a.clause == b.clause && a.message == b.message;
                              }),
                  out.end());
    }
};

}  // namespace

ValidationReport validate_well_defined(const Model& model) {
    Validator v{model, {}};
    v.run();
    return {std::move(v.out)};
}

// --- duration expansion ---------------------------------------------------------------

namespace {

std::optional<std::string> find_time_variable(const Model& m) {
    std::map<std::string, double> params;
    try {
        params = parameter_values(m);
    } catch (const Error&) {
        return std::nullopt;
    }
    for (const auto& d : m.subcomponents) {
        const Term& b = d.body;
        if (b.kind() != TermKind::Prefix || b.event() != kInitEvent || !b.activity()) continue;
        const Activity& a = *b.activity();
        try {
            if (eval_expression(a.strength, params) != 1.0) continue;
            Expr f = normalize(itype_function(m, a.itype, a.itype_args));
            if (!f.is_number(1.0)) continue;
        } catch (const Error&) {
            continue;
        }
        auto it = m.iv.find(a.influence);
        if (it != m.iv.end()) return it->second;
    }
    return std::nullopt;
}

}  // namespace

Model expand_general_durations(const Model& model) {
    std::vector<std::string> sugared;
    for (const auto& e : model.stochastic_events) {
        auto it = model.ec.find(e);
        if (it != model.ec.end() && it->second.kind == ActivationKind::Duration) sugared.push_back(e);
    }
    if (sugared.empty()) return model;

    std::set<std::string> taken(model.variables.begin(), model.variables.end());
    for (const auto& i : model.influence_names()) taken.insert(i);
    for (const auto& t : model.itypes) taken.insert(t.name);
    for (const auto& e : model.instantaneous_events) taken.insert(e);
    for (const auto& e : model.stochastic_events) taken.insert(e);
    for (const auto& [p, v] : model.params) taken.insert(p);
    for (const auto& d : model.subcomponents) taken.insert(d.name);
    for (const auto& d : model.controllers) taken.insert(d.name);
    if (model.system) taken.insert(model.system->name);
    auto fresh = [&](const std::string& name) {
        if (!taken.insert(name).second) throw NameClash("fresh name '" + name + "' already used in the model");
        return name;
    };

    Model out = model;
    auto shape = system_shape(model);
    if (!shape || !shape->has_init) throw ModelError("duration expansion needs a system of the form Sigma <*> init.Con");

    std::string time_var;
    if (auto t = find_time_variable(model)) {
        time_var = *t;
    } else {
        time_var = fresh("_time");
        std::string influence = fresh("_tick");
        std::string timer = fresh("_Timer");
        std::string one;
        for (const auto& it : model.itypes)
            if (it.params.empty() && normalize(it.body).is_number(1.0)) {
                one = it.name;
                break;
            }
        if (one.empty()) {
            one = fresh("_one");
            out.itypes.push_back({one, {}, Expr::number(1.0)});
        }
        out.variables.push_back(time_var);
        out.iv[influence] = time_var;
        out.subcomponents.push_back(
            {timer, Term::prefix(kInitEvent, Activity{influence, Expr::number(1.0), one, {}}, Term::ref(timer))});
        SyncSet shared;
        shared.shared = true;
        Term sigma = shape->uncontrolled.kind() == TermKind::Nil
                         ? Term::ref(timer)
                         : Term::coop(shape->uncontrolled, shared, Term::ref(timer));
        out.system->body = Term::coop(sigma, shape->sync, Term::prefix(kInitEvent, std::nullopt, shape->controller));
    }

    EventCondition& init = out.ec[kInitEvent];
    Expr time_start = Expr::number(0.0);
    bool time_reset = false;
    for (const auto& a : init.reset) {
        if (a.variable != time_var) continue;
        if (contains_random(a.value)) throw ModelError("timer variable '" + time_var + "' has a random initial value");
        time_start = a.value;
        time_reset = true;
    }
    if (!time_reset) init.reset.push_back({time_var, Expr::number(0.0)});

    Expr t = Expr::ref(time_var);
    for (const auto& e : sugared) {
        std::string clk = fresh("_clk_" + e);
        std::string dur = fresh("_dur_" + e);
        out.variables.push_back(clk);
        out.variables.push_back(dur);
        EventCondition old = model.ec.at(e);
        EventCondition c;
        c.kind = ActivationKind::Guard;
        c.guard = Formula::compare(CmpOp::Eq, t, Expr::ref(clk) + Expr::ref(dur));
        c.reset = {{clk, t}, {dur, old.rate}};
        c.reset.insert(c.reset.end(), old.reset.begin(), old.reset.end());
        out.ec[e] = c;
        init.reset.push_back({clk, time_start});
        init.reset.push_back({dur, old.rate});
        out.stochastic_events.erase(std::find(out.stochastic_events.begin(), out.stochastic_events.end(), e));
        out.instantaneous_events.push_back(e);
    }
    return out;
}

}  // namespace shype
