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

#include "shype/lts.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <tuple>

#include "json.hpp"

namespace shype {

namespace {

std::string num(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace

std::string to_string(const OperationalState& s) {
    std::string out = "{";
    bool first = true;
    for (const auto& [k, v] : s) {
        if (!first) out += ", ";
        first = false;
        out += k + " -> (" + num(v.strength) + ", " + v.itype_key() + ")";
    }
    return out + "}";
}

OperationalState apply_update(const OperationalState& s, const std::string& influence, const InfluenceValue& v) {
    OperationalState out = s;
    out[influence] = v;
    return out;
}

std::optional<OperationalState> merge_gamma(const OperationalState& sigma, const OperationalState& tau,
                                            const OperationalState& tau2) {
    std::set<std::string> keys;
    for (const auto* m : {&sigma, &tau, &tau2})
        for (const auto& [k, v] : *m) keys.insert(k);
    auto get = [](const OperationalState& m, const std::string& k) -> std::optional<InfluenceValue> {
        auto it = m.find(k);
        if (it == m.end()) return std::nullopt;
        return it->second;
    };
    OperationalState out;
    for (const auto& k : keys) {
        auto s = get(sigma, k), t = get(tau, k), t2 = get(tau2, k);
        std::optional<InfluenceValue> r;
        if (s == t2) {
            r = t;
        } else if (s == t) {
            r = t2;
        } else {
            return std::nullopt;
        }
        if (r) out[k] = *r;
    }
    return out;
}

// --- term table -------------------------------------------------------------------

struct TermTable::Node {
    TermKind kind = TermKind::Nil;
    std::string text;  // event or process name
    bool has_activity = false;
    std::string influence;
    InfluenceValue value;
    bool shared = false;
    std::set<std::string> sync;
    TermId a = -1, b = -1;
};

TermTable::TermTable(const Model& model) : model_(model) {}
TermTable::~TermTable() = default;

std::size_t TermTable::size() const { return nodes_.size(); }
TermKind TermTable::kind(TermId id) const { return nodes_.at(id).kind; }

TermId TermTable::add(Node n) {
    std::string key = std::to_string(static_cast<int>(n.kind)) + "|" + n.text + "|" + std::to_string(n.a) + "|" +
                      std::to_string(n.b);
    if (n.has_activity) key += "|" + n.influence + "|" + num(n.value.strength) + "|" + n.value.itype_key();
    if (n.kind == TermKind::Coop) {
        key += n.shared ? "|*" : "|";
        for (const auto& e : n.sync) key += "," + e;
    }
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    TermId id = static_cast<TermId>(nodes_.size());
    nodes_.push_back(std::move(n));
    index_.emplace(std::move(key), id);
    return id;
}

TermId TermTable::definition(const std::string& name) {
    auto it = defs_.find(name);
    if (it != defs_.end()) return it->second;
    const Definition* d = model_.definition(name);
    if (!d) throw ModelError("undefined process '" + name + "'");
    // placeholder guards against a definition whose body refers to itself
    defs_[name] = -1;
    TermId body = intern(d->body);
    defs_[name] = body;
    return body;
}

void TermTable::collect_events(TermId id, std::set<std::string>& out, std::set<TermId>& seen) const {
    if (id < 0 || !seen.insert(id).second) return;
    const Node& n = nodes_[id];
    switch (n.kind) {
    case TermKind::Nil:
        return;
    case TermKind::Prefix:
        out.insert(n.text);
        collect_events(n.a, out, seen);
        return;
    case TermKind::Choice:
    case TermKind::Coop:
        collect_events(n.a, out, seen);
        collect_events(n.b, out, seen);
        return;
    case TermKind::Ref: {
        auto it = defs_.find(n.text);
        if (it != defs_.end()) collect_events(it->second, out, seen);
        return;
    }
    }
}

std::set<std::string> TermTable::events_of(TermId id) const {
    std::set<std::string> out;
    std::set<TermId> seen;
    collect_events(id, out, seen);
    return out;
}

TermId TermTable::intern(const Term& t) {
    Node n;
    n.kind = t.kind();
    switch (t.kind()) {
    case TermKind::Nil:
        break;
    case TermKind::Prefix:
        n.text = t.event();
        if (const auto& act = t.activity()) {
            n.has_activity = true;
            n.influence = act->influence;
            try {
                n.value.strength = eval_expression(act->strength, std::map<std::string, double>{});
            } catch (const EvalError& e) {
                throw ModelError("strength of '" + t.event() + "' is not a constant: " + e.what());
            }
            n.value.itype = act->itype;
            n.value.args = act->itype_args;
        }
        n.a = intern(t.left());
        break;
    case TermKind::Choice:
        n.a = intern(t.left());
        n.b = intern(t.right());
        break;
    case TermKind::Ref: {
        const Definition* d = model_.definition(t.name());
        if (d && d->body.kind() == TermKind::Coop && !unfolding_.count(t.name())) {
            // a name for a composition stands for its body
            unfolding_.insert(t.name());
            TermId body = intern(d->body);
            unfolding_.erase(t.name());
            return body;
        }
        n.text = t.name();
        TermId id = add(n);
        if (!defs_.count(t.name())) definition(t.name());
        return id;
    }
    case TermKind::Coop: {
        n.a = intern(t.left());
        n.b = intern(t.right());
        n.shared = t.sync().shared;
        if (n.shared) {
            auto l = events_of(n.a);
            auto r = events_of(n.b);
            std::set_intersection(l.begin(), l.end(), r.begin(), r.end(), std::inserter(n.sync, n.sync.end()));
        } else {
            n.sync = t.sync().events;
        }
        break;
    }
    }
    return add(std::move(n));
}

void TermTable::successors_rec(TermId id, const OperationalState& state, std::vector<Move>& out, int depth) {
    if (depth > 10000) throw ModelError("unguarded recursion in process definitions");
    Node n = nodes_.at(id);
    switch (n.kind) {
    case TermKind::Nil:
        return;
    case TermKind::Prefix:
        out.push_back({n.text, n.a, n.has_activity ? apply_update(state, n.influence, n.value) : state});
        return;
    case TermKind::Choice:
        successors_rec(n.a, state, out, depth + 1);
        successors_rec(n.b, state, out, depth + 1);
        return;
    case TermKind::Ref: {
        TermId body = definition(n.text);
        if (body < 0) throw ModelError("unguarded recursion in '" + n.text + "'");
        successors_rec(body, state, out, depth + 1);
        return;
    }
    case TermKind::Coop: {
        std::vector<Move> left, right;
        successors_rec(n.a, state, left, depth + 1);
        successors_rec(n.b, state, right, depth + 1);
        auto coop = [&](TermId x, TermId y) {
            Node c;
            c.kind = TermKind::Coop;
            c.shared = n.shared;
            c.sync = n.sync;
            c.a = x;
            c.b = y;
            return add(std::move(c));
        };
        for (auto& l : left)
            if (!n.sync.count(l.event)) out.push_back({l.event, coop(l.target, n.b), std::move(l.state)});
        for (auto& r : right)
            if (!n.sync.count(r.event)) out.push_back({r.event, coop(n.a, r.target), std::move(r.state)});
        for (const auto& l : left) {
            if (!n.sync.count(l.event)) continue;
            for (const auto& r : right) {
                if (r.event != l.event) continue;
                auto merged = merge_gamma(state, l.state, r.state);
                if (!merged)
                    throw GammaUndefined("state merge undefined on event '" + l.event + "' in " + to_string(id));
                out.push_back({l.event, coop(l.target, r.target), std::move(*merged)});
            }
        }
        return;
    }
    }
}

std::vector<TermTable::Move> TermTable::successors(TermId id, const OperationalState& state) {
    std::vector<Move> out;
    successors_rec(id, state, out, 0);
    return out;
}

void TermTable::print(TermId id, std::string& out, int ctx) const {
    const Node& n = nodes_.at(id);
    auto wrapped = [&](TermId c, bool wrap) {
        if (wrap) out += '(';
        print(c, out, 0);
        if (wrap) out += ')';
    };
    switch (n.kind) {
    case TermKind::Nil:
        out += '0';
        return;
    case TermKind::Ref:
        out += n.text;
        return;
    case TermKind::Prefix: {
        out += n.text;
        if (n.has_activity)
            out += ":(" + n.influence + ", " + num(n.value.strength) + ", " + n.value.itype_key() + ")";
        out += '.';
        TermKind k = nodes_[n.a].kind;
        wrapped(n.a, k == TermKind::Choice || k == TermKind::Coop);
        return;
    }
    case TermKind::Choice:
        wrapped(n.a, nodes_[n.a].kind == TermKind::Coop);
        out += " + ";
        wrapped(n.b, nodes_[n.b].kind == TermKind::Coop || nodes_[n.b].kind == TermKind::Choice);
        return;
    case TermKind::Coop:
        (void)ctx;
        wrapped(n.a, false);
        if (n.shared) {
            out += " <*> ";
        } else if (n.sync.empty()) {
            out += " || ";
        } else {
            out += " <";
            bool first = true;
            for (const auto& e : n.sync) {
                if (!first) out += ", ";
                first = false;
                out += e;
            }
            out += "> ";
        }
        wrapped(n.b, nodes_[n.b].kind == TermKind::Coop);
        return;
    }
}

std::string TermTable::to_string(TermId id) const {
    std::string out;
    print(id, out, 0);
    return out;
}

// --- LTS ------------------------------------------------------------------------------

std::optional<int> Lts::find(TermId term, const OperationalState& state) const {
    for (std::size_t i = 0; i < configs.size(); ++i)
        if (configs[i].term == term && states[configs[i].state] == state) return static_cast<int>(i);
    return std::nullopt;
}

std::vector<int> Lts::outgoing(int config) const {
    auto lo = std::lower_bound(transitions.begin(), transitions.end(), config,
                               [](const LtsTransition& t, int c) { return t.source < c; });
    std::vector<int> out;
    for (auto it = lo; it != transitions.end() && it->source == config; ++it)
        out.push_back(static_cast<int>(it - transitions.begin()));
    return out;
}

std::set<std::string> Lts::events() const {
    std::set<std::string> out;
    for (const auto& t : transitions) out.insert(t.event);
    return out;
}

std::set<std::string> Lts::influences() const {
    std::set<std::string> out;
    for (const auto& s : states)
        for (const auto& [k, v] : s) out.insert(k);
    return out;
}

Lts build_lts(const Model& input, const LtsOptions& opts) {
    Lts lts;
    lts.model = input.params.empty() ? input : instantiate(input);
    if (!lts.model.system) throw ModelError("model has no system definition");
    lts.terms = std::make_shared<TermTable>(lts.model);
    TermTable& table = *lts.terms;

    std::map<OperationalState, int> state_index;
    std::map<Configuration, int> config_index;
    std::deque<int> queue;
    auto config_of = [&](TermId term, const OperationalState& s) {
        auto [sit, snew] = state_index.emplace(s, static_cast<int>(lts.states.size()));
        if (snew) lts.states.push_back(s);
        Configuration c{term, sit->second};
        auto [cit, cnew] = config_index.emplace(c, static_cast<int>(lts.configs.size()));
        if (cnew) {
            if (lts.configs.size() >= opts.state_space_cap)
                throw StateSpaceCapExceeded("more than " + std::to_string(opts.state_space_cap) + " configurations");
            lts.configs.push_back(c);
            queue.push_back(cit->second);
        }
        return cit->second;
    };

    TermId start = table.intern(lts.model.system->body);
    auto first = table.successors(start, lts.pre_init_state);
    std::optional<std::pair<TermId, OperationalState>> entered;
    for (const auto& mv : first) {
        if (mv.event != kInitEvent) continue;
        if (entered && (entered->first != mv.target || entered->second != mv.state))
            throw ModelError("init leads to more than one configuration");
        entered = std::make_pair(mv.target, mv.state);
    }
    if (entered) {
        lts.initial = config_of(entered->first, entered->second);
    } else {
        lts.initial = config_of(start, lts.pre_init_state);
    }

    std::map<std::tuple<int, std::string, int>, int> counts;
    while (!queue.empty()) {
        int src = queue.front();
        queue.pop_front();
        Configuration c = lts.configs[src];
        OperationalState s = lts.states[c.state];
        for (auto& mv : table.successors(c.term, s)) {
            if (mv.event == kInitEvent) continue;
            int tgt = config_of(mv.target, mv.state);
            ++counts[{src, mv.event, tgt}];
        }
    }
    for (const auto& [k, mult] : counts)
        lts.transitions.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), mult});
    return lts;
}

std::map<std::string, Expr> ode_system_for(const OperationalState& state, const Model& input) {
    const Model& model = input.params.empty() ? input : instantiate(input);
    std::map<std::string, std::vector<Expr>> terms;
    for (const auto& v : model.variables) terms[v];
    for (const auto& [influence, value] : state) {
        auto it = model.iv.find(influence);
        if (it == model.iv.end()) throw ModelError("influence '" + influence + "' has no iv entry");
        Expr f = itype_function(model, value.itype, value.args);
        terms[it->second].push_back(Expr::number(value.strength) * f);
    }
    std::map<std::string, Expr> out;
    for (auto& [var, ts] : terms) {
        if (ts.empty()) {
            out[var] = Expr::number(0);
        } else if (ts.size() == 1) {
            out[var] = ts[0];
        } else {
            out[var] = Expr::op(ExprKind::Add, std::move(ts));
        }
    }
    return out;
}

namespace {

nlohmann::json state_json(const OperationalState& s) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : s) j[k] = {{"strength", v.strength}, {"itype", v.itype_key()}};
    return j;
}

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace

std::string lts_to_json(const Lts& lts) {
    nlohmann::json j;
    j["initial"] = lts.initial;
    j["configurations"] = nlohmann::json::array();
    for (std::size_t i = 0; i < lts.configs.size(); ++i)
        j["configurations"].push_back(
            {{"id", i}, {"term", lts.term_string(static_cast<int>(i))}, {"state", state_json(lts.state_of(static_cast<int>(i)))}});
    j["transitions"] = nlohmann::json::array();
    for (const auto& t : lts.transitions)
        j["transitions"].push_back(
            {{"source", t.source}, {"event", t.event}, {"target", t.target}, {"multiplicity", t.multiplicity}});
    return j.dump(2) + "\n";
}

std::string lts_to_dot(const Lts& lts) {
    std::string out = "digraph lts {\n  node [shape=box];\n";
    for (std::size_t i = 0; i < lts.configs.size(); ++i) {
        int c = static_cast<int>(i);
        out += "  c" + std::to_string(i) + " [label=\"" + dot_escape(lts.term_string(c)) + "\\n" +
               dot_escape(to_string(lts.state_of(c))) + "\"" + (c == lts.initial ? ", peripheries=2" : "") + "];\n";
    }
    for (const auto& t : lts.transitions) {
        std::string label = t.event;
        if (t.multiplicity > 1) label += " x" + std::to_string(t.multiplicity);
        out += "  c" + std::to_string(t.source) + " -> c" + std::to_string(t.target) + " [label=\"" + dot_escape(label) +
               "\"];\n";
    }
    return out + "}\n";
}

}  // namespace shype
