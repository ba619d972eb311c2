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

#include "shype/tdsha.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <functional>

#include "json.hpp"

namespace shype {

namespace {

std::string num(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

std::string flow_key(const Flow& f) { return f.variable + "|" + num(f.stoichiometry) + "|" + canonical_key(f.rate); }

Reset conjoin(const Reset& a, const Reset& b) {
    Reset all = a;
    all.insert(all.end(), b.begin(), b.end());
    return normalize(all);
}

const EventCondition& condition(const Model& m, const std::string& event) {
    auto it = m.ec.find(event);
    if (it == m.ec.end()) throw ModelError("no event condition for '" + event + "'");
    if (it->second.kind == ActivationKind::Duration)
        throw ModelError("event '" + event + "' has a general duration; expand it first");
    return it->second;
}

EdgeLabel label_for(const Model& m, const std::string& event) {
    const auto& ec = condition(m, event);
    EdgeLabel l;
    l.event = event;
    l.reset = normalize(ec.reset);
    if (m.is_stochastic(event)) {
        if (ec.kind != ActivationKind::Rate) throw ModelError("stochastic event '" + event + "' needs a rate");
        l.stochastic = true;
        l.rate = normalize(ec.rate);
    } else {
        if (ec.kind != ActivationKind::Guard) throw ModelError("instantaneous event '" + event + "' needs a guard");
        l.guard = normalize(ec.guard);
    }
    return l;
}

Reset init_reset_of(const Model& m) {
    auto it = m.ec.find(kInitEvent);
    return it == m.ec.end() ? Reset{} : normalize(it->second.reset);
}

Flow flow_for(const Model& m, const std::string& influence, double strength, const std::string& itype,
              const std::vector<std::string>& args) {
    auto it = m.iv.find(influence);
    if (it == m.iv.end()) throw ModelError("influence '" + influence + "' has no iv entry");
    return Flow{it->second, 1.0, normalize(Expr::number(strength) * itype_function(m, itype, args))};
}

void set_events(Tdsha& t, const Model& m) {
    t.instantaneous_events = {m.instantaneous_events.begin(), m.instantaneous_events.end()};
    t.stochastic_events = {m.stochastic_events.begin(), m.stochastic_events.end()};
}

Model prepared(const Model& model) { return model.params.empty() ? model : instantiate(model); }

}  // namespace

std::string EdgeLabel::key() const {
    std::string k = (stochastic ? "S|" : "D|") + event + "|" + canonical_key(guard) + "|" + canonical_key(reset) + "|";
    return k + (stochastic ? canonical_key(rate) : num(weight));
}

int Tdsha::add_flow(Flow f) {
    auto [it, fresh] = flow_index_.emplace(flow_key(f), static_cast<int>(flows.size()));
    if (fresh) flows.push_back(std::move(f));
    return it->second;
}

int Tdsha::add_label(EdgeLabel l) {
    auto [it, fresh] = label_index_.emplace(l.key(), static_cast<int>(labels.size()));
    if (fresh) labels.push_back(std::move(l));
    return it->second;
}

void Tdsha::finalize() {
    std::sort(instantaneous.begin(), instantaneous.end());
    instantaneous.erase(std::unique(instantaneous.begin(), instantaneous.end()), instantaneous.end());
    std::sort(stochastic.begin(), stochastic.end());
    std::map<std::string, std::string> rates;
    for (const auto& l : labels) {
        if (!l.stochastic) continue;
        auto [it, fresh] = rates.emplace(l.event, canonical_key(l.rate));
        if (!fresh && it->second != canonical_key(l.rate))
            throw ModelError("inconsistent rates for event '" + l.event + "'");
    }
}

std::vector<double> Tdsha::vector_field(int mode, const Valuation& x) const {
    std::vector<double> out(variables.size(), 0.0);
    for (int fi : mode_flows.at(mode)) {
        const Flow& f = flows[fi];
        auto pos = std::find(variables.begin(), variables.end(), f.variable) - variables.begin();
        out.at(pos) += f.stoichiometry * eval_expression(f.rate, x);
    }
    return out;
}

std::vector<double> Tdsha::vector_field(int mode, const std::map<std::string, double>& x) const {
    return vector_field(mode, valuation_of(x));
}

Tdsha from_lts(const Lts& lts) {
    const Model& m = lts.model;
    Tdsha t;
    t.variables = m.variables;
    set_events(t, m);
    for (std::size_t i = 0; i < lts.configs.size(); ++i) {
        int c = static_cast<int>(i);
        t.modes.push_back(lts.term_string(c) + " | " + to_string(lts.state_of(c)));
        std::vector<int> fl;
        for (const auto& [influence, v] : lts.state_of(c))
            fl.push_back(t.add_flow(flow_for(m, influence, v.strength, v.itype, v.args)));
        t.mode_flows.push_back(std::move(fl));
    }
    std::map<std::string, int> label_of;
    for (const auto& tr : lts.transitions) {
        auto it = label_of.find(tr.event);
        if (it == label_of.end()) it = label_of.emplace(tr.event, t.add_label(label_for(m, tr.event))).first;
        if (t.labels[it->second].stochastic) {
            for (int k = 0; k < tr.multiplicity; ++k) t.stochastic.push_back({tr.source, tr.target, it->second});
        } else {
            t.instantaneous.push_back({tr.source, tr.target, it->second});
        }
    }
    t.init_mode = lts.initial;
    t.init_reset = init_reset_of(m);
    t.finalize();
    return t;
}

Tdsha tdsha_product(const Tdsha& a, const Tdsha& b, const std::set<std::string>& sync) {
    Tdsha t;
    t.variables = a.variables;
    for (const auto& v : b.variables)
        if (std::find(t.variables.begin(), t.variables.end(), v) == t.variables.end()) t.variables.push_back(v);
    t.instantaneous_events = a.instantaneous_events;
    t.instantaneous_events.insert(b.instantaneous_events.begin(), b.instantaneous_events.end());
    t.stochastic_events = a.stochastic_events;
    t.stochastic_events.insert(b.stochastic_events.begin(), b.stochastic_events.end());

    try {
        t.init_reset = conjoin(a.init_reset, b.init_reset);
    } catch (const ResetIncompatible& e) {
        throw InitIncompatible(std::string("initial resets conflict: ") + e.what());
    }

    std::vector<int> fa, fb, la, lb;
    for (const auto& f : a.flows) fa.push_back(t.add_flow(f));
    for (const auto& f : b.flows) fb.push_back(t.add_flow(f));
    for (const auto& l : a.labels) la.push_back(t.add_label(l));
    for (const auto& l : b.labels) lb.push_back(t.add_label(l));

    // reset compatibility over every pair of labels sharing an event
    std::map<std::pair<int, int>, int> combined;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        for (std::size_t j = 0; j < b.labels.size(); ++j) {
            const auto& x = a.labels[i];
            const auto& y = b.labels[j];
            if (x.event != y.event || x.stochastic != y.stochastic) continue;
            EdgeLabel l;
            l.event = x.event;
            l.stochastic = x.stochastic;
            try {
                l.reset = conjoin(x.reset, y.reset);
            } catch (const ResetIncompatible& e) {
                throw ResetIncompatible("event '" + x.event + "': " + e.what());
            }
            if (!sync.count(x.event)) continue;
            l.guard = normalize(Formula::conj({x.guard, y.guard}));
            l.weight = std::min(x.weight, y.weight);
            if (x.stochastic) {
                if (canonical_key(x.rate) != canonical_key(y.rate))
                    throw ModelError("inconsistent rates for event '" + x.event + "'");
                l.rate = x.rate;
            }
            combined[{static_cast<int>(i), static_cast<int>(j)}] = t.add_label(std::move(l));
        }
    }

    const int nb = static_cast<int>(b.modes.size());
    auto pair_id = [nb](int qa, int qb) { return qa * nb + qb; };
    t.modes.reserve(a.modes.size() * b.modes.size());
    t.mode_flows.reserve(a.modes.size() * b.modes.size());
    for (std::size_t i = 0; i < a.modes.size(); ++i) {
        for (std::size_t j = 0; j < b.modes.size(); ++j) {
            t.modes.push_back("(" + a.modes[i] + ", " + b.modes[j] + ")");
            std::vector<int> fl;
            for (int f : a.mode_flows[i]) fl.push_back(fa[f]);
            for (int f : b.mode_flows[j]) fl.push_back(fb[f]);
            t.mode_flows.push_back(std::move(fl));
        }
    }
    t.init_mode = pair_id(a.init_mode, b.init_mode);

    auto lift = [&](const std::vector<Edge>& ea, const std::vector<Edge>& eb, std::vector<Edge>& out) {
        for (const auto& e : ea)
            if (!sync.count(a.labels[e.label].event))
                for (int q = 0; q < nb; ++q) out.push_back({pair_id(e.source, q), pair_id(e.target, q), la[e.label]});
        for (const auto& e : eb)
            if (!sync.count(b.labels[e.label].event))
                for (std::size_t q = 0; q < a.modes.size(); ++q)
                    out.push_back({pair_id(static_cast<int>(q), e.source), pair_id(static_cast<int>(q), e.target),
                                   lb[e.label]});
        std::map<std::string, std::vector<const Edge*>> by_event;
        for (const auto& e : eb)
            if (sync.count(b.labels[e.label].event)) by_event[b.labels[e.label].event].push_back(&e);
        for (const auto& x : ea) {
            const auto& ev = a.labels[x.label].event;
            if (!sync.count(ev)) continue;
            auto it = by_event.find(ev);
            if (it == by_event.end()) continue;
            for (const Edge* y : it->second)
                out.push_back({pair_id(x.source, y->source), pair_id(x.target, y->target), combined.at({x.label, y->label})});
        }
    };
    lift(a.instantaneous, b.instantaneous, t.instantaneous);
    lift(a.stochastic, b.stochastic, t.stochastic);
    t.finalize();
    return t;
}

namespace {

void flatten_choice(const Term& t, std::vector<const Term*>& out) {
    if (t.kind() == TermKind::Choice) {
        flatten_choice(t.left(), out);
        flatten_choice(t.right(), out);
    } else {
        out.push_back(&t);
    }
}

}  // namespace

Tdsha subcomponent_tdsha(const Model& model, const std::string& name) {
    const Definition* def = model.definition(name);
    if (!def) throw ModelError("undefined subcomponent '" + name + "'");
    std::vector<const Term*> prefixes;
    flatten_choice(def->body, prefixes);

    Tdsha t;
    t.variables = model.variables;
    set_events(t, model);
    std::map<std::pair<std::string, InfluenceValue>, int> modes;
    struct Branch {
        std::string event;
        int target;
    };
    std::vector<Branch> branches;
    std::optional<int> init;
    for (const Term* p : prefixes) {
        if (p->kind() != TermKind::Prefix || !p->activity())
            throw ModelError("subcomponent '" + name + "' is not a sum of influenced prefixes");
        const auto& act = *p->activity();
        InfluenceValue v{eval_expression(act.strength, std::map<std::string, double>{}), act.itype, act.itype_args};
        auto [it, fresh] = modes.emplace(std::make_pair(act.influence, v), 0);
        if (fresh) {
            it->second = static_cast<int>(t.modes.size());
            t.modes.push_back("(" + act.influence + ", " + num(v.strength) + ", " + v.itype_key() + ")");
            t.mode_flows.push_back({t.add_flow(flow_for(model, act.influence, v.strength, v.itype, v.args))});
        }
        if (p->event() == kInitEvent) {
            init = it->second;
        } else {
            branches.push_back({p->event(), it->second});
        }
    }
    if (!init) throw ModelError("subcomponent '" + name + "' has no init prefix");
    t.init_mode = *init;
    for (const auto& br : branches) {
        EdgeLabel l;
        l.event = br.event;
        if (model.is_stochastic(br.event)) {
            l.stochastic = true;
            const auto& ec = condition(model, br.event);
            l.rate = normalize(ec.rate);
        }
        int li = t.add_label(std::move(l));
        for (std::size_t q = 0; q < t.modes.size(); ++q)
            (t.labels[li].stochastic ? t.stochastic : t.instantaneous).push_back({static_cast<int>(q), br.target, li});
    }
    t.finalize();
    return t;
}

Tdsha controller_tdsha(const Model& model, const Term& controller) {
    TermTable table(model);
    Tdsha t;
    t.variables = model.variables;
    set_events(t, model);
    std::map<TermId, int> index;
    std::deque<TermId> queue;
    auto mode_of = [&](TermId id) {
        auto [it, fresh] = index.emplace(id, static_cast<int>(t.modes.size()));
        if (fresh) {
            t.modes.push_back(table.to_string(id));
            t.mode_flows.emplace_back();
            queue.push_back(id);
        }
        return it->second;
    };
    t.init_mode = mode_of(table.intern(controller));
    std::map<std::string, int> label_of;
    while (!queue.empty()) {
        TermId id = queue.front();
        queue.pop_front();
        int src = index.at(id);
        for (const auto& mv : table.successors(id, {})) {
            if (mv.event == kInitEvent) continue;
            int tgt = mode_of(mv.target);
            auto it = label_of.find(mv.event);
            if (it == label_of.end()) it = label_of.emplace(mv.event, t.add_label(label_for(model, mv.event))).first;
            (t.labels[it->second].stochastic ? t.stochastic : t.instantaneous).push_back({src, tgt, it->second});
        }
    }
    t.init_reset = init_reset_of(model);
    t.finalize();
    return t;
}

Tdsha compositional_mapping(const Model& input) {
    Model m = prepared(input);
    auto shape = system_shape(m);
    if (!shape) throw ModelError("model has no system definition");

    auto resolve = [&](const Term& l, const SyncSet& s, const Term& r) {
        if (!s.shared) return s.events;
        auto el = events_of(l, m);
        auto er = events_of(r, m);
        std::set<std::string> out;
        std::set_intersection(el.begin(), el.end(), er.begin(), er.end(), std::inserter(out, out.end()));
        return out;
    };
    std::function<Tdsha(const Term&)> sigma = [&](const Term& t) -> Tdsha {
        if (t.kind() == TermKind::Coop)
            return tdsha_product(sigma(t.left()), sigma(t.right()), resolve(t.left(), t.sync(), t.right()));
        if (t.kind() == TermKind::Ref) {
            const Definition* d = m.definition(t.name());
            if (d && d->body.kind() == TermKind::Coop) return sigma(d->body);
            return subcomponent_tdsha(m, t.name());
        }
        throw ModelError("uncontrolled system must cooperate subcomponents: " + to_string(t));
    };
    std::function<Tdsha(const Term&)> con = [&](const Term& t) -> Tdsha {
        if (t.kind() == TermKind::Coop)
            return tdsha_product(con(t.left()), con(t.right()), resolve(t.left(), t.sync(), t.right()));
        if (t.kind() == TermKind::Ref) {
            const Definition* d = m.definition(t.name());
            if (d && d->body.kind() == TermKind::Coop) return con(d->body);
        }
        return controller_tdsha(m, t);
    };

    if (!shape->has_init) return con(shape->controller);
    Term init_con = Term::prefix(kInitEvent, std::nullopt, shape->controller);
    return tdsha_product(sigma(shape->uncontrolled), con(shape->controller),
                         resolve(shape->uncontrolled, shape->sync, init_con));
}

Tdsha prune_unreachable(const Tdsha& t) {
    std::vector<std::vector<int>> succ(t.modes.size());
    for (const auto* edges : {&t.instantaneous, &t.stochastic})
        for (const auto& e : *edges) succ[e.source].push_back(e.target);
    std::vector<char> seen(t.modes.size(), 0);
    std::vector<int> stack{t.init_mode};
    seen[t.init_mode] = 1;
    while (!stack.empty()) {
        int q = stack.back();
        stack.pop_back();
        for (int n : succ[q])
            if (!seen[n]) {
                seen[n] = 1;
                stack.push_back(n);
            }
    }
    std::vector<int> renum(t.modes.size(), -1);
    Tdsha out;
    out.variables = t.variables;
    out.instantaneous_events = t.instantaneous_events;
    out.stochastic_events = t.stochastic_events;
    out.init_reset = t.init_reset;
    std::vector<int> fmap, lmap;
    for (const auto& f : t.flows) fmap.push_back(out.add_flow(f));
    for (const auto& l : t.labels) lmap.push_back(out.add_label(l));
    for (std::size_t q = 0; q < t.modes.size(); ++q) {
        if (!seen[q]) continue;
        renum[q] = static_cast<int>(out.modes.size());
        out.modes.push_back(t.modes[q]);
        std::vector<int> fl;
        for (int f : t.mode_flows[q]) fl.push_back(fmap[f]);
        out.mode_flows.push_back(std::move(fl));
    }
    out.init_mode = renum[t.init_mode];
    for (const auto& e : t.instantaneous)
        if (seen[e.source]) out.instantaneous.push_back({renum[e.source], renum[e.target], lmap[e.label]});
    for (const auto& e : t.stochastic)
        if (seen[e.source]) out.stochastic.push_back({renum[e.source], renum[e.target], lmap[e.label]});
    out.finalize();
    return out;
}

// --- isomorphism ------------------------------------------------------------------------

namespace {

struct IsoGraph {
    const Tdsha* t;
    std::vector<int> label;  // shared label ids
    std::vector<std::vector<std::pair<int, int>>> out, in;  // (label, other mode)
    std::vector<std::string> flow_sig;
};

IsoGraph iso_graph(const Tdsha& t, std::map<std::string, int>& label_ids) {
    IsoGraph g;
    g.t = &t;
    for (const auto& l : t.labels) g.label.push_back(label_ids.emplace(l.key(), static_cast<int>(label_ids.size())).first->second);
    g.out.resize(t.modes.size());
    g.in.resize(t.modes.size());
    for (const auto* edges : {&t.instantaneous, &t.stochastic})
        for (const auto& e : *edges) {
            g.out[e.source].push_back({g.label[e.label], e.target});
            g.in[e.target].push_back({g.label[e.label], e.source});
        }
    for (std::size_t q = 0; q < t.modes.size(); ++q) {
        std::vector<std::string> keys;
        for (int f : t.mode_flows[q]) keys.push_back(flow_key(t.flows[f]));
        std::sort(keys.begin(), keys.end());
        std::string sig = static_cast<int>(q) == t.init_mode ? "*" : "";
        for (const auto& k : keys) sig += k + ";";
        g.flow_sig.push_back(std::move(sig));
    }
    return g;
}

// joint colour refinement over both graphs
void refine(const IsoGraph& a, const IsoGraph& b, std::vector<int>& ca, std::vector<int>& cb) {
    std::map<std::string, int> ids;
    auto assign = [&](const std::vector<std::string>& keys, std::vector<int>& c) {
        c.resize(keys.size());
        for (std::size_t i = 0; i < keys.size(); ++i)
            c[i] = ids.emplace(keys[i], static_cast<int>(ids.size())).first->second;
    };
    assign(a.flow_sig, ca);
    assign(b.flow_sig, cb);
    std::size_t classes = ids.size();
    for (;;) {
        auto keys_of = [](const IsoGraph& g, const std::vector<int>& c) {
            std::vector<std::string> keys(c.size());
            for (std::size_t q = 0; q < c.size(); ++q) {
                std::vector<std::pair<int, int>> o, i;
                for (auto [l, t] : g.out[q]) o.push_back({l, c[t]});
                for (auto [l, s] : g.in[q]) i.push_back({l, c[s]});
                std::sort(o.begin(), o.end());
                std::sort(i.begin(), i.end());
                std::string k = std::to_string(c[q]) + "|";
                for (auto [l, x] : o) k += std::to_string(l) + ":" + std::to_string(x) + ",";
                k += "|";
                for (auto [l, x] : i) k += std::to_string(l) + ":" + std::to_string(x) + ",";
                keys[q] = std::move(k);
            }
            return keys;
        };
        auto ka = keys_of(a, ca);
        auto kb = keys_of(b, cb);
        ids.clear();
        assign(ka, ca);
        assign(kb, cb);
        if (ids.size() == classes) return;
        classes = ids.size();
    }
}

struct Matcher {
    const IsoGraph& a;
    const IsoGraph& b;
    const std::vector<int>& ca;
    const std::vector<int>& cb;
    std::vector<int> fwd, bwd;

    bool consistent(int x, int y) const {
        auto check = [&](const std::vector<std::pair<int, int>>& ea, const std::vector<std::pair<int, int>>& eb) {
            std::vector<std::pair<int, int>> ma, mb;
            for (auto [l, o] : ea) {
                int img = o == x ? y : fwd[o];
                if (img >= 0) ma.push_back({l, img});
            }
            for (auto [l, o] : eb)
                if (o == y || bwd[o] >= 0) mb.push_back({l, o});
            std::sort(ma.begin(), ma.end());
            std::sort(mb.begin(), mb.end());
            return ma == mb;
        };
        return check(a.out[x], b.out[y]) && check(a.in[x], b.in[y]);
    }

    bool extend(const std::vector<int>& order, std::size_t k, const std::map<int, std::vector<int>>& by_colour) {
        if (k == order.size()) return true;
        int x = order[k];
        for (int y : by_colour.at(ca[x])) {
            if (bwd[y] >= 0 || !consistent(x, y)) continue;
            fwd[x] = y;
            bwd[y] = x;
            if (extend(order, k + 1, by_colour)) return true;
            fwd[x] = -1;
            bwd[y] = -1;
        }
        return false;
    }
};

}  // namespace

std::optional<Isomorphism> graph_isomorphic(const Tdsha& a, const Tdsha& b) {
    if (a.modes.size() != b.modes.size() || a.instantaneous.size() != b.instantaneous.size() ||
        a.stochastic.size() != b.stochastic.size())
        return std::nullopt;
    if (std::set<std::string>(a.variables.begin(), a.variables.end()) !=
        std::set<std::string>(b.variables.begin(), b.variables.end()))
        return std::nullopt;
    if (canonical_key(a.init_reset) != canonical_key(b.init_reset)) return std::nullopt;

    std::map<std::string, int> label_ids;
    IsoGraph ga = iso_graph(a, label_ids);
    IsoGraph gb = iso_graph(b, label_ids);
    std::vector<int> ca, cb;
    refine(ga, gb, ca, cb);
    std::map<int, std::vector<int>> by_colour;
    for (std::size_t q = 0; q < cb.size(); ++q) by_colour[cb[q]].push_back(static_cast<int>(q));
    std::map<int, int> hist;
    for (int c : ca) ++hist[c];
    for (const auto& [c, qs] : by_colour)
        if (hist[c] != static_cast<int>(qs.size())) return std::nullopt;
    if (hist.size() != by_colour.size()) return std::nullopt;

    // singleton classes first, then breadth-first from the initial mode
    std::vector<int> order;
    std::vector<char> placed(a.modes.size(), 0);
    for (std::size_t q = 0; q < ca.size(); ++q)
        if (by_colour[ca[q]].size() == 1) {
            order.push_back(static_cast<int>(q));
            placed[q] = 1;
        }
    std::deque<int> queue{a.init_mode};
    std::vector<char> visited(a.modes.size(), 0);
    visited[a.init_mode] = 1;
    while (!queue.empty()) {
        int q = queue.front();
        queue.pop_front();
        if (!placed[q]) {
            order.push_back(q);
            placed[q] = 1;
        }
        for (auto [l, t] : ga.out[q])
            if (!visited[t]) {
                visited[t] = 1;
                queue.push_back(t);
            }
    }
    for (std::size_t q = 0; q < a.modes.size(); ++q)
        if (!placed[q]) order.push_back(static_cast<int>(q));

    Matcher m{ga, gb, ca, cb, std::vector<int>(a.modes.size(), -1), std::vector<int>(b.modes.size(), -1)};
    if (!m.extend(order, 0, by_colour)) return std::nullopt;
    if (m.fwd[a.init_mode] != b.init_mode) return std::nullopt;
    return Isomorphism{m.fwd};
}

Tdsha build_tdsha(const Model& model, MappingMethod method, const LtsOptions& opts) {
    Model m = expand_general_durations(prepared(model));
    if (method == MappingMethod::Compositional) return prune_unreachable(compositional_mapping(m));
    return from_lts(build_lts(m, opts));
}

// --- output -----------------------------------------------------------------------------

std::string tdsha_to_json(const Tdsha& t) {
    using nlohmann::json;
    json j;
    j["variables"] = t.variables;
    j["events"] = {{"instantaneous", t.instantaneous_events}, {"stochastic", t.stochastic_events}};
    j["modes"] = json::array();
    for (std::size_t q = 0; q < t.modes.size(); ++q) {
        json flows = json::array();
        for (int f : t.mode_flows[q])
            flows.push_back({{"variable", t.flows[f].variable},
                             {"stoichiometry", t.flows[f].stoichiometry},
                             {"rate", to_string(t.flows[f].rate)}});
        j["modes"].push_back({{"id", q}, {"label", t.modes[q]}, {"flows", flows}});
    }
    auto edge_json = [&](const Edge& e) {
        const auto& l = t.labels[e.label];
        json x = {{"source", e.source}, {"target", e.target}, {"event", l.event}, {"guard", to_string(l.guard)},
                  {"reset", to_string(l.reset)}};
        if (l.stochastic) {
            x["rate"] = to_string(l.rate);
        } else {
            x["weight"] = l.weight;
        }
        return x;
    };
    j["instantaneous"] = json::array();
    for (const auto& e : t.instantaneous) j["instantaneous"].push_back(edge_json(e));
    j["stochastic"] = json::array();
    for (const auto& e : t.stochastic) j["stochastic"].push_back(edge_json(e));
    j["init"] = {{"mode", t.init_mode}, {"reset", to_string(t.init_reset)}};
    return j.dump(2) + "\n";
}

std::string tdsha_to_dot(const Tdsha& t) {
    auto esc = [](const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        return out;
    };
    std::string out = "digraph tdsha {\n  node [shape=box];\n";
    for (std::size_t q = 0; q < t.modes.size(); ++q)
        out += "  q" + std::to_string(q) + " [label=\"" + esc(t.modes[q]) + "\"" +
               (static_cast<int>(q) == t.init_mode ? ", peripheries=2" : "") + "];\n";
    for (const auto& e : t.instantaneous)
        out += "  q" + std::to_string(e.source) + " -> q" + std::to_string(e.target) + " [label=\"" +
               esc(t.labels[e.label].event) + "\"];\n";
    for (const auto& e : t.stochastic)
        out += "  q" + std::to_string(e.source) + " -> q" + std::to_string(e.target) + " [label=\"" +
               esc(t.labels[e.label].event) + "\", style=dashed];\n";
    return out + "}\n";
}

}  // namespace shype
