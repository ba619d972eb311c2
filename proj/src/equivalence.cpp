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

#include "shype/equivalence.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <tuple>

#include "json.hpp"

#include "shype/parser.hpp"

namespace shype {

StateSignature state_signature(const OperationalState& state, const Model& input) {
    const Model& model = input.params.empty() ? input : instantiate(input);
    StateSignature sig;
    for (const auto& [influence, value] : state) {
        auto it = model.iv.find(influence);
        if (it == model.iv.end()) throw ModelError("influence '" + influence + "' has no iv entry");
        std::string f = canonical_key(normalize(itype_function(model, value.itype, value.args)));
        sig[{it->second, f}] += value.strength;
    }
    std::erase_if(sig, [](const auto& kv) { return kv.second == 0.0; });
    return sig;
}

bool states_equivalent(const OperationalState& a, const Model& ma, const OperationalState& b, const Model& mb,
                       StateEquivKind kind) {
    if (kind == StateEquivKind::Equality) return a == b;
    return state_signature(a, ma) == state_signature(b, mb);
}

namespace {

RateValue unit_rate(const Model& model, const std::string& event) {
    auto it = model.ec.find(event);
    if (it == model.ec.end()) throw ModelError("event '" + event + "' has no event condition");
    if (it->second.kind != ActivationKind::Rate)
        throw NonComparableRate("event '" + event + "' has a general duration; expand it first");
    Expr r = normalize(it->second.rate);
    if (r.is_number()) return {"", r.value()};
    return {canonical_key(r), 1.0};
}

}  // namespace

RateValue rate_to_class(const Lts& lts, int config, const std::string& event, const std::set<int>& block) {
    int mult = 0;
    for (int ti : lts.outgoing(config)) {
        const auto& tr = lts.transitions[ti];
        if (tr.event == event && block.count(tr.target)) mult += tr.multiplicity;
    }
    if (mult == 0) return {"", 0.0};
    RateValue unit = unit_rate(lts.model, event);
    return {unit.form, unit.value * mult};
}

int Partition::block_of(Member m) const {
    for (std::size_t b = 0; b < blocks.size(); ++b)
        if (std::binary_search(blocks[b].begin(), blocks[b].end(), m)) return static_cast<int>(b);
    return -1;
}

namespace {

enum class Mode { System, Stochastic };

// disjoint union of the two LTSs
struct Union {
    const Lts* lts[2];
    std::vector<Member> members;
    std::map<Member, int> index;
    struct Move {
        std::string event;
        bool stochastic;
        int target;
        int multiplicity;
        RateValue rate;  // act(a) for one derivation
    };
    std::vector<std::vector<Move>> moves;
    std::vector<int> initial_colour;

    Union(const Lts& p, const Lts& q, Mode mode, StateEquivKind kind) : lts{&p, &q} {
        for (int side = 0; side < 2; ++side)
            for (int c = 0; c < static_cast<int>(lts[side]->configs.size()); ++c) {
                index[{side, c}] = static_cast<int>(members.size());
                members.push_back({side, c});
            }
        std::map<std::string, RateValue> units[2];
        for (int side = 0; side < 2; ++side)
            for (const auto& tr : lts[side]->transitions)
                if (lts[side]->model.is_stochastic(tr.event) && !units[side].count(tr.event))
                    units[side][tr.event] = unit_rate(lts[side]->model, tr.event);
        for (const auto& [event, u] : units[0]) {
            auto it = units[1].find(event);
            if (it == units[1].end() || it->second.form == u.form) continue;
            throw NonComparableRate("rates of '" + event + "' cannot be compared: " +
                                    (u.form.empty() ? std::to_string(u.value) : u.form) + " vs " +
                                    (it->second.form.empty() ? std::to_string(it->second.value) : it->second.form));
        }
        moves.resize(members.size());
        for (std::size_t u = 0; u < members.size(); ++u) {
            const Lts& l = *lts[members[u].side];
            for (int ti : l.outgoing(members[u].config)) {
                const auto& tr = l.transitions[ti];
                bool st = l.model.is_stochastic(tr.event);
                moves[u].push_back({tr.event, st, index.at({members[u].side, tr.target}), tr.multiplicity,
                                    st ? units[members[u].side].at(tr.event) : RateValue{}});
            }
        }
        if (mode == Mode::System || kind == StateEquivKind::Equality) {
            std::map<OperationalState, int> ids;
            for (const auto& m : members) {
                auto [it, _] = ids.emplace(lts[m.side]->state_of(m.config), static_cast<int>(ids.size()));
                initial_colour.push_back(it->second);
            }
        } else {
            std::map<StateSignature, int> ids;
            std::map<std::pair<int, int>, int> cache;  // (side, state) -> colour
            for (const auto& m : members) {
                auto key = std::make_pair(m.side, lts[m.side]->configs[m.config].state);
                auto c = cache.find(key);
                if (c == cache.end()) {
                    auto sig = state_signature(lts[m.side]->state_of(m.config), lts[m.side]->model);
                    auto [it, _] = ids.emplace(sig, static_cast<int>(ids.size()));
                    c = cache.emplace(key, it->second).first;
                }
                initial_colour.push_back(c->second);
            }
        }
    }
};

using InstItem = std::pair<std::string, int>;
using StochItem = std::tuple<std::string, int, std::string, double>;

struct Signature {
    int colour;
    std::vector<InstItem> inst;
    std::vector<StochItem> stoch;

    friend auto operator<=>(const Signature&, const Signature&) = default;
};

// moves into the blocks selected by `into` (all blocks when empty)
Signature signature(const Union& un, int u, const std::vector<int>& colour, Mode mode,
                    const std::function<bool(int)>& into = {}) {
    Signature s{colour[u], {}, {}};
    std::map<std::pair<std::string, int>, std::pair<RateValue, int>> agg;
    for (const auto& mv : un.moves[u]) {
        int c = colour[mv.target];
        if (into && !into(c)) continue;
        if (!mv.stochastic) {
            s.inst.emplace_back(mv.event, c);
        } else if (mode == Mode::System) {
            s.stoch.emplace_back(mv.event, c, mv.rate.form, mv.rate.value * mv.multiplicity);
        } else {
            auto& a = agg[{mv.event, c}];
            a.first = mv.rate;
            a.second += mv.multiplicity;
        }
    }
    for (const auto& [k, v] : agg) s.stoch.emplace_back(k.first, k.second, v.first.form, v.first.value * v.second);
    std::sort(s.inst.begin(), s.inst.end());
    s.inst.erase(std::unique(s.inst.begin(), s.inst.end()), s.inst.end());
    std::sort(s.stoch.begin(), s.stoch.end());
    return s;
}

// canonical colouring: colours numbered by first member
std::vector<int> canonical(const std::vector<int>& colour) {
    std::map<int, int> renum;
    std::vector<int> out(colour.size());
    for (std::size_t i = 0; i < colour.size(); ++i) {
        auto [it, _] = renum.emplace(colour[i], static_cast<int>(renum.size()));
        out[i] = it->second;
    }
    return out;
}

std::size_t count_colours(const std::vector<int>& colour) {
    return std::set<int>(colour.begin(), colour.end()).size();
}

std::vector<std::vector<int>> refine_rounds(const Union& un, Mode mode) {
    std::vector<std::vector<int>> history{canonical(un.initial_colour)};
    for (;;) {
        const auto& cur = history.back();
        std::map<Signature, int> ids;
        std::vector<int> next(cur.size());
        for (std::size_t u = 0; u < cur.size(); ++u) {
            auto [it, _] = ids.emplace(signature(un, static_cast<int>(u), cur, mode), static_cast<int>(ids.size()));
            next[u] = it->second;
        }
        next = canonical(next);
        if (count_colours(next) == count_colours(cur)) return history;
        history.push_back(std::move(next));
    }
}

std::vector<int> refine_by_splitters(const Union& un, Mode mode, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<int> colour = canonical(un.initial_colour);
    for (bool changed = true; changed;) {
        changed = false;
        std::vector<int> order(count_colours(colour));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), gen);
        for (int splitter : order) {
            if (splitter >= static_cast<int>(count_colours(colour))) continue;
            std::map<Signature, int> ids;
            std::vector<int> next(colour.size());
            for (std::size_t u = 0; u < colour.size(); ++u) {
                auto s = signature(un, static_cast<int>(u), colour, mode, [&](int c) { return c == splitter; });
                s.colour = colour[u];
                // only the target block matters, colours inside it are all equal
                for (auto& i : s.inst) i.second = 0;
                for (auto& i : s.stoch) std::get<1>(i) = 0;
                auto [it, _] = ids.emplace(std::move(s), static_cast<int>(ids.size()));
                next[u] = it->second;
            }
            if (count_colours(next) != count_colours(colour)) {
                colour = canonical(next);
                changed = true;
            }
        }
    }
    return canonical(colour);
}

Partition partition_of(const Union& un, const std::vector<int>& colour) {
    Partition p;
    p.blocks.resize(count_colours(colour));
    for (std::size_t u = 0; u < colour.size(); ++u) p.blocks[colour[u]].push_back(un.members[u]);
    for (auto& b : p.blocks) std::sort(b.begin(), b.end());
    std::sort(p.blocks.begin(), p.blocks.end());
    return p;
}

std::string describe(const Union& un, int u) {
    const Lts& l = *un.lts[un.members[u].side];
    int c = un.members[u].config;
    return std::string(un.members[u].side == 0 ? "P" : "Q") + "<" + l.term_string(c) + ", " + to_string(l.state_of(c)) +
           ">";
}

std::string rate_text(const std::string& form, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return form.empty() ? std::string(buf) : std::string(buf) + " * (" + form + ")";
}

Witness explain(const Union& un, const std::vector<std::vector<int>>& history, Mode mode, int p, int q) {
    Witness w;
    for (;;) {
        std::size_t k = 0;
        while (history[k][p] == history[k][q]) ++k;
        if (k == 0) {
            w.reason = "states differ: " + describe(un, p) + " vs " + describe(un, q);
            return w;
        }
        const auto& prev = history[k - 1];
        if (prev[p] != prev[q]) {
            k = k - 1;
            continue;
        }
        Signature sp = signature(un, p, prev, mode), sq = signature(un, q, prev, mode);
        // first mismatching move, seen from either side
        auto step = [&](int a, int b, const Signature& sa, const Signature& sb) -> std::optional<std::pair<int, int>> {
            for (const auto& item : sa.inst) {
                if (std::binary_search(sb.inst.begin(), sb.inst.end(), item)) continue;
                for (const auto& mv : un.moves[a])
                    if (!mv.stochastic && mv.event == item.first && prev[mv.target] == item.second) {
                        w.events.push_back(mv.event);
                        for (const auto& mb : un.moves[b])
                            if (!mb.stochastic && mb.event == mv.event) return std::make_pair(mv.target, mb.target);
                        w.reason = describe(un, a) + " performs " + mv.event + "; " + describe(un, b) +
                                   " has no matching move";
                        return std::nullopt;
                    }
            }
            for (const auto& item : sa.stoch) {
                if (std::binary_search(sb.stoch.begin(), sb.stoch.end(), item)) continue;
                const auto& [event, c, form, value] = item;
                double other = 0;
                for (const auto& o : sb.stoch)
                    if (std::get<0>(o) == event && std::get<1>(o) == c) other += std::get<3>(o);
                for (const auto& mv : un.moves[a])
                    if (mv.stochastic && mv.event == event && prev[mv.target] == c) {
                        w.events.push_back(event);
                        for (const auto& mb : un.moves[b])
                            if (mb.stochastic && mb.event == event && prev[mb.target] != c)
                                return std::make_pair(mv.target, mb.target);
                        w.reason = "rate of " + event + " into the class of " + describe(un, mv.target) + ": " +
                                   rate_text(form, value) + " from " + describe(un, a) + " but " +
                                   rate_text(form, other) + " from " + describe(un, b);
                        return std::nullopt;
                    }
            }
            return std::nullopt;
        };
        std::size_t before = w.events.size();
        auto next = step(p, q, sp, sq);
        if (!next && w.events.size() == before && w.reason.empty()) next = step(q, p, sq, sp);
        if (!next) {
            if (w.reason.empty()) w.reason = "transitions of " + describe(un, p) + " and " + describe(un, q) + " differ";
            return w;
        }
        p = next->first;
        q = next->second;
        if (history.back()[p] == history.back()[q]) {
            w.reason = "moves from the distinguished pair lead to equivalent configurations";
            return w;
        }
    }
}

BisimResult run(const Lts& p, const Lts& q, Mode mode, StateEquivKind kind, const BisimOptions& opts) {
    Union un(p, q, mode, kind);
    auto history = refine_rounds(un, mode);
    std::vector<int> colour = history.back();
    if (opts.schedule_seed) colour = refine_by_splitters(un, mode, *opts.schedule_seed);
    BisimResult r;
    r.partition = partition_of(un, colour);
    int ip = un.index.at({0, p.initial}), iq = un.index.at({1, q.initial});
    r.bisimilar = colour[ip] == colour[iq];
    if (!r.bisimilar) r.witness = explain(un, history, mode, ip, iq);
    return r;
}

Lts lts_for(const Model& m, const LtsOptions& opts) { return build_lts(expand_general_durations(m), opts); }

}  // namespace

BisimResult check_system_bisim(const Lts& p, const Lts& q, const BisimOptions& opts) {
    return run(p, q, Mode::System, StateEquivKind::Equality, opts);
}

BisimResult check_system_bisim(const Model& p, const Model& q, const BisimOptions& opts) {
    return check_system_bisim(lts_for(p, opts.lts), lts_for(q, opts.lts), opts);
}

BisimResult check_stochastic_system_bisim(const Lts& p, const Lts& q, StateEquivKind kind, const BisimOptions& opts) {
    return run(p, q, Mode::Stochastic, kind, opts);
}

BisimResult check_stochastic_system_bisim(const Model& p, const Model& q, StateEquivKind kind,
                                          const BisimOptions& opts) {
    return check_stochastic_system_bisim(lts_for(p, opts.lts), lts_for(q, opts.lts), kind, opts);
}

namespace {

std::vector<int> configs_with_term(const Lts& lts, const std::string& text) {
    std::string canon;
    try {
        canon = lts.terms->to_string(lts.terms->intern(parse_term(text)));
    } catch (const Error& e) {
        throw UnknownDerivative("'" + text + "': " + e.what());
    }
    std::vector<int> out;
    for (int c = 0; c < static_cast<int>(lts.configs.size()); ++c)
        if (lts.term_string(c) == canon) out.push_back(c);
    if (out.empty()) throw UnknownDerivative("'" + text + "' is not a reachable derivative");
    return out;
}

}  // namespace

RelationVerdict verify_relation(const Lts& p, const Lts& q, const std::vector<TermPair>& pairs, StateEquivKind kind) {
    Union un(p, q, Mode::Stochastic, kind);
    // term classes: union-find over (side, term)
    using Key = std::pair<int, std::string>;
    std::map<Key, Key> parent;
    std::function<Key(const Key&)> find = [&](const Key& x) -> Key {
        auto it = parent.find(x);
        if (it == parent.end() || it->second == x) return x;
        return it->second = find(it->second);
    };
    std::vector<std::pair<std::vector<int>, std::vector<int>>> pair_configs;
    for (const auto& [a, b] : pairs) {
        auto ca = configs_with_term(p, a), cb = configs_with_term(q, b);
        auto ra = find({0, p.term_string(ca[0])}), rb = find({1, q.term_string(cb[0])});
        if (ra != rb) parent[ra] = rb;
        pair_configs.emplace_back(std::move(ca), std::move(cb));
    }
    // class of a member = (term class, state class)
    std::map<std::pair<Key, int>, int> ids;
    std::vector<int> colour(un.members.size());
    for (std::size_t u = 0; u < un.members.size(); ++u) {
        const auto& m = un.members[u];
        auto key = std::make_pair(find({m.side, un.lts[m.side]->term_string(m.config)}), un.initial_colour[u]);
        colour[u] = ids.emplace(key, static_cast<int>(ids.size())).first->second;
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        bool matched = false;
        for (int a : pair_configs[i].first)
            for (int b : pair_configs[i].second) {
                int ua = un.index.at({0, a}), ub = un.index.at({1, b});
                if (un.initial_colour[ua] != un.initial_colour[ub]) continue;
                matched = true;
                auto sa = signature(un, ua, colour, Mode::Stochastic);
                auto sb = signature(un, ub, colour, Mode::Stochastic);
                sa.colour = sb.colour = 0;
                if (sa.inst != sb.inst)
                    return {false, i, "instantaneous moves differ between " + describe(un, ua) + " and " +
                                          describe(un, ub)};
                if (sa.stoch != sb.stoch)
                    return {false, i, "stochastic rates differ between " + describe(un, ua) + " and " +
                                          describe(un, ub)};
            }
        if (!matched) return {false, i, "no reachable configurations of the pair have equivalent states"};
    }
    return {true, std::nullopt, ""};
}

RelationVerdict verify_relation(const Model& p, const Model& q, const std::vector<TermPair>& pairs,
                                StateEquivKind kind) {
    return verify_relation(lts_for(p, {}), lts_for(q, {}), pairs, kind);
}

std::vector<TermPair> relation_of(const Partition& partition, const Lts& p, const Lts& q) {
    std::set<TermPair> out;
    const Lts* l[2] = {&p, &q};
    for (const auto& block : partition.blocks)
        for (const auto& a : block)
            for (const auto& b : block) {
                if (a.side != 0 || b.side != 1) continue;
                out.emplace(l[0]->term_string(a.config), l[1]->term_string(b.config));
            }
    return {out.begin(), out.end()};
}

// --- well-behavedness --------------------------------------------------------

bool IGraph::has_edge(const std::string& a, const std::string& b) const {
    auto ia = std::find(nodes.begin(), nodes.end(), a), ib = std::find(nodes.begin(), nodes.end(), b);
    if (ia == nodes.end() || ib == nodes.end()) return false;
    return edges.count({static_cast<int>(ia - nodes.begin()), static_cast<int>(ib - nodes.begin())}) > 0;
}

namespace {

// bounds implied by single-variable affine conjuncts
Box guard_box(const Formula& guard) {
    Box box;
    for (const auto& c : conjuncts(normalize(guard))) {
        if (c.kind() != FormulaKind::Cmp) continue;
        Expr e = normalize(c.lhs() - c.rhs());
        auto refs = free_refs(e);
        if (refs.size() != 1 || contains_random(e)) continue;
        const std::string v = *refs.begin();
        auto at = [&](double x) {
            return eval_expression(e, [&](const std::string& n) -> std::optional<double> {
                if (n == v) return x;
                return std::nullopt;
            });
        };
        double c0, a;
        try {
            c0 = at(0);
            a = at(1) - c0;
            if (a == 0 || at(2) != c0 + 2 * a) continue;
        } catch (const EvalError&) {
            continue;
        }
        double root = -c0 / a;
        Interval iv = Interval::everything();
        switch (c.op()) {
        case CmpOp::Eq:
            iv = Interval::point(root);
            break;
        case CmpOp::Ge:
        case CmpOp::Gt:
            (a > 0 ? iv.lo : iv.hi) = root;
            break;
        case CmpOp::Le:
        case CmpOp::Lt:
            (a > 0 ? iv.hi : iv.lo) = root;
            break;
        }
        auto [it, fresh] = box.emplace(v, iv);
        if (!fresh) it->second = {std::max(it->second.lo, iv.lo), std::min(it->second.hi, iv.hi)};
    }
    return box;
}

Truth post_reset(const Formula& guard, const EventCondition& by, const IntervalOptions& opts) {
    Box box = guard_box(by.guard);
    for (const auto& [_, iv] : box)
        if (iv.empty()) return Truth::Never;
    std::map<std::string, Expr> assigned;
    for (const auto& a : by.reset) assigned[a.variable] = a.value;
    Formula after = substitute(guard, [&](const std::string& n) -> std::optional<Expr> {
        auto it = assigned.find(n);
        if (it == assigned.end()) return std::nullopt;
        return it->second;
    });
    return eval_interval(normalize(after), box, opts);
}

// sequential controllers reachable from the controller term
void sequential_roots(const Term& t, const Model& model, std::vector<std::string>& out, std::set<std::string>& seen) {
    switch (t.kind()) {
    case TermKind::Coop:
        sequential_roots(t.left(), model, out, seen);
        sequential_roots(t.right(), model, out, seen);
        return;
    case TermKind::Ref: {
        const Definition* d = model.definition(t.name());
        if (!d || !seen.insert(t.name()).second) return;
        if (d->body.kind() == TermKind::Coop || d->body.kind() == TermKind::Ref) {
            sequential_roots(d->body, model, out, seen);
        } else {
            out.push_back(t.name());
        }
        return;
    }
    case TermKind::Nil:
        return;
    default:
        out.push_back(to_string(t));
        return;
    }
}

void cycles_from(int start, int v, const std::vector<std::vector<int>>& adj, std::vector<int>& path,
                 std::vector<bool>& on_path, std::vector<std::vector<int>>& out, std::size_t cap) {
    for (int w : adj[v]) {
        if (out.size() >= cap) return;
        if (w == start) {
            out.push_back(path);
        } else if (w > start && !on_path[w]) {
            on_path[w] = true;
            path.push_back(w);
            cycles_from(start, w, adj, path, on_path, out, cap);
            path.pop_back();
            on_path[w] = false;
        }
    }
}

}  // namespace

IGraph build_igraph(const Model& input, const IntervalOptions& opts) {
    Model model = instantiate(expand_general_durations(input));
    IGraph g;
    g.nodes = model.instantaneous_events;
    for (std::size_t a = 0; a < g.nodes.size(); ++a)
        for (std::size_t b = 0; b < g.nodes.size(); ++b) {
            const auto& ea = model.ec.at(g.nodes[a]);
            const auto& eb = model.ec.at(g.nodes[b]);
            if (post_reset(eb.guard, ea, opts) != Truth::Never)
                g.edges.emplace(static_cast<int>(a), static_cast<int>(b));
        }
    return g;
}

WellBehavedVerdict check_well_behaved(const Model& input, const IntervalOptions& opts) {
    Model model = instantiate(expand_general_durations(input));
    WellBehavedVerdict v;
    v.igraph = build_igraph(model, opts);

    auto shape = system_shape(model);
    if (!shape) throw ModelError("model has no controlled system");
    std::vector<std::string> roots;
    std::set<std::string> seen;
    sequential_roots(shape->controller, model, roots, seen);

    TermTable table(model);
    for (const auto& root : roots) {
        Term start = model.definition(root) ? Term::ref(root) : parse_term(root);
        std::map<TermId, int> index;
        std::vector<std::vector<std::pair<int, std::string>>> adj;
        std::vector<TermId> queue{table.intern(start)};
        index[queue[0]] = 0;
        adj.emplace_back();
        for (std::size_t i = 0; i < queue.size(); ++i) {
            for (const auto& mv : table.successors(queue[i], {})) {
                auto [it, fresh] = index.emplace(mv.target, static_cast<int>(queue.size()));
                if (fresh) {
                    queue.push_back(mv.target);
                    adj.emplace_back();
                }
                adj[i].emplace_back(it->second, mv.event);
            }
        }
        // an instantaneous edge is on an instantaneous cycle when its target
        // reaches its source through instantaneous edges
        std::size_t n = queue.size();
        std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
        for (std::size_t s = 0; s < n; ++s) {
            std::vector<std::size_t> stack{s};
            reach[s][s] = true;
            while (!stack.empty()) {
                auto x = stack.back();
                stack.pop_back();
                for (const auto& [y, e] : adj[x])
                    if (model.is_instantaneous(e) && !reach[s][y]) {
                        reach[s][y] = true;
                        stack.push_back(y);
                    }
            }
        }
        for (std::size_t x = 0; x < n; ++x)
            for (const auto& [y, e] : adj[x])
                if (model.is_instantaneous(e) && reach[y][x]) v.unsafe.insert(e);
    }

    if (v.unsafe.empty()) {
        v.verdict = Behaviour::WellBehaved;
        v.reason = "every controller cycle contains a stochastic event";
        return v;
    }
    std::vector<int> nodes;
    for (std::size_t i = 0; i < v.igraph.nodes.size(); ++i)
        if (v.unsafe.count(v.igraph.nodes[i])) nodes.push_back(static_cast<int>(i));
    std::vector<std::vector<int>> adj(v.igraph.nodes.size());
    bool any = false;
    for (const auto& [a, b] : v.igraph.edges)
        if (v.unsafe.count(v.igraph.nodes[a]) && v.unsafe.count(v.igraph.nodes[b])) {
            adj[a].push_back(b);
            any = true;
        }
    if (!any) {
        v.verdict = Behaviour::WellBehaved;
        v.reason = "no event on an instantaneous controller cycle can enable another such event";
        return v;
    }
    std::vector<std::vector<int>> cycles;
    for (int s : nodes) {
        std::vector<int> path{s};
        std::vector<bool> on_path(v.igraph.nodes.size(), false);
        on_path[s] = true;
        cycles_from(s, s, adj, path, on_path, cycles, 64);
    }
    if (cycles.empty()) {
        v.verdict = Behaviour::WellBehaved;
        v.reason = "the I-graph restricted to events on instantaneous controller cycles is acyclic";
        return v;
    }
    v.verdict = Behaviour::Unknown;
    v.reason = "the I-graph has cycles";
    for (const auto& c : cycles) {
        std::vector<std::string> names;
        for (int i : c) names.push_back(v.igraph.nodes[i]);
        v.cycles.push_back(std::move(names));
    }
    return v;
}

std::string bisim_to_json(const BisimResult& r, const Lts& p, const Lts& q) {
    const Lts* l[2] = {&p, &q};
    nlohmann::json j;
    j["bisimilar"] = r.bisimilar;
    j["blocks"] = nlohmann::json::array();
    for (const auto& block : r.partition.blocks) {
        nlohmann::json b = nlohmann::json::array();
        for (const auto& m : block)
            b.push_back({{"model", m.side == 0 ? "P" : "Q"},
                         {"config", m.config},
                         {"term", l[m.side]->term_string(m.config)},
                         {"state", to_string(l[m.side]->state_of(m.config))}});
        j["blocks"].push_back(std::move(b));
    }
    if (r.witness) j["witness"] = {{"events", r.witness->events}, {"reason", r.witness->reason}};
    return j.dump(2);
}

std::string well_behaved_to_json(const WellBehavedVerdict& v) {
    nlohmann::json j;
    j["verdict"] = v.verdict == Behaviour::WellBehaved ? "WellBehaved" : "Unknown";
    j["reason"] = v.reason;
    j["unsafe"] = v.unsafe;
    j["cycles"] = v.cycles;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : v.igraph.edges) edges.push_back({v.igraph.nodes[a], v.igraph.nodes[b]});
    j["igraph"] = {{"nodes", v.igraph.nodes}, {"edges", edges}};
    return j.dump(2);
}

}  // namespace shype
