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

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <regex>
#include <set>
#include <sstream>

#include "shype/equivalence.hpp"
#include "shype/parser.hpp"
#include "shype/rng.hpp"
#include "shype/simulate.hpp"
#include "shype/tdsha.hpp"

#ifndef SHYPE_MODELS_DIR
#define SHYPE_MODELS_DIR "models"
#endif

using namespace shype;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

Model load(const std::string& name) { return load_model(std::string(SHYPE_MODELS_DIR) + "/" + name); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Lts lts_of(const Model& m) { return build_lts(expand_general_durations(m)); }

int slot(const std::vector<std::string>& vars, const std::string& v) {
    return static_cast<int>(std::find(vars.begin(), vars.end(), v) - vars.begin());
}

const std::vector<TermPair> kRelationB = {
    {"(C1 || C2) <*> Cm", "D"},        {"(C1pp || C2pp) <*> Cm", "D4"}, {"(C1p || C2) <*> Cmp", "D11"},
    {"(C1 || C2p) <*> Cmpp", "D12"},   {"(C1pp || C2) <*> Cm", "D21"},  {"(C1 || C2pp) <*> Cm", "D22"},
    {"(C1pp || C2p) <*> Cmpp", "D31"}, {"(C1p || C2pp) <*> Cmp", "D32"},
};

Outcome buffer_lts() {
    auto t0 = std::chrono::steady_clock::now();
    Lts l = build_lts(load("buffer.shype"));
    double s = seconds_since(t0);
    OperationalState displayed{{"in", {20, "const", {}}}, {"out", {0, "const", {}}}, {"f", {0, "const", {}}},
                               {"t", {1, "const", {}}}};
    bool found = std::find(l.states.begin(), l.states.end(), displayed) != l.states.end();
    return {l.configs.size() == 4 && l.distinct_states() == 4 && found && s < 1.0,
            fmt("%zu configurations, %zu states, displayed state %s, %.3f s", l.configs.size(), l.distinct_states(),
                found ? "present" : "missing", s)};
}

Outcome mapping_equivalence() {
    auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    for (const char* name : {"buffer.shype", "buffer_sugar.shype", "assembler.shype", "assembler_d.shype",
                             "assembler_t.shype", "assembler_semaphore.shype", "assembler_opt.shype"}) {
        Model m = load(name);
        Tdsha a = build_tdsha(m, MappingMethod::Sos), b = build_tdsha(m, MappingMethod::Compositional);
        bool iso = graph_isomorphic(a, b).has_value();
        ok = ok && iso;
        detail += fmt("%s %zu/%zu%s ", name, a.modes.size(), b.modes.size(), iso ? "" : " NOT isomorphic");
    }
    double s = seconds_since(t0);
    return {ok && s < 10.0, detail + fmt("(%.2f s)", s)};
}

Outcome ode_correctness() {
    Tdsha t = build_tdsha(load("buffer.shype"));
    for (std::size_t q = 0; q < t.modes.size(); ++q) {
        const auto& label = t.modes[q];
        if (label.find("in -> (20, const)") == std::string::npos || label.find("out -> (0, const)") == std::string::npos)
            continue;
        auto f = t.vector_field(static_cast<int>(q), std::map<std::string, double>{{"B", 100}, {"T", 3}, {"C", 0}, {"D", 1}});
        double dB = f[slot(t.variables, "B")], dT = f[slot(t.variables, "T")];
        return {std::abs(dB - 20) <= 1e-12 && std::abs(dT - 1) <= 1e-12, fmt("dB/dt = %.17g, dT/dt = %.17g", dB, dT)};
    }
    return {false, "no mode with input on and output off"};
}

bool beyond(const Formula& f, const std::vector<std::string>& vars, const std::vector<double>& x, double tol) {
    switch (f.kind()) {
    case FormulaKind::True:
        return true;
    case FormulaKind::False:
        return false;
    case FormulaKind::Not:
        return !beyond(f.children()[0], vars, x, tol);
    case FormulaKind::And:
        for (const auto& c : f.children())
            if (!beyond(c, vars, x, tol)) return false;
        return true;
    case FormulaKind::Or:
        for (const auto& c : f.children())
            if (beyond(c, vars, x, tol)) return true;
        return false;
    case FormulaKind::Cmp: {
        double g = eval_expression(f.lhs() - f.rhs(), [&](const std::string& n) -> std::optional<double> {
            int i = slot(vars, n);
            if (i == static_cast<int>(vars.size())) return std::nullopt;
            return x[i];
        });
        switch (f.op()) {
        case CmpOp::Ge:
        case CmpOp::Gt:
            return g > tol;
        case CmpOp::Le:
        case CmpOp::Lt:
            return g < -tol;
        case CmpOp::Eq:
            return g == 0;
        }
    }
    }
    return false;
}

Outcome simulation_invariants() {
    auto t = std::make_shared<Tdsha>(build_tdsha(load("buffer.shype")));
    CompiledTdsha c(t);
    SimulationConfig cfg;
    cfg.t_end = 50;
    cfg.replication_count = 200;
    cfg.master_seed = 2024;
    auto res = run_replications(c, cfg);
    if (!res.failures.empty()) return {false, res.failures[0].message};
    int B = slot(t->variables, "B");
    std::size_t bound = 0, urgent = 0, samples = 0, on_in = 0;
    double exposure = 0;
    auto offers = [&](int q) {
        for (const auto& e : t->stochastic)
            if (e.source == q && t->labels[e.label].event == "on_in") return true;
        return false;
    };
    for (const auto& tr : res.traces) {
        std::set<double> jump_times;
        for (const auto& j : tr.jumps) jump_times.insert(j.t);
        for (const auto& s : tr.samples) {
            ++samples;
            if (s.x[B] < 0 || s.x[B] > 200) ++bound;
            if (jump_times.count(s.t)) continue;
            for (const auto& e : t->instantaneous)
                if (e.source == s.mode && beyond(t->labels[e.label].guard, t->variables, s.x, 1e-6)) ++urgent;
        }
        double last = 0;
        int mode = t->init_mode;
        for (const auto& j : tr.jumps) {
            if (offers(mode)) exposure += j.t - last;
            last = j.t;
            mode = j.mode_after;
            on_in += j.event == "on_in";
        }
        if (offers(mode)) exposure += tr.t_stop - last;
    }
    double mean = exposure / static_cast<double>(on_in), se = mean / std::sqrt(static_cast<double>(on_in));
    bool ok = bound == 0 && urgent == 0 && std::abs(mean - 2.5) <= 3 * se;
    return {ok, fmt("%zu samples, %zu outside [0,200], %zu urgency violations, on_in mean wait %.4f (s.e. %.4f, %zu jumps)",
                    samples, bound, urgent, mean, se, on_in)};
}

Outcome timer_expansion() {
    auto t = std::make_shared<Tdsha>(build_tdsha(load("buffer_sugar.shype")));
    CompiledTdsha c(t);
    SimulationConfig cfg;
    cfg.t_end = 2600;
    cfg.dt = 1e-2;
    cfg.record_stride = 0;
    std::vector<double> gaps;
    for (std::uint64_t stream = 0; gaps.size() < 10000; ++stream) {
        RngStream rng(77, stream);
        auto tr = simulate_trajectory(c, cfg, rng);
        double prev = 0;
        for (const auto& j : tr.jumps)
            if (j.event == "fail") {
                gaps.push_back(j.t - prev);
                prev = j.t;
            }
    }
    gaps.resize(10000);
    double n = 10000, mean = 0, var = 0;
    for (double g : gaps) mean += g / n;
    for (double g : gaps) var += (g - mean) * (g - mean) / (n - 1);
    auto [mu, sigma] = lognormal_log_params(2.5, 0.5);
    auto raw = [&](int k) { return std::exp(k * mu + k * k * sigma * sigma / 2); };
    double m1 = raw(1), v = raw(2) - m1 * m1;
    double mu4 = raw(4) - 4 * raw(3) * m1 + 6 * raw(2) * m1 * m1 - 3 * std::pow(m1, 4);
    double se_mean = std::sqrt(v / n), se_var = std::sqrt((mu4 - v * v) / n);
    bool ok = std::abs(mean - m1) <= 3 * se_mean && std::abs(var - v) <= 3 * se_var;
    return {ok, fmt("mean %.4f vs %.4f (s.e. %.4f), variance %.4f vs %.4f (s.e. %.4f)", mean, m1, se_mean, var, v, se_var)};
}

Outcome controller_equivalence() {
    auto t0 = std::chrono::steady_clock::now();
    Lts p = lts_of(load("assembler_con.shype")), q = lts_of(load("assembler_conD.shype"));
    auto r = check_stochastic_system_bisim(p, q, StateEquivKind::Equality);
    int together = 0;
    for (const auto& [a, b] : kRelationB) {
        auto find = [](const Lts& l, const std::string& text) {
            std::string canon = l.terms->to_string(l.terms->intern(parse_term(text)));
            for (std::size_t c = 0; c < l.configs.size(); ++c)
                if (l.term_string(static_cast<int>(c)) == canon) return static_cast<int>(c);
            return -1;
        };
        int ca = find(p, a), cb = find(q, b);
        if (ca >= 0 && cb >= 0 && r.partition.block_of({0, ca}) == r.partition.block_of({1, cb})) ++together;
    }
    auto v = verify_relation(p, q, kRelationB, StateEquivKind::Equality);
    double s = seconds_since(t0);
    return {r.bisimilar && together == 8 && v.verified && s < 5.0,
            fmt("%s, %d/8 pairs share a class, relation %s, %.3f s", r.bisimilar ? "bisimilar" : "not bisimilar",
                together, v.verified ? "verified" : v.reason.c_str(), s)};
}

Outcome feed_aggregation() {
    Lts a = lts_of(load("feeds_578.shype")), b = lts_of(load("feeds_1055.shype"));
    Lts single = lts_of(load("feed_single.shype")), c = lts_of(load("feeds_1056.shype"));
    bool ab = check_stochastic_system_bisim(a, b, StateEquivKind::DotEq).bisimilar;
    bool as = check_stochastic_system_bisim(a, single, StateEquivKind::DotEq).bisimilar;
    bool ac = check_stochastic_system_bisim(a, c, StateEquivKind::DotEq).bisimilar;
    return {ab && as && !ac, fmt("5,7,8 ~ 10,5,5: %s; 5,7,8 ~ single: %s; 5,7,8 ~ 10,5,6: %s", ab ? "yes" : "no",
                                 as ? "yes" : "no", ac ? "yes" : "no")};
}

Outcome same_ode() {
    Lts a = lts_of(load("feeds_578.shype"));
    std::size_t blocks = 0, members = 0, mismatches = 0;
    for (const char* other : {"feeds_1055.shype", "feed_single.shype"}) {
        Lts b = lts_of(load(other));
        auto r = check_stochastic_system_bisim(a, b, StateEquivKind::DotEq);
        const Lts* l[2] = {&a, &b};
        auto keys = [&](Member m) {
            std::map<std::string, std::string> out;
            for (const auto& [v, e] : ode_system_for(l[m.side]->state_of(m.config), l[m.side]->model))
                out[v] = canonical_key(normalize(e));
            return out;
        };
        for (const auto& block : r.partition.blocks) {
            ++blocks;
            auto ref = keys(block[0]);
            for (const auto& m : block) {
                ++members;
                if (keys(m) != ref) ++mismatches;
            }
        }
    }
    return {mismatches == 0 && blocks > 0, fmt("%zu blocks, %zu configurations, %zu mismatches", blocks, members, mismatches)};
}

Outcome well_behavedness() {
    auto buffer = check_well_behaved(load("buffer.shype"));
    auto zeno = check_well_behaved(parse_model(R"(
variables X, Y;
events a, b;
controller
  C =def a.C + b.C;
system
  S =def C;
ec
  a = (Y = 1, X' = 1 and Y' = 0);
  b = (X = 1, Y' = 1 and X' = 0);
)").model.value());
    auto prop = check_well_behaved(parse_model(R"(
variables X;
events a1, stoch a2;
controller
  Con =def a1.a2.Con;
system
  S =def Con;
ec
  a1 = (X >= 0, X' = X + 1);
  a2 = (1, true);
)").model.value());
    bool two_cycle = zeno.verdict == Behaviour::Unknown && zeno.cycles.size() == 1 && zeno.cycles[0].size() == 2;
    bool ok = buffer.verdict == Behaviour::WellBehaved && two_cycle && prop.verdict == Behaviour::WellBehaved;
    return {ok, "Buffer: " + buffer.reason + "; mutual activation: " + (two_cycle ? "Unknown, 2-cycle" : zeno.reason) +
                    "; cyclic controller: " + prop.reason};
}

Outcome semaphore() {
    auto t = std::make_shared<Tdsha>(build_tdsha(load("assembler_semaphore.shype")));
    std::regex both(R"(C1p \|\| C2p\b)");
    std::set<int> forbidden;
    for (std::size_t q = 0; q < t->modes.size(); ++q)
        if (std::regex_search(t->modes[q], both)) forbidden.insert(static_cast<int>(q));
    CompiledTdsha c(t);
    SimulationConfig cfg;
    cfg.t_end = 100;
    cfg.dt = 1e-2;
    cfg.replication_count = 500;
    cfg.record_stride = 0;
    cfg.master_seed = 8;
    auto res = run_replications(c, cfg);
    std::size_t entered = 0, jumps = 0;
    for (const auto& tr : res.traces)
        for (const auto& j : tr.jumps) {
            ++jumps;
            entered += forbidden.count(j.mode_after);
        }
    bool ok = res.failures.empty() && entered == 0 && !forbidden.empty();
    return {ok, fmt("%zu of %zu modes contain C1p || C2p; %zu jumps in %zu replications, %zu enter them",
                    forbidden.size(), t->modes.size(), jumps, res.traces.size(), entered)};
}

Outcome optimisation_sweep() {
    auto t0 = std::chrono::steady_clock::now();
    Model m = load("assembler_opt.shype");
    SimulationConfig cfg;
    cfg.t_end = 400;
    cfg.dt = 1e-2;
    cfg.replication_count = 500;
    cfg.record_stride = 0;
    cfg.stop_condition = parse_formula("Prod >= order");
    std::string detail;
    bool ok = true;
    for (std::uint64_t seed : {11, 12, 13}) {
        cfg.master_seed = seed;
        auto rows = sweep_parameter(m, "m", {1, 2, 3, 4}, parse_expression("total_cost"), cfg);
        auto best = std::min_element(rows.begin(), rows.end(),
                                     [](const SweepRow& a, const SweepRow& b) { return a.mean_cost < b.mean_cost; });
        std::size_t failures = 0;
        for (const auto& r : rows) failures += r.failures;
        ok = ok && best->value == 2 && failures == 0;
        detail += fmt("seed %llu: [%.1f %.1f %.1f %.1f] argmin %g; ", static_cast<unsigned long long>(seed),
                      rows[0].mean_cost, rows[1].mean_cost, rows[2].mean_cost, rows[3].mean_cost, best->value);
    }
    double s = seconds_since(t0);
    return {ok && s < 300, detail + fmt("%.1f s", s)};
}

Outcome bisim_strictness() {
    Model a = load("assembler.shype"), b = load("assembler_t.shype");
    bool system = check_system_bisim(a, b).bisimilar;
    double mean[2], var[2];
    const int reps = 1000;
    for (int k = 0; k < 2; ++k) {
        auto t = std::make_shared<Tdsha>(build_tdsha(k ? b : a));
        CompiledTdsha c(t);
        SimulationConfig cfg;
        cfg.t_end = 100;
        cfg.dt = 1e-2;
        cfg.replication_count = reps;
        cfg.record_stride = 0;
        cfg.keep_traces = false;
        cfg.master_seed = 42 + k;
        auto res = run_replications(c, cfg);
        int B = slot(t->variables, "B");
        Moments mo;
        for (const auto& x : res.terminal) mo.add(x[B]);
        mean[k] = mo.mean;
        var[k] = mo.variance();
    }
    double va = var[0] / reps, vb = var[1] / reps;
    double tstat = (mean[0] - mean[1]) / std::sqrt(va + vb);
    double nu = (va + vb) * (va + vb) / (va * va / (reps - 1) + vb * vb / (reps - 1));
    boost::math::students_t dist(nu);
    double p = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(tstat)));
    return {!system && p > 0.01, fmt("system bisimilar: %s; B(100) means %.3f vs %.3f, Welch t = %.3f, p = %.3f",
                                     system ? "yes" : "no", mean[0], mean[1], tstat, p)};
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"buffer LTS size", buffer_lts},
        {"mapping equivalence", mapping_equivalence},
        {"ODE correctness", ode_correctness},
        {"simulation invariants", simulation_invariants},
        {"timer expansion", timer_expansion},
        {"controller equivalence", controller_equivalence},
        {"feed aggregation", feed_aggregation},
        {"same ODE per block", same_ode},
        {"well-behavedness", well_behavedness},
        {"semaphore variant", semaphore},
        {"optimisation sweep", optimisation_sweep},
        {"system bisimulation strictness", bisim_strictness},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
