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

#include <doctest.h>

#include <chrono>
#include <random>

#include "json.hpp"

#include "shype/equivalence.hpp"
#include "support.hpp"

using namespace shype;
using shype::test::load;
using shype::test::parse_ok;

namespace {

const char* kTypes = R"(
variables X, Y;
events stoch a;
types
  const = 1;
  unit = 1;
  linear(V) = V;
iv
  i = X;
  j = X;
  k = Y;
subcomponent
  P =def init:(i, 1, const).P;
controller
  C =def a.C;
system
  S =def P <*> init.C;
ec
  init = (true, X' = 0);
  a = (1, true);
)";

const char* kDoubled = R"(
variables X;
events stoch a;
types const = 1;
iv x = X;
subcomponent
  P =def a:(x, 1, const).P + a:(x, 1, const).P + init:(x, 0, const).P;
controller
  C =def a.C;
system
  S =def P <*> init.C;
ec
  init = (true, X' = 0);
  a = (2, true);
)";

const std::vector<TermPair> kRelationB = {
    {"(C1 || C2) <*> Cm", "D"},          {"(C1pp || C2pp) <*> Cm", "D4"},  {"(C1p || C2) <*> Cmp", "D11"},
    {"(C1 || C2p) <*> Cmpp", "D12"},     {"(C1pp || C2) <*> Cm", "D21"},   {"(C1 || C2pp) <*> Cm", "D22"},
    {"(C1pp || C2p) <*> Cmpp", "D31"},   {"(C1p || C2pp) <*> Cmp", "D32"},
};

int config_with_term(const Lts& lts, const std::string& text) {
    std::string canon = lts.terms->to_string(lts.terms->intern(parse_term(text)));
    for (std::size_t c = 0; c < lts.configs.size(); ++c)
        if (lts.term_string(static_cast<int>(c)) == canon) return static_cast<int>(c);
    return -1;
}

Lts lts_of(const Model& m) { return build_lts(expand_general_durations(m)); }

std::map<std::string, std::string> ode_keys(const Lts& l, int config) {
    std::map<std::string, std::string> out;
    for (const auto& [v, e] : ode_system_for(l.state_of(config), l.model)) out[v] = canonical_key(normalize(e));
    return out;
}

// controller-only model with the given definitions and system term
Model controllers(const std::string& defs, const std::string& system, const std::string& stoch,
                  const std::string& inst = "") {
    std::string events;
    if (!inst.empty()) events += inst + ", ";
    std::string ec;
    std::istringstream ss(stoch);
    std::string name;
    std::vector<std::string> names;
    while (ss >> name) names.push_back(name);
    for (std::size_t i = 0; i < names.size(); ++i) {
        events += "stoch " + names[i] + (i + 1 < names.size() ? ", " : "");
        ec += "  " + names[i] + " = (" + std::to_string(i + 1) + ", true);\n";
    }
    std::istringstream si(inst);
    while (si >> name) {
        if (name.back() == ',') name.pop_back();
        ec += "  " + name + " = (X >= 0, true);\n";
    }
    return parse_ok("variables X;\nevents " + events + ";\ncontroller\n" + defs + "system\n  S =def " + system +
                    ";\nec\n" + ec);
}

}  // namespace

TEST_SUITE("equivalence") {
    TEST_CASE("state signature") {
        auto m = instantiate(load("feeds_578.shype"));
        OperationalState s{{"p1", {5, "const", {}}}, {"p2", {7, "const", {}}}, {"p3", {8, "const", {}}}};
        auto sig = state_signature(s, m);
        REQUIRE(sig.size() == 1);
        CHECK(sig.begin()->first.first == "P");
        CHECK(sig.begin()->second == 20.0);
        CHECK(state_signature(s, m) == state_signature(s, m));

        auto t = parse_ok(kTypes);
        OperationalState c{{"i", {2, "const", {}}}}, l{{"i", {2, "linear", {"Y"}}}}, u{{"j", {2, "unit", {}}}};
        CHECK_FALSE(states_equivalent(c, t, l, t, StateEquivKind::DotEq));
        CHECK(states_equivalent(c, t, u, t, StateEquivKind::DotEq));
        CHECK_FALSE(states_equivalent(c, t, u, t, StateEquivKind::Equality));
        OperationalState split{{"i", {1, "const", {}}}, {"j", {1, "unit", {}}}};
        CHECK(states_equivalent(c, t, split, t, StateEquivKind::DotEq));
        OperationalState zero{{"k", {0, "const", {}}}};
        CHECK(states_equivalent(zero, t, {}, t, StateEquivKind::DotEq));
    }

    TEST_CASE("dot equivalence is an equivalence") {
        auto t = parse_ok(kTypes);
        std::mt19937 gen(5);
        const char* types[] = {"const", "unit", "linear"};
        const char* infl[] = {"i", "j", "k"};
        std::vector<OperationalState> states;
        for (int n = 0; n < 60; ++n) {
            OperationalState s;
            for (const char* name : infl) {
                if (gen() % 3 == 0) continue;
                std::string ty = types[gen() % 3];
                std::vector<std::string> args;
                if (ty == "linear") args = {"X"};
                s[name] = {static_cast<double>(gen() % 3), ty, args};
            }
            states.push_back(s);
        }
        auto eq = [&](const OperationalState& a, const OperationalState& b) {
            return states_equivalent(a, t, b, t, StateEquivKind::DotEq);
        };
        int related = 0;
        for (const auto& a : states) {
            CHECK(eq(a, a));
            for (const auto& b : states) {
                CHECK(eq(a, b) == eq(b, a));
                related += eq(a, b) && !(a == b);
                if (!eq(a, b)) continue;
                for (const auto& c : states)
                    if (eq(b, c)) CHECK(eq(a, c));
            }
        }
        CHECK(related > 0);
    }

    TEST_CASE("rate to class") {
        auto lts = lts_of(load("buffer.shype"));
        int from = lts.initial;
        int target = -1;
        for (int ti : lts.outgoing(from))
            if (lts.transitions[ti].event == "on_in") target = lts.transitions[ti].target;
        REQUIRE(target >= 0);
        CHECK(rate_to_class(lts, from, "on_in", {target}) == RateValue{"", 0.4});
        CHECK(rate_to_class(lts, from, "off_in", {target}) == RateValue{"", 0.0});
        CHECK(rate_to_class(lts, from, "on_in", {from}) == RateValue{"", 0.0});

        auto d = build_lts(parse_ok(kDoubled));
        std::set<int> all;
        for (int c = 0; c < static_cast<int>(d.configs.size()); ++c) all.insert(c);
        int mult = 0;
        for (const auto& tr : d.transitions)
            if (tr.source == d.initial && tr.event == "a") mult += tr.multiplicity;
        CHECK(mult == 2);
        CHECK(rate_to_class(d, d.initial, "a", all).value == 2.0 * mult);
    }

    TEST_CASE("system bisimulation") {
        auto buffer = load("buffer.shype");
        auto same = check_system_bisim(buffer, buffer);
        CHECK(same.bisimilar);
        CHECK_FALSE(same.witness);

        auto perturbed = instantiate(buffer, {{"r_in", 21}});
        auto diff = check_system_bisim(buffer, perturbed);
        CHECK_FALSE(diff.bisimilar);
        REQUIRE(diff.witness);
        CHECK(diff.witness->reason.find("states differ") != std::string::npos);
        CHECK(diff.witness->events == std::vector<std::string>{"on_in"});

        auto at = check_system_bisim(load("assembler.shype"), load("assembler_t.shype"));
        CHECK_FALSE(at.bisimilar);
        REQUIRE(at.witness);
        CHECK_FALSE(at.witness->reason.empty());
    }

    TEST_CASE("system bisimulation implies stochastic bisimulation") {
        std::vector<std::pair<std::string, std::string>> pairs = {
            {"buffer.shype", "buffer.shype"},           {"buffer.shype", "buffer_sugar.shype"},
            {"assembler_con.shype", "assembler_conD.shype"}, {"feeds_578.shype", "feeds_1055.shype"},
            {"assembler.shype", "assembler.shype"},     {"feed_single.shype", "feed_single.shype"},
        };
        int strict = 0;
        for (const auto& [a, b] : pairs) {
            CAPTURE(a);
            CAPTURE(b);
            auto p = lts_of(load(a)), q = lts_of(load(b));
            auto sys = check_system_bisim(p, q);
            auto sto = check_stochastic_system_bisim(p, q, StateEquivKind::Equality);
            if (sys.bisimilar) {
                ++strict;
                CHECK(sto.bisimilar);
                // every system block lies inside one stochastic block
                for (const auto& block : sys.partition.blocks) {
                    int b0 = sto.partition.block_of(block[0]);
                    for (const auto& m : block) CHECK(sto.partition.block_of(m) == b0);
                }
            }
        }
        CHECK(strict >= 3);
    }

    TEST_CASE("controller equivalence") {
        auto t0 = std::chrono::steady_clock::now();
        auto p = lts_of(load("assembler_con.shype"));
        auto q = lts_of(load("assembler_conD.shype"));
        auto r = check_stochastic_system_bisim(p, q, StateEquivKind::Equality);
        CHECK(r.bisimilar);
        for (const auto& [a, b] : kRelationB) {
            CAPTURE(a);
            CAPTURE(b);
            int ca = config_with_term(p, a), cb = config_with_term(q, b);
            REQUIRE(ca >= 0);
            REQUIRE(cb >= 0);
            CHECK(r.partition.block_of({0, ca}) == r.partition.block_of({1, cb}));
        }
        auto v = verify_relation(p, q, kRelationB, StateEquivKind::Equality);
        CHECK(v.verified);
        CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 5.0);

        auto broken = kRelationB;
        broken[1].second = "D21";
        auto bad = verify_relation(p, q, broken, StateEquivKind::Equality);
        CHECK_FALSE(bad.verified);
        CHECK(bad.pair == std::optional<std::size_t>(1));

        CHECK_THROWS_AS(verify_relation(p, q, {{"(C1 || C2) <*> Cm", "Nowhere"}}, StateEquivKind::Equality),
                        UnknownDerivative);
        CHECK(verify_relation(p, q, relation_of(r.partition, p, q), StateEquivKind::Equality).verified);
    }

    TEST_CASE("identity relation") {
        for (const char* name : {"buffer.shype", "assembler_con.shype", "feeds_578.shype"}) {
            auto p = lts_of(load(name)), q = lts_of(load(name));
            std::set<std::string> terms;
            for (std::size_t c = 0; c < p.configs.size(); ++c) terms.insert(p.term_string(static_cast<int>(c)));
            std::vector<TermPair> id;
            for (const auto& t : terms) id.emplace_back(t, t);
            CHECK(verify_relation(p, q, id, StateEquivKind::Equality).verified);
            auto r = check_stochastic_system_bisim(p, q, StateEquivKind::Equality);
            CHECK(r.bisimilar);
            CHECK(verify_relation(p, q, relation_of(r.partition, p, q), StateEquivKind::Equality).verified);
        }
    }

    TEST_CASE("feed aggregation") {
        auto s578 = lts_of(load("feeds_578.shype"));
        auto s1055 = lts_of(load("feeds_1055.shype"));
        auto s1056 = lts_of(load("feeds_1056.shype"));
        auto single = lts_of(load("feed_single.shype"));
        auto ab = check_stochastic_system_bisim(s578, s1055, StateEquivKind::DotEq);
        auto as = check_stochastic_system_bisim(s578, single, StateEquivKind::DotEq);
        auto bad = check_stochastic_system_bisim(s578, s1056, StateEquivKind::DotEq);
        CHECK(ab.bisimilar);
        CHECK(as.bisimilar);
        CHECK_FALSE(bad.bisimilar);
        REQUIRE(bad.witness);
        CHECK(bad.witness->reason.find("states differ") != std::string::npos);
        CHECK_FALSE(check_stochastic_system_bisim(s578, s1055, StateEquivKind::Equality).bisimilar);

        // equal ODEs within every block
        for (const auto& [r, q] : {std::pair{&ab, &s1055}, std::pair{&as, &single}}) {
            const Lts* l[2] = {&s578, q};
            int compared = 0;
            for (const auto& block : r->partition.blocks) {
                auto ref = ode_keys(*l[block[0].side], block[0].config);
                for (const auto& m : block) {
                    CHECK(ode_keys(*l[m.side], m.config) == ref);
                    ++compared;
                }
            }
            CHECK(compared == static_cast<int>(s578.configs.size() + q->configs.size()));
        }
    }

    TEST_CASE("refinement is order independent") {
        std::vector<std::tuple<std::string, std::string, StateEquivKind>> cases = {
            {"assembler_con.shype", "assembler_conD.shype", StateEquivKind::Equality},
            {"feeds_578.shype", "feeds_1056.shype", StateEquivKind::DotEq},
            {"buffer.shype", "buffer_sugar.shype", StateEquivKind::Equality},
        };
        for (const auto& [a, b, kind] : cases) {
            auto p = lts_of(load(a)), q = lts_of(load(b));
            auto base = check_stochastic_system_bisim(p, q, kind);
            auto sys = check_system_bisim(p, q);
            for (std::uint64_t seed = 1; seed <= 4; ++seed) {
                BisimOptions o;
                o.schedule_seed = seed;
                auto alt = check_stochastic_system_bisim(p, q, kind, o);
                CHECK(alt.partition.blocks == base.partition.blocks);
                CHECK(alt.bisimilar == base.bisimilar);
                CHECK(check_system_bisim(p, q, o).partition.blocks == sys.partition.blocks);
            }
        }
    }

    TEST_CASE("lumping of duplicated states") {
        auto one = controllers("  C =def a.C;\n", "C", "a");
        auto two = controllers("  C =def a.Cp;\n  Cp =def a.C;\n", "C", "a");
        auto split = controllers("  C =def a.C + a.C;\n", "C", "a");
        CHECK(check_stochastic_system_bisim(one, two, StateEquivKind::Equality).bisimilar);
        CHECK(check_system_bisim(one, two).bisimilar);
        auto r = check_stochastic_system_bisim(one, split, StateEquivKind::Equality);
        CHECK_FALSE(r.bisimilar);
        REQUIRE(r.witness);
        CHECK(r.witness->reason.find("rate of a") != std::string::npos);
    }

    TEST_CASE("congruence smoke") {
        // P2 unfolds P1 over two or three copies of each state
        std::mt19937 gen(17);
        int checked = 0;
        for (int trial = 0; trial < 25; ++trial) {
            int n = 2 + static_cast<int>(gen() % 3);
            std::vector<std::vector<std::pair<char, int>>> next(n);
            for (int s = 0; s < n; ++s) {
                next[s].push_back({"ab"[gen() % 2], (s + 1) % n});
                if (gen() % 2) next[s].push_back({"abc"[gen() % 3], static_cast<int>(gen() % n)});
            }
            int copies = 2 + static_cast<int>(gen() % 2);
            std::string p1, p2;
            for (int s = 0; s < n; ++s) {
                p1 += "  P" + std::to_string(s) + " =def ";
                for (std::size_t k = 0; k < next[s].size(); ++k)
                    p1 += (k ? " + " : "") + std::string(1, next[s][k].first) + ".P" + std::to_string(next[s][k].second);
                p1 += ";\n";
                for (int c = 0; c < copies; ++c) {
                    p2 += "  Q" + std::to_string(s) + "_" + std::to_string(c) + " =def ";
                    for (std::size_t k = 0; k < next[s].size(); ++k)
                        p2 += (k ? " + " : "") + std::string(1, next[s][k].first) + ".Q" +
                              std::to_string(next[s][k].second) + "_" + std::to_string((c + k + 1) % copies);
                    p2 += ";\n";
                }
            }
            std::string ctx_defs = "  R =def b.Rp + d.R;\n  Rp =def a.R;\n";
            std::vector<std::string> contexts = {"%", "d.%", "% + d.R", "% || R", "% <*> R"};
            for (const auto& ctx : contexts) {
                auto fill = [&](const std::string& x) {
                    std::string s = ctx;
                    s.replace(s.find('%'), 1, x);
                    return s;
                };
                auto m1 = controllers(p1 + ctx_defs, fill("P0"), "a b c d");
                auto m2 = controllers(p2 + ctx_defs, fill("Q0_0"), "a b c d");
                CAPTURE(p1);
                CAPTURE(ctx);
                CHECK(check_stochastic_system_bisim(m1, m2, StateEquivKind::Equality).bisimilar);
                ++checked;
            }
        }
        CHECK(checked == 125);
    }

    TEST_CASE("non comparable rates") {
        auto make = [](const std::string& rate) {
            return parse_ok(R"(
variables X;
events stoch a;
types const = 1;
iv x = X;
subcomponent
  P =def a:(x, 1, const).P + init:(x, 1, const).P;
controller
  C =def a.C;
system
  S =def P <*> init.C;
ec
  init = (true, X' = 1);
  a = ()" + rate + R"(, true);
)");
        };
        CHECK(check_stochastic_system_bisim(make("X"), make("X"), StateEquivKind::Equality).bisimilar);
        CHECK(check_stochastic_system_bisim(make("X + X"), make("2 * X"), StateEquivKind::Equality).bisimilar);
        CHECK_THROWS_AS(check_stochastic_system_bisim(make("X"), make("exp(ln(X))"), StateEquivKind::Equality),
                        NonComparableRate);
        CHECK_THROWS_AS(check_stochastic_system_bisim(make("X"), make("1"), StateEquivKind::Equality),
                        NonComparableRate);
        auto d = build_lts(load("buffer_sugar.shype"));
        CHECK_THROWS_AS(rate_to_class(d, d.initial, "fail", {0}), NonComparableRate);
    }

    TEST_CASE("well behaved buffer") {
        for (const char* name : {"buffer.shype", "buffer_sugar.shype"}) {
            auto v = check_well_behaved(load(name));
            CAPTURE(name);
            CHECK(v.verdict == Behaviour::WellBehaved);
            CHECK(v.unsafe == std::set<std::string>{"fail"});
            CHECK(v.cycles.empty());
            CHECK_FALSE(v.igraph.has_edge("full", "empty"));
            CHECK_FALSE(v.igraph.has_edge("empty", "full"));
            CHECK_FALSE(v.igraph.has_edge("fail", "fail"));
        }
    }

    TEST_CASE("well behaved controllers") {
        auto prop = parse_ok(R"(
variables X;
events a1, stoch a2;
controller
  Con =def a1.a2.Con;
system
  S =def Con;
ec
  a1 = (X >= 0, X' = X + 1);
  a2 = (1, true);
)");
        auto v = check_well_behaved(prop);
        CHECK(v.verdict == Behaviour::WellBehaved);
        CHECK(v.unsafe.empty());
        CHECK(v.igraph.has_edge("a1", "a1"));

        auto zeno = parse_ok(R"(
variables X, Y;
events a, b;
controller
  C =def a.C + b.C;
system
  S =def C;
ec
  a = (Y = 1, X' = 1 and Y' = 0);
  b = (X = 1, Y' = 1 and X' = 0);
)");
        auto z = check_well_behaved(zeno);
        CHECK(z.verdict == Behaviour::Unknown);
        REQUIRE(z.cycles.size() == 1);
        CHECK(z.cycles[0].size() == 2);
        CHECK(std::set<std::string>(z.cycles[0].begin(), z.cycles[0].end()) == std::set<std::string>{"a", "b"});

        // an instantaneous cycle whose events cannot enable one another
        auto guarded = parse_ok(R"(
variables X;
events a, b;
controller
  C =def a.Cp;
  Cp =def b.C;
system
  S =def C;
ec
  a = (X >= 5, X' = 0);
  b = (X >= 10, X' = 0);
)");
        auto g = check_well_behaved(guarded);
        CHECK(g.verdict == Behaviour::WellBehaved);
        CHECK(g.igraph.edges.empty());

        // a chain a -> b without a way back
        auto chain = parse_ok(R"(
variables X;
events a, b;
controller
  C =def a.Cp;
  Cp =def b.C;
system
  S =def C;
ec
  a = (X <= 5, X' = 20);
  b = (X >= 10, X' = 8);
)");
        auto c = check_well_behaved(chain);
        CHECK(c.verdict == Behaviour::WellBehaved);
        CHECK(c.igraph.has_edge("a", "b"));
        CHECK(c.reason.find("acyclic") != std::string::npos);

        CHECK(check_well_behaved(load("assembler.shype")).verdict == Behaviour::WellBehaved);
    }

    TEST_CASE("json") {
        auto p = lts_of(load("feeds_578.shype")), q = lts_of(load("feeds_1056.shype"));
        auto r = check_stochastic_system_bisim(p, q, StateEquivKind::DotEq);
        auto j = nlohmann::json::parse(bisim_to_json(r, p, q));
        CHECK(j["bisimilar"] == false);
        CHECK(j["blocks"].size() == r.partition.blocks.size());
        CHECK(j["witness"]["reason"].get<std::string>().size() > 0);
        auto w = nlohmann::json::parse(well_behaved_to_json(check_well_behaved(load("buffer.shype"))));
        CHECK(w["verdict"] == "WellBehaved");
        CHECK(w["igraph"]["nodes"].size() == 3);
    }
}
