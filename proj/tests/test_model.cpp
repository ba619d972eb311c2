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

#include <algorithm>
#include <random>

#include "doctest.h"
#include "shype/model.hpp"
#include "shype/parser.hpp"
#include "support.hpp"

using namespace shype;
using shype::test::load;
using shype::test::parse_ok;

namespace {

const char* kTiny = R"(
variables X;
events a, stoch s;
types const = 1;
iv x = X;
subcomponent
  P =def a:(x, 1, const).P + s:(x, 2, const).P + init:(x, 0, const).P;
controller
  C =def a.s.C;
system
  S =def P <*> init.C;
ec
  init = (true, X' = 0);
  a = (X >= 1, X' = 0);
  s = (3, true);
)";

bool has_violation(const ValidationReport& r, const std::string& needle) {
    return std::any_of(r.violations.begin(), r.violations.end(),
                       [&](const Violation& v) { return v.message.find(needle) != std::string::npos; });
}

}  // namespace

TEST_SUITE("parser") {

TEST_CASE("buffer model structure") {
    Model m = load("buffer.shype");
    CHECK(m.subcomponents.size() == 4);
    auto shape = system_shape(m);
    REQUIRE(shape);
    REQUIRE(shape->has_init);
    int controllers = 0;
    std::function<void(const Term&)> count = [&](const Term& t) {
        if (t.kind() == TermKind::Coop) {
            count(t.left());
            count(t.right());
        } else {
            ++controllers;
        }
    };
    count(shape->controller);
    CHECK(controllers == 3);
    CHECK(m.instantaneous_events.size() + m.stochastic_events.size() + 1 == 8);
    CHECK(m.ec.at("fail").kind == ActivationKind::Guard);
    CHECK(m.ec.at("on_in").kind == ActivationKind::Rate);
}

TEST_CASE("empty input") {
    auto r = parse_model("", "empty.shype");
    CHECK_FALSE(r.model);
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].message == "expected at least one section");
    auto c = parse_model("  # only a comment\n", "c.shype");
    REQUIRE(c.diagnostics.size() == 1);
    CHECK(c.diagnostics[0].message == "expected at least one section");
}

TEST_CASE("missing reset") {
    auto r = parse_model("variables B;\nparams maxB = 1;\nevents full;\nec full = (B = maxB);\n", "m.shype");
    CHECK_FALSE(r.model);
    REQUIRE(!r.diagnostics.empty());
    CHECK(r.diagnostics[0].hint == "expected ',' then reset");
    CHECK(r.diagnostics[0].span.line == 4);
    CHECK(r.diagnostics[0].span.column == 20);
    CHECK(format_diagnostic(r.diagnostics[0]).rfind("m.shype:4:20: error:", 0) == 0);
}

TEST_CASE("duplicate section and unknown identifier") {
    auto d = parse_model("variables X;\nvariables Y;\n", "d");
    REQUIRE(d.diagnostics.size() == 1);
    CHECK(d.diagnostics[0].message == "duplicate section 'variables'");
    CHECK(d.diagnostics[0].span.line == 2);

    auto u = parse_model("variables X;\nevents e;\nec e = (Y >= 1, true);\n", "u");
    REQUIRE(u.diagnostics.size() == 1);
    CHECK(u.diagnostics[0].message == "unknown identifier 'Y'");
    CHECK(u.diagnostics[0].span.column == 9);

    auto p = parse_model("params a = b; b = 1;\n", "p");
    REQUIRE(p.diagnostics.size() == 1);
    CHECK(p.diagnostics[0].message == "unknown identifier 'b'");
}

TEST_CASE("reserved init event") {
    auto r = parse_model("events init;\n", "r");
    REQUIRE(!r.diagnostics.empty());
    CHECK(r.diagnostics[0].message == "'init' is reserved");
}

TEST_CASE("activation kinds") {
    Model m = parse_ok(R"(
params Delta = 2.5; xi = 0.5; p = 3;
variables B;
events g, stoch r, stoch d, stoch f, stoch q;
ec
  g = ((B >= 1) and not B = 3 or false, true);
  r = ((p) * 2, true);
  d = (LogNormal(Delta, xi), B ~ B - Uniform(0, B));
  f = (delta(p), true);
  q = (min(B, 1), B' = 0);
)");
    CHECK(m.ec.at("g").kind == ActivationKind::Guard);
    CHECK(m.ec.at("r").kind == ActivationKind::Rate);
    CHECK(m.ec.at("d").kind == ActivationKind::Duration);
    CHECK(m.ec.at("f").kind == ActivationKind::Duration);
    CHECK(m.ec.at("f").rate.distribution() == DistKind::Dirac);
    CHECK(m.ec.at("q").kind == ActivationKind::Rate);
}

TEST_CASE("term syntax") {
    Term t = parse_term("a.b.P + c.Q <*> (R || S) <x, y> 0");
    CHECK(t.kind() == TermKind::Coop);
    CHECK(t.sync().events == std::set<std::string>{"x", "y"});
    CHECK(t.left().kind() == TermKind::Coop);
    CHECK(t.left().sync().shared);
    CHECK(t.left().left().kind() == TermKind::Choice);
    CHECK(parse_term(to_string(t)) == t);
    Term p = parse_term("e:(i, -2.5, linear(X, Y)).P");
    REQUIRE(p.activity());
    CHECK(p.activity()->itype_args == std::vector<std::string>{"X", "Y"});
    CHECK(to_string(p) == "e:(i, -2.5, linear(X, Y)).P");
    CHECK_THROWS_AS(parse_term("a.(P"), ParseError);
}

TEST_CASE("format round trip on the model files") {
    for (const char* f : {"buffer.shype", "buffer_sugar.shype", "assembler.shype", "assembler_t.shype",
                          "assembler_semaphore.shype", "assembler_con.shype", "assembler_conD.shype",
                          "assembler_opt.shype", "feeds_578.shype", "feed_single.shype"}) {
        CAPTURE(f);
        Model m = load(f);
        std::string text = format_model(m);
        auto r = parse_model(text, f);
        REQUIRE_MESSAGE(r.model, (r.diagnostics.empty() ? "" : format_diagnostic(r.diagnostics[0])));
        CHECK(*r.model == m);
        CHECK(format_model(*r.model) == text);
    }
}

TEST_CASE("arbitrary bytes never crash the parser") {
    std::mt19937_64 gen(2026);
    std::string alphabet = "abcXY_01.:+-*/^()<>=,;'~|#\n \t";
    std::vector<std::string> words{"params",   "variables", "events", "types", "subcomponent", "controller",
                                   "system",   "iv",        "ec",     "and",   "or",           "not",
                                   "=def",     "<*>",       "stoch",  "init",  "true",         "Uniform("};
    std::string buffer_text = format_model(load("buffer.shype"));
    for (int i = 0; i < 3000; ++i) {
        std::string s;
        int len = static_cast<int>(gen() % 200);
        for (int k = 0; k < len; ++k) {
            auto r = gen() % 10;
            if (r < 3) {
                s += words[gen() % words.size()];
                s += ' ';
            } else if (r < 9) {
                s += alphabet[gen() % alphabet.size()];
            } else {
                s += static_cast<char>(gen() % 256);
            }
        }
        if (i % 3 == 0) {
            // mutate a valid model
            s = buffer_text;
            for (int k = 0; k < 4; ++k) s[gen() % s.size()] = alphabet[gen() % alphabet.size()];
        }
        auto r = parse_model(s, "fuzz");
        CHECK((r.model.has_value() == r.diagnostics.empty()));
        for (const auto& d : r.diagnostics) {
            CHECK(d.span.line >= 1);
            CHECK(d.span.column >= 1);
            CHECK(d.span.length >= 1);
        }
    }
    std::string deep(5000, '(');
    CHECK_FALSE(parse_model("params a = " + deep + ";", "deep").model);
}

}  // TEST_SUITE

TEST_SUITE("model") {

TEST_CASE("buffer is well defined") {
    auto r = validate_well_defined(load("buffer.shype"));
    for (const auto& v : r.violations) MESSAGE(v.clause << ": " << v.message);
    CHECK(r.ok());
}

TEST_CASE("controller event absent from the uncontrolled system") {
    std::string text = kTiny;
    text.replace(text.find("events a, stoch s;"), 18, "events a, go, stoch s;");
    text.replace(text.find("C =def a.s.C;"), 13, "C =def a.s.C + go.C;");
    auto r = validate_well_defined(parse_ok(text));
    CHECK(has_violation(r, "controller event not in uncontrolled system"));
}

TEST_CASE("duplicate instantaneous prefix") {
    std::string text = kTiny;
    text.replace(text.find("P =def a:(x, 1, const).P"), 24, "P =def a:(x, 1, const).P + a:(x, 3, const).P");
    auto r = validate_well_defined(parse_ok(text));
    CHECK(has_violation(r, "duplicate event in subcomponent"));
}

TEST_CASE("duplicated stochastic prefix is legal") {
    std::string text = kTiny;
    text.replace(text.find("P =def a:(x, 1, const).P"), 24, "P =def a:(x, 1, const).P + s:(x, 2, const).P");
    CHECK(validate_well_defined(parse_ok(text)).ok());
}

TEST_CASE("other clauses") {
    Model base = parse_ok(kTiny);
    REQUIRE(validate_well_defined(base).ok());

    Model m = base;
    m.ec["init"].guard = parse_formula("X >= 0");
    CHECK_FALSE(validate_well_defined(m).ok());

    m = base;
    m.system->body = parse_term("P <*> P <*> init.C");
    CHECK_FALSE(validate_well_defined(m).ok());

    m = base;
    m.system->body = parse_term("P <s> init.C");
    CHECK_FALSE(validate_well_defined(m).ok());

    m = base;
    m.subcomponents[0].body = parse_term("a:(x, 1, const).P + s:(x, 2, const).(P + P) + init:(x, 0, const).P");
    CHECK_FALSE(validate_well_defined(m).ok());

    m = base;
    m.system.reset();
    CHECK_FALSE(validate_well_defined(m).ok());
}

TEST_CASE("validation is idempotent and order insensitive") {
    Model m = load("buffer.shype");
    m.subcomponents[1].body = parse_term("on_out:(out, 1, const).Output + on_out:(out, 2, const).Output + "
                                         "empty:(out, 0, const).Output + empty:(out, 0, const).Output");
    auto first = validate_well_defined(m);
    auto second = validate_well_defined(m);
    REQUIRE(first.violations.size() == second.violations.size());
    std::mt19937 gen(5);
    for (int i = 0; i < 10; ++i) {
        Model shuffled = m;
        std::shuffle(shuffled.subcomponents.begin(), shuffled.subcomponents.end(), gen);
        auto r = validate_well_defined(shuffled);
        REQUIRE(r.violations.size() == first.violations.size());
        for (std::size_t k = 0; k < r.violations.size(); ++k) {
            CHECK(r.violations[k].clause == first.violations[k].clause);
            CHECK(r.violations[k].message == first.violations[k].message);
        }
    }
    CHECK(has_violation(first, "init"));
}

TEST_CASE("parameters and instantiation") {
    Model m = load("buffer.shype");
    auto values = parameter_values(m, {{"r_in", 30}});
    CHECK(values.at("r_in") == 30);
    CHECK(values.at("max_B") == 200);
    CHECK_THROWS_AS(parameter_values(m, {{"nope", 1}}), UnknownParameter);
    Model inst = instantiate(m);
    CHECK(inst.params.empty());
    CHECK(inst.ec.at("on_in").rate.is_number(0.4));
    CHECK(to_string(inst.ec.at("fail").reset) == "C' = T and D ~ LogNormal(2.5, 0.5) and B ~ B - Uniform(0, B)");

    Model chained = parse_ok("params a = 2; b = a * 3;\nvariables X;\n");
    CHECK(parameter_values(chained).at("b") == 6);
    CHECK(parameter_values(chained, {{"a", 5}}).at("b") == 15);
}

TEST_CASE("itype functions") {
    Model m = parse_ok("variables X, Y;\ntypes const = 1; linear(Z) = Z; prod(A, B) = A * B;\n");
    CHECK(itype_function(m, "linear", {"X"}) == Expr::ref("X"));
    CHECK(to_string(itype_function(m, "prod", {"X", "Y"})) == "X * Y");
    CHECK_THROWS_AS(itype_function(m, "missing", {}), MissingInfluenceTypeDef);
    CHECK_THROWS_AS(itype_function(m, "linear", {}), MissingInfluenceTypeDef);
}

TEST_CASE("events of a term follow definitions") {
    Model m = load("buffer.shype");
    auto ev = events_of(Term::ref("Con_in"), m);
    CHECK(ev == std::set<std::string>{"on_in", "off_in", "full"});
}

TEST_CASE("duration expansion of the buffer") {
    Model sugar = load("buffer_sugar.shype");
    REQUIRE(validate_well_defined(sugar).ok());
    CHECK(sugar.ec.at("fail").kind == ActivationKind::Duration);
    Model x = expand_general_durations(sugar);
    const auto& fail = x.ec.at("fail");
    CHECK(fail.kind == ActivationKind::Guard);
    CHECK(to_string(fail.guard) == "T = _clk_fail + _dur_fail");
    CHECK(to_string(fail.reset) ==
          "_clk_fail' = T and _dur_fail ~ LogNormal(Delta, xi) and B ~ B - Uniform(0, B)");
    CHECK(x.is_instantaneous("fail"));
    CHECK_FALSE(x.is_stochastic("fail"));
    // the model already has a timer on T, so no new one
    CHECK(x.subcomponents.size() == sugar.subcomponents.size());
    for (const auto& [e, c] : x.ec) CHECK(c.kind != ActivationKind::Duration);
    auto r = validate_well_defined(x);
    for (const auto& v : r.violations) MESSAGE(v.clause << ": " << v.message);
    CHECK(r.ok());
    CHECK(to_string(x.ec.at("init").reset).find("_dur_fail ~ LogNormal(Delta, xi)") != std::string::npos);
}

TEST_CASE("duration expansion adds a timer when none exists") {
    Model m = parse_ok(R"(
params p = 2;
variables X;
events stoch e;
types lin(V) = V;
iv x = X;
subcomponent P =def e:(x, 1, lin(X)).P + init:(x, 0, lin(X)).P;
controller C =def e.C;
system S =def P <*> init.C;
ec init = (true, X' = 1); e = (delta(p), X' = 0);
)");
    Model x = expand_general_durations(m);
    CHECK(x.ec.at("e").reset[1].value.distribution() == DistKind::Dirac);
    CHECK(std::count(x.variables.begin(), x.variables.end(), "_time") == 1);
    CHECK(x.definition("_Timer") != nullptr);
    CHECK(to_string(x.ec.at("e").guard) == "_time = _clk_e + _dur_e");
    auto r = validate_well_defined(x);
    for (const auto& v : r.violations) MESSAGE(v.clause << ": " << v.message);
    CHECK(r.ok());
    CHECK(expand_general_durations(x) == x);

    Model clash = m;
    clash.variables.push_back("_clk_e");
    CHECK_THROWS_AS(expand_general_durations(clash), NameClash);
}

TEST_CASE("expansion without sugar is the identity") {
    for (const char* f : {"buffer.shype", "assembler.shype"}) {
        Model m = load(f);
        CHECK(expand_general_durations(m) == m);
    }
}

}  // TEST_SUITE
