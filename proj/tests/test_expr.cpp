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

#include <cmath>
#include <random>

#include "doctest.h"
#include "shype/expr.hpp"
#include "shype/parser.hpp"
#include "shype/rng.hpp"

using namespace shype;

TEST_SUITE("expr") {

TEST_CASE("influence type bodies evaluate as defined") {
    CHECK(eval_expression(Expr::number(1), {{"X", 42.0}}) == 1.0);
    CHECK(eval_expression(Expr::ref("X"), {{"X", 3.5}}) == 3.5);
}

TEST_CASE("energy rate of a batch") {
    Expr m = Expr::ref("m");
    Expr rate = Expr::number(1) / Expr::number(3) * pow(m, Expr::number(2)) + Expr::number(2) / Expr::number(3);
    CHECK(eval_expression(rate, {{"m", 2.0}}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(eval_expression(parse_expression("1/3*m^2 + 2/3"), {{"m", 2.0}}) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("evaluation errors") {
    CHECK_THROWS_AS(eval_expression(parse_expression("1/x"), {{"x", 0.0}}), DivisionByZero);
    CHECK_THROWS_AS(eval_expression(parse_expression("sqrt(x)"), {{"x", -1.0}}), DomainError);
    CHECK_THROWS_AS(eval_expression(parse_expression("ln(x)"), {{"x", 0.0}}), DomainError);
    CHECK_THROWS_AS(eval_expression(parse_expression("y + 1"), {{"x", 0.0}}), UnboundVariable);
    CHECK_THROWS_AS(eval_expression(parse_expression("Uniform(0, 1)"), std::map<std::string, double>{}), EvalError);
}

TEST_CASE("operators and functions") {
    std::map<std::string, double> v{{"a", 2.0}, {"b", 5.0}};
    CHECK(eval_expression(parse_expression("min(a, b) + max(a, b)"), v) == 7.0);
    CHECK(eval_expression(parse_expression("-a^2"), v) == -4.0);
    CHECK(eval_expression(parse_expression("2^3^2"), v) == 512.0);
    CHECK(eval_expression(parse_expression("b - a - 1"), v) == 2.0);
    CHECK(eval_expression(parse_expression("exp(ln(b))"), v) == doctest::Approx(5.0));
}

TEST_CASE("printing reparses to the same tree") {
    for (const char* s : {"a + b * c", "(a + b) * c", "a - (b - c)", "a - -3", "(-2)^2", "-a^2", "a / (b / c)",
                          "2^3^2", "(2^3)^2", "min(a, max(b, 1e999))", "LogNormal(Delta, xi) * 2",
                          "B - min(B, Gamma(S_c, S_h))", "a * -b", "1 / 3 * m^2 + 2 / 3"}) {
        Expr e = parse_expression(s);
        CAPTURE(s);
        CHECK(parse_expression(to_string(e)) == e);
    }
}

TEST_CASE("normalization identifies rearranged sums") {
    CHECK(canonical_key(parse_expression("a + b + 1")) == canonical_key(parse_expression("1 + (b + a)")));
    CHECK(canonical_key(parse_expression("2 * a + a")) == canonical_key(parse_expression("3 * a")));
    CHECK(canonical_key(parse_expression("(a + b) * 2")) == canonical_key(parse_expression("2 * a + 2 * b")));
    CHECK(canonical_key(parse_expression("a + 1")) != canonical_key(parse_expression("a + 2")));
    CHECK(canonical_key(parse_expression("Uniform(0, 1) + Uniform(0, 1)")) !=
          canonical_key(parse_expression("2 * Uniform(0, 1)")));
}

TEST_CASE("guards normalize to a difference against zero") {
    Formula a = parse_formula("B = max_B");
    Formula b = parse_formula("max_B = B");
    CHECK(canonical_key(a) == canonical_key(b));
    CHECK(canonical_key(parse_formula("x < 1")) == canonical_key(parse_formula("1 > x")));
    CHECK(canonical_key(parse_formula("p >= 0 and q >= 1")) == canonical_key(parse_formula("q >= 1 and p >= 0")));
    CHECK(normalize(parse_formula("true and x >= 1")) == normalize(parse_formula("x >= 1")));
}

TEST_CASE("reset normalization") {
    Reset r{{"B", parse_expression("1")}, {"A", parse_expression("2")}};
    auto n = normalize(r);
    REQUIRE(n.size() == 2);
    CHECK(n[0].variable == "A");
    Reset clash{{"X", parse_expression("1")}, {"X", parse_expression("2")}};
    CHECK_THROWS_AS(normalize(clash), ResetIncompatible);
    Reset same{{"X", parse_expression("1")}, {"X", parse_expression("1")}};
    CHECK(normalize(same).size() == 1);
}

TEST_CASE("interval enclosures") {
    Box box{{"B", {0, 200}}};
    auto iv = eval_interval(parse_expression("B - Uniform(0, B)"), box);
    CHECK(iv.lo <= 0.0);
    CHECK(iv.hi >= 200.0);
    auto ln = eval_interval(parse_expression("LogNormal(2.5, 0.5)"), {});
    CHECK(ln.lo > 0.0);
    CHECK(eval_interval(parse_formula("-LogNormal(2.5, 0.5) = 0"), {}) == Truth::Never);
    CHECK(eval_interval(parse_formula("B = 200"), box) == Truth::Maybe);
    CHECK(eval_interval(parse_formula("B <= 300"), box) == Truth::Always);
}

TEST_CASE("interval enclosure contains sampled values") {
    RngStream rng(11, 0);
    Expr e = parse_expression("x * Uniform(-1, 2) + Normal(0, 4) - min(x, Exponential(1))");
    Box box{{"x", {-3, 5}}};
    auto enclosure = eval_interval(e, box);
    for (int i = 0; i < 2000; ++i) {
        double x = -3 + 8 * rng.uniform01();
        std::map<std::string, double> vals{{"x", x}};
        double v = eval_expression(e, valuation_of(vals), &rng);
        CHECK(enclosure.contains(v));
    }
}

}  // TEST_SUITE

TEST_SUITE("rng") {

TEST_CASE("philox known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
    RngStream a(7, 3), b(7, 3), c(7, 4);
    bool differ = false;
    for (int i = 0; i < 100; ++i) {
        double x = a.uniform01();
        CHECK(x == b.uniform01());
        differ = differ || x != c.uniform01();
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
    CHECK(differ);
}

TEST_CASE("point and degenerate distributions") {
    RngStream rng(1, 0);
    double p25[] = {2.5};
    CHECK(sample_distribution(DistKind::Dirac, p25, rng) == 2.5);
    double u00[] = {0.0, 0.0};
    CHECK(sample_distribution(DistKind::Uniform, u00, rng) == 0.0);
    std::map<std::string, double> v{{"B", 0.0}};
    CHECK(sample_distribution(parse_expression("Uniform(0, B)"), valuation_of(v), rng) == 0.0);
}

TEST_CASE("illegal parameters") {
    RngStream rng(1, 0);
    double u[] = {1.0, 0.0};
    CHECK_THROWS_AS(sample_distribution(DistKind::Uniform, u, rng), BadParameter);
    double n[] = {0.0, -1.0};
    CHECK_THROWS_AS(sample_distribution(DistKind::Normal, n, rng), BadParameter);
    double e[] = {0.0};
    CHECK_THROWS_AS(sample_distribution(DistKind::Exponential, e, rng), BadParameter);
    double g[] = {-1.0, 1.0};
    CHECK_THROWS_AS(sample_distribution(DistKind::Gamma, g, rng), BadParameter);
}

struct Moments {
    double mean = 0, var = 0;
};

Moments moments(DistKind kind, std::vector<double> params, int n, std::uint64_t seed) {
    RngStream rng(seed, 0);
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        double x = sample_distribution(kind, params, rng);
        s += x;
        s2 += x * x;
    }
    Moments m;
    m.mean = s / n;
    m.var = (s2 - n * m.mean * m.mean) / (n - 1);
    return m;
}

TEST_CASE("sample means within three standard errors") {
    const int n = 100000;
    struct Case {
        DistKind kind;
        std::vector<double> params;
        double mean, var;
    };
    // closed-form moments
    double mu_ln = std::log(2.5) - 0.5 * std::log1p(0.5 / 6.25);
    double s2_ln = std::log1p(0.5 / 6.25);
    double ln_mean = std::exp(mu_ln + s2_ln / 2);
    double ln_var = (std::exp(s2_ln) - 1) * std::exp(2 * mu_ln + s2_ln);
    std::vector<Case> cases{
        {DistKind::LogNormal, {2.5, 0.5}, ln_mean, ln_var},
        {DistKind::Uniform, {-1, 3}, 1.0, 16.0 / 12.0},
        {DistKind::Normal, {2, 9}, 2.0, 9.0},
        {DistKind::Exponential, {0.4}, 2.5, 6.25},
        {DistKind::Gamma, {4, 0.5}, 2.0, 1.0},
        {DistKind::Gamma, {0.5, 2}, 1.0, 2.0},
    };
    CHECK(ln_mean == doctest::Approx(2.5));
    CHECK(ln_var == doctest::Approx(0.5));
    std::uint64_t seed = 100;
    for (const auto& c : cases) {
        auto m = moments(c.kind, c.params, n, seed++);
        CAPTURE(dist_name(c.kind));
        CHECK(std::abs(m.mean - c.mean) < 3 * std::sqrt(c.var / n));
        CHECK(m.var == doctest::Approx(c.var).epsilon(0.03));
    }
}

}  // TEST_SUITE
