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

#include "shype/expr.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <limits>

#include "shype/rng.hpp"

namespace shype {

// --- distributions ----------------------------------------------------------

namespace {
struct DistInfo {
    DistKind kind;
    std::string_view name;
    std::size_t arity;
};
constexpr DistInfo kDists[] = {
    {DistKind::Uniform, "Uniform", 2},     {DistKind::Normal, "Normal", 2},
    {DistKind::LogNormal, "LogNormal", 2}, {DistKind::Exponential, "Exponential", 1},
    {DistKind::Gamma, "Gamma", 2},         {DistKind::Dirac, "Dirac", 1},
};
}  // namespace

std::string_view dist_name(DistKind kind) {
    for (const auto& d : kDists)
        if (d.kind == kind) return d.name;
    return "?";
}

std::optional<DistKind> dist_from_name(std::string_view name) {
    for (const auto& d : kDists)
        if (d.name == name) return d.kind;
    return std::nullopt;
}

std::size_t dist_arity(DistKind kind) {
    for (const auto& d : kDists)
        if (d.kind == kind) return d.arity;
    return 0;
}

// --- Expr -------------------------------------------------------------------

struct Expr::Node {
    ExprKind kind = ExprKind::Num;
    double value = 0.0;
    std::string name;
    DistKind dist = DistKind::Dirac;
    std::vector<Expr> args;
};

Expr::Expr() {
    static const auto zero = std::make_shared<const Node>();
    node_ = zero;
}

Expr Expr::number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = ExprKind::Num;
    n->value = v;
    return Expr(std::move(n));
}

Expr Expr::ref(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = ExprKind::Ref;
    n->name = std::move(name);
    return Expr(std::move(n));
}

Expr Expr::op(ExprKind kind, std::vector<Expr> args) {
    assert(kind != ExprKind::Num && kind != ExprKind::Ref && kind != ExprKind::Random);
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->args = std::move(args);
    return Expr(std::move(n));
}

Expr Expr::random(DistKind dist, std::vector<Expr> params) {
    auto n = std::make_shared<Node>();
    n->kind = ExprKind::Random;
    n->dist = dist;
    n->args = std::move(params);
    return Expr(std::move(n));
}

ExprKind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
DistKind Expr::distribution() const { return node_->dist; }
std::span<const Expr> Expr::args() const { return node_->args; }

Expr operator+(const Expr& a, const Expr& b) { return Expr::op(ExprKind::Add, {a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::op(ExprKind::Sub, {a, b}); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::op(ExprKind::Mul, {a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::op(ExprKind::Div, {a, b}); }
Expr operator-(const Expr& a) {
    // literal negation folds so that printed "-3" reparses to the same tree
    if (a.is_number()) return Expr::number(-a.value());
    return Expr::op(ExprKind::Neg, {a});
}

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
    case ExprKind::Num:
        return a.value() == b.value() || (std::isnan(a.value()) && std::isnan(b.value()));
    case ExprKind::Ref:
        return a.name() == b.name();
    case ExprKind::Random:
        if (a.distribution() != b.distribution()) return false;
        break;
    default:
        break;
    }
    auto aa = a.args();
    auto ba = b.args();
    return std::equal(aa.begin(), aa.end(), ba.begin(), ba.end());
}

Expr pow(const Expr& base, const Expr& exponent) { return Expr::op(ExprKind::Pow, {base, exponent}); }
Expr min(const Expr& a, const Expr& b) { return Expr::op(ExprKind::Min, {a, b}); }
Expr max(const Expr& a, const Expr& b) { return Expr::op(ExprKind::Max, {a, b}); }
Expr sqrt(const Expr& a) { return Expr::op(ExprKind::Sqrt, {a}); }
Expr ln(const Expr& a) { return Expr::op(ExprKind::Ln, {a}); }
Expr exp(const Expr& a) { return Expr::op(ExprKind::Exp, {a}); }

Valuation valuation_of(const std::map<std::string, double>& values) {
    return [&values](const std::string& name) -> std::optional<double> {
        auto it = values.find(name);
        if (it == values.end()) return std::nullopt;
        return it->second;
    };
}

// --- evaluation -------------------------------------------------------------

double eval_expression(const Expr& e, const Valuation& valuation, RngStream* rng) {
    auto sub = [&](std::size_t i) { return eval_expression(e.arg(i), valuation, rng); };
    switch (e.kind()) {
    case ExprKind::Num:
        return e.value();
    case ExprKind::Ref: {
        auto v = valuation(e.name());
        if (!v) throw UnboundVariable(e.name());
        return *v;
    }
    case ExprKind::Add: {
        double s = 0.0;
        for (std::size_t i = 0; i < e.args().size(); ++i) s += sub(i);
        return s;
    }
    case ExprKind::Mul: {
        double p = 1.0;
        for (std::size_t i = 0; i < e.args().size(); ++i) p *= sub(i);
        return p;
    }
    case ExprKind::Sub:
        return sub(0) - sub(1);
    case ExprKind::Div: {
        double num = sub(0);
        double den = sub(1);
        if (den == 0.0) throw DivisionByZero();
        return num / den;
    }
    case ExprKind::Neg:
        return -sub(0);
    case ExprKind::Pow: {
        double b = sub(0);
        double x = sub(1);
        if (b == 0.0 && x < 0.0) throw DivisionByZero();
        double r = std::pow(b, x);
        if (std::isnan(r)) throw DomainError("power of negative base with fractional exponent");
        return r;
    }
    case ExprKind::Min: {
        double m = sub(0);
        for (std::size_t i = 1; i < e.args().size(); ++i) m = std::min(m, sub(i));
        return m;
    }
    case ExprKind::Max: {
        double m = sub(0);
        for (std::size_t i = 1; i < e.args().size(); ++i) m = std::max(m, sub(i));
        return m;
    }
    case ExprKind::Sqrt: {
        double a = sub(0);
        if (a < 0.0) throw DomainError("sqrt of negative value");
        return std::sqrt(a);
    }
    case ExprKind::Ln: {
        double a = sub(0);
        if (a <= 0.0) throw DomainError("ln of non-positive value");
        return std::log(a);
    }
    case ExprKind::Exp:
        return std::exp(sub(0));
    case ExprKind::Random: {
        if (!rng) throw EvalError("distribution term " + to_string(e) + " needs a random stream");
        return sample_distribution(e, valuation, *rng);
    }
    }
    return 0.0;
}

double eval_expression(const Expr& e, const std::map<std::string, double>& valuation) {
    return eval_expression(e, valuation_of(valuation));
}

// --- printing ---------------------------------------------------------------

namespace {

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "1e999" : "-1e999";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

int precedence(const Expr& e) {
    switch (e.kind()) {
    case ExprKind::Add:
    case ExprKind::Sub:
        return 1;
    case ExprKind::Mul:
    case ExprKind::Div:
        return 2;
    case ExprKind::Neg:
        return 3;
    case ExprKind::Pow:
        return 4;
    case ExprKind::Num:
        return e.value() < 0 ? 3 : 5;
    default:
        return 5;
    }
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool wrap, std::string& out) {
    if (wrap) out += '(';
    print(e, out);
    if (wrap) out += ')';
}

void print_call(std::string_view fn, std::span<const Expr> args, std::string& out) {
    out += fn;
    out += '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        print(args[i], out);
    }
    out += ')';
}

void print(const Expr& e, std::string& out) {
    int p = precedence(e);
    switch (e.kind()) {
    case ExprKind::Num:
        out += format_number(e.value());
        return;
    case ExprKind::Ref:
        out += e.name();
        return;
    case ExprKind::Add:
        for (std::size_t i = 0; i < e.args().size(); ++i) {
            if (i) out += " + ";
            print_wrapped(e.arg(i), i > 0 && precedence(e.arg(i)) <= 1, out);
        }
        return;
    case ExprKind::Mul:
        for (std::size_t i = 0; i < e.args().size(); ++i) {
            if (i) out += " * ";
            print_wrapped(e.arg(i), precedence(e.arg(i)) < 2 || (i > 0 && precedence(e.arg(i)) == 2), out);
        }
        return;
    case ExprKind::Sub:
        print_wrapped(e.arg(0), precedence(e.arg(0)) < 1, out);
        out += " - ";
        print_wrapped(e.arg(1), precedence(e.arg(1)) <= 1, out);
        return;
    case ExprKind::Div:
        print_wrapped(e.arg(0), precedence(e.arg(0)) < 2, out);
        out += " / ";
        print_wrapped(e.arg(1), precedence(e.arg(1)) <= 2, out);
        return;
    case ExprKind::Neg:
        out += '-';
        print_wrapped(e.arg(0), precedence(e.arg(0)) < 4, out);
        return;
    case ExprKind::Pow:
        print_wrapped(e.arg(0), precedence(e.arg(0)) <= p, out);
        out += '^';
        print_wrapped(e.arg(1), precedence(e.arg(1)) < p, out);
        return;
    case ExprKind::Min:
        print_call("min", e.args(), out);
        return;
    case ExprKind::Max:
        print_call("max", e.args(), out);
        return;
    case ExprKind::Sqrt:
        print_call("sqrt", e.args(), out);
        return;
    case ExprKind::Ln:
        print_call("ln", e.args(), out);
        return;
    case ExprKind::Exp:
        print_call("exp", e.args(), out);
        return;
    case ExprKind::Random:
        print_call(dist_name(e.distribution()), e.args(), out);
        return;
    }
}

}  // namespace

std::string to_string(const Expr& e) {
    std::string out;
    print(e, out);
    return out;
}

bool contains_random(const Expr& e) {
    if (e.kind() == ExprKind::Random) return true;
    for (const auto& a : e.args())
        if (contains_random(a)) return true;
    return false;
}

void collect_refs(const Expr& e, std::set<std::string>& out) {
    if (e.kind() == ExprKind::Ref) out.insert(e.name());
    for (const auto& a : e.args()) collect_refs(a, out);
}

std::set<std::string> free_refs(const Expr& e) {
    std::set<std::string> out;
    collect_refs(e, out);
    return out;
}

Expr substitute(const Expr& e, const ExprSubstitution& subst) {
    switch (e.kind()) {
    case ExprKind::Num:
        return e;
    case ExprKind::Ref:
        if (auto r = subst(e.name())) return *r;
        return e;
    default:
        break;
    }
    std::vector<Expr> args;
    args.reserve(e.args().size());
    bool changed = false;
    for (const auto& a : e.args()) {
        args.push_back(substitute(a, subst));
        changed = changed || !(args.back() == a);
    }
    if (!changed) return e;
    if (e.kind() == ExprKind::Random) return Expr::random(e.distribution(), std::move(args));
    return Expr::op(e.kind(), std::move(args));
}

// --- normalization ------------------------------------------------------------

namespace {

constexpr std::size_t kExpandLimit = 64;

Expr make_sum(std::vector<Expr> terms) {
    if (terms.empty()) return Expr::number(0.0);
    if (terms.size() == 1) return terms.front();
    return Expr::op(ExprKind::Add, std::move(terms));
}

Expr make_product(double coeff, std::vector<Expr> factors) {
    if (coeff == 0.0) return Expr::number(0.0);
    if (factors.empty()) return Expr::number(coeff);
    if (coeff != 1.0) factors.insert(factors.begin(), Expr::number(coeff));
    if (factors.size() == 1) return factors.front();
    return Expr::op(ExprKind::Mul, std::move(factors));
}

// Splits a normalized term into (coefficient, non-numeric factors).
std::pair<double, std::vector<Expr>> split_coefficient(const Expr& t) {
    if (t.is_number()) return {t.value(), {}};
    if (t.kind() == ExprKind::Mul) {
        std::vector<Expr> rest;
        double c = 1.0;
        for (const auto& f : t.args()) {
            if (f.is_number())
                c *= f.value();
            else
                rest.push_back(f);
        }
        return {c, rest};
    }
    return {1.0, {t}};
}

Expr normalize_impl(const Expr& e);

Expr normalize_sum(const std::vector<Expr>& raw_terms) {
    std::vector<Expr> flat;
    for (const auto& t : raw_terms) {
        if (t.kind() == ExprKind::Add)
            flat.insert(flat.end(), t.args().begin(), t.args().end());
        else
            flat.push_back(t);
    }
    double constant = 0.0;
    // key -> (coefficient, factors); random-bearing terms never merge
    std::vector<std::tuple<std::string, double, std::vector<Expr>>> groups;
    std::map<std::string, std::size_t> index;
    for (const auto& t : flat) {
        auto [c, factors] = split_coefficient(t);
        if (factors.empty()) {
            constant += c;
            continue;
        }
        Expr rest = make_product(1.0, factors);
        std::string key = to_string(rest);
        bool mergeable = !contains_random(rest);
        auto it = mergeable ? index.find(key) : index.end();
        if (it != index.end()) {
            std::get<1>(groups[it->second]) += c;
        } else {
            if (mergeable) index.emplace(key, groups.size());
            groups.emplace_back(key, c, std::move(factors));
        }
    }
    std::stable_sort(groups.begin(), groups.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
    std::vector<Expr> terms;
    for (auto& [key, c, factors] : groups) {
        if (c == 0.0) continue;
        terms.push_back(make_product(c, factors));
    }
    if (constant != 0.0 || terms.empty()) terms.push_back(Expr::number(constant));
    return make_sum(std::move(terms));
}

Expr normalize_product(const std::vector<Expr>& raw_factors) {
    std::vector<Expr> flat;
    for (const auto& f : raw_factors) {
        if (f.kind() == ExprKind::Mul)
            flat.insert(flat.end(), f.args().begin(), f.args().end());
        else
            flat.push_back(f);
    }
    double coeff = 1.0;
    std::vector<Expr> factors;
    for (const auto& f : flat) {
        if (f.is_number())
            coeff *= f.value();
        else
            factors.push_back(f);
    }
    if (coeff == 0.0) return Expr::number(0.0);

    // distribute over sums when the expansion stays small
    std::size_t expanded = 1;
    bool has_sum = false;
    for (const auto& f : factors) {
        if (f.kind() == ExprKind::Add) {
            has_sum = true;
            expanded *= f.args().size();
        }
    }
    if (has_sum && expanded <= kExpandLimit) {
        std::vector<std::vector<Expr>> products{{Expr::number(coeff)}};
        for (const auto& f : factors) {
            std::vector<std::vector<Expr>> next;
            if (f.kind() == ExprKind::Add) {
                for (const auto& p : products)
                    for (const auto& t : f.args()) {
                        auto q = p;
                        q.push_back(t);
                        next.push_back(std::move(q));
                    }
            } else {
                next = products;
                for (auto& p : next) p.push_back(f);
            }
            products = std::move(next);
        }
        std::vector<Expr> terms;
        for (auto& p : products) terms.push_back(normalize_product(p));
        return normalize_sum(terms);
    }

    // collect like factors into powers
    std::vector<std::tuple<std::string, Expr, double>> groups;
    std::map<std::string, std::size_t> index;
    std::vector<Expr> opaque;
    for (const auto& f : factors) {
        Expr base = f;
        double exponent = 1.0;
        if (f.kind() == ExprKind::Pow && f.arg(1).is_number()) {
            base = f.arg(0);
            exponent = f.arg(1).value();
        }
        if (contains_random(base)) {
            opaque.push_back(f);
            continue;
        }
        std::string key = to_string(base);
        auto it = index.find(key);
        if (it != index.end()) {
            std::get<2>(groups[it->second]) += exponent;
        } else {
            index.emplace(key, groups.size());
            groups.emplace_back(key, base, exponent);
        }
    }
    std::vector<std::pair<std::string, Expr>> keyed;
    for (auto& [key, base, exponent] : groups) {
        if (exponent == 0.0) continue;
        Expr f = exponent == 1.0 ? base : Expr::op(ExprKind::Pow, {base, Expr::number(exponent)});
        keyed.emplace_back(to_string(f), f);
    }
    for (const auto& f : opaque) keyed.emplace_back(to_string(f), f);
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Expr> out;
    for (auto& [k, f] : keyed) out.push_back(f);
    return make_product(coeff, std::move(out));
}

bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

Expr normalize_pow(const Expr& base, const Expr& exponent) {
    if (exponent.is_number()) {
        double x = exponent.value();
        if (x == 0.0) return Expr::number(1.0);
        if (x == 1.0) return base;
        if (base.is_number()) {
            double r = std::pow(base.value(), x);
            if (std::isfinite(r)) return Expr::number(r);
        }
        if (base.is_number(1.0)) return base;
        if (is_integer(x)) {
            if (base.kind() == ExprKind::Pow && base.arg(1).is_number() && is_integer(base.arg(1).value()))
                return normalize_pow(base.arg(0), Expr::number(base.arg(1).value() * x));
            if (base.kind() == ExprKind::Mul) {
                std::vector<Expr> parts;
                for (const auto& f : base.args()) parts.push_back(normalize_pow(f, exponent));
                return normalize_product(parts);
            }
            if (x > 0 && base.kind() == ExprKind::Add && x <= 4) {
                std::vector<Expr> parts(static_cast<std::size_t>(x), base);
                return normalize_product(parts);
            }
        }
    }
    return Expr::op(ExprKind::Pow, {base, exponent});
}

Expr normalize_minmax(ExprKind kind, const std::vector<Expr>& raw) {
    std::vector<Expr> flat;
    for (const auto& a : raw) {
        if (a.kind() == kind)
            flat.insert(flat.end(), a.args().begin(), a.args().end());
        else
            flat.push_back(a);
    }
    bool all_num = std::all_of(flat.begin(), flat.end(), [](const Expr& a) { return a.is_number(); });
    if (all_num) {
        double m = flat.front().value();
        for (const auto& a : flat) m = kind == ExprKind::Min ? std::min(m, a.value()) : std::max(m, a.value());
        return Expr::number(m);
    }
    std::vector<std::pair<std::string, Expr>> keyed;
    for (const auto& a : flat) keyed.emplace_back(to_string(a), a);
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Expr> out;
    for (std::size_t i = 0; i < keyed.size(); ++i) {
        bool dup = i > 0 && keyed[i].first == keyed[i - 1].first && !contains_random(keyed[i].second);
        if (!dup) out.push_back(keyed[i].second);
    }
    if (out.size() == 1) return out.front();
    return Expr::op(kind, std::move(out));
}

Expr normalize_impl(const Expr& e) {
    switch (e.kind()) {
    case ExprKind::Num:
    case ExprKind::Ref:
        return e;
    case ExprKind::Random: {
        std::vector<Expr> params;
        for (const auto& a : e.args()) params.push_back(normalize_impl(a));
        return Expr::random(e.distribution(), std::move(params));
    }
    case ExprKind::Neg:
        return normalize_product({Expr::number(-1.0), normalize_impl(e.arg(0))});
    case ExprKind::Sub:
        return normalize_sum(
            {normalize_impl(e.arg(0)), normalize_product({Expr::number(-1.0), normalize_impl(e.arg(1))})});
    case ExprKind::Add: {
        std::vector<Expr> terms;
        for (const auto& a : e.args()) terms.push_back(normalize_impl(a));
        return normalize_sum(terms);
    }
    case ExprKind::Mul: {
        std::vector<Expr> factors;
        for (const auto& a : e.args()) factors.push_back(normalize_impl(a));
        return normalize_product(factors);
    }
    case ExprKind::Div: {
        Expr num = normalize_impl(e.arg(0));
        Expr den = normalize_impl(e.arg(1));
        if (den.is_number()) {
            if (den.value() == 0.0) return Expr::op(ExprKind::Div, {num, den});
            return normalize_product({num, Expr::number(1.0 / den.value())});
        }
        return normalize_product({num, normalize_pow(den, Expr::number(-1.0))});
    }
    case ExprKind::Pow:
        return normalize_pow(normalize_impl(e.arg(0)), normalize_impl(e.arg(1)));
    case ExprKind::Min:
    case ExprKind::Max: {
        std::vector<Expr> args;
        for (const auto& a : e.args()) args.push_back(normalize_impl(a));
        return normalize_minmax(e.kind(), args);
    }
    case ExprKind::Sqrt:
    case ExprKind::Ln:
    case ExprKind::Exp: {
        Expr a = normalize_impl(e.arg(0));
        if (a.is_number()) {
            double v = a.value();
            if (e.kind() == ExprKind::Sqrt && v >= 0) return Expr::number(std::sqrt(v));
            if (e.kind() == ExprKind::Ln && v > 0) return Expr::number(std::log(v));
            if (e.kind() == ExprKind::Exp) return Expr::number(std::exp(v));
        }
        return Expr::op(e.kind(), {a});
    }
    }
    return e;
}

}  // namespace

Expr normalize(const Expr& e) { return normalize_impl(e); }

std::string canonical_key(const Expr& e) { return to_string(normalize(e)); }

// --- Formula ----------------------------------------------------------------

struct Formula::Node {
    FormulaKind kind = FormulaKind::True;
    CmpOp op = CmpOp::Eq;
    Expr lhs;
    Expr rhs;
    std::vector<Formula> children;
};

std::string_view cmp_symbol(CmpOp op) {
    switch (op) {
    case CmpOp::Lt:
        return "<";
    case CmpOp::Le:
        return "<=";
    case CmpOp::Eq:
        return "=";
    case CmpOp::Ge:
        return ">=";
    case CmpOp::Gt:
        return ">";
    }
    return "?";
}

Formula::Formula() {
    static const auto t = std::make_shared<const Node>();
    node_ = t;
}

Formula Formula::truth(bool v) {
    auto n = std::make_shared<Node>();
    n->kind = v ? FormulaKind::True : FormulaKind::False;
    return Formula(std::move(n));
}

Formula Formula::compare(CmpOp op, Expr lhs, Expr rhs) {
    auto n = std::make_shared<Node>();
    n->kind = FormulaKind::Cmp;
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return Formula(std::move(n));
}

Formula Formula::conj(std::vector<Formula> parts) {
    auto n = std::make_shared<Node>();
    n->kind = FormulaKind::And;
    n->children = std::move(parts);
    return Formula(std::move(n));
}

Formula Formula::disj(std::vector<Formula> parts) {
    auto n = std::make_shared<Node>();
    n->kind = FormulaKind::Or;
    n->children = std::move(parts);
    return Formula(std::move(n));
}

Formula Formula::negate(Formula f) {
    auto n = std::make_shared<Node>();
    n->kind = FormulaKind::Not;
    n->children = {std::move(f)};
    return Formula(std::move(n));
}

FormulaKind Formula::kind() const { return node_->kind; }
CmpOp Formula::op() const { return node_->op; }
const Expr& Formula::lhs() const { return node_->lhs; }
const Expr& Formula::rhs() const { return node_->rhs; }
std::span<const Formula> Formula::children() const { return node_->children; }

bool operator==(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind()) return false;
    if (a.kind() == FormulaKind::Cmp) return a.op() == b.op() && a.lhs() == b.lhs() && a.rhs() == b.rhs();
    auto ac = a.children();
    auto bc = b.children();
    return std::equal(ac.begin(), ac.end(), bc.begin(), bc.end());
}

bool eval_formula(const Formula& f, const Valuation& valuation) {
    switch (f.kind()) {
    case FormulaKind::True:
        return true;
    case FormulaKind::False:
        return false;
    case FormulaKind::Cmp: {
        double l = eval_expression(f.lhs(), valuation);
        double r = eval_expression(f.rhs(), valuation);
        switch (f.op()) {
        case CmpOp::Lt:
            return l < r;
        case CmpOp::Le:
            return l <= r;
        case CmpOp::Eq:
            return l == r;
        case CmpOp::Ge:
            return l >= r;
        case CmpOp::Gt:
            return l > r;
        }
        return false;
    }
    case FormulaKind::And:
        for (const auto& c : f.children())
            if (!eval_formula(c, valuation)) return false;
        return true;
    case FormulaKind::Or:
        for (const auto& c : f.children())
            if (eval_formula(c, valuation)) return true;
        return false;
    case FormulaKind::Not:
        return !eval_formula(f.children()[0], valuation);
    }
    return false;
}

namespace {

void print_formula(const Formula& f, std::string& out, int ctx) {
    // ctx: 0 top, 1 inside or, 2 inside and, 3 inside not
    switch (f.kind()) {
    case FormulaKind::True:
        out += "true";
        return;
    case FormulaKind::False:
        out += "false";
        return;
    case FormulaKind::Cmp:
        out += to_string(f.lhs());
        out += ' ';
        out += cmp_symbol(f.op());
        out += ' ';
        out += to_string(f.rhs());
        return;
    case FormulaKind::And:
    case FormulaKind::Or: {
        int own = f.kind() == FormulaKind::Or ? 1 : 2;
        bool wrap = ctx > own || (ctx == own && ctx != 0) || f.children().size() < 2;
        if (f.children().empty()) {
            out += f.kind() == FormulaKind::And ? "true" : "false";
            return;
        }
        if (wrap) out += '(';
        for (std::size_t i = 0; i < f.children().size(); ++i) {
            if (i) out += own == 1 ? " or " : " and ";
            print_formula(f.children()[i], out, own);
        }
        if (wrap) out += ')';
        return;
    }
    case FormulaKind::Not:
        out += "not ";
        print_formula(f.children()[0], out, 3);
        return;
    }
}

}  // namespace

std::string to_string(const Formula& f) {
    std::string out;
    print_formula(f, out, 0);
    return out;
}

void collect_refs(const Formula& f, std::set<std::string>& out) {
    if (f.kind() == FormulaKind::Cmp) {
        collect_refs(f.lhs(), out);
        collect_refs(f.rhs(), out);
    }
    for (const auto& c : f.children()) collect_refs(c, out);
}

bool contains_random(const Formula& f) {
    if (f.kind() == FormulaKind::Cmp) return contains_random(f.lhs()) || contains_random(f.rhs());
    for (const auto& c : f.children())
        if (contains_random(c)) return true;
    return false;
}

Formula substitute(const Formula& f, const ExprSubstitution& subst) {
    switch (f.kind()) {
    case FormulaKind::True:
    case FormulaKind::False:
        return f;
    case FormulaKind::Cmp:
        return Formula::compare(f.op(), substitute(f.lhs(), subst), substitute(f.rhs(), subst));
    case FormulaKind::And:
    case FormulaKind::Or: {
        std::vector<Formula> parts;
        for (const auto& c : f.children()) parts.push_back(substitute(c, subst));
        return f.kind() == FormulaKind::And ? Formula::conj(std::move(parts)) : Formula::disj(std::move(parts));
    }
    case FormulaKind::Not:
        return Formula::negate(substitute(f.children()[0], subst));
    }
    return f;
}

namespace {

Formula normalize_formula(const Formula& f, bool negated);

Formula normalize_cmp(CmpOp op, const Expr& lhs, const Expr& rhs, bool negated) {
    if (negated) {
        switch (op) {
        case CmpOp::Lt:
            op = CmpOp::Ge;
            break;
        case CmpOp::Le:
            op = CmpOp::Gt;
            break;
        case CmpOp::Ge:
            op = CmpOp::Lt;
            break;
        case CmpOp::Gt:
            op = CmpOp::Le;
            break;
        case CmpOp::Eq:
            return Formula::negate(normalize_cmp(op, lhs, rhs, false));
        }
    }
    Expr diff;
    if (op == CmpOp::Lt || op == CmpOp::Le) {
        diff = normalize(rhs - lhs);
        op = op == CmpOp::Lt ? CmpOp::Gt : CmpOp::Ge;
    } else {
        diff = normalize(lhs - rhs);
    }
    if (op == CmpOp::Eq) {
        Expr flipped = normalize(-diff);
        if (to_string(flipped) < to_string(diff)) diff = flipped;
    }
    if (diff.is_number()) {
        double d = diff.value();
        bool v = op == CmpOp::Eq ? d == 0.0 : op == CmpOp::Ge ? d >= 0.0 : d > 0.0;
        return Formula::truth(v);
    }
    return Formula::compare(op, diff, Expr::number(0.0));
}

Formula normalize_junction(FormulaKind kind, std::span<const Formula> children, bool negated) {
    bool is_and = (kind == FormulaKind::And) != negated;
    std::vector<Formula> flat;
    for (const auto& c : children) {
        Formula n = normalize_formula(c, negated);
        if (n.kind() == (is_and ? FormulaKind::And : FormulaKind::Or))
            flat.insert(flat.end(), n.children().begin(), n.children().end());
        else
            flat.push_back(n);
    }
    std::vector<std::pair<std::string, Formula>> keyed;
    for (const auto& c : flat) {
        if (c.kind() == (is_and ? FormulaKind::True : FormulaKind::False)) continue;
        if (c.kind() == (is_and ? FormulaKind::False : FormulaKind::True)) return Formula::truth(!is_and);
        keyed.emplace_back(to_string(c), c);
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    keyed.erase(std::unique(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
                keyed.end());
    if (keyed.empty()) return Formula::truth(is_and);
    if (keyed.size() == 1) return keyed.front().second;
    std::vector<Formula> parts;
    for (auto& [k, c] : keyed) parts.push_back(c);
    return is_and ? Formula::conj(std::move(parts)) : Formula::disj(std::move(parts));
}

Formula normalize_formula(const Formula& f, bool negated) {
    switch (f.kind()) {
    case FormulaKind::True:
    case FormulaKind::False:
        return Formula::truth((f.kind() == FormulaKind::True) != negated);
    case FormulaKind::Cmp:
        return normalize_cmp(f.op(), f.lhs(), f.rhs(), negated);
    case FormulaKind::And:
    case FormulaKind::Or:
        return normalize_junction(f.kind(), f.children(), negated);
    case FormulaKind::Not:
        return normalize_formula(f.children()[0], !negated);
    }
    return f;
}

}  // namespace

Formula normalize(const Formula& f) { return normalize_formula(f, false); }

std::string canonical_key(const Formula& f) { return to_string(normalize(f)); }

std::vector<Formula> conjuncts(const Formula& f) {
    std::vector<Formula> out;
    if (f.kind() == FormulaKind::True) return out;
    if (f.kind() == FormulaKind::And) {
        for (const auto& c : f.children()) {
            auto sub = conjuncts(c);
            out.insert(out.end(), sub.begin(), sub.end());
        }
        return out;
    }
    out.push_back(f);
    return out;
}

// --- resets -------------------------------------------------------------------

std::string to_string(const Reset& r) {
    if (r.empty()) return "true";
    std::string out;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += " and ";
        out += r[i].variable;
        if (contains_random(r[i].value)) {
            out += " ~ ";
        } else {
            out += "' = ";
        }
        out += to_string(r[i].value);
    }
    return out;
}

Reset normalize(const Reset& r) {
    std::vector<std::pair<std::string, ResetAtom>> keyed;
    for (const auto& a : r) keyed.emplace_back(canonical_key(a.value), a);
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.second.variable < b.second.variable; });
    Reset out;
    for (std::size_t i = 0; i < keyed.size(); ++i) {
        if (i > 0 && keyed[i].second.variable == keyed[i - 1].second.variable) {
            if (keyed[i].first != keyed[i - 1].first)
                throw ResetIncompatible("variable '" + keyed[i].second.variable + "' reset to both " +
                                        to_string(keyed[i - 1].second.value) + " and " +
                                        to_string(keyed[i].second.value));
            continue;
        }
        out.push_back(keyed[i].second);
    }
    return out;
}

std::string canonical_key(const Reset& r) {
    Reset n = normalize(r);
    if (n.empty()) return "true";
    std::string out;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (i) out += " and ";
        out += n[i].variable + "' = " + canonical_key(n[i].value);
    }
    return out;
}

// --- intervals ----------------------------------------------------------------

Interval Interval::everything() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {-inf, inf};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_mul(double a, double b) {
    if (a == 0.0 || b == 0.0) return 0.0;
    return a * b;
}

Interval imul(Interval a, Interval b) {
    double c[] = {safe_mul(a.lo, b.lo), safe_mul(a.lo, b.hi), safe_mul(a.hi, b.lo), safe_mul(a.hi, b.hi)};
    return {*std::min_element(std::begin(c), std::end(c)), *std::max_element(std::begin(c), std::end(c))};
}

Interval ipow_int(Interval b, long n) {
    if (n == 0) return Interval::point(1.0);
    if (n < 0) {
        if (b.contains(0.0)) return Interval::everything();
        Interval p = ipow_int(b, -n);
        return {std::min(1.0 / p.lo, 1.0 / p.hi), std::max(1.0 / p.lo, 1.0 / p.hi)};
    }
    double lo = std::pow(b.lo, static_cast<double>(n));
    double hi = std::pow(b.hi, static_cast<double>(n));
    if (n % 2 == 1) return {lo, hi};
    if (b.lo >= 0) return {lo, hi};
    if (b.hi <= 0) return {hi, lo};
    return {0.0, std::max(lo, hi)};
}

Interval eval_iv(const Expr& e, const Box& box, const IntervalOptions& opts) {
    auto sub = [&](std::size_t i) { return eval_iv(e.arg(i), box, opts); };
    switch (e.kind()) {
    case ExprKind::Num:
        return Interval::point(e.value());
    case ExprKind::Ref: {
        auto it = box.find(e.name());
        return it == box.end() ? Interval::everything() : it->second;
    }
    case ExprKind::Add: {
        Interval s = Interval::point(0.0);
        for (std::size_t i = 0; i < e.args().size(); ++i) {
            Interval t = sub(i);
            s = {s.lo + t.lo, s.hi + t.hi};
        }
        if (std::isnan(s.lo) || std::isnan(s.hi)) return Interval::everything();
        return s;
    }
    case ExprKind::Sub: {
        Interval a = sub(0), b = sub(1);
        Interval r{a.lo - b.hi, a.hi - b.lo};
        if (std::isnan(r.lo) || std::isnan(r.hi)) return Interval::everything();
        return r;
    }
    case ExprKind::Mul: {
        Interval p = Interval::point(1.0);
        for (std::size_t i = 0; i < e.args().size(); ++i) p = imul(p, sub(i));
        return p;
    }
    case ExprKind::Div: {
        Interval a = sub(0), b = sub(1);
        if (b.contains(0.0)) return Interval::everything();
        return imul(a, {std::min(1.0 / b.lo, 1.0 / b.hi), std::max(1.0 / b.lo, 1.0 / b.hi)});
    }
    case ExprKind::Neg: {
        Interval a = sub(0);
        return {-a.hi, -a.lo};
    }
    case ExprKind::Pow: {
        Interval b = sub(0), x = sub(1);
        if (x.lo == x.hi && is_integer(x.lo) && std::abs(x.lo) < 1e6) return ipow_int(b, static_cast<long>(x.lo));
        if (b.lo > 0) {
            double c[] = {std::pow(b.lo, x.lo), std::pow(b.lo, x.hi), std::pow(b.hi, x.lo), std::pow(b.hi, x.hi)};
            return {*std::min_element(std::begin(c), std::end(c)), *std::max_element(std::begin(c), std::end(c))};
        }
        return Interval::everything();
    }
    case ExprKind::Min:
    case ExprKind::Max: {
        Interval r = sub(0);
        for (std::size_t i = 1; i < e.args().size(); ++i) {
            Interval t = sub(i);
            if (e.kind() == ExprKind::Min)
                r = {std::min(r.lo, t.lo), std::min(r.hi, t.hi)};
            else
                r = {std::max(r.lo, t.lo), std::max(r.hi, t.hi)};
        }
        return r;
    }
    case ExprKind::Sqrt: {
        Interval a = sub(0);
        if (a.hi < 0) return Interval::everything();
        return {std::sqrt(std::max(a.lo, 0.0)), std::sqrt(a.hi)};
    }
    case ExprKind::Ln: {
        Interval a = sub(0);
        if (a.hi <= 0) return Interval::everything();
        return {a.lo <= 0 ? -kInf : std::log(a.lo), std::log(a.hi)};
    }
    case ExprKind::Exp: {
        Interval a = sub(0);
        return {std::exp(a.lo), std::exp(a.hi)};
    }
    case ExprKind::Random: {
        switch (e.distribution()) {
        case DistKind::Dirac:
            return sub(0);
        case DistKind::Uniform: {
            Interval a = sub(0), b = sub(1);
            return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
        }
        case DistKind::Normal: {
            Interval m = sub(0), v = sub(1);
            double sd = v.hi < 0 ? 0.0 : std::sqrt(v.hi);
            return {m.lo - opts.sigmas * sd, m.hi + opts.sigmas * sd};
        }
        case DistKind::LogNormal: {
            Interval m = sub(0), v = sub(1);
            if (!(m.lo > 0) || !std::isfinite(m.hi) || !std::isfinite(v.hi) || v.lo < 0) return {0.0, kInf};
            double lo = kInf, hi = 0.0;
            for (double mm : {m.lo, m.hi})
                for (double vv : {v.lo, v.hi}) {
                    auto [mu, s] = lognormal_log_params(mm, vv);
                    lo = std::min(lo, std::exp(mu - opts.sigmas * s));
                    hi = std::max(hi, std::exp(mu + opts.sigmas * s));
                }
            return {lo, hi};
        }
        case DistKind::Exponential:
        case DistKind::Gamma:
            return {0.0, kInf};
        }
        return Interval::everything();
    }
    }
    return Interval::everything();
}

}  // namespace

Interval eval_interval(const Expr& e, const Box& box, const IntervalOptions& opts) {
    return eval_iv(e, box, opts);
}

Truth eval_interval(const Formula& f, const Box& box, const IntervalOptions& opts) {
    switch (f.kind()) {
    case FormulaKind::True:
        return Truth::Always;
    case FormulaKind::False:
        return Truth::Never;
    case FormulaKind::Cmp: {
        CmpOp op = f.op();
        Expr diff = op == CmpOp::Lt || op == CmpOp::Le ? normalize(f.rhs() - f.lhs()) : normalize(f.lhs() - f.rhs());
        if (op == CmpOp::Lt) op = CmpOp::Gt;
        if (op == CmpOp::Le) op = CmpOp::Ge;
        Interval d = eval_iv(diff, box, opts);
        switch (op) {
        case CmpOp::Ge:
            if (d.lo >= 0) return Truth::Always;
            if (d.hi < 0) return Truth::Never;
            return Truth::Maybe;
        case CmpOp::Gt:
            if (d.lo > 0) return Truth::Always;
            if (d.hi <= 0) return Truth::Never;
            return Truth::Maybe;
        default:
            if (d.lo == 0 && d.hi == 0) return Truth::Always;
            if (!d.contains(0.0)) return Truth::Never;
            return Truth::Maybe;
        }
    }
    case FormulaKind::And: {
        Truth r = Truth::Always;
        for (const auto& c : f.children()) {
            Truth t = eval_interval(c, box, opts);
            if (t == Truth::Never) return Truth::Never;
            if (t == Truth::Maybe) r = Truth::Maybe;
        }
        return r;
    }
    case FormulaKind::Or: {
        Truth r = Truth::Never;
        for (const auto& c : f.children()) {
            Truth t = eval_interval(c, box, opts);
            if (t == Truth::Always) return Truth::Always;
            if (t == Truth::Maybe) r = Truth::Maybe;
        }
        return r;
    }
    case FormulaKind::Not: {
        Truth t = eval_interval(f.children()[0], box, opts);
        return t == Truth::Always ? Truth::Never : t == Truth::Never ? Truth::Always : Truth::Maybe;
    }
    }
    return Truth::Maybe;
}

}  // namespace shype
