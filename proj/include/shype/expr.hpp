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

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shype/error.hpp"

namespace shype {

class RngStream;

enum class DistKind { Uniform, Normal, LogNormal, Exponential, Gamma, Dirac };

std::string_view dist_name(DistKind kind);
std::optional<DistKind> dist_from_name(std::string_view name);
std::size_t dist_arity(DistKind kind);

enum class ExprKind {
    Num,
    Ref,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow,
    Min,
    Max,
    Sqrt,
    Ln,
    Exp,
    Random,
};

/// Immutable real-valued expression. Copies share the underlying tree.
///
/// Add and Mul are n-ary (the parser produces binary nodes, normalization
/// flattens them). A Random node is a distribution term: every evaluation
/// draws a fresh sample from it.
class Expr {
public:
    Expr();  // the literal 0

    static Expr number(double v);
    static Expr ref(std::string name);
    static Expr op(ExprKind kind, std::vector<Expr> args);
    static Expr random(DistKind dist, std::vector<Expr> params);

    ExprKind kind() const;
    double value() const;
    const std::string& name() const;
    DistKind distribution() const;
    std::span<const Expr> args() const;
    const Expr& arg(std::size_t i) const { return args()[i]; }

    bool is_number() const { return kind() == ExprKind::Num; }
    bool is_number(double v) const { return is_number() && value() == v; }

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);

    /// Structural equality.
    friend bool operator==(const Expr& a, const Expr& b);

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

Expr pow(const Expr& base, const Expr& exponent);
Expr min(const Expr& a, const Expr& b);
Expr max(const Expr& a, const Expr& b);
Expr sqrt(const Expr& a);
Expr ln(const Expr& a);
Expr exp(const Expr& a);

/// Lookup used by evaluation; returns nullopt for unbound names.
using Valuation = std::function<std::optional<double>(const std::string&)>;

Valuation valuation_of(const std::map<std::string, double>& values);

/// Standard arithmetic evaluation. Throws UnboundVariable, DivisionByZero,
/// DomainError. Random terms need an rng; without one they raise EvalError.
double eval_expression(const Expr& e, const Valuation& valuation, RngStream* rng = nullptr);
double eval_expression(const Expr& e, const std::map<std::string, double>& valuation);

std::string to_string(const Expr& e);

bool contains_random(const Expr& e);
void collect_refs(const Expr& e, std::set<std::string>& out);
std::set<std::string> free_refs(const Expr& e);

using ExprSubstitution = std::function<std::optional<Expr>(const std::string&)>;
Expr substitute(const Expr& e, const ExprSubstitution& subst);

/// Canonical form for syntactic comparison: associative/commutative
/// operators flattened, operands sorted, literals folded, like terms
/// collected. Distribution terms are never merged with one another since
/// each occurrence is an independent draw.
Expr normalize(const Expr& e);
std::string canonical_key(const Expr& e);

// --- boolean formulas (guards) ----------------------------------------------

enum class CmpOp { Lt, Le, Eq, Ge, Gt };
enum class FormulaKind { True, False, Cmp, And, Or, Not };

std::string_view cmp_symbol(CmpOp op);

class Formula {
public:
    Formula();  // true

    static Formula truth(bool v);
    static Formula compare(CmpOp op, Expr lhs, Expr rhs);
    static Formula conj(std::vector<Formula> parts);
    static Formula disj(std::vector<Formula> parts);
    static Formula negate(Formula f);

    FormulaKind kind() const;
    CmpOp op() const;
    const Expr& lhs() const;
    const Expr& rhs() const;
    std::span<const Formula> children() const;

    bool is_true() const { return kind() == FormulaKind::True; }

    friend bool operator==(const Formula& a, const Formula& b);

private:
    struct Node;
    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

bool eval_formula(const Formula& f, const Valuation& valuation);
std::string to_string(const Formula& f);
void collect_refs(const Formula& f, std::set<std::string>& out);
Formula substitute(const Formula& f, const ExprSubstitution& subst);
bool contains_random(const Formula& f);

/// Canonical guard: comparisons rewritten as `normalize(lhs - rhs) op 0`
/// with `<`/`<=` flipped, conjunctions/disjunctions flattened, deduplicated
/// and sorted, `true` conjuncts dropped.
Formula normalize(const Formula& f);
std::string canonical_key(const Formula& f);

/// Flattened top-level conjuncts (true dropped).
std::vector<Formula> conjuncts(const Formula& f);

// --- resets -----------------------------------------------------------------

/// One atom `V ~ theta` (or `V' = theta` when theta has no random term).
struct ResetAtom {
    std::string variable;
    Expr value;

    friend bool operator==(const ResetAtom&, const ResetAtom&) = default;
};

/// Conjunction of atoms; empty means `true`.
using Reset = std::vector<ResetAtom>;

std::string to_string(const Reset& r);
/// Sorted by variable, duplicate atoms dropped. Throws ResetIncompatible when
/// one variable receives two different right-hand sides.
Reset normalize(const Reset& r);
std::string canonical_key(const Reset& r);

// --- interval analysis --------------------------------------------------------

struct Interval {
    double lo;
    double hi;

    static Interval point(double v) { return {v, v}; }
    static Interval everything();
    bool contains(double v) const { return lo <= v && v <= hi; }
    bool empty() const { return lo > hi; }
};

struct IntervalOptions {
    /// Normal and LogNormal supports are cut at mean +/- sigmas standard
    /// deviations (in log space for LogNormal).
    double sigmas = 6.0;
};

using Box = std::map<std::string, Interval>;

/// Sound enclosure of the range of e over the box (unlisted refs are
/// unbounded). Distribution terms contribute their (truncated) support.
Interval eval_interval(const Expr& e, const Box& box, const IntervalOptions& opts = {});

/// Tri-state satisfiability of a guard over a box.
enum class Truth { Never, Maybe, Always };
Truth eval_interval(const Formula& f, const Box& box, const IntervalOptions& opts = {});

}  // namespace shype
