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

#include <map>
#include <string>
#include <vector>

#include "shype/expr.hpp"
#include "shype/rng.hpp"

namespace shype {

/// Expression flattened to a postfix program over an indexed valuation.
/// Evaluation order, draws and errors match eval_expression.
class Program {
public:
    Program() = default;
    /// Throws UnboundVariable for names missing from `slots`.
    Program(const Expr& e, const std::map<std::string, int>& slots);

    double eval(const double* x, RngStream* rng = nullptr) const;
    bool is_constant() const { return constant_; }
    bool has_random() const { return random_; }

private:
    enum class Op : unsigned char { Const, Var, Add, Mul, Sub, Div, Neg, Pow, Min, Max, Sqrt, Ln, Exp, Random };
    struct Instr {
        Op op;
        int arg = 0;  // slot, operand count or distribution kind
        double value = 0.0;
        int params = 0;
    };
    std::vector<Instr> code_;
    std::size_t depth_ = 0;
    bool constant_ = true;
    bool random_ = false;

    void emit(const Expr& e, const std::map<std::string, int>& slots, std::size_t height);
};

/// Guard compiled to comparison atoms `lhs - rhs op 0` and a boolean tree.
class CompiledGuard {
public:
    CompiledGuard() = default;
    CompiledGuard(const Formula& f, const std::map<std::string, int>& slots);

    std::size_t atom_count() const { return atoms_.size(); }
    /// Signed atom values at x.
    void atoms(const double* x, double* out) const;
    /// Truth at a point from atom values.
    bool holds(const double* g) const;
    /// Truth at the end of a step: equality atoms also hold when their value
    /// crossed zero since the start of the step.
    bool reached(const double* g_start, const double* g_end) const;
    bool is_true() const { return nodes_.empty(); }
    /// Moves x onto the root of every crossed equality atom that is affine in
    /// a single variable.
    void snap(const double* g_start, const double* g_end, double* x) const;

private:
    struct Atom {
        Program diff;
        CmpOp op;
        int slot = -1;  // affine single-variable equality: root value for slot
        double root = 0.0;
    };
    struct Node {
        FormulaKind kind;
        int atom = -1;
        std::vector<int> children;
    };
    std::vector<Atom> atoms_;
    std::vector<Node> nodes_;  // nodes_[0] is the root
    int build(const Formula& f, const std::map<std::string, int>& slots);
    bool eval(int node, const double* g, const double* g_start) const;
};

}  // namespace shype
