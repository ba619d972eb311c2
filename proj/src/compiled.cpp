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

#include "shype/compiled.hpp"

#include <algorithm>
#include <cmath>

namespace shype {

Program::Program(const Expr& e, const std::map<std::string, int>& slots) { emit(e, slots, 0); }

void Program::emit(const Expr& e, const std::map<std::string, int>& slots, std::size_t height) {
    auto children = [&](Op op, int n) {
        for (std::size_t i = 0; i < e.args().size(); ++i) emit(e.arg(i), slots, height + i);
        code_.push_back({op, n});
    };
    depth_ = std::max(depth_, height + 1);
    switch (e.kind()) {
    case ExprKind::Num:
        code_.push_back({Op::Const, 0, e.value()});
        return;
    case ExprKind::Ref: {
        auto it = slots.find(e.name());
        if (it == slots.end()) throw UnboundVariable(e.name());
        constant_ = false;
        code_.push_back({Op::Var, it->second});
        return;
    }
    case ExprKind::Add:
        children(Op::Add, static_cast<int>(e.args().size()));
        return;
    case ExprKind::Mul:
        children(Op::Mul, static_cast<int>(e.args().size()));
        return;
    case ExprKind::Sub:
        children(Op::Sub, 2);
        return;
    case ExprKind::Div:
        children(Op::Div, 2);
        return;
    case ExprKind::Neg:
        children(Op::Neg, 1);
        return;
    case ExprKind::Pow:
        children(Op::Pow, 2);
        return;
    case ExprKind::Min:
        children(Op::Min, static_cast<int>(e.args().size()));
        return;
    case ExprKind::Max:
        children(Op::Max, static_cast<int>(e.args().size()));
        return;
    case ExprKind::Sqrt:
        children(Op::Sqrt, 1);
        return;
    case ExprKind::Ln:
        children(Op::Ln, 1);
        return;
    case ExprKind::Exp:
        children(Op::Exp, 1);
        return;
    case ExprKind::Random:
        constant_ = false;
        random_ = true;
        for (std::size_t i = 0; i < e.args().size(); ++i) emit(e.arg(i), slots, height + i);
        code_.push_back({Op::Random, static_cast<int>(e.distribution()), 0.0, static_cast<int>(e.args().size())});
        return;
    }
}

double Program::eval(const double* x, RngStream* rng) const {
    double stack_small[32];
    std::vector<double> stack_big;
    double* st = stack_small;
    if (depth_ > 32) {
        stack_big.resize(depth_);
        st = stack_big.data();
    }
    std::size_t sp = 0;
    for (const Instr& in : code_) {
        switch (in.op) {
        case Op::Const:
            st[sp++] = in.value;
            break;
        case Op::Var:
            st[sp++] = x[in.arg];
            break;
        case Op::Add: {
            double s = 0.0;
            for (std::size_t i = sp - in.arg; i < sp; ++i) s += st[i];
            sp -= in.arg;
            st[sp++] = s;
            break;
        }
        case Op::Mul: {
            double p = 1.0;
            for (std::size_t i = sp - in.arg; i < sp; ++i) p *= st[i];
            sp -= in.arg;
            st[sp++] = p;
            break;
        }
        case Op::Sub:
            --sp;
            st[sp - 1] -= st[sp];
            break;
        case Op::Div:
            --sp;
            if (st[sp] == 0.0) throw DivisionByZero();
            st[sp - 1] /= st[sp];
            break;
        case Op::Neg:
            st[sp - 1] = -st[sp - 1];
            break;
        case Op::Pow: {
            --sp;
            double b = st[sp - 1], e = st[sp];
            if (b == 0.0 && e < 0.0) throw DivisionByZero();
            double r = std::pow(b, e);
            if (std::isnan(r)) throw DomainError("power of negative base with fractional exponent");
            st[sp - 1] = r;
            break;
        }
        case Op::Min: {
            double m = st[sp - in.arg];
            for (std::size_t i = sp - in.arg + 1; i < sp; ++i) m = std::min(m, st[i]);
            sp -= in.arg;
            st[sp++] = m;
            break;
        }
        case Op::Max: {
            double m = st[sp - in.arg];
            for (std::size_t i = sp - in.arg + 1; i < sp; ++i) m = std::max(m, st[i]);
            sp -= in.arg;
            st[sp++] = m;
            break;
        }
        case Op::Sqrt:
            if (st[sp - 1] < 0.0) throw DomainError("sqrt of negative value");
            st[sp - 1] = std::sqrt(st[sp - 1]);
            break;
        case Op::Ln:
            if (st[sp - 1] <= 0.0) throw DomainError("ln of non-positive value");
            st[sp - 1] = std::log(st[sp - 1]);
            break;
        case Op::Exp:
            st[sp - 1] = std::exp(st[sp - 1]);
            break;
        case Op::Random: {
            if (!rng) throw EvalError("distribution term needs a random stream");
            sp -= in.params;
            double v = sample_distribution(static_cast<DistKind>(in.arg), std::span<const double>(st + sp, in.params), *rng);
            st[sp++] = v;
            break;
        }
        }
    }
    return st[sp - 1];
}

CompiledGuard::CompiledGuard(const Formula& f, const std::map<std::string, int>& slots) {
    if (f.is_true()) return;
    build(f, slots);
}

int CompiledGuard::build(const Formula& f, const std::map<std::string, int>& slots) {
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back({f.kind(), -1, {}});
    if (f.kind() == FormulaKind::Cmp) {
        nodes_[id].atom = static_cast<int>(atoms_.size());
        Expr diff = f.lhs() - f.rhs();
        Atom atom{Program(diff, slots), f.op()};
        auto refs = free_refs(diff);
        if (f.op() == CmpOp::Eq && refs.size() == 1 && !atom.diff.has_random()) {
            int slot = slots.at(*refs.begin());
            std::vector<double> x(slots.size() + 1, 0.0);
            double g[3];
            for (int v = 0; v < 3; ++v) {
                x[slot] = v;
                g[v] = atom.diff.eval(x.data());
            }
            double a = g[1] - g[0];
            if (a != 0 && std::abs(g[2] - 2 * g[1] + g[0]) <= 1e-12 * (1 + std::abs(g[0]) + std::abs(g[2]))) {
                atom.slot = slot;
                atom.root = -g[0] / a + 0.0;
            }
        }
        atoms_.push_back(std::move(atom));
    } else {
        for (const auto& c : f.children()) {
            int child = build(c, slots);
            nodes_[id].children.push_back(child);
        }
    }
    return id;
}

void CompiledGuard::atoms(const double* x, double* out) const {
    for (std::size_t i = 0; i < atoms_.size(); ++i) out[i] = atoms_[i].diff.eval(x);
}

bool CompiledGuard::eval(int node, const double* g, const double* g_start) const {
    const Node& n = nodes_[node];
    switch (n.kind) {
    case FormulaKind::True:
        return true;
    case FormulaKind::False:
        return false;
    case FormulaKind::Not:
        return !eval(n.children[0], g, g_start);
    case FormulaKind::And:
        for (int c : n.children)
            if (!eval(c, g, g_start)) return false;
        return true;
    case FormulaKind::Or:
        for (int c : n.children)
            if (eval(c, g, g_start)) return true;
        return false;
    case FormulaKind::Cmp: {
        double v = g[n.atom];
        switch (atoms_[n.atom].op) {
        case CmpOp::Lt:
            return v < 0;
        case CmpOp::Le:
            return v <= 0;
        case CmpOp::Gt:
            return v > 0;
        case CmpOp::Ge:
            return v >= 0;
        case CmpOp::Eq:
            if (v == 0) return true;
            if (!g_start) return false;
            return (g_start[n.atom] < 0 && v > 0) || (g_start[n.atom] > 0 && v < 0);
        }
    }
    }
    return false;
}

void CompiledGuard::snap(const double* g_start, const double* g_end, double* x) const {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        const Atom& a = atoms_[i];
        if (a.slot < 0) continue;
        bool crossed = (g_start[i] < 0 && g_end[i] >= 0) || (g_start[i] > 0 && g_end[i] <= 0);
        if (crossed && std::abs(x[a.slot] - a.root) <= 1e-6 * (1 + std::abs(a.root))) x[a.slot] = a.root;
    }
}

bool CompiledGuard::holds(const double* g) const { return nodes_.empty() || eval(0, g, nullptr); }

bool CompiledGuard::reached(const double* g_start, const double* g_end) const {
    return nodes_.empty() || eval(0, g_end, g_start);
}

}  // namespace shype
