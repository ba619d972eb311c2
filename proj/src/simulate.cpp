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

#include "shype/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

namespace shype {

void SimulationConfig::check() const {
    if (!(dt > 0)) throw Error("dt must be positive");
    if (!(root_tol > 0) || !(root_tol < dt)) throw Error("root_tol must lie in (0, dt)");
    if (chain_cap < 1) throw Error("chain_cap must be at least 1");
    if (!(t_end >= 0)) throw Error("t_end must be non-negative");
    if (replication_count < 1) throw Error("replication_count must be at least 1");
}

// --- compiled automaton ---------------------------------------------------------------

CompiledTdsha::CompiledTdsha(std::shared_ptr<const Tdsha> t) : t_(std::move(t)) {
    const Tdsha& a = *t_;
    for (std::size_t i = 0; i < a.variables.size(); ++i) slots_[a.variables[i]] = static_cast<int>(i);
    auto reset = [&](const Reset& r) {
        std::vector<Assign> out;
        for (const auto& atom : r) {
            auto it = slots_.find(atom.variable);
            if (it == slots_.end()) throw ModelError("reset of unknown variable '" + atom.variable + "'");
            out.push_back({it->second, Program(atom.value, slots_)});
        }
        return out;
    };
    for (const auto& l : a.labels)
        labels_.push_back({l.event, l.stochastic, CompiledGuard(l.guard, slots_), reset(l.reset), l.weight,
                           l.stochastic ? Program(l.rate, slots_) : Program()});
    init_ = reset(a.init_reset);
    flows_.resize(a.modes.size());
    for (std::size_t q = 0; q < a.modes.size(); ++q)
        for (int f : a.mode_flows[q]) {
            const auto& fl = a.flows[f];
            flows_[q].push_back({slots_.at(fl.variable), fl.stoichiometry, Program(fl.rate, slots_)});
        }
    edges_.resize(a.modes.size());
    for (const auto& e : a.instantaneous) edges_[e.source].instantaneous.push_back({e.label, e.target});
    for (const auto& e : a.stochastic) edges_[e.source].stochastic.push_back({e.label, e.target});
}

void CompiledTdsha::vector_field(int mode, const double* x, double* dx) const {
    std::fill(dx, dx + dim(), 0.0);
    for (const auto& f : flows_[mode]) dx[f.slot] += f.stoichiometry * f.rate.eval(x);
}

void CompiledTdsha::apply(const std::vector<Assign>& reset, std::vector<double>& x, RngStream& rng) const {
    std::vector<double> values;
    values.reserve(reset.size());
    for (const auto& a : reset) values.push_back(a.value.eval(x.data(), &rng));
    for (std::size_t i = 0; i < reset.size(); ++i) x[reset[i].slot] = values[i];
}

// --- trajectory -------------------------------------------------------------------------

namespace {

class Simulator {
public:
    Simulator(const CompiledTdsha& t, const SimulationConfig& cfg, RngStream& rng)
        : a_(t), cfg_(cfg), rng_(rng), n_(t.dim()), k1_(n_), k2_(n_), k3_(n_), k4_(n_), tmp_(n_) {
        if (cfg.stop_condition) stop_ = CompiledGuard(*cfg.stop_condition, t.slots());
    }

    Trace run() {
        cfg_.check();
        trace_.variables = a_.tdsha().variables;
        x_.assign(n_, 0.0);
        a_.apply(a_.init_reset(), x_, rng_);
        mode_ = a_.tdsha().init_mode;
        enter_mode();
        chain_ = 0;
        fire_chain();
        record_sample();
        bool stopped = should_stop();
        std::size_t steps = 0;
        std::vector<double> x1(n_), xt(n_);
        while (!stopped && t_end_left() > 0) {
            double h = std::min(cfg_.dt, t_end_left());
            rk4(x_, h, x1);
            atoms_at(x1, g1_);
            double lam1 = total_rate(x1);
            double h_end = hazard_ + 0.5 * (lam0_ + lam1) * h;
            bool td_hit = any_reached(g1_);
            bool ts_hit = h_end >= threshold_;
            if (!td_hit && !ts_hit) {
                now_ += h;
                x_.swap(x1);
                g0_.swap(g1_);
                lam0_ = lam1;
                hazard_ = h_end;
                chain_ = 0;
                if (cfg_.record_stride > 0 && ++steps % cfg_.record_stride == 0) record_sample();
                continue;
            }
            double tau_d = std::numeric_limits<double>::infinity();
            double tau_s = tau_d;
            if (td_hit)
                tau_d = bisect(h, [&](double tau) {
                    rk4(x_, tau, xt);
                    atoms_at(xt, gt_);
                    return any_reached(gt_);
                });
            if (ts_hit)
                tau_s = bisect(std::min(h, tau_d), [&](double tau) {
                    rk4(x_, tau, xt);
                    return hazard_ + 0.5 * (lam0_ + total_rate(xt)) * tau >= threshold_;
                });
            bool stochastic = tau_s < tau_d;
            double tau = stochastic ? tau_s : tau_d;
            rk4(x_, tau, xt);
            if (tau > 0) chain_ = 0;
            now_ += tau;
            if (stochastic) {
                x_.swap(xt);
                fire_stochastic();
            } else {
                atoms_at(xt, gt_);
                std::vector<double> g_start = g0_;
                x_.swap(xt);
                fire_reached(g_start, gt_);
            }
            fire_chain();
            if (cfg_.record_stride > 0) record_sample();
            stopped = should_stop();
        }
        if (trace_.samples.empty() || trace_.samples.back().t != now_) record_sample();
        trace_.t_stop = now_;
        trace_.final_state = x_;
        trace_.final_mode = mode_;
        return std::move(trace_);
    }

private:
    const CompiledTdsha& a_;
    const SimulationConfig& cfg_;
    RngStream& rng_;
    std::size_t n_;
    std::vector<double> x_, k1_, k2_, k3_, k4_, tmp_;
    std::vector<double> g0_, g1_, gt_;
    std::vector<std::size_t> offsets_;  // atom offset per instantaneous edge of the mode
    int mode_ = 0;
    double now_ = 0;
    double hazard_ = 0, threshold_ = 0, lam0_ = 0;
    std::size_t chain_ = 0;
    std::optional<CompiledGuard> stop_;
    Trace trace_;

    double t_end_left() const { return cfg_.t_end - now_; }

    bool should_stop() const {
        if (!stop_) return false;
        std::vector<double> g(stop_->atom_count());
        stop_->atoms(x_.data(), g.data());
        return stop_->holds(g.data());
    }

    void record_sample() { trace_.samples.push_back({now_, mode_, x_}); }

    void rk4(const std::vector<double>& x, double h, std::vector<double>& out) {
        if (h == 0) {
            out = x;
            return;
        }
        a_.vector_field(mode_, x.data(), k1_.data());
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + 0.5 * h * k1_[i];
        a_.vector_field(mode_, tmp_.data(), k2_.data());
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + 0.5 * h * k2_[i];
        a_.vector_field(mode_, tmp_.data(), k3_.data());
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * k3_[i];
        a_.vector_field(mode_, tmp_.data(), k4_.data());
        out.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = x[i] + h / 6.0 * (k1_[i] + 2 * k2_[i] + 2 * k3_[i] + k4_[i]);
    }

    void enter_mode() {
        const auto& edges = a_.edges(mode_).instantaneous;
        offsets_.assign(edges.size() + 1, 0);
        for (std::size_t i = 0; i < edges.size(); ++i)
            offsets_[i + 1] = offsets_[i] + a_.label(edges[i].first).guard.atom_count();
        g0_.assign(offsets_.back(), 0.0);
        g1_.assign(offsets_.back(), 0.0);
        gt_.assign(offsets_.back(), 0.0);
        atoms_at(x_, g0_);
        lam0_ = total_rate(x_);
        hazard_ = 0;
        threshold_ = -std::log(rng_.uniform01());
    }

    void atoms_at(const std::vector<double>& x, std::vector<double>& g) const {
        const auto& edges = a_.edges(mode_).instantaneous;
        for (std::size_t i = 0; i < edges.size(); ++i) a_.label(edges[i].first).guard.atoms(x.data(), g.data() + offsets_[i]);
    }

    bool any_reached(const std::vector<double>& g) const {
        const auto& edges = a_.edges(mode_).instantaneous;
        for (std::size_t i = 0; i < edges.size(); ++i)
            if (a_.label(edges[i].first).guard.reached(g0_.data() + offsets_[i], g.data() + offsets_[i])) return true;
        return false;
    }

    double edge_rate(int label, const std::vector<double>& x) const {
        const auto& l = a_.label(label);
        if (!l.guard.is_true()) {
            std::vector<double> g(l.guard.atom_count());
            l.guard.atoms(x.data(), g.data());
            if (!l.guard.holds(g.data())) return 0.0;
        }
        double r = l.rate.eval(x.data());
        if (r < 0 || std::isnan(r)) throw EvalError("rate of '" + l.event + "' is negative: " + std::to_string(r));
        return r;
    }

    double total_rate(const std::vector<double>& x) const {
        double s = 0;
        for (const auto& [label, target] : a_.edges(mode_).stochastic) s += edge_rate(label, x);
        return s;
    }

    template <class Pred>
    double bisect(double h, Pred reached) {
        double lo = 0, hi = h;
        while (hi - lo > cfg_.root_tol) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (reached(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return hi;
    }

    void jump(int label, int target, JumpKind kind) {
        const auto& l = a_.label(label);
        Jump j{now_, l.event, kind, x_, {}, mode_, target};
        a_.apply(l.reset, x_, rng_);
        j.post = x_;
        trace_.jumps.push_back(std::move(j));
        mode_ = target;
        enter_mode();
    }

    void count_chain() {
        if (++chain_ > cfg_.chain_cap)
            throw ChainCapExceeded(now_, "more than " + std::to_string(cfg_.chain_cap) +
                                           " instantaneous jumps at time " + std::to_string(now_));
    }

    std::size_t pick(const std::vector<double>& weights) {
        double total = 0;
        for (double w : weights) total += w;
        double u = rng_.uniform01() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] <= 0) continue;
            if (u < weights[i]) return i;
            u -= weights[i];
        }
        for (std::size_t i = weights.size(); i-- > 0;)
            if (weights[i] > 0) return i;
        return 0;
    }

    void fire_stochastic() {
        const auto& edges = a_.edges(mode_).stochastic;
        std::vector<double> rates;
        for (const auto& [label, target] : edges) rates.push_back(edge_rate(label, x_));
        double total = 0;
        for (double r : rates) total += r;
        if (total <= 0) return;
        auto i = pick(rates);
        jump(edges[i].first, edges[i].second, JumpKind::Stochastic);
    }

    void fire_reached(const std::vector<double>& g_start, const std::vector<double>& g_end) {
        const auto& edges = a_.edges(mode_).instantaneous;
        std::vector<double> weights(edges.size(), 0.0);
        bool any = false;
        for (std::size_t i = 0; i < edges.size(); ++i)
            if (a_.label(edges[i].first).guard.reached(g_start.data() + offsets_[i], g_end.data() + offsets_[i])) {
                weights[i] = a_.label(edges[i].first).weight;
                any = true;
            }
        if (!any) return;
        auto i = pick(weights);
        a_.label(edges[i].first).guard.snap(g_start.data() + offsets_[i], g_end.data() + offsets_[i], x_.data());
        count_chain();
        jump(edges[i].first, edges[i].second, JumpKind::Instantaneous);
    }

    // instantaneous edges whose guard holds at the current point fire at once
    void fire_chain() {
        for (;;) {
            const auto& edges = a_.edges(mode_).instantaneous;
            std::vector<double> weights(edges.size(), 0.0);
            bool any = false;
            for (std::size_t i = 0; i < edges.size(); ++i)
                if (a_.label(edges[i].first).guard.holds(g0_.data() + offsets_[i])) {
                    weights[i] = a_.label(edges[i].first).weight;
                    any = true;
                }
            if (!any) return;
            auto i = pick(weights);
            count_chain();
            jump(edges[i].first, edges[i].second, JumpKind::Instantaneous);
        }
    }
};

}  // namespace

Trace simulate_trajectory(const CompiledTdsha& t, const SimulationConfig& cfg, RngStream& rng) {
    return Simulator(t, cfg, rng).run();
}

// --- replications -----------------------------------------------------------------------

void Moments::add(double v) {
    n += 1;
    double d = v - mean;
    mean += d / n;
    m2 += d * (v - mean);
}

void Moments::merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
        *this = o;
        return;
    }
    double total = n + o.n;
    double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
}

double Moments::sd() const { return std::sqrt(variance()); }

namespace {

std::vector<double> make_grid(const SimulationConfig& cfg) {
    double step = cfg.grid_step > 0 ? cfg.grid_step : cfg.t_end / 100.0;
    std::vector<double> grid;
    if (step <= 0) return {0.0};
    for (std::size_t i = 0;; ++i) {
        double g = static_cast<double>(i) * step;
        if (g > cfg.t_end * (1 + 1e-12)) break;
        grid.push_back(std::min(g, cfg.t_end));
    }
    return grid;
}

// values carried forward at each grid point, [grid][variable]
std::vector<std::vector<double>> grid_values(const Trace& tr, const std::vector<double>& grid) {
    struct Entry {
        double t;
        int order;
        const std::vector<double>* x;
    };
    std::vector<Entry> timeline;
    for (const auto& j : tr.jumps) timeline.push_back({j.t, 0, &j.post});
    for (const auto& s : tr.samples) timeline.push_back({s.t, 1, &s.x});
    if (!tr.final_state.empty()) timeline.push_back({tr.t_stop, 2, &tr.final_state});
    std::stable_sort(timeline.begin(), timeline.end(), [](const Entry& a, const Entry& b) {
        return a.t < b.t || (a.t == b.t && a.order < b.order);
    });
    std::vector<std::vector<double>> out;
    std::size_t k = 0;
    const std::vector<double>* last = timeline.empty() ? nullptr : timeline.front().x;
    for (double g : grid) {
        while (k < timeline.size() && timeline[k].t <= g) last = timeline[k++].x;
        out.push_back(last ? *last : std::vector<double>(tr.variables.size(), 0.0));
    }
    return out;
}

}  // namespace

Summary summarize(const std::vector<const Trace*>& traces, const SimulationConfig& cfg) {
    Summary s;
    s.grid = make_grid(cfg);
    if (!traces.empty()) s.variables = traces.front()->variables;
    s.stats.assign(s.grid.size(), std::vector<Moments>(s.variables.size()));
    for (const Trace* tr : traces) {
        auto values = grid_values(*tr, s.grid);
        for (std::size_t g = 0; g < s.grid.size(); ++g)
            for (std::size_t v = 0; v < s.variables.size(); ++v) s.stats[g][v].add(values[g][v]);
    }
    return s;
}

ReplicationResult run_replications(const CompiledTdsha& t, const SimulationConfig& cfg) {
    cfg.check();
    ReplicationResult result;
    result.summary.variables = t.tdsha().variables;
    result.summary.grid = make_grid(cfg);
    result.summary.stats.assign(result.summary.grid.size(), std::vector<Moments>(result.summary.variables.size()));

    struct Slot {
        std::optional<Trace> trace;
        std::string error;
        std::optional<double> chain_cap_time;
        std::vector<std::vector<double>> grid;
    };
    const std::size_t chunk = 256;
    unsigned threads = std::max(1u, cfg.threads);
    for (std::size_t base = 0; base < cfg.replication_count; base += chunk) {
        std::size_t count = std::min(chunk, cfg.replication_count - base);
        std::vector<Slot> slots(count);
        std::atomic<std::size_t> next{0};
        auto work = [&]() {
            for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                RngStream rng(cfg.master_seed, base + i);
                try {
                    Trace tr = simulate_trajectory(t, cfg, rng);
                    slots[i].grid = grid_values(tr, result.summary.grid);
                    slots[i].trace = std::move(tr);
                } catch (const ChainCapExceeded& e) {
                    slots[i].error = e.what();
                    slots[i].chain_cap_time = e.time();
                } catch (const Error& e) {
                    slots[i].error = e.what();
                }
            }
        };
        if (threads == 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (unsigned k = 0; k < threads; ++k) pool.emplace_back(work);
            for (auto& th : pool) th.join();
        }
        for (std::size_t i = 0; i < count; ++i) {
            auto& s = slots[i];
            if (!s.trace) {
                result.failures.push_back({base + i, s.error, s.chain_cap_time});
                continue;
            }
            for (std::size_t g = 0; g < s.grid.size(); ++g)
                for (std::size_t v = 0; v < s.grid[g].size(); ++v) result.summary.stats[g][v].add(s.grid[g][v]);
            result.terminal.push_back(s.trace->final_state);
            result.stop_times.push_back(s.trace->t_stop);
            if (cfg.keep_traces) result.traces.push_back(std::move(*s.trace));
        }
    }
    return result;
}

std::vector<SweepRow> sweep_parameter(const Model& model, const std::string& param, const std::vector<double>& values,
                                      const Expr& cost, const SimulationConfig& cfg) {
    bool declared = std::any_of(model.params.begin(), model.params.end(), [&](const auto& p) { return p.first == param; });
    if (!declared) throw UnknownParameter("unknown parameter '" + param + "'");
    std::vector<SweepRow> rows;
    for (double value : values) {
        std::map<std::string, double> overrides{{param, value}};
        auto pv = parameter_values(model, overrides);
        Model inst = instantiate(model, overrides);
        auto tdsha = std::make_shared<Tdsha>(build_tdsha(inst));
        CompiledTdsha compiled(tdsha);
        ExprSubstitution subst = [&](const std::string& n) -> std::optional<Expr> {
            auto it = pv.find(n);
            if (it == pv.end()) return std::nullopt;
            return Expr::number(it->second);
        };
        SimulationConfig run = cfg;
        run.keep_traces = false;
        if (cfg.stop_condition) run.stop_condition = substitute(*cfg.stop_condition, subst);
        auto res = run_replications(compiled, run);
        Moments m;
        for (const auto& x : res.terminal) {
            std::map<std::string, double> val = pv;
            for (std::size_t i = 0; i < tdsha->variables.size(); ++i) val[tdsha->variables[i]] = x[i];
            for (const auto& [name, e] : inst.measures) val[name] = eval_expression(e, val);
            m.add(eval_expression(cost, val));
        }
        rows.push_back({value, m.mean, m.n > 0 ? m.sd() / std::sqrt(m.n) : 0.0, static_cast<std::size_t>(m.n),
                        res.failures.size()});
    }
    return rows;
}

// --- CSV ----------------------------------------------------------------------------------

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string trace_to_csv(const Trace& trace) {
    std::string out = "t,mode";
    for (const auto& v : trace.variables) out += "," + v;
    out += ",event\n";
    auto row = [&](double t, int mode, const std::vector<double>& x, const std::string& ev) {
        out += g17(t) + "," + std::to_string(mode);
        for (double v : x) out += "," + g17(v);
        out += "," + ev + "\n";
    };
    std::size_t j = 0;
    for (const auto& s : trace.samples) {
        while (j < trace.jumps.size() && trace.jumps[j].t <= s.t) {
            const auto& jp = trace.jumps[j++];
            row(jp.t, jp.mode_after, jp.post, jp.event);
        }
        row(s.t, s.mode, s.x, "");
    }
    for (; j < trace.jumps.size(); ++j) row(trace.jumps[j].t, trace.jumps[j].mode_after, trace.jumps[j].post, trace.jumps[j].event);
    return out;
}

std::string summary_to_csv(const Summary& s) {
    std::string out = "t";
    for (const auto& v : s.variables) out += "," + v + "_mean," + v + "_sd";
    out += "\n";
    for (std::size_t g = 0; g < s.grid.size(); ++g) {
        out += g17(s.grid[g]);
        for (const auto& m : s.stats[g]) out += "," + g17(m.mean) + "," + g17(m.sd());
        out += "\n";
    }
    return out;
}

std::string sweep_to_csv(const std::string& param, const std::vector<SweepRow>& rows) {
    std::string out = param + ",mean_cost,std_error,replications,failures\n";
    for (const auto& r : rows)
        out += g17(r.value) + "," + g17(r.mean_cost) + "," + g17(r.std_error) + "," + std::to_string(r.replications) +
               "," + std::to_string(r.failures) + "\n";
    return out;
}

}  // namespace shype
