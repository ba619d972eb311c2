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

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shype/compiled.hpp"
#include "shype/tdsha.hpp"

namespace shype {

struct SimulationConfig {
    double t_end = 100.0;
    double dt = 1e-3;
    double root_tol = 1e-9;
    std::uint64_t master_seed = 1;
    std::size_t replication_count = 1;
    std::size_t chain_cap = 1000;
    std::size_t record_stride = 10;  // integration steps between samples; 0 keeps only the first and last
    std::optional<Formula> stop_condition;  // checked after every chain of jumps
    double grid_step = 0.0;                 // summary grid; 0 means t_end / 100
    bool keep_traces = true;
    unsigned threads = 1;

    /// Throws Error when the invariants dt > 0, root_tol < dt, chain_cap >= 1 fail.
    void check() const;
};

enum class JumpKind { Instantaneous, Stochastic };

struct Sample {
    double t;
    int mode;
    std::vector<double> x;
};

struct Jump {
    double t;
    std::string event;
    JumpKind kind;
    std::vector<double> pre;
    std::vector<double> post;
    int mode_before;
    int mode_after;
};

struct Trace {
    std::vector<std::string> variables;
    std::vector<Sample> samples;
    std::vector<Jump> jumps;
    double t_stop = 0.0;
    std::vector<double> final_state;
    int final_mode = 0;
};

/// Automaton with every expression compiled; immutable and shareable.
class CompiledTdsha {
public:
    explicit CompiledTdsha(std::shared_ptr<const Tdsha> t);

    const Tdsha& tdsha() const { return *t_; }
    std::size_t dim() const { return t_->variables.size(); }
    const std::map<std::string, int>& slots() const { return slots_; }

    struct Flow {
        int slot;
        double stoichiometry;
        Program rate;
    };
    struct Assign {
        int slot;
        Program value;
    };
    struct Label {
        std::string event;
        bool stochastic;
        CompiledGuard guard;
        std::vector<Assign> reset;
        double weight;
        Program rate;
    };
    struct ModeEdges {
        std::vector<std::pair<int, int>> instantaneous;  // (label, target)
        std::vector<std::pair<int, int>> stochastic;
    };

    const std::vector<Flow>& flows(int mode) const { return flows_[mode]; }
    const ModeEdges& edges(int mode) const { return edges_[mode]; }
    const Label& label(int i) const { return labels_[i]; }
    const std::vector<Assign>& init_reset() const { return init_; }

    void vector_field(int mode, const double* x, double* dx) const;
    /// Applies a reset simultaneously: right-hand sides read the pre-valuation.
    void apply(const std::vector<Assign>& reset, std::vector<double>& x, RngStream& rng) const;

private:
    std::shared_ptr<const Tdsha> t_;
    std::map<std::string, int> slots_;
    std::vector<std::vector<Flow>> flows_;
    std::vector<ModeEdges> edges_;
    std::vector<Label> labels_;
    std::vector<Assign> init_;
};

/// One trajectory of the piecewise-deterministic process. Throws
/// ChainCapExceeded, EvalError and BadParameter.
Trace simulate_trajectory(const CompiledTdsha& t, const SimulationConfig& cfg, RngStream& rng);

struct Moments {
    double n = 0, mean = 0, m2 = 0;
    void add(double v);
    void merge(const Moments& o);
    double variance() const { return n > 1 ? m2 / (n - 1) : 0.0; }
    double sd() const;
};

struct Summary {
    std::vector<std::string> variables;
    std::vector<double> grid;
    std::vector<std::vector<Moments>> stats;  // [grid point][variable]
};

struct ReplicationFailure {
    std::size_t replication;
    std::string message;
    std::optional<double> chain_cap_time;  // set when the chain cap was hit
};

struct ReplicationResult {
    std::vector<Trace> traces;  // empty unless keep_traces
    Summary summary;
    std::vector<std::vector<double>> terminal;  // per successful replication
    std::vector<double> stop_times;
    std::vector<ReplicationFailure> failures;
};

/// Replication i uses stream (master_seed, i); results do not depend on the
/// number of threads.
ReplicationResult run_replications(const CompiledTdsha& t, const SimulationConfig& cfg);

/// Last-sample-carried-forward summary on the configured grid.
Summary summarize(const std::vector<const Trace*>& traces, const SimulationConfig& cfg);

struct SweepRow {
    double value;
    double mean_cost;
    double std_error;
    std::size_t replications;
    std::size_t failures;
};

/// For each value rebuilds the automaton with `param` overridden and reports
/// the mean of `cost` over terminal valuations. The cost may use variables,
/// measures and parameters; the stop condition may use parameters.
/// Throws UnknownParameter.
std::vector<SweepRow> sweep_parameter(const Model& model, const std::string& param, const std::vector<double>& values,
                                      const Expr& cost, const SimulationConfig& cfg);

std::string trace_to_csv(const Trace& trace);
std::string summary_to_csv(const Summary& summary);
std::string sweep_to_csv(const std::string& param, const std::vector<SweepRow>& rows);

}  // namespace shype
