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

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "shype/equivalence.hpp"
#include "shype/parser.hpp"
#include "shype/simulate.hpp"
#include "shype/tdsha.hpp"

using namespace shype;

namespace {

enum Exit { kOk = 0, kFail = 1, kInput = 2, kChain = 3, kUnknown = 4 };

struct Failure {
    int code;
    std::string message;
};

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure{kInput, path + ": cannot open for writing"};
    out << text;
}

Model read_model(const std::string& path) {
    try {
        return load_model(path);
    } catch (const ParseError& e) {
        std::string msg;
        for (const auto& d : e.diagnostics()) msg += format_diagnostic(d) + "\n";
        throw Failure{kInput, msg};
    } catch (const Error& e) {
        throw Failure{kInput, e.what()};
    }
}

std::map<std::string, double> overrides_of(const std::vector<std::string>& sets) {
    std::map<std::string, double> out;
    for (const auto& s : sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) throw Failure{kInput, "--set expects name=value, got '" + s + "'"};
        try {
            out[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
        } catch (const std::exception&) {
            throw Failure{kInput, "--set: '" + s.substr(eq + 1) + "' is not a number"};
        }
    }
    return out;
}

// parsed, checked for well-definedness, parameters overridden
Model checked_model(const std::string& path, const std::vector<std::string>& sets = {}) {
    Model m = read_model(path);
    auto report = validate_well_defined(m);
    if (!report.ok()) {
        std::string msg;
        for (const auto& v : report.violations) msg += path + ": " + v.clause + ": " + v.message + "\n";
        throw Failure{kFail, msg};
    }
    if (sets.empty()) return m;
    try {
        return instantiate(m, overrides_of(sets));
    } catch (const UnknownParameter& e) {
        throw Failure{kInput, e.what()};
    }
}

struct SimFlags {
    double t_end = 100.0;
    double dt = 1e-3;
    double root_tol = 1e-9;
    std::uint64_t seed = 0;
    std::size_t reps = 1;
    std::size_t chain_cap = 1000;
    std::size_t stride = 10;
    double grid = 0.0;
    unsigned threads = 1;
    std::string stop;
    std::vector<std::string> sets;

    void add(CLI::App* app, bool traces) {
        app->add_option("--seed", seed, "Master seed")->required();
        app->add_option("--t-end", t_end, "Simulation horizon");
        app->add_option("--dt", dt, "Integration step");
        app->add_option("--root-tol", root_tol, "Guard localisation tolerance");
        app->add_option("--reps", reps, "Number of replications");
        app->add_option("--chain-cap", chain_cap, "Longest chain of simultaneous jumps");
        if (traces) {
            app->add_option("--record-stride", stride, "Integration steps between samples (0: first and last only)");
            app->add_option("--grid-step", grid, "Summary grid step (0: t-end / 100)");
        }
        app->add_option("--threads", threads, "Worker threads for replications");
        app->add_option("--stop", stop, "Condition that ends a replication (default: none)");
        app->add_option("--set", sets, "Parameter override name=value (repeatable)");
    }

    SimulationConfig config() const {
        SimulationConfig c;
        c.t_end = t_end;
        c.dt = dt;
        c.root_tol = root_tol;
        c.master_seed = seed;
        c.replication_count = reps;
        c.chain_cap = chain_cap;
        c.record_stride = stride;
        c.grid_step = grid;
        c.threads = threads;
        if (!stop.empty()) {
            try {
                c.stop_condition = parse_formula(stop);
            } catch (const ParseError& e) {
                throw Failure{kInput, "--stop: " + format_diagnostic(e.diagnostics().at(0))};
            }
        }
        try {
            c.check();
        } catch (const Error& e) {
            throw Failure{kInput, e.what()};
        }
        return c;
    }
};

std::string numbered(const std::string& path, std::size_t i) {
    std::filesystem::path p(path);
    return (p.parent_path() / (p.stem().string() + "_" + std::to_string(i) + p.extension().string())).string();
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Failure{kInput, "--values: '" + item + "' is not a number"};
        }
    }
    if (out.empty()) throw Failure{kInput, "--values is empty"};
    return out;
}

std::vector<TermPair> read_relation(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Failure{kInput, path + ": cannot open"};
    std::vector<TermPair> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto sep = line.find('~');
        if (sep == std::string::npos) throw Failure{kInput, path + ": expected 'left ~ right' in '" + line + "'"};
        out.emplace_back(line.substr(0, sep), line.substr(sep + 1));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic HYPE models: validation, semantics, simulation and equivalence checking"};
    app.name("shype");
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.set_version_flag("--version", "shype 1.0.0");

    std::string model, other, out = "-", format = "json", method = "sos", equiv = "eq", relation, param, values, cost;
    bool no_prune = false, summary = false;
    std::vector<std::string> sets;
    SimFlags sim;

    auto* validate = app.add_subcommand("validate", "Check that a model is well defined");
    validate->add_option("model", model, "Model file")->required();

    auto* lts = app.add_subcommand("lts", "Write the labelled transition system");
    lts->add_option("model", model, "Model file")->required();
    lts->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "dot"}));
    lts->add_option("--out", out, "Output file (- for standard output)");
    lts->add_option("--set", sets, "Parameter override name=value (repeatable)");

    auto* tdsha = app.add_subcommand("tdsha", "Write the hybrid automaton");
    tdsha->add_option("model", model, "Model file")->required();
    tdsha->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "dot"}));
    tdsha->add_option("--method", method, "Mapping")->check(CLI::IsMember({"sos", "compositional"}));
    tdsha->add_flag("--no-prune", no_prune, "Keep unreachable modes of the compositional mapping (default: off)");
    tdsha->add_option("--out", out, "Output file (- for standard output)");
    tdsha->add_option("--set", sets, "Parameter override name=value (repeatable)");

    auto* simulate = app.add_subcommand("simulate", "Simulate replications and write CSV");
    simulate->add_option("model", model, "Model file")->required();
    simulate->add_option("--out", out, "Output file (- for standard output); several traces go to FILE_<i>");
    simulate->add_flag("--summary", summary, "Write mean and standard deviation on a time grid (default: off)");
    sim.add(simulate, true);

    auto* bisim = app.add_subcommand("bisim", "Check two models for bisimilarity");
    bisim->add_option("left", model, "First model")->required();
    bisim->add_option("right", other, "Second model")->required();
    bisim->add_option("--equiv", equiv, "State equivalence; system for strict system bisimulation")
        ->check(CLI::IsMember({"eq", "doteq", "system"}));
    bisim->add_option("--relation", relation, "Verify this relation instead, lines 'left ~ right' (default: none)");
    bisim->add_option("--out", out, "JSON report file (- for standard output)");

    auto* wellbehaved = app.add_subcommand("wellbehaved", "Check that a model cannot run instantaneous Zeno chains");
    wellbehaved->add_option("model", model, "Model file")->required();
    wellbehaved->add_option("--out", out, "JSON report file (- for standard output)");

    auto* sweep = app.add_subcommand("sweep", "Mean cost over values of one parameter");
    sweep->add_option("model", model, "Model file")->required();
    sweep->add_option("--param", param, "Parameter to vary")->required();
    sweep->add_option("--values", values, "Comma separated values")->required();
    sweep->add_option("--cost", cost, "Cost expression over variables, measures and parameters")->required();
    sweep->add_option("--out", out, "CSV file (- for standard output)");
    sim.add(sweep, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kInput;
    }

    try {
        if (*validate) {
            Model m = read_model(model);
            auto report = validate_well_defined(m);
            for (const auto& v : report.violations) std::cerr << model << ": " << v.clause << ": " << v.message << "\n";
            if (!report.ok()) return kFail;
            std::cerr << model << ": well defined\n";
            return kOk;
        }
        if (*lts) {
            Model m = checked_model(model, sets);
            Lts l = build_lts(m);
            emit(format == "json" ? lts_to_json(l) : lts_to_dot(l), out);
            std::cerr << l.configs.size() << " configurations, " << l.distinct_states() << " states, "
                      << l.transitions.size() << " transitions\n";
            return kOk;
        }
        if (*tdsha) {
            Model m = checked_model(model, sets);
            Tdsha t;
            if (method == "sos") {
                t = build_tdsha(m, MappingMethod::Sos);
            } else if (no_prune) {
                t = compositional_mapping(instantiate(expand_general_durations(m)));
            } else {
                t = build_tdsha(m, MappingMethod::Compositional);
            }
            emit(format == "json" ? tdsha_to_json(t) : tdsha_to_dot(t), out);
            std::cerr << t.modes.size() << " modes, " << t.instantaneous.size() << " instantaneous and "
                      << t.stochastic.size() << " stochastic edges\n";
            return kOk;
        }
        if (*simulate) {
            Model m = checked_model(model, sim.sets);
            SimulationConfig cfg = sim.config();
            cfg.keep_traces = !summary;
            CompiledTdsha ct(std::make_shared<Tdsha>(build_tdsha(m)));
            auto res = run_replications(ct, cfg);
            for (const auto& f : res.failures) {
                std::cerr << "replication " << f.replication << ": " << f.message << "\n";
                if (f.chain_cap_time) {
                    std::cerr << "chain cap exceeded at t = " << *f.chain_cap_time << "\n";
                    return kChain;
                }
            }
            if (!res.failures.empty()) return kFail;
            if (summary) {
                emit(summary_to_csv(res.summary), out);
            } else if (res.traces.size() == 1 || out == "-") {
                for (const auto& tr : res.traces) emit(trace_to_csv(tr), out);
            } else {
                for (std::size_t i = 0; i < res.traces.size(); ++i) emit(trace_to_csv(res.traces[i]), numbered(out, i));
            }
            return kOk;
        }
        if (*bisim) {
            Model p = read_model(model), q = read_model(other);
            Lts lp = build_lts(expand_general_durations(p)), lq = build_lts(expand_general_durations(q));
            StateEquivKind kind = equiv == "doteq" ? StateEquivKind::DotEq : StateEquivKind::Equality;
            if (!relation.empty()) {
                auto pairs = read_relation(relation);
                auto v = verify_relation(lp, lq, pairs, kind);
                nlohmann::json j{{"verified", v.verified}};
                if (!v.verified) {
                    j["pair"] = {pairs[*v.pair].first, pairs[*v.pair].second};
                    j["reason"] = v.reason;
                    std::cerr << "violation at pair " << *v.pair + 1 << ": " << v.reason << "\n";
                }
                emit(j.dump(2) + "\n", out);
                return v.verified ? kOk : kFail;
            }
            BisimResult r = equiv == "system" ? check_system_bisim(lp, lq) : check_stochastic_system_bisim(lp, lq, kind);
            emit(bisim_to_json(r, lp, lq) + "\n", out);
            if (r.bisimilar) {
                std::cerr << "bisimilar, " << r.partition.blocks.size() << " classes\n";
                return kOk;
            }
            std::cerr << "not bisimilar";
            if (!r.witness->events.empty()) {
                std::cerr << " after";
                for (const auto& e : r.witness->events) std::cerr << " " << e;
            }
            std::cerr << ": " << r.witness->reason << "\n";
            return kFail;
        }
        if (*wellbehaved) {
            Model m = checked_model(model);
            auto v = check_well_behaved(m);
            emit(well_behaved_to_json(v) + "\n", out);
            std::cerr << (v.verdict == Behaviour::WellBehaved ? "well behaved: " : "unknown: ") << v.reason << "\n";
            for (const auto& c : v.cycles) {
                std::cerr << "  cycle:";
                for (const auto& e : c) std::cerr << " " << e;
                std::cerr << "\n";
            }
            return v.verdict == Behaviour::WellBehaved ? kOk : kUnknown;
        }
        if (*sweep) {
            Model m = checked_model(model, sim.sets);
            SimulationConfig cfg = sim.config();
            cfg.record_stride = 0;
            Expr c;
            try {
                c = parse_expression(cost);
            } catch (const ParseError& e) {
                throw Failure{kInput, "--cost: " + format_diagnostic(e.diagnostics().at(0))};
            }
            auto rows = sweep_parameter(m, param, parse_values(values), c, cfg);
            emit(sweep_to_csv(param, rows), out);
            auto best = std::min_element(rows.begin(), rows.end(),
                                         [](const SweepRow& a, const SweepRow& b) { return a.mean_cost < b.mean_cost; });
            std::cerr << "minimum mean cost " << best->mean_cost << " at " << param << " = " << best->value << "\n";
            for (const auto& r : rows)
                if (r.failures) return kFail;
            return kOk;
        }
    } catch (const Failure& f) {
        std::cerr << f.message;
        if (!f.message.empty() && f.message.back() != '\n') std::cerr << "\n";
        return f.code;
    } catch (const ChainCapExceeded& e) {
        std::cerr << "chain cap exceeded at t = " << e.time() << ": " << e.what() << "\n";
        return kChain;
    } catch (const UnknownParameter& e) {
        std::cerr << e.what() << "\n";
        return kInput;
    } catch (const ParseError& e) {
        for (const auto& d : e.diagnostics()) std::cerr << format_diagnostic(d) << "\n";
        return kInput;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kFail;
    }
    return kOk;
}
