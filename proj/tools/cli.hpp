#pragma once

#include <cctype>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "momdp/momdp.hpp"

namespace momdp::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kIntractable = 3 };

inline Belief parse_belief(const std::string& text, std::size_t num_e) {
    std::vector<double> v;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            v.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw UsageError("bad belief entry '" + item + "'");
        }
    }
    if (v.size() != num_e)
        throw UsageError("belief has " + std::to_string(v.size()) + " entries, expected " + std::to_string(num_e));
    return Belief(std::move(v));
}

inline std::string format_fixed(double x, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

struct GridArgs {
    std::string grid;
    std::string sidecar;
    grid::CompiledGrid load() const { return grid::compile_grid(io::load_grid(grid, sidecar)); }
};

inline void write_trace_header(std::ostream& os, std::size_t num_e) {
    os << "rollout_id,k,s,a,z";
    for (std::size_t e = 0; e < num_e; ++e) os << ",b" << e;
    os << ",outcome\n";
}

inline void write_trace_rows(std::ostream& os, std::size_t id, const RolloutRecord& rec, std::size_t num_e) {
    os << std::setprecision(17);
    for (const auto& step : rec.trajectory) {
        os << id << ',' << step.k << ',' << step.s << ',' << step.a << ',' << step.z;
        for (std::size_t e = 0; e < num_e; ++e) os << ',' << step.belief[e];
        os << ',' << to_string(rec.outcome) << '\n';
    }
    if (rec.trajectory.empty()) {
        os << id << ",0,,,";
        for (std::size_t e = 0; e < num_e; ++e) os << ',';
        os << to_string(rec.outcome) << '\n';
    }
}

inline std::string label(Variant v) {
    std::string s = to_string(v);
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

inline void print_metrics(std::ostream& out, const RunMetrics& r) {
    out << "rollouts:         " << r.rollout_count << '\n'
        << "expected_time:    " << format_fixed(r.expected_time, 4) << " +- " << format_fixed(r.time_halfwidth, 4) << '\n'
        << "failure_rate:     " << format_fixed(r.failure_rate, 6) << " +- " << format_fixed(r.confidence_halfwidth, 6)
        << " (collisions " << r.collisions << ", timeouts " << r.timeouts << ")\n"
        << "failure_bound:    " << (r.failure_bound ? format_fixed(*r.failure_bound, 6) : std::string("N/A")) << '\n';
}

/// One row per policy. Timing columns are wall-clock and only emitted on request.
inline void write_comparison(std::ostream& out, const std::string& world, const std::vector<ComparisonRow>& rows,
                             bool csv, bool timing) {
    if (csv) {
        out << "grid_world,policy,exp_time,prob_failure,failure_bound,rollouts,failure_halfwidth,time_halfwidth";
        if (timing) out << ",total_time_s,backup_time_ms";
        out << '\n';
        for (const auto& row : rows) {
            const auto& r = row.metrics;
            out << world << ',' << label(row.variant) << ',' << format_fixed(r.expected_time, 6) << ','
                << format_fixed(r.failure_rate, 6) << ','
                << (r.failure_bound ? format_fixed(*r.failure_bound, 6) : std::string("N/A")) << ','
                << r.rollout_count << ',' << format_fixed(r.confidence_halfwidth, 6) << ','
                << format_fixed(r.time_halfwidth, 6);
            if (timing) out << ',' << format_fixed(r.synth_total_time, 3) << ',' << format_fixed(r.backup_time, 4);
            out << '\n';
        }
        return;
    }
    out << std::left << std::setw(22) << "Grid World" << std::setw(10) << "Exp.Time" << std::setw(14) << "Prob.Failure"
        << std::setw(15) << "Failure Bound" << std::setw(15) << "Total Time[s]" << "Backup Time[ms]\n";
    for (const auto& row : rows) {
        const auto& r = row.metrics;
        std::string name = world + "^" + label(row.variant);
        std::string bound = r.failure_bound ? "<= " + format_fixed(100.0 * *r.failure_bound, 1) + "%" : "N/A";
        out << std::left << std::setw(22) << name << std::setw(10) << format_fixed(r.expected_time, 2) << std::setw(14)
            << (format_fixed(100.0 * r.failure_rate, 1) + "%") << std::setw(15) << bound << std::setw(15)
            << format_fixed(r.synth_total_time, 2) << format_fixed(r.backup_time, 3) << '\n';
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Time-optimal quantitative MOMDP synthesis and evaluation"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "compute a value-function stack");
    std::string model_path, stack_out, variant_name = "toq", belief_text;
    GridArgs synth_grid;
    std::size_t n_points = 64, state0 = 0, threads = 1, pair_cap = ExactOptions{}.pair_cap;
    std::uint64_t seed = 0;
    bool exact = false, quiet = false;
    auto* model_opt = synth_cmd->add_option("--model", model_path, "model JSON file");
    auto* grid_opt = synth_cmd->add_option("--grid", synth_grid.grid, "grid spec (JSON, or ASCII map with --sidecar)");
    model_opt->excludes(grid_opt);
    synth_cmd->add_option("--sidecar", synth_grid.sidecar, "sidecar JSON for an ASCII map");
    synth_cmd->add_option("--variant", variant_name, "toq | q | to")->check(CLI::IsMember({"toq", "q", "to"}));
    synth_cmd->add_option("--points", n_points, "number of belief points");
    synth_cmd->add_option("--seed", seed, "RNG seed for belief points");
    synth_cmd->add_option("--out", stack_out, "output stack JSON")->required();
    synth_cmd->add_option("--state", state0, "initial observable state (model input)");
    synth_cmd->add_option("--belief", belief_text, "initial belief, comma separated (model input)");
    synth_cmd->add_flag("--exact", exact, "exact support-pair recursion (TOQ) instead of point-based");
    synth_cmd->add_option("--pair-cap", pair_cap, "largest cross-sum the exact recursion may build");
    synth_cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
    synth_cmd->add_flag("--quiet", quiet, "no progress output");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a stack at (state, belief)");
    std::string eval_stack, eval_belief;
    std::size_t eval_state = 0, eval_stage = 0;
    eval_cmd->add_option("--stack", eval_stack, "stack JSON")->required();
    eval_cmd->add_option("--state", eval_state, "observable state")->required();
    eval_cmd->add_option("--belief", eval_belief, "belief, comma separated")->required();
    eval_cmd->add_option("--stage", eval_stage, "stage k (default 0)");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo evaluation of a stack on a grid");
    std::string sim_stack, trace_out;
    GridArgs sim_grid;
    std::size_t rollouts = 1000;
    std::uint64_t sim_seed = 0;
    bool stored_tags = false;
    sim_cmd->add_option("--stack", sim_stack, "stack JSON")->required();
    sim_cmd->add_option("--grid", sim_grid.grid, "grid spec")->required();
    sim_cmd->add_option("--sidecar", sim_grid.sidecar, "sidecar JSON for an ASCII map");
    sim_cmd->add_option("--rollouts", rollouts, "number of rollouts");
    sim_cmd->add_option("--seed", sim_seed, "RNG seed");
    sim_cmd->add_option("--trace-out", trace_out, "trajectory CSV");
    sim_cmd->add_flag("--stored-tags", stored_tags, "act on stored action tags instead of one-step lookahead");
    sim_cmd->add_option("--threads", threads, "worker threads (0 = all cores)");

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "TO / Q / TOQ comparison table");
    GridArgs cmp_grid;
    std::size_t cmp_points = 64, cmp_rollouts = 10000;
    std::uint64_t cmp_seed = 0;
    std::string format = "table", world_name;
    bool timing = false;
    cmp_cmd->add_option("--grid", cmp_grid.grid, "grid spec")->required();
    cmp_cmd->add_option("--sidecar", cmp_grid.sidecar, "sidecar JSON for an ASCII map");
    cmp_cmd->add_option("--points", cmp_points, "number of belief points");
    cmp_cmd->add_option("--rollouts", cmp_rollouts, "rollouts per policy");
    cmp_cmd->add_option("--seed", cmp_seed, "RNG seed (points and rollouts)");
    cmp_cmd->add_option("--format", format, "table | csv")->check(CLI::IsMember({"table", "csv"}));
    cmp_cmd->add_option("--name", world_name, "row label (default: grid dimensions and region count)");
    cmp_cmd->add_flag("--timing", timing, "include wall-clock columns in CSV output");
    cmp_cmd->add_option("--threads", threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*synth_cmd) {
            if (model_path.empty() && synth_grid.grid.empty()) throw UsageError("synth needs --model or --grid");
            MomdpModel model;
            std::size_t s0 = state0;
            Belief b0;
            if (!synth_grid.grid.empty()) {
                auto cg = synth_grid.load();
                s0 = cg.start_state;
                b0 = cg.initial_belief;
                model = std::move(cg.model);
            } else {
                model = io::read_model(io::read_file(model_path));
                require_valid(model);
                b0 = belief_text.empty() ? Belief::uniform(model.num_e()) : parse_belief(belief_text, model.num_e());
            }
            GammaStack stack;
            if (exact) {
                ExactOptions eo;
                eo.threads = threads;
                eo.pair_cap = pair_cap;
                stack = exact_synth(model, eo);
            } else {
                auto points = generate_belief_points(model, std::max(n_points, model.num_e()), seed, s0, b0);
                SynthOptions so;
                so.threads = threads;
                if (!quiet)
                    so.on_stage = [&err](std::size_t k, std::size_t n) { err << "\rstage " << k << "/" << n << std::flush; };
                SynthStats stats;
                stack = synth(model, points, parse_variant(variant_name), so, &stats);
                if (!quiet)
                    err << "\r" << points.size() << " points, " << stats.backups << " backups in "
                        << format_fixed(stats.seconds, 3) << " s\n";
            }
            io::write_file(stack_out, io::write_stack(stack));
            return kOk;
        }
        if (*eval_cmd) {
            GammaStack stack = io::read_stack(io::read_file(eval_stack));
            if (stack.stages.empty() || eval_state >= stack.stages[0].size()) throw UsageError("state out of range");
            std::size_t E = stack.stages[0][eval_state].front().alpha.size();
            Belief b = parse_belief(eval_belief, E);
            LexValue v = approx_values(stack, eval_stage, eval_state, b);
            out << std::setprecision(17);
            out << "V " << v.value << "\nJ " << v.constraint << "\nfailure_bound ";
            if (stack.variant == Variant::TO) out << "N/A\n";
            else out << std::clamp(1.0 - v.constraint, 0.0, 1.0) << '\n';
            return kOk;
        }
        if (*sim_cmd) {
            auto cg = sim_grid.load();
            GammaStack stack = io::read_stack(io::read_file(sim_stack));
            Policy policy(cg.model, std::move(stack), stored_tags ? ExecutionMode::StoredTags : ExecutionMode::Lookahead);
            MonteCarloOptions mc;
            mc.s0 = cg.start_state;
            mc.b0 = cg.initial_belief;
            mc.failure_states = {cg.fail_state};
            mc.threads = threads;
            std::ostringstream trace;
            if (!trace_out.empty()) {
                write_trace_header(trace, cg.model.num_e());
                mc.on_rollout = [&](std::size_t i, const RolloutRecord& rec) {
                    write_trace_rows(trace, i, rec, cg.model.num_e());
                };
            }
            RunMetrics r = monte_carlo(cg.model, policy, rollouts, EnvironmentSampler::from_grid(cg), sim_seed, mc);
            if (!trace_out.empty()) io::write_file(trace_out, trace.str());
            print_metrics(out, r);
            return kOk;
        }
        if (*cmp_cmd) {
            auto cg = cmp_grid.load();
            auto points = generate_belief_points(cg.model, std::max(cmp_points, cg.model.num_e()), cmp_seed,
                                                 cg.start_state, cg.initial_belief);
            CompareOptions co;
            co.threads = threads;
            co.synth.threads = threads;
            auto rows = compare(cg, points, cmp_rollouts, cmp_seed, co);
            if (world_name.empty())
                world_name = std::to_string(cg.spec.width) + "x" + std::to_string(cg.spec.height) + "_" +
                             std::to_string(cg.spec.regions.size());
            write_comparison(out, world_name, rows, format == "csv", timing);
            return kOk;
        }
    } catch (const IntractableError& e) {
        err << "error: " << e.what() << '\n';
        return kIntractable;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

}  // namespace momdp::cli
