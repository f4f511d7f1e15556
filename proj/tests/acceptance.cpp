// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "momdp/momdp.hpp"
#include "support/fixtures.hpp"

using namespace momdp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << "  AC" << id << " " << name << " -- " << detail << std::endl;
    if (!ok) ++failures;
}

std::string fmt(double x, int digits = 3) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << x;
    return os.str();
}

std::string sci(double x) {
    std::ostringstream os;
    os.precision(2);
    os << std::scientific << x;
    return os.str();
}

constexpr std::uint64_t kInstanceSeed0 = 1000;
constexpr std::size_t kInstances = 24;

std::vector<MomdpModel> instances() {
    std::vector<MomdpModel> out;
    for (std::uint64_t i = 0; i < kInstances; ++i) {
        auto shape = fixtures::random_small_shape(kInstanceSeed0 + i);
        shape.max_support = 2 + i % 2;
        out.push_back(fixtures::random_model(kInstanceSeed0 + i, shape));
    }
    return out;
}

void oracle_equivalence(const std::vector<MomdpModel>& models, const std::vector<GammaStack>& stacks, double secs) {
    auto t0 = Clock::now();
    CounterRng rng(1);
    double worst_j = 0.0, worst_t = 0.0;
    std::size_t checks = 0;
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto& m = models[i];
        for (std::size_t s = 0; s < m.num_s(); ++s) {
            std::vector<Belief> beliefs;
            for (std::size_t e = 0; e < m.num_e(); ++e) beliefs.push_back(Belief::vertex(m.num_e(), e));
            for (int t = 0; t < 3; ++t) beliefs.push_back(fixtures::random_belief(rng, m.num_e()));
            for (const auto& b : beliefs) {
                auto oracle = brute_force_oracle(m, s, b);
                auto lex = lexicographic_value(stacks[i].at(0, s), b);
                worst_j = std::max(worst_j, std::abs(lex.constraint - oracle.max_reach));
                worst_t = std::max(worst_t, std::abs(static_cast<double>(m.horizon() + 1) - lex.value -
                                                     oracle.min_out_of_target));
                ++checks;
            }
        }
    }
    double total = secs + seconds_since(t0);
    bool ok = models.size() >= 20 && worst_j <= 1e-10 && worst_t <= 1e-10 && total < 60.0;
    report(1, "oracle equivalence", ok,
           std::to_string(models.size()) + " instances, " + std::to_string(checks) + " (s0,b0) checks, max |dJ| " +
               sci(worst_j) + ", max |dT| " + sci(worst_t) + ", " + fmt(total) + " s");
}

void reach_recursion_agrees(const std::vector<MomdpModel>& models, const std::vector<GammaStack>& stacks) {
    CounterRng rng(2);
    double worst = 0.0;
    std::size_t checks = 0;
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto& m = models[i];
        auto q = quantitative_synth(m);
        for (std::size_t k = 0; k <= m.horizon(); ++k)
            for (std::size_t s = 0; s < m.num_s(); ++s)
                for (int t = 0; t < 50; ++t) {
                    Belief b = fixtures::random_belief(rng, m.num_e());
                    worst = std::max(worst, std::abs(upper_envelope(q[k][s], b.probs()) -
                                                     beta_envelope(stacks[i].at(k, s), b.probs())));
                    ++checks;
                }
    }
    report(2, "reach-only recursion equals beta envelope", worst <= 1e-10,
           std::to_string(checks) + " (k,s,b) checks, max diff " + sci(worst));
}

void lower_bound(const std::vector<MomdpModel>& models, const std::vector<GammaStack>& stacks) {
    auto t0 = Clock::now();
    CounterRng rng(3);
    double worst = -1.0;
    std::size_t checks = 0;
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto& m = models[i];
        std::vector<Belief> beliefs;
        for (int t = 0; t < 200; ++t) beliefs.push_back(fixtures::random_belief(rng, m.num_e()));
        for (std::size_t n : {m.num_e(), std::size_t{10}, std::size_t{50}}) {
            auto pts = generate_belief_points(m, n, kInstanceSeed0 + i, 0, Belief::uniform(m.num_e()));
            GammaStack pb = synth(m, pts, Variant::TOQ);
            for (std::size_t s = 0; s < m.num_s(); ++s)
                for (const auto& b : beliefs) {
                    double excess = approx_values(pb, 0, s, b).constraint - beta_envelope(stacks[i].at(0, s), b.probs());
                    worst = std::max(worst, excess);
                    ++checks;
                }
        }
    }
    double secs = seconds_since(t0);
    report(3, "point-based reach lower-bounds exact", worst <= 1e-9 && secs < 60.0,
           std::to_string(checks) + " checks over point sets {|E|,10,50}, max J - J* " + sci(worst) + ", " +
               fmt(secs) + " s");
}

RunMetrics run_toq(const grid::CompiledGrid& cg, std::size_t n_points, std::size_t rollouts, std::uint64_t seed) {
    auto pts = generate_belief_points(cg.model, std::max(n_points, cg.model.num_e()), seed, cg.start_state,
                                      cg.initial_belief);
    Policy pol(cg.model, synth(cg.model, pts, Variant::TOQ));
    MonteCarloOptions mc;
    mc.s0 = cg.start_state;
    mc.b0 = cg.initial_belief;
    mc.failure_states = {cg.fail_state};
    return monte_carlo(cg.model, pol, rollouts, EnvironmentSampler::from_grid(cg), seed, mc);
}

void mc_soundness() {
    auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    for (auto [file, points] : {std::pair<const char*, std::size_t>{"gate_1x3.json", 8}, {"grid_5x5_3.json", 64}}) {
        auto cg = grid::compile_grid(io::load_grid(std::string(MOMDP_WORLDS_DIR) + "/" + file));
        RunMetrics r = run_toq(cg, points, 10000, 17);
        bool pass = r.failure_rate <= *r.failure_bound + 3.0 * r.confidence_halfwidth;
        ok = ok && pass;
        detail += std::string(file) + ": failure " + fmt(r.failure_rate, 4) + " <= bound " + fmt(*r.failure_bound, 4) +
                  " + 3*" + fmt(r.confidence_halfwidth, 4) + (pass ? "" : " (violated)") + "; ";
    }
    double secs = seconds_since(t0);
    report(4, "Monte Carlo failure within certified bound", ok && secs < 120.0,
           detail + "10000 rollouts each, " + fmt(secs) + " s");
}

void table_pattern() {
    auto cg = grid::compile_grid(io::load_grid(std::string(MOMDP_WORLDS_DIR) + "/grid_5x5_3.json"));
    auto pts = generate_belief_points(cg.model, 64, 5, cg.start_state, cg.initial_belief);
    auto rows = compare(cg, pts, 10000, 5);
    const RunMetrics &to = rows[0].metrics, &q = rows[1].metrics, &toq = rows[2].metrics;
    bool eq_fail = std::abs(toq.failure_rate - q.failure_rate) <= toq.confidence_halfwidth + q.confidence_halfwidth;
    bool le_to = toq.failure_rate <= to.failure_rate;
    double gap = q.expected_time - toq.expected_time;
    bool ok = eq_fail && le_to && gap >= 5.0;
    report(5, "5x5 three-region comparison pattern", ok,
           "TO " + fmt(to.expected_time, 2) + " steps / " + fmt(100 * to.failure_rate, 2) + "%, Q " +
               fmt(q.expected_time, 2) + " / " + fmt(100 * q.failure_rate, 2) + "%, TOQ " + fmt(toq.expected_time, 2) +
               " / " + fmt(100 * toq.failure_rate, 2) + "% (bound " + fmt(100 * *toq.failure_bound, 2) +
               "%); Q - TOQ = " + fmt(gap, 2) + " steps");
}

void observation_formulas() {
    using namespace grid;
    bool exact = decay_observation_region(1) == 1.0 && decay_observation_region(2) == 0.8 &&
                 decay_observation_goal(0) == 1.0 && adjacency_accuracy({1, 1}, {{2, 2}}) == 0.8 &&
                 adjacency_observation({1, 1}, {{2, 2}}, true).free == 0.8 &&
                 adjacency_observation({2, 1}, {{2, 2}}, true).free == 1.0;
    // strictly decreasing while the excess over 0.5 is representable, never increasing after
    auto decays = [](double (*f)(double), double from) {
        bool ok = true;
        for (double d = from; d < 60.0; d += 0.25) {
            double here = f(d), next = f(d + 0.25);
            ok = ok && next <= here && here >= 0.5;
            if (here - 0.5 > 1e-14) ok = ok && next < here;
        }
        return ok;
    };
    bool monotone = decays(decay_observation_region, 2.0) && decays(decay_observation_goal, 0.25) &&
                    decay_observation_region(1.5) >= decay_observation_region(2.0);
    monotone = monotone && std::abs(decay_observation_region(80) - 0.5) < 1e-12 &&
               std::abs(decay_observation_goal(80) - 0.5) < 1e-12;
    report(6, "observation formulas", exact && monotone,
           "region(1)=" + fmt(decay_observation_region(1), 1) + " region(2)=" + fmt(decay_observation_region(2), 1) +
               " goal(0)=" + fmt(decay_observation_goal(0), 1) + " diagonal=0.8, monotone decay to 0.5: " +
               (monotone ? "yes" : "no"));
}

void filter_properties() {
    auto t0 = Clock::now();
    CounterRng rng(7);
    double worst_norm = 0.0, worst_total = 0.0, worst_mix = 0.0;
    bool nonneg = true;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        auto shape = fixtures::random_small_shape(50000 + i);
        shape.num_e = 1 + i % 4;
        shape.max_support = 1 + i % 3;
        MomdpModel m = fixtures::random_model(50000 + i, shape);
        Belief b = fixtures::random_belief(rng, m.num_e());
        std::size_t s = rng.below(m.num_s()), a = rng.below(m.num_a());
        double total = 0.0;
        std::vector<double> mixture(m.num_e(), 0.0), predicted(m.num_e(), 0.0);
        for (std::size_t sp = 0; sp < m.num_s(); ++sp)
            for (std::size_t z = 0; z < m.num_z(); ++z) {
                double p = joint_likelihood(m, s, b, a, sp, z);
                total += p;
                for (std::size_t e = 0; e < m.num_e(); ++e)
                    for (std::size_t ep = 0; ep < m.num_e(); ++ep)
                        predicted[ep] += b[e] * kernel_f(m, s, e, a, sp, ep, z);
                if (p == 0.0) continue;
                Belief next = belief_update(m, s, b, a, sp, z);
                double sum = 0.0;
                for (std::size_t ep = 0; ep < m.num_e(); ++ep) {
                    nonneg = nonneg && next[ep] >= 0.0;
                    sum += next[ep];
                    mixture[ep] += p * next[ep];
                }
                worst_norm = std::max(worst_norm, std::abs(sum - 1.0));
            }
        worst_total = std::max(worst_total, std::abs(total - 1.0));
        for (std::size_t ep = 0; ep < m.num_e(); ++ep)
            worst_mix = std::max(worst_mix, std::abs(mixture[ep] - predicted[ep]));
    }
    double secs = seconds_since(t0);
    bool ok = nonneg && worst_norm <= 1e-12 && worst_total <= 1e-12 && worst_mix <= 1e-10 && secs < 10.0;
    report(7, "belief filter properties", ok,
           "1000 triples, normalization " + sci(worst_norm) + ", total probability " + sci(worst_total) +
               ", mixture " + sci(worst_mix) + ", " + fmt(secs) + " s");
}

std::string capture(const std::string& cmd, int& status) {
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        status = -1;
        return out;
    }
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    status = pclose(pipe);
    return out;
}

void determinism() {
    const std::string cmd = std::string(MOMDP_CLI_PATH) + " compare --grid " + MOMDP_WORLDS_DIR +
                            "/grid_5x5_3.json --points 32 --rollouts 2000 --seed 42 --format csv --threads 2";
    int s1 = 0, s2 = 0;
    std::string a = capture(cmd, s1), b = capture(cmd, s2);
    bool ok = s1 == 0 && s2 == 0 && !a.empty() && a == b;
    report(8, "compare CSV is byte-identical across runs", ok,
           std::to_string(a.size()) + " bytes, exit " + std::to_string(s1) + "/" + std::to_string(s2));
}

}  // namespace

int main() {
    auto t0 = Clock::now();
    auto models = instances();
    std::vector<GammaStack> stacks;
    for (const auto& m : models) stacks.push_back(exact_synth(m));
    double synth_secs = seconds_since(t0);

    oracle_equivalence(models, stacks, synth_secs);
    reach_recursion_agrees(models, stacks);
    lower_bound(models, stacks);
    mc_soundness();
    table_pattern();
    observation_formulas();
    filter_properties();
    determinism();

    std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
              << " (" << fmt(seconds_since(t0), 1) << " s)" << std::endl;
    return failures == 0 ? 0 : 1;
}
