#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "momdp/errors.hpp"
#include "momdp/gridworld.hpp"
#include "momdp/model.hpp"
#include "momdp/parallel.hpp"
#include "momdp/point_based.hpp"
#include "momdp/policy.hpp"
#include "momdp/rng.hpp"

namespace momdp {

enum class Outcome { Success, FailureCollision, FailureTimeout };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Success: return "SUCCESS";
        case Outcome::FailureCollision: return "FAILURE_COLLISION";
        case Outcome::FailureTimeout: return "FAILURE_TIMEOUT";
    }
    return "?";
}

struct RolloutStep {
    std::size_t k = 0;
    std::size_t s = 0;  // state the action was taken in
    std::size_t a = 0;
    std::size_t z = 0;  // observation received after the move
    Belief belief;      // belief after the update
};

struct RolloutRecord {
    std::uint64_t seed = 0;
    std::size_t latent = 0;
    std::vector<RolloutStep> trajectory;
    Outcome outcome = Outcome::FailureTimeout;
    std::size_t out_of_target_steps = 0;
};

struct RolloutOptions {
    /// Absorbing non-target states whose entry counts as a collision.
    std::set<std::size_t> failure_states;
    bool record_trajectory = true;
};

/// Closed-loop simulation of one episode against a fixed latent realization.
inline RolloutRecord rollout(const MomdpModel& m, const Policy& policy, std::size_t e_true, std::size_t s0,
                             const Belief& b0, std::uint64_t seed, const RolloutOptions& opt = {}) {
    m.check_latent(e_true);
    m.check_state(s0);
    detail::check_belief(m, b0);
    const std::size_t N = m.horizon();
    RolloutRecord rec;
    rec.seed = seed;
    rec.latent = e_true;
    if (m.is_target(s0)) {
        rec.outcome = Outcome::Success;
        return rec;
    }
    CounterRng rng(seed);
    std::size_t s = s0, e = e_true;
    Belief b = b0;
    std::vector<double> row;
    for (std::size_t k = 0; k < N; ++k) {
        ++rec.out_of_target_steps;
        const std::size_t a = policy.select_action(k, s, b);
        row.assign(m.num_s(), 0.0);
        for (std::size_t sp = 0; sp < m.num_s(); ++sp) row[sp] = m.ts(s, e, a, sp);
        const std::size_t sp = detail::sample_index(rng, row);
        row.assign(m.num_e(), 0.0);
        for (std::size_t ep = 0; ep < m.num_e(); ++ep) row[ep] = m.te(s, e, a, sp, ep);
        const std::size_t ep = detail::sample_index(rng, row);
        row.assign(m.num_z(), 0.0);
        for (std::size_t z = 0; z < m.num_z(); ++z) row[z] = m.obs(sp, ep, a, z);
        const std::size_t z = detail::sample_index(rng, row);
        b = belief_update(m, s, b, a, sp, z);
        if (opt.record_trajectory) rec.trajectory.push_back({k, s, a, z, b});
        s = sp;
        e = ep;
        if (m.is_target(s)) {
            rec.outcome = Outcome::Success;
            return rec;
        }
        if (opt.failure_states.count(s)) {
            rec.outcome = Outcome::FailureCollision;
            rec.out_of_target_steps = N + 1;
            return rec;
        }
    }
    rec.out_of_target_steps = N + 1;
    rec.outcome = Outcome::FailureTimeout;
    return rec;
}

/// Draws the true latent state for rollout i from a derived seed.
class EnvironmentSampler {
public:
    static EnvironmentSampler fixed(std::size_t e) {
        return EnvironmentSampler([e](std::uint64_t) { return e; }, "fixed");
    }
    static EnvironmentSampler from_belief(const Belief& b) {
        return EnvironmentSampler(
            [b](std::uint64_t seed) {
                CounterRng rng(seed);
                return detail::sample_index(rng, b.probs());
            },
            "prior");
    }
    static EnvironmentSampler from_grid(const grid::CompiledGrid& cg) {
        std::vector<double> priors = cg.factor_priors;
        return EnvironmentSampler(
            [priors](std::uint64_t seed) {
                grid::CompiledGrid tmp;
                tmp.factor_priors = priors;
                return grid::sample_environment(tmp, seed);
            },
            "prior");
    }

    std::size_t operator()(std::uint64_t seed) const { return draw_(seed); }
    const std::string& mode() const { return mode_; }

private:
    EnvironmentSampler(std::function<std::size_t(std::uint64_t)> f, std::string mode)
        : draw_(std::move(f)), mode_(std::move(mode)) {}
    std::function<std::size_t(std::uint64_t)> draw_;
    std::string mode_;
};

struct RunMetrics {
    double expected_time = 0.0;                // mean out-of-target steps
    double failure_rate = 0.0;
    std::optional<double> failure_bound;       // 1 - J_0(s0, b0); absent for TO
    double synth_total_time = 0.0;             // seconds
    double backup_time = 0.0;                  // milliseconds per point backup
    std::size_t rollout_count = 0;
    double confidence_halfwidth = 0.0;         // 95% halfwidth of failure_rate
    double time_halfwidth = 0.0;               // 95% halfwidth of expected_time
    std::size_t collisions = 0;
    std::size_t timeouts = 0;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
        else comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0, comp_ = 0.0;
};

struct MonteCarloOptions {
    std::size_t s0 = 0;
    Belief b0;
    std::set<std::size_t> failure_states;
    std::size_t threads = 1;
    /// Called with every finished rollout, in index order.
    std::function<void(std::size_t, const RolloutRecord&)> on_rollout;
};

/// Stream tags keeping environment draws and dynamics draws independent.
inline constexpr std::uint64_t kEnvStream = 0xE7A1;
inline constexpr std::uint64_t kDynamicsStream = 0xD1A3;

inline std::uint64_t environment_seed(std::uint64_t seed, std::size_t i) {
    return derive_seed(derive_seed(seed, kEnvStream), i);
}
inline std::uint64_t dynamics_seed(std::uint64_t seed, std::size_t i) {
    return derive_seed(derive_seed(seed, kDynamicsStream), i);
}

/// Rollout i uses environment_seed(seed, i) and dynamics_seed(seed, i), so two
/// policies evaluated with the same seed see the same latent realizations.
inline RunMetrics monte_carlo(const MomdpModel& m, const Policy& policy, std::size_t n_rollouts,
                              const EnvironmentSampler& env, std::uint64_t seed, const MonteCarloOptions& opt) {
    if (n_rollouts < 1) throw UsageError("monte_carlo needs at least one rollout");
    RolloutOptions ropt;
    ropt.failure_states = opt.failure_states;
    ropt.record_trajectory = static_cast<bool>(opt.on_rollout);
    std::vector<RolloutRecord> records(n_rollouts);
    parallel_for(n_rollouts, opt.threads, [&](std::size_t i) {
        std::size_t e = env(environment_seed(seed, i));
        records[i] = rollout(m, policy, e, opt.s0, opt.b0, dynamics_seed(seed, i), ropt);
    });

    RunMetrics r;
    r.rollout_count = n_rollouts;
    CompensatedSum time_sum, time_sq, fail_sum;
    for (std::size_t i = 0; i < n_rollouts; ++i) {
        const auto& rec = records[i];
        if (opt.on_rollout) opt.on_rollout(i, rec);
        double t = static_cast<double>(rec.out_of_target_steps);
        time_sum.add(t);
        time_sq.add(t * t);
        if (rec.outcome != Outcome::Success) fail_sum.add(1.0);
        if (rec.outcome == Outcome::FailureCollision) ++r.collisions;
        if (rec.outcome == Outcome::FailureTimeout) ++r.timeouts;
    }
    const double n = static_cast<double>(n_rollouts);
    r.expected_time = time_sum.value() / n;
    r.failure_rate = fail_sum.value() / n;
    if (n_rollouts > 1) {
        double var_t = std::max(0.0, (time_sq.value() - n * r.expected_time * r.expected_time) / (n - 1.0));
        double var_f = std::max(0.0, n * r.failure_rate * (1.0 - r.failure_rate) / (n - 1.0));
        r.time_halfwidth = 1.96 * std::sqrt(var_t / n);
        r.confidence_halfwidth = 1.96 * std::sqrt(var_f / n);
    }
    if (policy.variant() != Variant::TO) r.failure_bound = policy.failure_bound(opt.s0, opt.b0);
    return r;
}

// ---------------------------------------------------------------------------
// Exact closed-loop evaluation

struct ExactEvaluation {
    double success_probability = 0.0;
    double expected_time = 0.0;  // same metric as RolloutRecord::out_of_target_steps
    std::size_t nodes = 0;
};

/// Sum over every (s', z) branch the policy can produce, memoizing on
/// (k, s, belief). Throws IntractableError past node_cap distinct nodes.
inline ExactEvaluation evaluate_policy_exact(const MomdpModel& m, const Policy& policy, std::size_t s0,
                                             const Belief& b0, const std::set<std::size_t>& failure_states = {},
                                             std::size_t node_cap = 2'000'000) {
    struct Val {
        double success, time;
    };
    using Key = std::tuple<std::size_t, std::size_t, std::vector<double>>;
    std::map<Key, Val> memo;
    const std::size_t N = m.horizon();
    std::vector<double> numer(m.num_e());
    std::function<Val(std::size_t, std::size_t, const Belief&)> go = [&](std::size_t k, std::size_t s,
                                                                         const Belief& b) -> Val {
        if (m.is_target(s)) return {1.0, 0.0};
        const double remaining = static_cast<double>(N + 1 - k);
        if (failure_states.count(s) || k == N) return {0.0, remaining};
        Key key{k, s, b.vec()};
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        if (memo.size() >= node_cap) throw IntractableError("exact policy evaluation exceeded its node cap");
        const std::size_t a = policy.select_action(k, s, b);
        Val v{0.0, 1.0};
        for (std::size_t sp = 0; sp < m.num_s(); ++sp) {
            for (std::size_t z = 0; z < m.num_z(); ++z) {
                std::vector<double> buf(m.num_e());
                double p = detail::filter_numerator(m, s, b.probs(), a, sp, z, buf);
                if (!(p > 0.0)) continue;
                Val c = go(k + 1, sp, Belief::normalized(std::move(buf)));
                v.success += p * c.success;
                v.time += p * c.time;
            }
        }
        memo.emplace(std::move(key), v);
        return v;
    };
    Val v = go(0, s0, b0);
    return {v.success, v.time, memo.size()};
}

// ---------------------------------------------------------------------------
// Policy comparison

struct ComparisonRow {
    Variant variant;
    RunMetrics metrics;
};

struct CompareOptions {
    SynthOptions synth;
    std::size_t threads = 1;
};

/// Synthesize TO, Q and TOQ stacks on the same point set and evaluate each with
/// common random numbers. Rows are returned in the order TO, Q, TOQ.
inline std::vector<ComparisonRow> compare(const grid::CompiledGrid& cg, const BeliefPointSet& points,
                                          std::size_t n_rollouts, std::uint64_t seed,
                                          const CompareOptions& opt = {}) {
    std::vector<ComparisonRow> rows;
    for (Variant v : {Variant::TO, Variant::Q, Variant::TOQ}) {
        SynthStats stats;
        GammaStack stack = synth(cg.model, points, v, opt.synth, &stats);
        Policy policy(cg.model, std::move(stack));
        MonteCarloOptions mc;
        mc.s0 = cg.start_state;
        mc.b0 = cg.initial_belief;
        mc.failure_states = {cg.fail_state};
        mc.threads = opt.threads;
        RunMetrics r = monte_carlo(cg.model, policy, n_rollouts, EnvironmentSampler::from_grid(cg), seed, mc);
        r.synth_total_time = stats.seconds;
        r.backup_time = stats.backup_ms();
        rows.push_back({v, r});
    }
    return rows;
}

}  // namespace momdp
