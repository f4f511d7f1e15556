#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "momdp/errors.hpp"
#include "momdp/exact.hpp"
#include "momdp/model.hpp"
#include "momdp/parallel.hpp"
#include "momdp/rng.hpp"
#include "momdp/support.hpp"

namespace momdp {

// ---------------------------------------------------------------------------
// Belief point sets

enum class PointOrigin { Vertex, UniformRandom, ReachableRollout };

struct BeliefPointSet {
    std::vector<Belief> points;
    std::vector<PointOrigin> provenance;
    std::uint64_t seed = 0;

    std::size_t size() const { return points.size(); }
    bool operator==(const BeliefPointSet&) const = default;
};

/// Points closer than this in max-norm are considered duplicates.
inline constexpr double kPointDedupTol = 1e-9;

namespace detail {

inline bool near_existing(const std::vector<Belief>& pts, const Belief& b) {
    for (const auto& p : pts) {
        double d = 0.0;
        for (std::size_t e = 0; e < b.size(); ++e) d = std::max(d, std::abs(p[e] - b[e]));
        if (d < kPointDedupTol) return true;
    }
    return false;
}

inline std::size_t sample_index(CounterRng& rng, std::span<const double> probs) {
    double u = rng.uniform();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        last = i;
        if (u < acc) return i;
    }
    return last;
}

inline Belief uniform_dirichlet(CounterRng& rng, std::size_t n) {
    std::vector<double> w(n);
    for (auto& x : w) x = rng.exponential();
    return Belief::normalized(std::move(w));
}

}  // namespace detail

/**
 * Simplex vertices, then uniform-Dirichlet samples and beliefs visited by
 * random-action filter rollouts from (s0, b0), splitting the remainder evenly.
 * The rollout half starts with b0 itself. Near-duplicates are skipped; if the
 * reachable set is exhausted the shortfall is filled with uniform samples, and
 * when |E| = 1 only the single vertex exists.
 */
inline BeliefPointSet generate_belief_points(const MomdpModel& m, std::size_t n, std::uint64_t seed,
                                             std::size_t s0, const Belief& b0) {
    const std::size_t E = m.num_e();
    if (n < E) throw UsageError("need at least |E| = " + std::to_string(E) + " belief points, got " + std::to_string(n));
    m.check_state(s0);
    detail::check_belief(m, b0);

    BeliefPointSet set;
    set.seed = seed;
    auto add = [&](const Belief& b, PointOrigin origin) {
        if (set.points.size() >= n || detail::near_existing(set.points, b)) return false;
        set.points.push_back(b);
        set.provenance.push_back(origin);
        return true;
    };
    for (std::size_t e = 0; e < E; ++e) add(Belief::vertex(E, e), PointOrigin::Vertex);
    if (E == 1) return set;

    const std::size_t remainder = n - set.points.size();
    const std::size_t n_uniform = remainder / 2;
    const std::size_t n_reach = remainder - n_uniform;

    CounterRng uni_rng(derive_seed(seed, 1));
    for (std::size_t got = 0, tries = 0; got < n_uniform && tries < 100 * n + 100; ++tries)
        if (add(detail::uniform_dirichlet(uni_rng, E), PointOrigin::UniformRandom)) ++got;

    CounterRng roll_rng(derive_seed(seed, 2));
    const std::size_t depth = std::max<std::size_t>(m.horizon(), 1);
    std::size_t got = add(b0, PointOrigin::ReachableRollout) ? 1 : 0;
    std::vector<double> next(E);
    for (std::size_t rollout = 0; got < n_reach && rollout < 20 * n + 20; ++rollout) {
        std::size_t s = s0;
        Belief b = b0;
        for (std::size_t k = 0; k < depth && got < n_reach; ++k) {
            std::size_t a = roll_rng.below(m.num_a());
            std::size_t e = detail::sample_index(roll_rng, b.probs());
            std::vector<double> row(m.num_s());
            for (std::size_t sp = 0; sp < m.num_s(); ++sp) row[sp] = m.ts(s, e, a, sp);
            std::size_t sp = detail::sample_index(roll_rng, row);
            std::vector<double> erow(E);
            for (std::size_t ep = 0; ep < E; ++ep) erow[ep] = m.te(s, e, a, sp, ep);
            std::size_t ep = detail::sample_index(roll_rng, erow);
            std::vector<double> zrow(m.num_z());
            for (std::size_t z = 0; z < m.num_z(); ++z) zrow[z] = m.obs(sp, ep, a, z);
            std::size_t z = detail::sample_index(roll_rng, zrow);
            double total = detail::filter_numerator(m, s, b.probs(), a, sp, z, next);
            if (!(total > 0.0)) break;
            b = Belief::normalized(next);
            s = sp;
            if (add(b, PointOrigin::ReachableRollout)) ++got;
        }
    }
    for (std::size_t tries = 0; set.points.size() < n && tries < 100 * n + 100; ++tries)
        add(detail::uniform_dirichlet(uni_rng, E), PointOrigin::UniformRandom);
    return set;
}

// ---------------------------------------------------------------------------
// Point-based backup

/// Active pair at a successor belief: the pair the variant's value function is
/// attained by (lexicographic for TOQ).
inline const SupportPair& active_pair(const PairSet& gamma_successor, const Belief& b_next,
                                      double tie_tol = kDefaultTieTol, Variant variant = Variant::TOQ) {
    if (gamma_successor.empty()) throw UsageError("active_pair on empty pair set");
    return gamma_successor[select_pair(gamma_successor, b_next.probs(), variant, tie_tol)];
}

/// Observable successors of (s, a) that have positive probability for some e.
struct SuccessorIndex {
    std::vector<std::vector<std::size_t>> lists;  // indexed s * |A| + a
    std::size_t num_a = 0;

    explicit SuccessorIndex(const MomdpModel& m) : lists(m.num_s() * m.num_a()), num_a(m.num_a()) {
        for (std::size_t s = 0; s < m.num_s(); ++s)
            for (std::size_t a = 0; a < m.num_a(); ++a)
                for (std::size_t sp = 0; sp < m.num_s(); ++sp)
                    if (detail::reaches(m, s, a, sp)) lists[s * num_a + a].push_back(sp);
    }
    const std::vector<std::size_t>& of(std::size_t s, std::size_t a) const { return lists[s * num_a + a]; }
};

namespace detail {

/**
 * One candidate pair per action at (s, b) against stage-(k+1) sets.
 *
 * For an (s', z) of zero probability under b the successor pair is picked at the
 * uniform-belief successor instead; its weight F vanishes on the support of b,
 * so the value at b is unaffected and the candidate stays a genuine member of
 * the exact cross-sum.
 */
inline PairSet action_candidates(const MomdpModel& m, const SuccessorIndex& succ, std::size_t s,
                                 std::span<const double> b, const StageSets& gamma_next, Variant variant,
                                 double tie_tol) {
    const std::size_t E = m.num_e(), A = m.num_a(), Z = m.num_z();
    const double in_target = m.is_target(s) ? 1.0 : 0.0;
    const double gate = 1.0 - in_target;
    std::vector<double> numer(E), tmp(E);
    const std::vector<double> flat(E, 1.0 / static_cast<double>(E));
    PairSet out(A);
    for (std::size_t a = 0; a < A; ++a) {
        SupportPair& cand = out[a];
        cand.alpha.assign(E, 0.0);
        cand.beta.assign(E, 0.0);
        cand.action = a;
        for (std::size_t sp : succ.of(s, a)) {
            const PairSet& next = gamma_next[sp];
            for (std::size_t z = 0; z < Z; ++z) {
                double total = filter_numerator(m, s, b, a, sp, z, numer);
                if (!(total > 0.0)) {
                    total = filter_numerator(m, s, flat, a, sp, z, numer);
                    if (!(total > 0.0)) continue;  // F(s,.,a,s',.,z) == 0 everywhere
                }
                for (double& x : numer) x /= total;
                const SupportPair& chosen = next[select_pair(next, numer, variant, tie_tol)];
                propagate(m, s, a, sp, z, chosen.alpha, tmp);
                for (std::size_t e = 0; e < E; ++e) cand.alpha[e] += tmp[e];
                if (gate != 0.0) {
                    propagate(m, s, a, sp, z, chosen.beta, tmp);
                    for (std::size_t e = 0; e < E; ++e) cand.beta[e] += tmp[e];
                }
            }
        }
        for (std::size_t e = 0; e < E; ++e) {
            cand.alpha[e] += in_target;
            cand.beta[e] += in_target;
        }
    }
    return out;
}

/// TOQ: admissible set by beta within tie_tol, then max alpha. Q: max beta. TO: max alpha.
/// Ties go to the lowest action index.
inline std::size_t choose_action(const PairSet& candidates, std::span<const double> b, Variant variant,
                                 double tie_tol) {
    return select_pair(candidates, b, variant, tie_tol);
}

}  // namespace detail

/// Point-based backup at (s, b): returns gamma_s_k with the chosen action's pair appended
/// (unless an identical pair is already present).
inline PairSet pb_backup(const MomdpModel& m, std::size_t s, const Belief& b, const StageSets& gamma_next,
                         PairSet gamma_s_k, Variant variant = Variant::TOQ, double tie_tol = kDefaultTieTol) {
    m.check_state(s);
    detail::check_belief(m, b);
    if (gamma_next.size() != m.num_s()) throw UsageError("gamma_next must hold one set per observable state");
    for (const auto& g : gamma_next)
        if (g.empty()) throw UsageError("gamma_next has an empty pair set");
    SuccessorIndex succ(m);
    PairSet cands = detail::action_candidates(m, succ, s, b.probs(), gamma_next, variant, tie_tol);
    SupportPair& best = cands[detail::choose_action(cands, b.probs(), variant, tie_tol)];
    bool dup = std::any_of(gamma_s_k.begin(), gamma_s_k.end(), [&](const SupportPair& p) { return p.same_vectors(best); });
    if (!dup) gamma_s_k.push_back(std::move(best));
    return gamma_s_k;
}

struct SynthOptions {
    double tie_tol = kDefaultTieTol;
    std::size_t threads = 1;
    /// Called after each completed stage with (k, N).
    std::function<void(std::size_t, std::size_t)> on_stage;
};

struct SynthStats {
    std::size_t backups = 0;
    double seconds = 0.0;

    double backup_ms() const { return backups ? 1e3 * seconds / static_cast<double>(backups) : 0.0; }
};

/// One stage of point-based backups: for each s, one pb_backup per point, in point order.
inline StageSets value_sweep(const MomdpModel& m, const StageSets& gamma_next, const BeliefPointSet& points,
                             Variant variant = Variant::TOQ, double tie_tol = kDefaultTieTol,
                             std::size_t threads = 1) {
    if (points.points.empty()) throw UsageError("value_sweep needs at least one belief point");
    if (gamma_next.size() != m.num_s()) throw UsageError("gamma_next must hold one set per observable state");
    for (const auto& g : gamma_next)
        if (g.empty()) throw UsageError("gamma_next has an empty pair set");
    for (const auto& b : points.points) detail::check_belief(m, b);
    SuccessorIndex succ(m);
    StageSets out(m.num_s());
    parallel_for(m.num_s(), threads, [&](std::size_t s) {
        PairSet& set = out[s];
        for (const auto& b : points.points) {
            PairSet cands = detail::action_candidates(m, succ, s, b.probs(), gamma_next, variant, tie_tol);
            SupportPair& best = cands[detail::choose_action(cands, b.probs(), variant, tie_tol)];
            bool dup = std::any_of(set.begin(), set.end(), [&](const SupportPair& p) { return p.same_vectors(best); });
            if (!dup) set.push_back(std::move(best));
        }
    });
    return out;
}

/// Point-based stack for stages 0..N, starting from the terminal sets.
inline GammaStack synth(const MomdpModel& m, const BeliefPointSet& points, Variant variant,
                        const SynthOptions& opt = {}, SynthStats* stats = nullptr) {
    if (points.points.empty()) throw UsageError("synth needs at least one belief point");
    const auto start = std::chrono::steady_clock::now();
    GammaStack stack;
    stack.flavor = Flavor::PointBased;
    stack.variant = variant;
    stack.tie_tol = opt.tie_tol;
    const std::size_t N = m.horizon();
    stack.stages.resize(N + 1);
    stack.stages[N] = initialize_terminal(m);
    if (opt.on_stage) opt.on_stage(N, N);
    for (std::size_t k = N; k-- > 0;) {
        stack.stages[k] = value_sweep(m, stack.stages[k + 1], points, variant, opt.tie_tol, opt.threads);
        if (opt.on_stage) opt.on_stage(k, N);
    }
    if (stats) {
        stats->backups = N * m.num_s() * points.size();
        stats->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return stack;
}

/// (V_k, J_k) at (s, b): lexicographic value and the plain beta envelope of the stack.
inline LexValue approx_values(const GammaStack& stack, std::size_t k, std::size_t s, const Belief& b) {
    if (k >= stack.stages.size()) throw UsageError("stack has no stage " + std::to_string(k));
    if (s >= stack.stages[k].size()) throw UsageError("stack has no state " + std::to_string(s));
    return lexicographic_value(stack.stages[k][s], b.probs(), stack.tie_tol);
}

}  // namespace momdp
