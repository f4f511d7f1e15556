#pragma once

#include <cstddef>
#include <limits>
#include <sstream>
#include <vector>

#include "momdp/errors.hpp"
#include "momdp/model.hpp"
#include "momdp/parallel.hpp"
#include "momdp/support.hpp"

namespace momdp {

struct ExactOptions {
    /// Largest cross-sum that may be materialized at once.
    std::size_t pair_cap = 10'000'000;
    /// Joint-dominance pruning of partial and final sets. Disabling it yields the
    /// raw cross-sum, which is only feasible on tiny models.
    bool prune = true;
    std::size_t threads = 1;
};

namespace detail {

// out(e) = sum_{e'} F(s,e,a,s',e',z) v(e')
inline void propagate(const MomdpModel& m, std::size_t s, std::size_t a, std::size_t sp, std::size_t z,
                      std::span<const double> v, std::span<double> out) {
    const std::size_t E = m.num_e();
    for (std::size_t e = 0; e < E; ++e) {
        double ts = m.ts(s, e, a, sp);
        double acc = 0.0;
        if (ts != 0.0)
            for (std::size_t ep = 0; ep < E; ++ep) acc += m.te(s, e, a, sp, ep) * m.obs(sp, ep, a, z) * v[ep];
        out[e] = ts * acc;
    }
}

inline bool reaches(const MomdpModel& m, std::size_t s, std::size_t a, std::size_t sp) {
    for (std::size_t e = 0; e < m.num_e(); ++e)
        if (m.ts(s, e, a, sp) != 0.0) return true;
    return false;
}

inline std::size_t saturating_mul(std::size_t x, std::size_t y) {
    if (x != 0 && y > std::numeric_limits<std::size_t>::max() / x) return std::numeric_limits<std::size_t>::max();
    return x * y;
}

[[noreturn]] inline void throw_intractable(std::size_t s, std::size_t a, std::size_t predicted, std::size_t cap) {
    std::ostringstream os;
    os << "exact backup intractable: cross-sum for s=" << s << ", a=" << a << " would hold " << predicted
       << " pairs (cap " << cap << "); use the point-based solver";
    throw IntractableError(os.str());
}

// Cross-sum of the per-(s', z) partial sets for one (s, a). Target-state gating is
// applied by the caller. Order: first component is the most significant digit.
template <class Vec, class Prune, class Add>
std::vector<Vec> cross_sum(std::vector<std::vector<Vec>> components, const ExactOptions& opt, Prune prune,
                           Add add, std::size_t s, std::size_t a) {
    if (!opt.prune) {
        std::size_t predicted = 1;
        for (const auto& c : components) predicted = saturating_mul(predicted, c.size());
        if (predicted > opt.pair_cap) throw_intractable(s, a, predicted, opt.pair_cap);
    }
    std::vector<Vec> acc = std::move(components.front());
    for (std::size_t c = 1; c < components.size(); ++c) {
        const auto& next = components[c];
        std::size_t predicted = saturating_mul(acc.size(), next.size());
        if (predicted > opt.pair_cap) throw_intractable(s, a, predicted, opt.pair_cap);
        std::vector<Vec> out;
        out.reserve(predicted);
        for (const auto& x : acc)
            for (const auto& y : next) out.push_back(add(x, y));
        acc = opt.prune ? prune(out) : std::move(out);
    }
    return acc;
}

inline std::vector<std::vector<double>> prune_vectors(const std::vector<std::vector<double>>& set) {
    PairSet as_pairs;
    as_pairs.reserve(set.size());
    for (const auto& v : set) as_pairs.push_back(SupportPair{std::vector<double>(v.size(), 0.0), v, std::nullopt});
    PairSet kept = prune_dominated(as_pairs);
    std::vector<std::vector<double>> out;
    out.reserve(kept.size());
    for (auto& p : kept) out.push_back(std::move(p.beta));
    return out;
}

}  // namespace detail

/**
 * Exact (alpha, beta) backup from stage k+1 to stage k.
 *
 * For each s and a, partial pairs
 *   alpha(e) = sum_{e'} F(s,e,a,s',e',z) alpha_i(e'),
 *   beta(e)  = 1_{S\T}(s) sum_{e'} F(s,e,a,s',e',z) beta_i(e')
 * are formed for every successor pair i in gamma_next[s'], cross-summed over all
 * (s', z), and shifted by 1_T(s) in both components. The stage set is the union
 * over actions, ordered by (action, choice-function index).
 */
inline StageSets exact_backup(const MomdpModel& m, const StageSets& gamma_next, const ExactOptions& opt = {}) {
    const std::size_t S = m.num_s(), E = m.num_e(), A = m.num_a(), Z = m.num_z();
    if (gamma_next.size() != S) throw UsageError("gamma_next must hold one set per observable state");
    for (const auto& g : gamma_next)
        if (g.empty()) throw UsageError("gamma_next has an empty pair set");

    StageSets result(S);
    parallel_for(S, opt.threads, [&](std::size_t s) {
        const double in_target = m.is_target(s) ? 1.0 : 0.0;
        const double gate = 1.0 - in_target;
        PairSet out;
        for (std::size_t a = 0; a < A; ++a) {
            std::vector<PairSet> components;
            components.reserve(S * Z);
            for (std::size_t sp = 0; sp < S; ++sp) {
                const bool live = detail::reaches(m, s, a, sp);
                for (std::size_t z = 0; z < Z; ++z) {
                    PairSet comp;
                    comp.reserve(gamma_next[sp].size());
                    for (const auto& succ : gamma_next[sp]) {
                        SupportPair p{std::vector<double>(E, 0.0), std::vector<double>(E, 0.0), a};
                        if (live) {
                            detail::propagate(m, s, a, sp, z, succ.alpha, p.alpha);
                            detail::propagate(m, s, a, sp, z, succ.beta, p.beta);
                            for (double& v : p.beta) v *= gate;
                        }
                        comp.push_back(std::move(p));
                    }
                    components.push_back(opt.prune ? prune_dominated(comp) : std::move(comp));
                }
            }
            PairSet sums = detail::cross_sum(
                std::move(components), opt, [](const PairSet& x) { return prune_dominated(x); },
                [](const SupportPair& x, const SupportPair& y) {
                    SupportPair r = x;
                    for (std::size_t e = 0; e < r.alpha.size(); ++e) {
                        r.alpha[e] += y.alpha[e];
                        r.beta[e] += y.beta[e];
                    }
                    return r;
                },
                s, a);
            for (auto& p : sums) {
                for (std::size_t e = 0; e < E; ++e) {
                    p.alpha[e] += in_target;
                    p.beta[e] += in_target;
                }
                p.action = a;
                out.push_back(std::move(p));
            }
        }
        result[s] = opt.prune ? prune_dominated(out) : std::move(out);
    });
    return result;
}

/// Full exact TOQ stack from the terminal sets down to stage 0.
inline GammaStack exact_synth(const MomdpModel& m, const ExactOptions& opt = {}, double tie_tol = kDefaultTieTol) {
    GammaStack stack;
    stack.flavor = Flavor::Exact;
    stack.variant = Variant::TOQ;
    stack.tie_tol = tie_tol;
    const std::size_t N = m.horizon();
    stack.stages.resize(N + 1);
    stack.stages[N] = initialize_terminal(m);
    for (std::size_t k = N; k-- > 0;) stack.stages[k] = exact_backup(m, stack.stages[k + 1], opt);
    return stack;
}

/// Beta-only support vectors, one set per observable state.
using BetaSets = std::vector<std::vector<std::vector<double>>>;

/// Reach-probability-only backup: the beta half of exact_backup.
inline BetaSets quantitative_backup(const MomdpModel& m, const BetaSets& beta_next, const ExactOptions& opt = {}) {
    const std::size_t S = m.num_s(), E = m.num_e(), A = m.num_a(), Z = m.num_z();
    if (beta_next.size() != S) throw UsageError("beta_next must hold one set per observable state");
    for (const auto& g : beta_next)
        if (g.empty()) throw UsageError("beta_next has an empty vector set");

    BetaSets result(S);
    parallel_for(S, opt.threads, [&](std::size_t s) {
        const double in_target = m.is_target(s) ? 1.0 : 0.0;
        std::vector<std::vector<double>> out;
        for (std::size_t a = 0; a < A; ++a) {
            std::vector<std::vector<std::vector<double>>> components;
            for (std::size_t sp = 0; sp < S; ++sp) {
                const bool live = in_target == 0.0 && detail::reaches(m, s, a, sp);
                for (std::size_t z = 0; z < Z; ++z) {
                    std::vector<std::vector<double>> comp;
                    for (const auto& succ : beta_next[sp]) {
                        std::vector<double> v(E, 0.0);
                        if (live) detail::propagate(m, s, a, sp, z, succ, v);
                        comp.push_back(std::move(v));
                    }
                    components.push_back(opt.prune ? detail::prune_vectors(comp) : std::move(comp));
                }
            }
            auto sums = detail::cross_sum(
                std::move(components), opt, [](const auto& x) { return detail::prune_vectors(x); },
                [](const std::vector<double>& x, const std::vector<double>& y) {
                    std::vector<double> r = x;
                    for (std::size_t e = 0; e < r.size(); ++e) r[e] += y[e];
                    return r;
                },
                s, a);
            for (auto& v : sums) {
                for (double& x : v) x += in_target;
                out.push_back(std::move(v));
            }
        }
        result[s] = opt.prune ? detail::prune_vectors(out) : std::move(out);
    });
    return result;
}

inline BetaSets quantitative_terminal(const MomdpModel& m) {
    BetaSets sets(m.num_s());
    for (std::size_t s = 0; s < m.num_s(); ++s)
        sets[s].push_back(std::vector<double>(m.num_e(), m.is_target(s) ? 1.0 : 0.0));
    return sets;
}

/// Stages 0..N of the reach-probability recursion.
inline std::vector<BetaSets> quantitative_synth(const MomdpModel& m, const ExactOptions& opt = {}) {
    const std::size_t N = m.horizon();
    std::vector<BetaSets> stages(N + 1);
    stages[N] = quantitative_terminal(m);
    for (std::size_t k = N; k-- > 0;) stages[k] = quantitative_backup(m, stages[k + 1], opt);
    return stages;
}

inline double upper_envelope(const std::vector<std::vector<double>>& set, std::span<const double> b) {
    if (set.empty()) throw UsageError("upper_envelope on empty set");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& v : set) best = std::max(best, dot(v, b));
    return best;
}

}  // namespace momdp
