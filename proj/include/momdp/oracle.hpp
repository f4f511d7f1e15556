#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "momdp/errors.hpp"
#include "momdp/model.hpp"

// Reference solvers for small instances. They read the probability tables
// directly and never go through the belief filter or the support-pair code.

namespace momdp {

struct OracleResult {
    double max_reach = 0.0;            // max over policies of P[reach T within N steps]
    double min_out_of_target = 0.0;    // min E[sum_t 1_{S\T}(s_t)] among reach maximizers
    std::size_t first_action = 0;      // action of an optimal policy at the root
    std::size_t evaluations = 0;       // history nodes or policies visited
};

struct OracleOptions {
    std::size_t cap = 100'000'000;
    double tie_tol = 1e-9;
};

namespace detail {

class HistorySearch {
public:
    HistorySearch(const MomdpModel& m, const OracleOptions& opt) : m_(m), opt_(opt) {}

    struct Value {
        double reach = 0.0;
        double out_time = 0.0;
        std::size_t action = 0;
    };

    // mass(e): P(e_k = e | history); reached: target already visited on this history.
    Value solve(std::size_t k, std::size_t s, const std::vector<double>& mass, bool reached) {
        const bool in_target = m_.is_target(s);
        reached = reached || in_target;
        const double here = in_target ? 0.0 : 1.0;
        if (k == m_.horizon()) return {reached ? 1.0 : 0.0, here, 0};

        const std::size_t S = m_.num_s(), E = m_.num_e(), A = m_.num_a(), Z = m_.num_z();
        std::vector<Value> per_action(A);
        for (std::size_t a = 0; a < A; ++a) {
            if (++visited_ > opt_.cap) throw IntractableError("brute-force oracle exceeded its evaluation cap");
            Value v{0.0, 0.0, a};
            for (std::size_t sp = 0; sp < S; ++sp) {
                std::vector<double> pred(E, 0.0);
                bool any = false;
                for (std::size_t e = 0; e < E; ++e) {
                    double w = mass[e] * m_.ts(s, e, a, sp);
                    if (w == 0.0) continue;
                    any = true;
                    for (std::size_t ep = 0; ep < E; ++ep) pred[ep] += w * m_.te(s, e, a, sp, ep);
                }
                if (!any) continue;
                for (std::size_t z = 0; z < Z; ++z) {
                    std::vector<double> post(E);
                    double p = 0.0;
                    for (std::size_t ep = 0; ep < E; ++ep) {
                        post[ep] = pred[ep] * m_.obs(sp, ep, a, z);
                        p += post[ep];
                    }
                    if (p <= 0.0) continue;
                    for (double& x : post) x /= p;
                    Value child = solve(k + 1, sp, post, reached);
                    v.reach += p * child.reach;
                    v.out_time += p * child.out_time;
                }
            }
            if (reached) v.reach = 1.0;
            per_action[a] = v;
        }
        double best_reach = -1.0;
        for (const auto& v : per_action) best_reach = std::max(best_reach, v.reach);
        Value best{best_reach, std::numeric_limits<double>::infinity(), 0};
        for (const auto& v : per_action) {
            if (v.reach < best_reach - opt_.tie_tol) continue;
            if (v.out_time < best.out_time) {
                best.out_time = v.out_time;
                best.action = v.action;
            }
        }
        best.out_time += here;
        return best;
    }

    std::size_t visited() const { return visited_; }

private:
    const MomdpModel& m_;
    OracleOptions opt_;
    std::size_t visited_ = 0;
};

}  // namespace detail

/**
 * Constrained optimum over all deterministic history-feedback policies.
 *
 * The policy space factorizes over observable histories: total reach
 * probability is maximal iff it is maximal below every history of positive
 * probability, and expected out-of-target time is additive over those
 * subtrees. Searching every (history, action) node is therefore the same as
 * enumerating every policy and keeping the constrained best.
 */
inline OracleResult brute_force_oracle(const MomdpModel& m, std::size_t s0, const Belief& b0,
                                       const OracleOptions& opt = {}) {
    m.check_state(s0);
    if (b0.size() != m.num_e()) throw UsageError("initial belief has wrong dimension");
    detail::HistorySearch search(m, opt);
    auto v = search.solve(0, s0, b0.vec(), false);
    return {v.reach, v.out_time, v.action, search.visited()};
}

/**
 * Literal enumeration of every map from observable histories to actions, each
 * evaluated by summing over all (e, s, z) trajectories. Exponential in the
 * number of histories; only usable on toy models.
 */
inline OracleResult enumerate_policies_oracle(const MomdpModel& m, std::size_t s0, const Belief& b0,
                                              const OracleOptions& opt = {}) {
    m.check_state(s0);
    const std::size_t S = m.num_s(), E = m.num_e(), A = m.num_a(), Z = m.num_z(), N = m.horizon();
    // Histories at depth d are indexed by their (s, z) sequence in base S*Z.
    std::vector<std::size_t> level_offset(N + 1, 0);
    std::size_t num_histories = 0;
    std::size_t level_size = 1;
    for (std::size_t d = 0; d < N; ++d) {
        level_offset[d] = num_histories;
        num_histories += level_size;
        if (level_size > opt.cap) throw IntractableError("policy enumeration: too many histories");
        level_size *= S * Z;
    }
    double policies = std::pow(static_cast<double>(A), static_cast<double>(num_histories));
    if (policies > static_cast<double>(opt.cap)) throw IntractableError("policy enumeration exceeds cap");

    std::vector<std::size_t> policy(num_histories, 0);
    OracleResult best{-1.0, std::numeric_limits<double>::infinity(), 0, 0};

    std::function<void(std::size_t, std::size_t, std::size_t, std::size_t, double, bool, double&, double&)> walk =
        [&](std::size_t k, std::size_t s, std::size_t e, std::size_t hist, double prob, bool reached, double& reach,
            double& out) {
            reached = reached || m.is_target(s);
            if (!m.is_target(s)) out += prob;
            if (k == N) {
                if (reached) reach += prob;
                return;
            }
            std::size_t a = policy[level_offset[k] + hist];
            for (std::size_t sp = 0; sp < S; ++sp) {
                double p1 = m.ts(s, e, a, sp);
                if (p1 == 0.0) continue;
                for (std::size_t ep = 0; ep < E; ++ep) {
                    double p2 = p1 * m.te(s, e, a, sp, ep);
                    if (p2 == 0.0) continue;
                    for (std::size_t z = 0; z < Z; ++z) {
                        double p3 = p2 * m.obs(sp, ep, a, z);
                        if (p3 == 0.0) continue;
                        walk(k + 1, sp, ep, hist * S * Z + sp * Z + z, prob * p3, reached, reach, out);
                    }
                }
            }
        };

    const auto total = static_cast<std::size_t>(policies);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t code = idx;
        for (std::size_t h = 0; h < num_histories; ++h) {
            policy[h] = code % A;
            code /= A;
        }
        double reach = 0.0, out = 0.0;
        for (std::size_t e = 0; e < E; ++e)
            if (b0[e] > 0.0) walk(0, s0, e, 0, b0[e], false, reach, out);
        ++best.evaluations;
        const std::size_t first = num_histories ? policy[0] : 0;
        if (reach > best.max_reach + opt.tie_tol) {
            best.max_reach = reach;
            best.min_out_of_target = out;
            best.first_action = first;
        } else if (reach >= best.max_reach - opt.tie_tol) {
            if (out < best.min_out_of_target) {
                best.min_out_of_target = out;
                best.first_action = first;
            }
            best.max_reach = std::max(best.max_reach, reach);
        }
    }
    return best;
}

}  // namespace momdp
