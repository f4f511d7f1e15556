#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "momdp/model.hpp"
#include "momdp/rng.hpp"

namespace momdp::fixtures {

/// Random stochastic row with at most max_support nonzero entries.
inline std::vector<double> random_row(CounterRng& rng, std::size_t n, std::size_t max_support) {
    std::vector<double> row(n, 0.0);
    std::size_t support = 1 + rng.below(std::min(n, max_support));
    double total = 0.0;
    for (std::size_t i = 0; i < support; ++i) {
        std::size_t j = rng.below(n);
        double w = 0.05 + rng.uniform();
        row[j] += w;
        total += w;
    }
    for (double& x : row) x /= total;
    // push the rounding residue into the largest entry
    double sum = 0.0;
    for (double x : row) sum += x;
    *std::max_element(row.begin(), row.end()) += 1.0 - sum;
    return row;
}

struct RandomModelShape {
    std::size_t num_s = 3, num_e = 2, num_a = 2, num_z = 2, horizon = 3;
    std::size_t max_support = 2;  // per row
    bool absorbing_target = false;
    bool static_latent = false;
};

inline MomdpModel random_model(std::uint64_t seed, const RandomModelShape& shape) {
    CounterRng rng(seed);
    const std::size_t S = shape.num_s, E = shape.num_e, A = shape.num_a, Z = shape.num_z;
    MomdpModel m(S, E, A, Z, shape.horizon);
    std::vector<std::size_t> target;
    for (std::size_t s = 0; s < S; ++s)
        if (rng.uniform() < 0.3) target.push_back(s);
    if (target.empty()) target.push_back(rng.below(S));
    m.set_target(target);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t e = 0; e < E; ++e)
            for (std::size_t a = 0; a < A; ++a) {
                std::vector<double> row = random_row(rng, S, shape.max_support);
                if (shape.absorbing_target && m.is_target(s)) {
                    row.assign(S, 0.0);
                    row[s] = 1.0;
                }
                for (std::size_t sp = 0; sp < S; ++sp) m.ts(s, e, a, sp) = row[sp];
                for (std::size_t sp = 0; sp < S; ++sp) {
                    std::vector<double> erow = random_row(rng, E, shape.max_support);
                    if (shape.static_latent) {
                        erow.assign(E, 0.0);
                        erow[e] = 1.0;
                    }
                    for (std::size_t ep = 0; ep < E; ++ep) m.te(s, e, a, sp, ep) = erow[ep];
                }
            }
    for (std::size_t sp = 0; sp < S; ++sp)
        for (std::size_t ep = 0; ep < E; ++ep)
            for (std::size_t a = 0; a < A; ++a) {
                std::vector<double> zrow = random_row(rng, Z, Z);
                for (std::size_t z = 0; z < Z; ++z) m.obs(sp, ep, a, z) = zrow[z];
            }
    return m;
}

/// Random shape within |S|<=4, |E|<=3, |A|<=3, |Z|<=2, N<=4, scaled down so the exact
/// recursion stays small.
inline RandomModelShape random_small_shape(std::uint64_t seed) {
    CounterRng rng(seed ^ 0x5EED);
    RandomModelShape sh;
    sh.num_s = 2 + rng.below(3);
    sh.num_e = 1 + rng.below(3);
    sh.num_a = 2 + rng.below(2);
    sh.num_z = 1 + rng.below(2);
    sh.horizon = 1 + rng.below(4);
    sh.max_support = 2;
    sh.absorbing_target = rng.uniform() < 0.5;
    sh.static_latent = rng.uniform() < 0.5;
    return sh;
}

inline Belief random_belief(CounterRng& rng, std::size_t n) {
    std::vector<double> w(n);
    for (auto& x : w) x = -std::log1p(-rng.uniform());
    return Belief::normalized(std::move(w));
}

/**
 * Two observable states (0 start, 1 absorbing target), two latent states,
 * two actions and two noisy observations. Action 0 succeeds mostly when e=0,
 * action 1 mostly when e=1; the reading matches e' with probability 0.75.
 */
inline MomdpModel toy_model(std::size_t horizon = 2) {
    MomdpModel m(2, 2, 2, 2, horizon);
    const double p_move[2][2] = {{0.9, 0.2}, {0.1, 0.8}};  // [a][e]
    for (std::size_t e = 0; e < 2; ++e)
        for (std::size_t a = 0; a < 2; ++a) {
            m.ts(0, e, a, 1) = p_move[a][e];
            m.ts(0, e, a, 0) = 1.0 - p_move[a][e];
            m.ts(1, e, a, 1) = 1.0;
            for (std::size_t sp = 0; sp < 2; ++sp) m.te(0, e, a, sp, e) = m.te(1, e, a, sp, e) = 1.0;
        }
    for (std::size_t sp = 0; sp < 2; ++sp)
        for (std::size_t ep = 0; ep < 2; ++ep)
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t z = 0; z < 2; ++z) m.obs(sp, ep, a, z) = z == ep ? 0.75 : 0.25;
    m.set_target({1});
    return m;
}

/// Deterministic chain 0 -> 1 -> ... -> n-1 (target) under a single action.
inline MomdpModel chain_model(std::size_t n, std::size_t horizon) {
    MomdpModel m(n, 1, 1, 1, horizon);
    for (std::size_t s = 0; s < n; ++s) {
        m.ts(s, 0, 0, std::min(s + 1, n - 1)) = 1.0;
        for (std::size_t sp = 0; sp < n; ++sp) m.te(s, 0, 0, sp, 0) = 1.0;
        m.obs(s, 0, 0, 0) = 1.0;
    }
    m.set_target({n - 1});
    return m;
}

}  // namespace momdp::fixtures
