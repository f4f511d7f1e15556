#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "momdp/errors.hpp"
#include "momdp/model.hpp"

namespace momdp {

/// Admissible-set tolerance shared by solvers and policies.
inline constexpr double kDefaultTieTol = 1e-9;

/// Which problem a value function targets: time-optimal subject to max reach
/// probability, reach probability only, or time only.
enum class Variant { TOQ, Q, TO };
enum class Flavor { Exact, PointBased };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::TOQ: return "toq";
        case Variant::Q: return "q";
        case Variant::TO: return "to";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    if (s == "toq" || s == "TOQ") return Variant::TOQ;
    if (s == "q" || s == "Q") return Variant::Q;
    if (s == "to" || s == "TO") return Variant::TO;
    throw UsageError("unknown variant '" + s + "' (expected toq, q or to)");
}

inline std::string to_string(Flavor f) { return f == Flavor::Exact ? "exact" : "point_based"; }

inline Flavor parse_flavor(const std::string& s) {
    if (s == "exact") return Flavor::Exact;
    if (s == "point_based") return Flavor::PointBased;
    throw UsageError("unknown flavor '" + s + "'");
}

/// (alpha, beta) vectors over E. alpha·b is expected time spent in the target
/// over the remaining stages; beta·b is the reach probability.
struct SupportPair {
    std::vector<double> alpha;
    std::vector<double> beta;
    std::optional<std::size_t> action;

    bool same_vectors(const SupportPair& o) const { return alpha == o.alpha && beta == o.beta; }
    bool operator==(const SupportPair&) const = default;
};

using PairSet = std::vector<SupportPair>;
/// One PairSet per observable state.
using StageSets = std::vector<PairSet>;

/// Value function over stages 0..N: stages[k][s] is the pair set for (s, k).
struct GammaStack {
    std::vector<StageSets> stages;
    Flavor flavor = Flavor::PointBased;
    Variant variant = Variant::TOQ;
    double tie_tol = kDefaultTieTol;

    std::size_t horizon() const { return stages.empty() ? 0 : stages.size() - 1; }
    const PairSet& at(std::size_t k, std::size_t s) const { return stages.at(k).at(s); }
    bool operator==(const GammaStack&) const = default;
};

struct LexValue {
    double value = 0.0;       // V: max alpha·b over the admissible pairs
    double constraint = 0.0;  // J: max beta·b
    std::size_t index = 0;    // insertion index of the achieving pair
};

/// max beta·b subject to nothing; the constraint value function.
inline double beta_envelope(const PairSet& set, std::span<const double> b) {
    if (set.empty()) throw UsageError("beta_envelope on empty pair set");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : set) best = std::max(best, dot(p.beta, b));
    return best;
}

inline double alpha_envelope(const PairSet& set, std::span<const double> b) {
    if (set.empty()) throw UsageError("alpha_envelope on empty pair set");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : set) best = std::max(best, dot(p.alpha, b));
    return best;
}

/// Maximize alpha·b over the pairs whose beta·b is within tie_tol of the best.
inline LexValue lexicographic_value(const PairSet& set, std::span<const double> b,
                                    double tie_tol = kDefaultTieTol) {
    if (set.empty()) throw UsageError("lexicographic_value on empty pair set");
    std::vector<double> betas(set.size());
    double j = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < set.size(); ++i) {
        betas[i] = dot(set[i].beta, b);
        j = std::max(j, betas[i]);
    }
    LexValue out;
    out.constraint = j;
    out.value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (betas[i] < j - tie_tol) continue;
        double v = dot(set[i].alpha, b);
        if (v > out.value) {
            out.value = v;
            out.index = i;
        }
    }
    return out;
}

inline LexValue lexicographic_value(const PairSet& set, const Belief& b,
                                    double tie_tol = kDefaultTieTol) {
    return lexicographic_value(set, b.probs(), tie_tol);
}

/// Index of the pair a policy of the given variant would act on at b.
/// TOQ: lexicographic; Q: first beta maximizer; TO: first alpha maximizer.
inline std::size_t select_pair(const PairSet& set, std::span<const double> b, Variant variant,
                               double tie_tol) {
    if (set.empty()) throw UsageError("select_pair on empty pair set");
    if (variant == Variant::TOQ) return lexicographic_value(set, b, tie_tol).index;
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < set.size(); ++i) {
        double v = variant == Variant::Q ? dot(set[i].beta, b) : dot(set[i].alpha, b);
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    return best;
}

namespace detail {

inline bool weakly_dominates(const SupportPair& q, const SupportPair& p) {
    for (std::size_t e = 0; e < p.beta.size(); ++e)
        if (q.beta[e] < p.beta[e] || q.alpha[e] < p.alpha[e]) return false;
    return true;
}

inline double pair_key(const SupportPair& p) {
    double k = 0.0;
    for (std::size_t e = 0; e < p.beta.size(); ++e) k += p.alpha[e] + p.beta[e];
    return k;
}

}  // namespace detail

/// Remove pairs jointly dominated (alpha and beta pointwise) by another pair, and
/// exact duplicates. Survivors keep their relative order.
inline PairSet prune_dominated(const PairSet& set) {
    const std::size_t n = set.size();
    if (n <= 1) return set;
    std::vector<double> key(n);
    for (std::size_t i = 0; i < n; ++i) key[i] = detail::pair_key(set[i]);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return key[x] > key[y]; });

    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
        bool dominated = false;
        for (std::size_t j : kept) {
            if (detail::weakly_dominates(set[j], set[i])) {
                dominated = true;
                break;
            }
        }
        if (!dominated) {
            // an equal-key survivor may itself be dominated by i
            std::erase_if(kept, [&](std::size_t j) {
                return key[j] == key[i] && detail::weakly_dominates(set[i], set[j]);
            });
            kept.push_back(i);
        }
    }
    std::sort(kept.begin(), kept.end());
    PairSet out;
    out.reserve(kept.size());
    for (std::size_t i : kept) out.push_back(set[i]);
    return out;
}

/// Drop exact duplicates (same alpha and beta), keeping the first occurrence.
inline PairSet dedup_exact(PairSet set) {
    PairSet out;
    out.reserve(set.size());
    for (auto& p : set) {
        bool dup = std::any_of(out.begin(), out.end(), [&](const SupportPair& q) { return q.same_vectors(p); });
        if (!dup) out.push_back(std::move(p));
    }
    return out;
}

/// Terminal sets: (1, 1) on target states, (0, 0) elsewhere, vectors of length |E|.
inline StageSets initialize_terminal(const MomdpModel& m) {
    StageSets sets(m.num_s());
    for (std::size_t s = 0; s < m.num_s(); ++s) {
        double v = m.is_target(s) ? 1.0 : 0.0;
        sets[s].push_back(SupportPair{std::vector<double>(m.num_e(), v), std::vector<double>(m.num_e(), v),
                                      std::nullopt});
    }
    return sets;
}

}  // namespace momdp
