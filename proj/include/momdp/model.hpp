#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "momdp/errors.hpp"

namespace momdp {

/// Row-sum tolerance used by validation and by Belief construction.
inline constexpr double kStochasticTol = 1e-12;

/**
 * Finite-horizon mixed observability MDP with a reachability target.
 *
 * Tables are dense and row-major in the index order
 *   t_s(s, e, a, s'), t_e(s, e, a, s', e'), obs(s', e', a, z).
 * All indices are 0-based. The model is treated as immutable once validated;
 * every solver only reads from it.
 */
class MomdpModel {
public:
    MomdpModel() = default;

    MomdpModel(std::size_t num_s, std::size_t num_e, std::size_t num_a, std::size_t num_z,
               std::size_t horizon)
        : num_s_(num_s), num_e_(num_e), num_a_(num_a), num_z_(num_z), horizon_(horizon),
          t_s_(num_s * num_e * num_a * num_s, 0.0),
          t_e_(num_s * num_e * num_a * num_s * num_e, 0.0),
          obs_(num_s * num_e * num_a * num_z, 0.0),
          target_mask_(num_s, 0) {
        if (num_s == 0 || num_e == 0 || num_a == 0 || num_z == 0)
            throw StructuralError("MOMDP dimensions must all be at least 1");
    }

    /// Build from flat tables; throws StructuralError when sizes disagree with the counts.
    static MomdpModel from_tables(std::size_t num_s, std::size_t num_e, std::size_t num_a,
                                  std::size_t num_z, std::vector<double> t_s,
                                  std::vector<double> t_e, std::vector<double> obs,
                                  const std::vector<std::size_t>& target, std::size_t horizon) {
        MomdpModel m(num_s, num_e, num_a, num_z, horizon);
        auto check = [](const char* name, std::size_t got, std::size_t want) {
            if (got != want) {
                std::ostringstream os;
                os << "table " << name << " has " << got << " entries, expected " << want;
                throw StructuralError(os.str());
            }
        };
        check("t_s", t_s.size(), m.t_s_.size());
        check("t_e", t_e.size(), m.t_e_.size());
        check("obs", obs.size(), m.obs_.size());
        m.t_s_ = std::move(t_s);
        m.t_e_ = std::move(t_e);
        m.obs_ = std::move(obs);
        m.set_target(target);
        return m;
    }

    std::size_t num_s() const { return num_s_; }
    std::size_t num_e() const { return num_e_; }
    std::size_t num_a() const { return num_a_; }
    std::size_t num_z() const { return num_z_; }
    std::size_t horizon() const { return horizon_; }
    void set_horizon(std::size_t n) { horizon_ = n; }

    double ts(std::size_t s, std::size_t e, std::size_t a, std::size_t sp) const {
        return t_s_[((s * num_e_ + e) * num_a_ + a) * num_s_ + sp];
    }
    double& ts(std::size_t s, std::size_t e, std::size_t a, std::size_t sp) {
        return t_s_[((s * num_e_ + e) * num_a_ + a) * num_s_ + sp];
    }
    double te(std::size_t s, std::size_t e, std::size_t a, std::size_t sp, std::size_t ep) const {
        return t_e_[(((s * num_e_ + e) * num_a_ + a) * num_s_ + sp) * num_e_ + ep];
    }
    double& te(std::size_t s, std::size_t e, std::size_t a, std::size_t sp, std::size_t ep) {
        return t_e_[(((s * num_e_ + e) * num_a_ + a) * num_s_ + sp) * num_e_ + ep];
    }
    double obs(std::size_t sp, std::size_t ep, std::size_t a, std::size_t z) const {
        return obs_[((sp * num_e_ + ep) * num_a_ + a) * num_z_ + z];
    }
    double& obs(std::size_t sp, std::size_t ep, std::size_t a, std::size_t z) {
        return obs_[((sp * num_e_ + ep) * num_a_ + a) * num_z_ + z];
    }

    std::span<const double> t_s_table() const { return t_s_; }
    std::span<const double> t_e_table() const { return t_e_; }
    std::span<const double> obs_table() const { return obs_; }

    void set_target(const std::vector<std::size_t>& target) {
        std::fill(target_mask_.begin(), target_mask_.end(), 0);
        target_.clear();
        for (std::size_t s : target) {
            if (s >= num_s_) throw StructuralError("target state " + std::to_string(s) + " out of range");
            if (!target_mask_[s]) target_.push_back(s);
            target_mask_[s] = 1;
        }
        std::sort(target_.begin(), target_.end());
    }
    const std::vector<std::size_t>& target() const { return target_; }
    bool is_target(std::size_t s) const { return target_mask_[s] != 0; }

    void check_state(std::size_t s) const { check_index("s", s, num_s_); }
    void check_latent(std::size_t e) const { check_index("e", e, num_e_); }
    void check_action(std::size_t a) const { check_index("a", a, num_a_); }
    void check_observation(std::size_t z) const { check_index("z", z, num_z_); }

private:
    static void check_index(const char* name, std::size_t v, std::size_t n) {
        if (v >= n) {
            std::ostringstream os;
            os << "index " << name << "=" << v << " out of range [0, " << n << ")";
            throw UsageError(os.str());
        }
    }

    std::size_t num_s_ = 0, num_e_ = 0, num_a_ = 0, num_z_ = 0, horizon_ = 0;
    std::vector<double> t_s_, t_e_, obs_;
    std::vector<std::size_t> target_;
    std::vector<char> target_mask_;
};

/// Observable/latent state pair.
struct MixedState {
    std::size_t s = 0;
    std::size_t e = 0;
    bool operator==(const MixedState&) const = default;
};

/// Probability distribution over the latent states E.
class Belief {
public:
    Belief() = default;

    /// Throws UsageError unless entries are in [0,1] and sum to 1 within kStochasticTol.
    explicit Belief(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.empty()) throw UsageError("belief must have at least one entry");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0 && p <= 1.0)) throw UsageError("belief entry outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kStochasticTol) {
            std::ostringstream os;
            os.precision(17);
            os << "belief sums to " << sum << ", not 1";
            throw UsageError(os.str());
        }
    }

    /// Normalize a nonnegative vector with positive mass.
    static Belief normalized(std::vector<double> weights) {
        double sum = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw UsageError("belief weight must be nonnegative");
            sum += w;
        }
        if (!(sum > 0.0)) throw UsageError("belief weights have zero mass");
        for (double& w : weights) w /= sum;
        Belief b;
        b.probs_ = std::move(weights);
        return b;
    }

    static Belief vertex(std::size_t n, std::size_t i) {
        std::vector<double> p(n, 0.0);
        p.at(i) = 1.0;
        return Belief(std::move(p));
    }

    static Belief uniform(std::size_t n) { return Belief::normalized(std::vector<double>(n, 1.0)); }

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t e) const { return probs_[e]; }
    std::span<const double> probs() const { return probs_; }
    const std::vector<double>& vec() const { return probs_; }

    bool operator==(const Belief&) const = default;

private:
    std::vector<double> probs_;
};

inline double dot(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind { TransitionS, TransitionE, Observation, EntryRange, Target };

struct Violation {
    ViolationKind kind;
    std::vector<std::size_t> index;  // offending index tuple
    double residual = 0.0;           // 1 - row sum, or the out-of-range entry
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

inline ValidationReport validate_model(const MomdpModel& m) {
    ValidationReport report;
    auto describe = [](const char* table, const std::vector<std::size_t>& idx, double residual) {
        std::ostringstream os;
        os.precision(17);
        os << table << "(";
        for (std::size_t i = 0; i < idx.size(); ++i) os << (i ? "," : "") << idx[i];
        os << ") residual " << residual;
        return os.str();
    };
    auto row = [&](ViolationKind kind, const char* table, std::vector<std::size_t> idx, double sum) {
        double residual = 1.0 - sum;
        if (std::abs(residual) > kStochasticTol) {
            std::string msg = describe(table, idx, residual);
            report.violations.push_back({kind, std::move(idx), residual, std::move(msg)});
        }
    };
    auto range = [&](const char* table, std::span<const double> values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            double v = values[i];
            if (!(v >= 0.0 && v <= 1.0)) {
                std::string msg = describe(table, {i}, v) + " (flat entry outside [0,1])";
                report.violations.push_back({ViolationKind::EntryRange, {i}, v, std::move(msg)});
            }
        }
    };
    range("t_s", m.t_s_table());
    range("t_e", m.t_e_table());
    range("obs", m.obs_table());

    const std::size_t S = m.num_s(), E = m.num_e(), A = m.num_a(), Z = m.num_z();
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t e = 0; e < E; ++e)
            for (std::size_t a = 0; a < A; ++a) {
                double sum = 0.0;
                for (std::size_t sp = 0; sp < S; ++sp) sum += m.ts(s, e, a, sp);
                row(ViolationKind::TransitionS, "t_s", {s, e, a}, sum);
                for (std::size_t sp = 0; sp < S; ++sp) {
                    double se = 0.0;
                    for (std::size_t ep = 0; ep < E; ++ep) se += m.te(s, e, a, sp, ep);
                    row(ViolationKind::TransitionE, "t_e", {s, e, a, sp}, se);
                }
            }
    for (std::size_t sp = 0; sp < S; ++sp)
        for (std::size_t ep = 0; ep < E; ++ep)
            for (std::size_t a = 0; a < A; ++a) {
                double sum = 0.0;
                for (std::size_t z = 0; z < Z; ++z) sum += m.obs(sp, ep, a, z);
                row(ViolationKind::Observation, "obs", {sp, ep, a}, sum);
            }
    if (m.target().empty())
        report.violations.push_back({ViolationKind::Target, {}, 0.0, "target set is empty"});
    return report;
}

/// Throws StructuralError carrying the first few violations when the model is not valid.
inline void require_valid(const MomdpModel& m) {
    ValidationReport r = validate_model(m);
    if (r.ok()) return;
    std::ostringstream os;
    os << r.violations.size() << " model violation(s)";
    for (std::size_t i = 0; i < r.violations.size() && i < 5; ++i) os << "; " << r.violations[i].message;
    throw StructuralError(os.str());
}

// ---------------------------------------------------------------------------
// Transition kernel and belief filter

/// F(s,e,a,s',e',z) = t_s(s,e,a,s') t_e(s,e,a,s',e') obs(s',e',a,z).
inline double kernel_f(const MomdpModel& m, std::size_t s, std::size_t e, std::size_t a,
                       std::size_t sp, std::size_t ep, std::size_t z) {
    m.check_state(s);
    m.check_latent(e);
    m.check_action(a);
    m.check_state(sp);
    m.check_latent(ep);
    m.check_observation(z);
    return m.ts(s, e, a, sp) * m.te(s, e, a, sp, ep) * m.obs(sp, ep, a, z);
}

namespace detail {

// out(e') = obs(s',e',a,z) * sum_e t_s(s,e,a,s') t_e(s,e,a,s',e') b(e); returns sum_e' out(e').
inline double filter_numerator(const MomdpModel& m, std::size_t s, std::span<const double> b,
                               std::size_t a, std::size_t sp, std::size_t z, std::span<double> out) {
    const std::size_t E = m.num_e();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t e = 0; e < E; ++e) {
        double w = b[e] * m.ts(s, e, a, sp);
        if (w == 0.0) continue;
        for (std::size_t ep = 0; ep < E; ++ep) out[ep] += w * m.te(s, e, a, sp, ep);
    }
    double total = 0.0;
    for (std::size_t ep = 0; ep < E; ++ep) {
        out[ep] *= m.obs(sp, ep, a, z);
        total += out[ep];
    }
    return total;
}

inline void check_belief(const MomdpModel& m, const Belief& b) {
    if (b.size() != m.num_e())
        throw UsageError("belief has " + std::to_string(b.size()) + " entries, model has |E|=" +
                         std::to_string(m.num_e()));
}

}  // namespace detail

/// P(s', z | s, b, a) = sum_{e,e'} b(e) F(s,e,a,s',e',z); the reciprocal of the filter's
/// normalization constant.
inline double joint_likelihood(const MomdpModel& m, std::size_t s, const Belief& b, std::size_t a,
                               std::size_t sp, std::size_t z) {
    m.check_state(s);
    m.check_action(a);
    m.check_state(sp);
    m.check_observation(z);
    detail::check_belief(m, b);
    std::vector<double> buf(m.num_e());
    return detail::filter_numerator(m, s, b.probs(), a, sp, z, buf);
}

/// Bayes filter step. Throws ImpossibleEvent if (s', z) has zero probability.
inline Belief belief_update(const MomdpModel& m, std::size_t s, const Belief& b, std::size_t a,
                            std::size_t sp, std::size_t z) {
    m.check_state(s);
    m.check_action(a);
    m.check_state(sp);
    m.check_observation(z);
    detail::check_belief(m, b);
    std::vector<double> next(m.num_e());
    double total = detail::filter_numerator(m, s, b.probs(), a, sp, z, next);
    if (!(total > 0.0)) {
        std::ostringstream os;
        os << "impossible event: P(s'=" << sp << ", z=" << z << " | s=" << s << ", a=" << a
           << ") = 0";
        throw ImpossibleEvent(os.str());
    }
    return Belief::normalized(std::move(next));
}

}  // namespace momdp
