#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <string>

#include "momdp/errors.hpp"
#include "momdp/model.hpp"
#include "momdp/point_based.hpp"
#include "momdp/support.hpp"

namespace momdp {

enum class ExecutionMode {
    Lookahead,   // recompute the one-step backup at the current belief
    StoredTags,  // act on the tag of the stage-k pair selected at the current belief
};

/// Executable policy over a value-function stack. Read-only; safe to share
/// across threads.
class Policy {
public:
    Policy(const MomdpModel& model, GammaStack stack, ExecutionMode mode = ExecutionMode::Lookahead)
        : model_(&model), stack_(std::make_shared<const GammaStack>(std::move(stack))),
          succ_(std::make_shared<const SuccessorIndex>(model)), mode_(mode) {
        if (stack_->stages.size() != model.horizon() + 1)
            throw UsageError("stack covers " + std::to_string(stack_->stages.size()) +
                             " stages, model horizon needs " + std::to_string(model.horizon() + 1));
        for (const auto& stage : stack_->stages)
            if (stage.size() != model.num_s()) throw UsageError("stack stage has wrong number of states");
    }

    const GammaStack& stack() const { return *stack_; }
    const MomdpModel& model() const { return *model_; }
    Variant variant() const { return stack_->variant; }
    double tie_tol() const { return stack_->tie_tol; }
    ExecutionMode mode() const { return mode_; }

    /// Per-action candidate pairs at (k, s, b) computed against stage k+1.
    PairSet candidates(std::size_t k, std::size_t s, const Belief& b) const {
        check_query(k, s, b);
        return detail::action_candidates(*model_, *succ_, s, b.probs(), stack_->stages[k + 1], variant(), tie_tol());
    }

    std::size_t select_action(std::size_t k, std::size_t s, const Belief& b) const {
        check_query(k, s, b);
        if (mode_ == ExecutionMode::StoredTags) {
            const PairSet& set = stack_->stages[k][s];
            const SupportPair& p = set[select_pair(set, b.probs(), variant(), tie_tol())];
            if (p.action) return *p.action;
        }
        PairSet cands = detail::action_candidates(*model_, *succ_, s, b.probs(), stack_->stages[k + 1], variant(),
                                                  tie_tol());
        return detail::choose_action(cands, b.probs(), variant(), tie_tol());
    }

    /// 1 - J_0(s0, b0): upper bound on the closed-loop failure probability.
    double failure_bound(std::size_t s0, const Belief& b0) const {
        if (variant() == Variant::TO)
            throw UsageError("failure bound is undefined for the TO variant (no reach-probability vectors)");
        model_->check_state(s0);
        detail::check_belief(*model_, b0);
        double j = beta_envelope(stack_->stages.at(0).at(s0), b0.probs());
        return std::clamp(1.0 - j, 0.0, 1.0);
    }

private:
    void check_query(std::size_t k, std::size_t s, const Belief& b) const {
        if (k >= model_->horizon())
            throw HorizonExhausted("no action at stage " + std::to_string(k) + ": horizon is " +
                                   std::to_string(model_->horizon()));
        model_->check_state(s);
        detail::check_belief(*model_, b);
    }

    const MomdpModel* model_;
    std::shared_ptr<const GammaStack> stack_;
    std::shared_ptr<const SuccessorIndex> succ_;
    ExecutionMode mode_;
};

inline std::size_t select_action(const Policy& policy, std::size_t k, std::size_t s, const Belief& b) {
    return policy.select_action(k, s, b);
}

inline double failure_bound(const Policy& policy, std::size_t s0, const Belief& b0) {
    return policy.failure_bound(s0, b0);
}

}  // namespace momdp
