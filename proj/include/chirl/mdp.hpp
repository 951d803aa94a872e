#pragma once

#include <string>
#include <utility>
#include <vector>

#include "chirl/linalg.hpp"

namespace chirl {

/// One sparse transition entry: taking `action` in `state` reaches `next`
/// with probability `prob`.
struct Transition {
    int state = 0;
    int action = 0;
    int next = 0;
    double prob = 0.0;

    bool operator==(const Transition& o) const {
        return state == o.state && action == o.action && next == o.next && prob == o.prob;
    }
};

/// Finite MDP with sparse transitions and a per-state feature matrix.
/// Rewards are kept outside the type: solvers take a reward vector argument
/// so one model can be solved under many candidate rewards.
class TabularMdp {
public:
    TabularMdp() = default;
    TabularMdp(int n_states, int n_actions, double discount,
               std::vector<Transition> transitions, Matrix features);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    double discount() const { return discount_; }
    const Matrix& features() const { return features_; }

    /// Transitions for (s, a), sorted by successor state.
    std::pair<const Transition*, const Transition*> row(int s, int a) const {
        size_t k = static_cast<size_t>(s) * n_actions_ + a;
        return {entries_.data() + offsets_[k], entries_.data() + offsets_[k + 1]};
    }

    /// All entries in canonical (state, action, next) order.
    const std::vector<Transition>& entries() const { return entries_; }

    bool operator==(const TabularMdp& o) const {
        return n_states_ == o.n_states_ && n_actions_ == o.n_actions_ &&
               discount_ == o.discount_ && entries_ == o.entries_ && features_ == o.features_;
    }

private:
    int n_states_ = 0;
    int n_actions_ = 0;
    double discount_ = 0.0;
    Matrix features_;
    std::vector<Transition> entries_;
    std::vector<size_t> offsets_;  // (s * n_actions + a) -> span into entries_
};

/// Structural and numeric checks beyond what the constructor enforces.
/// Returns one message per violation; empty means the model is sound.
std::vector<std::string> validate(const TabularMdp& mdp);

/// Row-stochastic policy: policy(s, a) is the probability of action a in
/// state s.
using StochasticPolicy = Matrix;

struct ValueFunctions {
    numvec v;  // state values
    Matrix q;  // state-action values
};

struct SoftViResult {
    ValueFunctions values;
    StochasticPolicy policy;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

struct HardViResult {
    ValueFunctions values;
    std::vector<int> policy;  // greedy action per state, ties to lowest index
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

/// Soft (maximum-entropy) value iteration:
///   Q(s,a) = R(s) + gamma * sum_s' T(s,a,s') V(s'),  V(s) = logsumexp_a Q(s,a)
/// iterated from V = 0 until the sup-norm residual drops below tol. The
/// returned policy is pi(a|s) = exp(Q(s,a) - V(s)).
SoftViResult soft_value_iteration(const TabularMdp& mdp, const numvec& reward,
                                  double tol = 1e-6, int max_iters = 10000);

/// Standard value iteration with a greedy deterministic policy.
HardViResult hard_value_iteration(const TabularMdp& mdp, const numvec& reward,
                                  double tol = 1e-6, int max_iters = 10000);

/// Fixed point of V = R + gamma * P_pi V for a stochastic policy.
numvec policy_evaluation(const TabularMdp& mdp, const numvec& reward,
                         const StochasticPolicy& policy, double tol = 1e-6,
                         int max_iters = 10000);

/// Same for a deterministic policy given as one action index per state.
numvec policy_evaluation(const TabularMdp& mdp, const numvec& reward,
                         const std::vector<int>& policy, double tol = 1e-6,
                         int max_iters = 10000);

/// Accumulated discounted state-visitation flow: with y_0 = initial and
///   y_{t+1}(s') = gamma * sum_{s,a} y_t(s) pi(a|s) T(s,a,s')
/// returns sum_{t=0..n_iters} y_t. `initial` may carry negative mass; the
/// recursion is linear and callers exploit that.
numvec occupancy_from_initial(const TabularMdp& mdp, const StochasticPolicy& policy,
                              const numvec& initial, int n_iters);

/// Iteration count for which the truncated flow above is within tol of the
/// infinite sum: ceil(log(tol) / log(gamma)).
int default_propagate_iters(double discount, double tol = 1e-6);

}  // namespace chirl
