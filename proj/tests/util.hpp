#pragma once

// Shared helpers for the test suites. The dense reference computations here
// deliberately use Eigen instead of the library's own linear algebra so the
// two sides of every comparison are independent.

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "chirl/irl.hpp"
#include "chirl/mdp.hpp"
#include "chirl/reward_net.hpp"
#include "chirl/rng.hpp"

namespace testutil {

// Random sparse MDP: every (s, a) has 1..3 distinct successors with
// normalized positive probabilities. feat_dim 0 selects one-hot features.
inline chirl::TabularMdp random_mdp(chirl::Rng& rng, int n_states, int n_actions,
                                    double discount, int feat_dim = 0) {
    std::vector<chirl::Transition> ts;
    std::vector<int> order(n_states);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) {
            int k = 1 + rng.uniform_int(std::min(3, n_states));
            std::iota(order.begin(), order.end(), 0);
            for (int i = n_states - 1; i > 0; --i)
                std::swap(order[i], order[rng.uniform_int(i + 1)]);
            std::vector<double> w(k);
            double total = 0.0;
            for (int i = 0; i < k; ++i) total += w[i] = rng.uniform(0.1, 1.0);
            for (int i = 0; i < k; ++i)
                ts.push_back({s, a, order[i], w[i] / total});
        }
    chirl::Matrix phi(n_states, feat_dim > 0 ? feat_dim : n_states);
    if (feat_dim > 0) {
        for (double& x : phi.data()) x = rng.uniform(-1.0, 1.0);
    } else {
        for (int s = 0; s < n_states; ++s) phi(s, s) = 1.0;
    }
    return chirl::TabularMdp(n_states, n_actions, discount, std::move(ts), std::move(phi));
}

inline chirl::numvec random_reward(chirl::Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
    chirl::numvec r(n);
    for (double& x : r) x = rng.uniform(lo, hi);
    return r;
}

// State-to-state chain P_pi(s, s') = sum_a pi(a|s) T(s, a, s').
inline Eigen::MatrixXd policy_chain(const chirl::TabularMdp& mdp,
                                    const chirl::StochasticPolicy& pi) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(mdp.n_states(), mdp.n_states());
    for (const chirl::Transition& t : mdp.entries())
        p(t.state, t.next) += pi(t.state, t.action) * t.prob;
    return p;
}

inline Eigen::MatrixXd policy_chain(const chirl::TabularMdp& mdp, const std::vector<int>& pi) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(mdp.n_states(), mdp.n_states());
    for (const chirl::Transition& t : mdp.entries())
        if (pi[t.state] == t.action) p(t.state, t.next) += t.prob;
    return p;
}

// Exact fixed point of V = R + gamma P_pi V by dense LU.
template <class Policy>
inline Eigen::VectorXd dense_policy_eval(const chirl::TabularMdp& mdp, const chirl::numvec& r,
                                         const Policy& pi) {
    int n = mdp.n_states();
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - mdp.discount() * policy_chain(mdp, pi);
    Eigen::VectorXd b(n);
    for (int s = 0; s < n; ++s) b(s) = r[s];
    return a.partialPivLu().solve(b);
}

// Truncated discounted flow sum_{t=0..iters} y_t with y_{t+1} = gamma P^T y_t,
// mirroring the definition the library integrates.
inline Eigen::VectorXd dense_occupancy(const chirl::TabularMdp& mdp,
                                       const chirl::StochasticPolicy& pi,
                                       const chirl::numvec& initial, int iters) {
    Eigen::MatrixXd pt = policy_chain(mdp, pi).transpose();
    Eigen::VectorXd y(mdp.n_states());
    for (int s = 0; s < mdp.n_states(); ++s) y(s) = initial[s];
    Eigen::VectorXd acc = y;
    for (int t = 0; t < iters; ++t) {
        y = mdp.discount() * (pt * y);
        acc += y;
    }
    return acc;
}

// Infinite-horizon limit of the same flow: (I - gamma P^T) x = initial.
inline Eigen::VectorXd dense_occupancy_limit(const chirl::TabularMdp& mdp,
                                             const chirl::StochasticPolicy& pi,
                                             const chirl::numvec& initial) {
    int n = mdp.n_states();
    Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(n, n) - mdp.discount() * policy_chain(mdp, pi).transpose();
    Eigen::VectorXd b(n);
    for (int s = 0; s < n; ++s) b(s) = initial[s];
    return a.partialPivLu().solve(b);
}

// Every scalar parameter of the net in a fixed order: modules by position,
// sets, layers, weights row-major, then biases. Matches the gradient
// container's layout.
inline std::vector<double*> param_ptrs(chirl::ModularRewardNet& net) {
    std::vector<double*> out;
    for (chirl::NodeModule& mod : net.modules)
        for (chirl::Mlp& set : mod.sets)
            for (chirl::LinearLayer& layer : set.layers) {
                for (double& x : layer.w.data()) out.push_back(&x);
                for (double& x : layer.b) out.push_back(&x);
            }
    return out;
}

inline chirl::numvec grad_values(const chirl::ParamGradients& g) {
    chirl::numvec out;
    for (const chirl::NodeModule& mod : g.by_module)
        for (const chirl::Mlp& set : mod.sets)
            for (const chirl::LinearLayer& layer : set.layers) {
                out.insert(out.end(), layer.w.data().begin(), layer.w.data().end());
                out.insert(out.end(), layer.b.begin(), layer.b.end());
            }
    return out;
}

inline chirl::numvec param_values(const chirl::ModularRewardNet& net) {
    chirl::numvec out;
    for (const chirl::NodeModule& mod : net.modules)
        for (const chirl::Mlp& set : mod.sets)
            for (const chirl::LinearLayer& layer : set.layers) {
                out.insert(out.end(), layer.w.data().begin(), layer.w.data().end());
                out.insert(out.end(), layer.b.begin(), layer.b.end());
            }
    return out;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Freshly initialized nets have all-zero biases, so a state whose hidden
// units all shut off produces an exactly-zero activation vector and parks
// every downstream rectifier on its kink, where finite differences and the
// subgradient convention legitimately disagree. Gradient checks should run
// at a generic point, so give the biases small random values first.
inline void randomize_biases(chirl::ModularRewardNet& net, chirl::Rng& rng) {
    for (chirl::NodeModule& mod : net.modules)
        for (chirl::Mlp& set : mod.sets)
            for (chirl::LinearLayer& layer : set.layers)
                for (double& b : layer.b) b = rng.uniform(-0.3, 0.3);
}

}  // namespace testutil
