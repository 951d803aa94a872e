#include "chirl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chirl {

TabularMdp::TabularMdp(int n_states, int n_actions, double discount,
                       std::vector<Transition> transitions, Matrix features)
    : n_states_(n_states), n_actions_(n_actions), discount_(discount),
      features_(std::move(features)), entries_(std::move(transitions)) {
    if (n_states_ <= 0) throw std::invalid_argument("TabularMdp: n_states must be positive");
    if (n_actions_ <= 0) throw std::invalid_argument("TabularMdp: n_actions must be positive");
    if (!(discount_ >= 0.0 && discount_ < 1.0))
        throw std::invalid_argument("TabularMdp: discount must lie in [0, 1)");
    if (features_.rows() != n_states_)
        throw std::invalid_argument("TabularMdp: feature matrix must have one row per state");
    if (features_.cols() < 1)
        throw std::invalid_argument("TabularMdp: feature dimension must be at least 1");
    if (!all_finite(features_.data()))
        throw std::invalid_argument("TabularMdp: features contain non-finite values");
    for (const Transition& t : entries_) {
        if (t.state < 0 || t.state >= n_states_ || t.next < 0 || t.next >= n_states_)
            throw std::invalid_argument("TabularMdp: transition references invalid state index");
        if (t.action < 0 || t.action >= n_actions_)
            throw std::invalid_argument("TabularMdp: transition references invalid action index");
    }
    std::sort(entries_.begin(), entries_.end(), [](const Transition& a, const Transition& b) {
        if (a.state != b.state) return a.state < b.state;
        if (a.action != b.action) return a.action < b.action;
        return a.next < b.next;
    });
    for (size_t i = 1; i < entries_.size(); ++i) {
        const Transition &p = entries_[i - 1], &c = entries_[i];
        if (p.state == c.state && p.action == c.action && p.next == c.next)
            throw std::invalid_argument("TabularMdp: duplicate transition entry");
    }
    offsets_.assign(static_cast<size_t>(n_states_) * n_actions_ + 1, 0);
    for (const Transition& t : entries_)
        ++offsets_[static_cast<size_t>(t.state) * n_actions_ + t.action + 1];
    for (size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
}

std::vector<std::string> validate(const TabularMdp& mdp) {
    std::vector<std::string> report;
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            auto [it, end] = mdp.row(s, a);
            if (it == end) {
                report.push_back("state " + std::to_string(s) + " action " + std::to_string(a) +
                                 ": no outgoing transitions");
                continue;
            }
            double total = 0.0;
            for (; it != end; ++it) {
                if (!(it->prob >= 0.0 && it->prob <= 1.0) || !std::isfinite(it->prob)) {
                    report.push_back("state " + std::to_string(s) + " action " +
                                     std::to_string(a) + ": probability " +
                                     std::to_string(it->prob) + " outside [0, 1]");
                }
                total += it->prob;
            }
            if (std::abs(total - 1.0) > 1e-9) {
                report.push_back("state " + std::to_string(s) + " action " + std::to_string(a) +
                                 ": probabilities sum to " + std::to_string(total));
            }
        }
    }
    return report;
}

namespace {

void check_reward(const TabularMdp& mdp, const numvec& reward, const char* who) {
    if (static_cast<int>(reward.size()) != mdp.n_states())
        throw std::invalid_argument(std::string(who) + ": reward length must equal n_states");
    if (!all_finite(reward))
        throw std::invalid_argument(std::string(who) + ": reward contains non-finite values");
}

// Q(s, .) = R(s) + gamma * T V for one state; writes into q.
inline void backup_row(const TabularMdp& mdp, const numvec& reward, const numvec& v, int s,
                       double* q) {
    double gamma = mdp.discount();
    for (int a = 0; a < mdp.n_actions(); ++a) {
        double acc = 0.0;
        auto [it, end] = mdp.row(s, a);
        for (; it != end; ++it) acc += it->prob * v[it->next];
        q[a] = reward[s] + gamma * acc;
    }
}

}  // namespace

SoftViResult soft_value_iteration(const TabularMdp& mdp, const numvec& reward, double tol,
                                  int max_iters) {
    check_reward(mdp, reward, "soft_value_iteration");
    const int S = mdp.n_states(), A = mdp.n_actions();
    SoftViResult res;
    res.values.v.assign(S, 0.0);
    res.values.q = Matrix(S, A);
    numvec vnew(S, 0.0);
    for (int iter = 1; iter <= max_iters; ++iter) {
        double residual = 0.0;
        for (int s = 0; s < S; ++s) {
            double* q = res.values.q.row_ptr(s);
            backup_row(mdp, reward, res.values.v, s, q);
            vnew[s] = logsumexp(q, A);
            residual = std::max(residual, std::abs(vnew[s] - res.values.v[s]));
        }
        if (std::isnan(residual))
            throw std::runtime_error("soft_value_iteration: diverged (NaN residual)");
        res.values.v = vnew;
        res.iterations = iter;
        res.residual = residual;
        if (residual <= tol) {
            res.converged = true;
            break;
        }
    }
    res.policy = Matrix(S, A);
    for (int s = 0; s < S; ++s) {
        const double* q = res.values.q.row_ptr(s);
        double lse = logsumexp(q, A);
        for (int a = 0; a < A; ++a) res.policy(s, a) = std::exp(q[a] - lse);
    }
    return res;
}

HardViResult hard_value_iteration(const TabularMdp& mdp, const numvec& reward, double tol,
                                  int max_iters) {
    check_reward(mdp, reward, "hard_value_iteration");
    const int S = mdp.n_states(), A = mdp.n_actions();
    HardViResult res;
    res.values.v.assign(S, 0.0);
    res.values.q = Matrix(S, A);
    res.policy.assign(S, 0);
    numvec vnew(S, 0.0);
    for (int iter = 1; iter <= max_iters; ++iter) {
        double residual = 0.0;
        for (int s = 0; s < S; ++s) {
            double* q = res.values.q.row_ptr(s);
            backup_row(mdp, reward, res.values.v, s, q);
            int best = 0;
            for (int a = 1; a < A; ++a)
                if (q[a] > q[best]) best = a;
            vnew[s] = q[best];
            res.policy[s] = best;
            residual = std::max(residual, std::abs(vnew[s] - res.values.v[s]));
        }
        if (std::isnan(residual))
            throw std::runtime_error("hard_value_iteration: diverged (NaN residual)");
        res.values.v = vnew;
        res.iterations = iter;
        res.residual = residual;
        if (residual <= tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

numvec policy_evaluation(const TabularMdp& mdp, const numvec& reward,
                         const StochasticPolicy& policy, double tol, int max_iters) {
    check_reward(mdp, reward, "policy_evaluation");
    const int S = mdp.n_states(), A = mdp.n_actions();
    if (policy.rows() != S || policy.cols() != A)
        throw std::invalid_argument("policy_evaluation: policy shape mismatch");
    numvec v(S, 0.0), vnew(S, 0.0);
    double gamma = mdp.discount();
    for (int iter = 0; iter < max_iters; ++iter) {
        double residual = 0.0;
        for (int s = 0; s < S; ++s) {
            double acc = 0.0;
            for (int a = 0; a < A; ++a) {
                double pa = policy(s, a);
                if (pa == 0.0) continue;
                auto [it, end] = mdp.row(s, a);
                double inner = 0.0;
                for (; it != end; ++it) inner += it->prob * v[it->next];
                acc += pa * inner;
            }
            vnew[s] = reward[s] + gamma * acc;
            residual = std::max(residual, std::abs(vnew[s] - v[s]));
        }
        if (std::isnan(residual))
            throw std::runtime_error("policy_evaluation: diverged (NaN residual)");
        v = vnew;
        if (residual <= tol) break;
    }
    return v;
}

numvec policy_evaluation(const TabularMdp& mdp, const numvec& reward,
                         const std::vector<int>& policy, double tol, int max_iters) {
    check_reward(mdp, reward, "policy_evaluation");
    const int S = mdp.n_states();
    if (static_cast<int>(policy.size()) != S)
        throw std::invalid_argument("policy_evaluation: policy length must equal n_states");
    for (int s = 0; s < S; ++s)
        if (policy[s] < 0 || policy[s] >= mdp.n_actions())
            throw std::invalid_argument("policy_evaluation: action index out of range");
    numvec v(S, 0.0), vnew(S, 0.0);
    double gamma = mdp.discount();
    for (int iter = 0; iter < max_iters; ++iter) {
        double residual = 0.0;
        for (int s = 0; s < S; ++s) {
            auto [it, end] = mdp.row(s, policy[s]);
            double acc = 0.0;
            for (; it != end; ++it) acc += it->prob * v[it->next];
            vnew[s] = reward[s] + gamma * acc;
            residual = std::max(residual, std::abs(vnew[s] - v[s]));
        }
        if (std::isnan(residual))
            throw std::runtime_error("policy_evaluation: diverged (NaN residual)");
        v = vnew;
        if (residual <= tol) break;
    }
    return v;
}

numvec occupancy_from_initial(const TabularMdp& mdp, const StochasticPolicy& policy,
                              const numvec& initial, int n_iters) {
    const int S = mdp.n_states(), A = mdp.n_actions();
    if (static_cast<int>(initial.size()) != S)
        throw std::invalid_argument("occupancy_from_initial: initial length must equal n_states");
    if (policy.rows() != S || policy.cols() != A)
        throw std::invalid_argument("occupancy_from_initial: policy shape mismatch");
    if (n_iters < 0)
        throw std::invalid_argument("occupancy_from_initial: n_iters must be nonnegative");
    numvec total = initial;
    numvec cur = initial;
    numvec nxt(S, 0.0);
    double gamma = mdp.discount();
    for (int t = 0; t < n_iters; ++t) {
        std::fill(nxt.begin(), nxt.end(), 0.0);
        for (int s = 0; s < S; ++s) {
            if (cur[s] == 0.0) continue;
            for (int a = 0; a < A; ++a) {
                double w = cur[s] * policy(s, a);
                if (w == 0.0) continue;
                auto [it, end] = mdp.row(s, a);
                for (; it != end; ++it) nxt[it->next] += gamma * w * it->prob;
            }
        }
        for (int s = 0; s < S; ++s) total[s] += nxt[s];
        std::swap(cur, nxt);
    }
    return total;
}

int default_propagate_iters(double discount, double tol) {
    if (!(discount > 0.0 && discount < 1.0)) return 1;
    if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("default_propagate_iters: bad tol");
    return std::max(1, static_cast<int>(std::ceil(std::log(tol) / std::log(discount))));
}

}  // namespace chirl
