#include "chirl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chirl {

numvec normalize_reward(const numvec& r) {
    double norm = l1_norm(r);
    if (!(norm > 0.0)) throw std::invalid_argument("normalize_reward: reward has zero L1 norm");
    numvec out(r.size());
    for (size_t i = 0; i < r.size(); ++i) out[i] = r[i] / norm;
    return out;
}

double evd(const TabularMdp& mdp, const numvec& r_true, const numvec& r_learned,
           const numvec& initial, double tol, int max_iters) {
    if (static_cast<int>(initial.size()) != mdp.n_states())
        throw std::invalid_argument("evd: initial distribution length mismatch");
    numvec rt = normalize_reward(r_true);
    HardViResult opt = hard_value_iteration(mdp, rt, tol, max_iters);
    HardViResult learned = hard_value_iteration(mdp, r_learned, tol, max_iters);
    // Evaluate both policies with the same routine so equal policies give an
    // exact zero rather than accumulated solver noise.
    numvec v_opt = policy_evaluation(mdp, rt, opt.policy, tol, max_iters);
    numvec v_pi = policy_evaluation(mdp, rt, learned.policy, tol, max_iters);
    double gap = 0.0;
    for (int s = 0; s < mdp.n_states(); ++s) gap += initial[s] * (v_opt[s] - v_pi[s]);
    return std::max(gap, 0.0);
}

NllResult demo_nll(const TabularMdp& mdp, const numvec& r,
                   const std::vector<std::vector<std::pair<int, int>>>& trajectories,
                   double log_floor, double tol) {
    SoftViResult svi = soft_value_iteration(mdp, r, tol);
    NllResult out;
    for (const auto& traj : trajectories) {
        for (const auto& [s, a] : traj) {
            double logp = svi.values.q(s, a) - svi.values.v[s];
            if (logp < log_floor) {
                logp = log_floor;
                ++out.clamped;
            }
            out.total -= logp;
            ++out.steps;
        }
    }
    out.per_step = out.steps > 0 ? out.total / static_cast<double>(out.steps) : 0.0;
    return out;
}

MeanStd mean_std(const numvec& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return out;
}

}  // namespace chirl
