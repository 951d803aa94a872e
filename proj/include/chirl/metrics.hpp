#pragma once

#include <utility>
#include <vector>

#include "chirl/linalg.hpp"
#include "chirl/mdp.hpp"

namespace chirl {

// Rescale a reward vector to unit L1 norm. Throws on an all-zero input.
numvec normalize_reward(const numvec& r);

// Expected value difference of the greedy policy under r_learned, measured in
// the normalized true reward, from the given start distribution. Nonnegative.
double evd(const TabularMdp& mdp, const numvec& r_true, const numvec& r_learned,
           const numvec& initial, double tol = 1e-6, int max_iters = 10000);

struct NllResult {
    double total = 0.0;
    double per_step = 0.0;
    long long steps = 0;
    long long clamped = 0;  // steps whose log-probability hit the floor
};

// Average demo negative log-likelihood under the soft-optimal policy for r.
// Individual step log-probs are floored at log_floor to keep averages finite.
NllResult demo_nll(const TabularMdp& mdp, const numvec& r,
                   const std::vector<std::vector<std::pair<int, int>>>& trajectories,
                   double log_floor = -30.0, double tol = 1e-6);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

// Sample mean and (n-1)-denominator standard deviation; std is 0 for n < 2.
MeanStd mean_std(const numvec& xs);

}  // namespace chirl
