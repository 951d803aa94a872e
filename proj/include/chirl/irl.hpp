#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chirl/context.hpp"
#include "chirl/linalg.hpp"
#include "chirl/mdp.hpp"
#include "chirl/reward_net.hpp"

namespace chirl {

struct DemoStep {
    int state = 0;
    int action = 0;

    bool operator==(const DemoStep& o) const { return state == o.state && action == o.action; }
};

/// Demonstration segment under a single context. `context` indexes into the
/// owning bundle's enumerated context list.
struct Trajectory {
    int context = -1;
    std::vector<DemoStep> steps;
    bool truncated = false;  // rollout hit the length cap instead of a terminal
};

/// A raw recorded trajectory may change context mid-stream (hierarchical
/// execution interleaves subtasks); each step carries its own label.
struct RawStep {
    ContextLabel label;
    int state = 0;
    int action = 0;
};

struct RawTrajectory {
    std::vector<RawStep> steps;
};

/// Demonstrations bucketed by context index.
struct DemoSet {
    std::vector<std::vector<Trajectory>> by_context;

    explicit DemoSet(int n_contexts = 0) : by_context(n_contexts) {}

    int n_contexts() const { return static_cast<int>(by_context.size()); }
    long long total_steps(int ctx) const {
        long long n = 0;
        for (const Trajectory& t : by_context[ctx]) n += static_cast<long long>(t.steps.size());
        return n;
    }
};

/// Cuts raw trajectories into maximal single-context runs and buckets them.
/// Labels are resolved against `dag`; `contexts` fixes the index order.
DemoSet split_by_context(const ContextDag& dag, const std::vector<Context>& contexts,
                         const std::vector<RawTrajectory>& raw);

/// Empirical state visitation counts for one context's demonstrations:
///   mu(s)  = number of demonstration steps taken from s
///   nu(s') = mu(s') - gamma * sum_steps T(s_t, a_t, s')
/// nu is the boundary term that seeds the expected-visitation recursion; it
/// can carry negative mass and that is intentional.
std::pair<numvec, numvec> svf(const TabularMdp& mdp, const std::vector<Trajectory>& demos);

/// Expected discounted state visitation under the soft-optimal policy of
/// `reward`, seeded by `nu`. `propagate_iters <= 0` selects the default
/// horizon for the MDP's discount.
numvec expected_svf(const TabularMdp& mdp, const numvec& reward, const numvec& nu,
                    double vi_tol = 1e-6, int propagate_iters = 0, int vi_max_iters = 10000);

/// One context's slice of the training objective.
struct ContextProblem {
    const TabularMdp* mdp = nullptr;
    const Matrix* features = nullptr;  // input rows fed to the net
    Context ctx;                       // routing through the net
    const std::vector<Trajectory>* demos = nullptr;
    double scale = 1.0;  // multiplies the data term (1, or 1/n_traj)
    int net_index = 0;   // which net in `nets` serves this context
};

/// Negative log likelihood of all demonstrations under the soft-optimal
/// policies of the current rewards, plus L1/L2 penalties on each context's
/// active parameter sets:
///   sum_k [ -scale_k * sum_steps (Q(s,a) - V(s)) + l1|theta_k| + l2/2 |theta_k|^2 ]
double irl_loss(const std::vector<ContextProblem>& problems,
                const std::vector<ModularRewardNet>& nets, double l1, double l2,
                double vi_tol = 1e-6, int vi_max_iters = 10000);

/// Gradient of one context's slice: (mu_r - mu_d) pushed through the net
/// plus the regularizer subgradient. mu_r and mu_d must carry the same
/// normalization the loss uses.
ParamGradients chirl_gradient(const numvec& mu_r, const numvec& mu_d,
                              const ModularRewardNet& net, const Context& ctx,
                              const Matrix& features, double l1, double l2);

enum class Algo { Chirl, DeepIrl, MaxEntLinear, Hirl };

Algo parse_algo(const std::string& name);     // accepts chirl|deepirl|maxent|hirl
std::string algo_name(Algo a);

struct IrlConfig {
    double learning_rate = 1e-2;
    double l1 = 1e-3;
    double l2 = 0.8;
    int epochs = 500;
    double vi_tol = 1e-6;
    int vi_max_iters = 10000;
    int propagate_iters = 0;  // 0 = derive from discount and vi_tol
    uint64_t seed = 0;
    bool sample_context = false;     // one sampled context per epoch instead of a sweep
    bool normalize_by_traj = false;  // scale each context's counts by 1/n_traj
    bool adaptive = false;           // Adam-style steps instead of plain SGD
    int width = 16;                  // module interface width
    int depth = 2;                   // layers per module
    int eval_every = 1;              // epochs between EVD evaluations; 0 = never
};

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double evd = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    Algo algo = Algo::Chirl;
    std::vector<ModularRewardNet> nets;
    std::vector<int> net_of_context;      // context index -> net index
    std::vector<Context> routing;         // context index -> context fed to its net
    std::vector<Matrix> features;         // context index -> input matrix
    std::vector<numvec> final_rewards;    // context index -> learned reward
    std::vector<EpochLog> log;
};

struct EnvBundle;  // envs.hpp

/// Full training loop: builds the reward representation for `algo`, computes
/// demonstration statistics once, then runs gradient descent on the MaxEnt
/// objective. Each epoch sweeps every context and averages their gradients
/// per net (or samples a single context when cfg.sample_context is set).
/// Deterministic for a fixed config seed; epoch wall time covers the solver,
/// propagation and backward work but not the evaluation pass.
TrainResult train(Algo algo, const EnvBundle& bundle, const DemoSet& demos,
                  const IrlConfig& cfg);

}  // namespace chirl
