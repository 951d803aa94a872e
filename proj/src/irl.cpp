#include "chirl/irl.hpp"

#include <ctime>

#include <limits>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "chirl/envs.hpp"
#include "chirl/metrics.hpp"
#include "chirl/rng.hpp"

namespace chirl {

namespace {

// CPU time of the calling thread. Epoch timings use this instead of wall
// clock so that scheduler preemption on shared machines does not pollute
// the training-time figures.
double thread_seconds() {
#if defined(CLOCK_THREAD_CPUTIME_ID)
    timespec ts;
    if (clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts) == 0)
        return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
#endif
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

DemoSet split_by_context(const ContextDag& dag, const std::vector<Context>& contexts,
                         const std::vector<RawTrajectory>& raw) {
    DemoSet out(static_cast<int>(contexts.size()));
    for (const RawTrajectory& rt : raw) {
        Trajectory cur;
        for (const RawStep& step : rt.steps) {
            Context ctx = resolve_label(dag, step.label);
            int idx = context_index(contexts, ctx);
            if (idx < 0)
                throw std::invalid_argument("split_by_context: label resolves outside the context set");
            if (cur.context != idx && !cur.steps.empty()) {
                out.by_context[cur.context].push_back(std::move(cur));
                cur = Trajectory{};
            }
            cur.context = idx;
            cur.steps.push_back(DemoStep{step.state, step.action});
        }
        if (!cur.steps.empty()) out.by_context[cur.context].push_back(std::move(cur));
    }
    return out;
}

std::pair<numvec, numvec> svf(const TabularMdp& mdp, const std::vector<Trajectory>& demos) {
    const int S = mdp.n_states();
    numvec mu(S, 0.0), nu(S, 0.0);
    double gamma = mdp.discount();
    for (const Trajectory& traj : demos) {
        for (const DemoStep& step : traj.steps) {
            if (step.state < 0 || step.state >= S)
                throw std::invalid_argument("svf: demonstration state out of range");
            if (step.action < 0 || step.action >= mdp.n_actions())
                throw std::invalid_argument("svf: demonstration action out of range");
            mu[step.state] += 1.0;
            auto [it, end] = mdp.row(step.state, step.action);
            for (; it != end; ++it) nu[it->next] -= gamma * it->prob;
        }
    }
    for (int s = 0; s < S; ++s) nu[s] += mu[s];
    return {std::move(mu), std::move(nu)};
}

numvec expected_svf(const TabularMdp& mdp, const numvec& reward, const numvec& nu, double vi_tol,
                    int propagate_iters, int vi_max_iters) {
    SoftViResult svi = soft_value_iteration(mdp, reward, vi_tol, vi_max_iters);
    int iters = propagate_iters > 0 ? propagate_iters
                                    : default_propagate_iters(mdp.discount(), vi_tol);
    return occupancy_from_initial(mdp, svi.policy, nu, iters);
}

namespace {

double context_nll(const SoftViResult& svi, const std::vector<Trajectory>& demos,
                   double scale) {
    double acc = 0.0;
    for (const Trajectory& traj : demos)
        for (const DemoStep& step : traj.steps)
            acc -= svi.values.q(step.state, step.action) - svi.values.v[step.state];
    return scale * acc;
}

}  // namespace

double irl_loss(const std::vector<ContextProblem>& problems,
                const std::vector<ModularRewardNet>& nets, double l1, double l2, double vi_tol,
                int vi_max_iters) {
    double total = 0.0;
    for (const ContextProblem& p : problems) {
        const ModularRewardNet& net = nets.at(p.net_index);
        numvec r = forward(net, p.ctx, *p.features);
        SoftViResult svi = soft_value_iteration(*p.mdp, r, vi_tol, vi_max_iters);
        total += context_nll(svi, *p.demos, p.scale);
        total += regularizer_value(net, l1, l2, p.ctx);
    }
    return total;
}

ParamGradients chirl_gradient(const numvec& mu_r, const numvec& mu_d,
                              const ModularRewardNet& net, const Context& ctx,
                              const Matrix& features, double l1, double l2) {
    if (mu_r.size() != mu_d.size())
        throw std::invalid_argument("chirl_gradient: visitation length mismatch");
    numvec upstream(mu_r.size());
    for (size_t s = 0; s < mu_r.size(); ++s) upstream[s] = mu_r[s] - mu_d[s];
    ParamGradients g = backward(net, ctx, features, upstream);
    accumulate(g, regularizer_grad(net, l1, l2, ctx));
    return g;
}

Algo parse_algo(const std::string& name) {
    if (name == "chirl" || name == "chirl-no-abstraction" || name == "chirl-noabs")
        return Algo::Chirl;
    if (name == "deepirl") return Algo::DeepIrl;
    if (name == "maxent") return Algo::MaxEntLinear;
    if (name == "hirl") return Algo::Hirl;
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

std::string algo_name(Algo a) {
    switch (a) {
        case Algo::Chirl: return "chirl";
        case Algo::DeepIrl: return "deepirl";
        case Algo::MaxEntLinear: return "maxent";
        case Algo::Hirl: return "hirl";
    }
    return "?";
}

namespace {

Matrix augment_with_context(const Matrix& phi, int ctx_id, int n_contexts) {
    Matrix out(phi.rows(), phi.cols() + n_contexts);
    for (int s = 0; s < phi.rows(); ++s) {
        double* orow = out.row_ptr(s);
        const double* prow = phi.row_ptr(s);
        for (int j = 0; j < phi.cols(); ++j) orow[j] = prow[j];
        orow[phi.cols() + ctx_id] = 1.0;
    }
    return out;
}

// Adam accumulator matching a net's parameter layout.
struct AdamState {
    ParamGradients m, v;
    long long t = 0;
};

void adam_step(ModularRewardNet& net, const ParamGradients& grads, double lr, AdamState& st) {
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++st.t;
    double corr1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
    double corr2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
    for (size_t mi = 0; mi < net.modules.size(); ++mi) {
        for (size_t vi = 0; vi < net.modules[mi].sets.size(); ++vi) {
            for (size_t li = 0; li < net.modules[mi].sets[vi].layers.size(); ++li) {
                auto upd = [&](numvec& theta, const numvec& g, numvec& m, numvec& v) {
                    for (size_t i = 0; i < theta.size(); ++i) {
                        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                        theta[i] -= lr * (m[i] / corr1) / (std::sqrt(v[i] / corr2) + eps);
                    }
                };
                upd(net.modules[mi].sets[vi].layers[li].w.data(),
                    grads.by_module[mi].sets[vi].layers[li].w.data(),
                    st.m.by_module[mi].sets[vi].layers[li].w.data(),
                    st.v.by_module[mi].sets[vi].layers[li].w.data());
                upd(net.modules[mi].sets[vi].layers[li].b,
                    grads.by_module[mi].sets[vi].layers[li].b,
                    st.m.by_module[mi].sets[vi].layers[li].b,
                    st.v.by_module[mi].sets[vi].layers[li].b);
            }
        }
    }
}

}  // namespace

TrainResult train(Algo algo, const EnvBundle& bundle, const DemoSet& demos,
                  const IrlConfig& cfg) {
    const int K = bundle.n_contexts();
    if (demos.n_contexts() != K)
        throw std::invalid_argument("train: demo set context count does not match bundle");
    if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be nonnegative");

    TrainResult res;
    res.algo = algo;
    res.net_of_context.resize(K);
    res.routing.resize(K);
    res.features.resize(K);

    const int d = bundle.feature_dim;
    switch (algo) {
        case Algo::Chirl: {
            res.nets.push_back(build_modular_net(bundle.dag, d, cfg.width, cfg.depth));
            init_params(res.nets[0], cfg.seed);
            for (int k = 0; k < K; ++k) {
                res.net_of_context[k] = 0;
                res.routing[k] = bundle.contexts[k];
                res.features[k] = bundle.ctxs[k].mdp->features();
            }
            break;
        }
        case Algo::DeepIrl:
        case Algo::MaxEntLinear: {
            res.nets.push_back(algo == Algo::DeepIrl
                                   ? build_monolithic_net(d + K, cfg.width, cfg.depth)
                                   : build_linear_net(d + K));
            init_params(res.nets[0], cfg.seed);
            for (int k = 0; k < K; ++k) {
                res.net_of_context[k] = 0;
                res.routing[k] = res.nets[0].contexts[0];
                res.features[k] = augment_with_context(bundle.ctxs[k].mdp->features(), k, K);
            }
            break;
        }
        case Algo::Hirl: {
            for (int k = 0; k < K; ++k) {
                res.nets.push_back(build_monolithic_net(d + K, cfg.width, cfg.depth));
                init_params(res.nets[k], Rng::mix(cfg.seed, 1000 + static_cast<uint64_t>(k)));
                res.net_of_context[k] = k;
                res.routing[k] = res.nets[k].contexts[0];
                res.features[k] = augment_with_context(bundle.ctxs[k].mdp->features(), k, K);
            }
            break;
        }
    }

    // Demonstration statistics are fixed for the whole run.
    std::vector<numvec> mu(K), nu(K);
    std::vector<double> nll_w(K, 1.0);
    for (int k = 0; k < K; ++k) {
        auto [m, n] = svf(*bundle.ctxs[k].mdp, demos.by_context[k]);
        if (cfg.normalize_by_traj && !demos.by_context[k].empty()) {
            double w = 1.0 / static_cast<double>(demos.by_context[k].size());
            for (double& x : m) x *= w;
            for (double& x : n) x *= w;
            nll_w[k] = w;
        }
        mu[k] = std::move(m);
        nu[k] = std::move(n);
    }

    std::vector<AdamState> adam;
    if (cfg.adaptive) {
        for (const ModularRewardNet& net : res.nets)
            adam.push_back(AdamState{zero_gradients(net), zero_gradients(net), 0});
    }

    Rng sampler(Rng::mix(cfg.seed, 0x5eedULL));
    res.log.reserve(cfg.epochs);
    double last_evd = std::numeric_limits<double>::quiet_NaN();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double t0 = thread_seconds();

        std::vector<int> schedule;
        if (cfg.sample_context) {
            schedule.push_back(sampler.uniform_int(K));
        } else {
            schedule.resize(K);
            for (int k = 0; k < K; ++k) schedule[k] = k;
        }

        std::vector<ParamGradients> grads;
        std::vector<int> touched(res.nets.size(), 0);
        for (const ModularRewardNet& net : res.nets) grads.push_back(zero_gradients(net));

        double sweep_loss = 0.0;
        for (int k : schedule) {
            const EnvContext& ec = bundle.ctxs[k];
            const ModularRewardNet& net = res.nets[res.net_of_context[k]];
            numvec r = forward(net, res.routing[k], res.features[k]);
            SoftViResult svi = soft_value_iteration(*ec.mdp, r, cfg.vi_tol, cfg.vi_max_iters);
            // nll_w scales the whole per-context term, regularizer included, so
            // the lambdas keep their relative weight against the data term no
            // matter how many trajectories were collected.
            sweep_loss += context_nll(svi, demos.by_context[k], nll_w[k]);
            sweep_loss += regularizer_value(net, nll_w[k] * cfg.l1, nll_w[k] * cfg.l2,
                                            res.routing[k]);

            int iters = cfg.propagate_iters > 0
                            ? cfg.propagate_iters
                            : default_propagate_iters(ec.mdp->discount(), cfg.vi_tol);
            numvec mu_r = occupancy_from_initial(*ec.mdp, svi.policy, nu[k], iters);
            ParamGradients g = chirl_gradient(mu_r, mu[k], net, res.routing[k], res.features[k],
                                              nll_w[k] * cfg.l1, nll_w[k] * cfg.l2);
            accumulate(grads[res.net_of_context[k]], g);
            ++touched[res.net_of_context[k]];
        }
        if (!std::isfinite(sweep_loss))
            throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                     std::to_string(epoch));

        for (size_t n = 0; n < res.nets.size(); ++n) {
            if (touched[n] == 0) continue;
            if (touched[n] > 1) scale(grads[n], 1.0 / touched[n]);
            if (cfg.adaptive)
                adam_step(res.nets[n], grads[n], cfg.learning_rate, adam[n]);
            else
                sgd_step(res.nets[n], grads[n], cfg.learning_rate);
        }

        double secs = thread_seconds() - t0;

        // Evaluation pass, outside the timed section. Expensive on big MDPs,
        // so the cadence is configurable; skipped epochs repeat the last value.
        if (cfg.eval_every > 0 && (epoch % cfg.eval_every == 0 || epoch + 1 == cfg.epochs)) {
            double evd_sum = 0.0;
            for (int k = 0; k < K; ++k) {
                const EnvContext& ec = bundle.ctxs[k];
                numvec r =
                    forward(res.nets[res.net_of_context[k]], res.routing[k], res.features[k]);
                evd_sum += evd(*ec.mdp, ec.r_true, r, ec.initial, cfg.vi_tol);
            }
            last_evd = evd_sum / K;
        }
        res.log.push_back(EpochLog{epoch, sweep_loss, last_evd, secs});
    }

    res.final_rewards.resize(K);
    for (int k = 0; k < K; ++k)
        res.final_rewards[k] =
            forward(res.nets[res.net_of_context[k]], res.routing[k], res.features[k]);
    return res;
}

}  // namespace chirl
