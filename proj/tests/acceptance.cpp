// Acceptance gate for the whole laboratory. Each criterion prints one
// PASS/FAIL line with the numbers it measured; the process exits nonzero if
// any criterion fails. Long-running criteria state their time budget inline.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iomanip>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chirl/envs.hpp"
#include "chirl/experiment.hpp"
#include "chirl/metrics.hpp"
#include "util.hpp"

namespace fs = std::filesystem;
using namespace chirl;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// root -> u -> w -> leaf, two binary variables, four contexts
ContextDag two_var_dag() {
    ContextDag d;
    d.nodes = {{0, NodeKind::Root, "", 0, {}},
               {1, NodeKind::Internal, "u", 2, {}},
               {2, NodeKind::Internal, "w", 2, {}},
               {3, NodeKind::Leaf, "", 0, {}}};
    d.edges = {{0, 1}, {1, 2}, {2, 3}};
    return d;
}

std::vector<Trajectory> random_demos(Rng& rng, int n_states, int n_actions, int n_traj) {
    std::vector<Trajectory> out;
    for (int t = 0; t < n_traj; ++t) {
        Trajectory traj;
        traj.context = 0;
        int len = 1 + rng.uniform_int(4);
        for (int i = 0; i < len; ++i)
            traj.steps.push_back({rng.uniform_int(n_states), rng.uniform_int(n_actions)});
        out.push_back(std::move(traj));
    }
    return out;
}

double bundle_evd(const EnvBundle& b, const std::vector<numvec>& rewards) {
    double sum = 0.0;
    for (int k = 0; k < b.n_contexts(); ++k)
        sum += evd(*b.ctxs[k].mdp, b.ctxs[k].r_true, rewards[k], b.ctxs[k].initial);
    return sum / b.n_contexts();
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::string drop_last_fields(std::string line, int k) {
    for (int i = 0; i < k; ++i) {
        size_t pos = line.rfind(',');
        if (pos == std::string::npos) break;
        line.erase(pos);
    }
    return line;
}

std::vector<std::string> stripped_lines(const fs::path& path, int drop) {
    std::vector<std::string> lines = read_lines(path);
    for (std::string& l : lines) l = drop_last_fields(l, drop);
    return lines;
}

// ---------------------------------------------------------------------------

bool criterion_gradients(std::ostringstream& detail) {
    Timer timer;
    ContextDag dag = two_var_dag();
    double worst_loss = 0.0, worst_back = 0.0;
    const int instances = 120;

    for (int i = 0; i < instances; ++i) {
        Rng rng(9000 + i);
        int n_states = 2 + i % 5;
        int n_actions = 2 + i % 2;
        int feat_dim = (i % 3 == 0) ? 0 : 3;
        TabularMdp mdp = testutil::random_mdp(rng, n_states, n_actions, 0.9, feat_dim);
        int in_dim = feat_dim == 0 ? n_states : feat_dim;
        int depth = 1 + i % 2;

        ModularRewardNet net = (i % 4 == 0) ? build_modular_net(dag, in_dim, 3, depth)
                                            : build_monolithic_net(in_dim, 3, depth);
        Context ctx = net.contexts[(i % 4 == 0) ? i % 4 : 0];
        init_params(net, 1000 + i);
        // A freshly initialized net has all-zero biases, which can park
        // rectifiers exactly on their kink for some states; nudge off it.
        testutil::randomize_biases(net, rng);

        std::vector<Trajectory> demos = random_demos(rng, n_states, n_actions, 1 + i % 2);
        const Matrix& feats = mdp.features();
        const double l1 = 1e-3, l2 = 0.1;

        std::vector<ModularRewardNet> nets{net};
        ContextProblem prob;
        prob.mdp = &mdp;
        prob.features = &feats;
        prob.ctx = ctx;
        prob.demos = &demos;
        std::vector<ContextProblem> problems{prob};

        auto [mu_d, nu] = svf(mdp, demos);
        numvec r = forward(nets[0], ctx, feats);
        numvec mu_r = expected_svf(mdp, r, nu, 1e-12, 600);
        ParamGradients g = chirl_gradient(mu_r, mu_d, nets[0], ctx, feats, l1, l2);
        numvec analytic = testutil::grad_values(g);

        std::vector<double*> params = testutil::param_ptrs(nets[0]);
        auto loss_fd = [&](double* p, double h) {
            double orig = *p;
            *p = orig + h;
            double up = irl_loss(problems, nets, l1, l2, 1e-12);
            *p = orig - h;
            double dn = irl_loss(problems, nets, l1, l2, 1e-12);
            *p = orig;
            return (up - dn) / (2.0 * h);
        };
        for (size_t j = 0; j < params.size(); ++j) {
            double rel = testutil::rel_err(analytic[j], loss_fd(params[j], 1e-5));
            // a rectifier input within the step of zero makes the central
            // difference straddle the kink; remeasure closer in
            if (rel > 1e-3) rel = std::min(rel, testutil::rel_err(analytic[j], loss_fd(params[j], 1e-7)));
            worst_loss = std::max(worst_loss, rel);
        }

        numvec upstream(n_states);
        for (double& x : upstream) x = rng.uniform(-1.0, 1.0);
        ParamGradients bg = backward(nets[0], ctx, feats, upstream);
        numvec banalytic = testutil::grad_values(bg);
        auto dot_fd = [&](double* p, double h) {
            double orig = *p;
            *p = orig + h;
            numvec ru = forward(nets[0], ctx, feats);
            *p = orig - h;
            numvec rd = forward(nets[0], ctx, feats);
            *p = orig;
            double acc = 0.0;
            for (int s = 0; s < n_states; ++s) acc += upstream[s] * (ru[s] - rd[s]);
            return acc / (2.0 * h);
        };
        for (size_t j = 0; j < params.size(); ++j) {
            double rel = testutil::rel_err(banalytic[j], dot_fd(params[j], 1e-5));
            if (rel > 1e-4) rel = std::min(rel, testutil::rel_err(banalytic[j], dot_fd(params[j], 1e-7)));
            worst_back = std::max(worst_back, rel);
        }
    }

    double secs = timer.seconds();
    detail << instances << " instances, worst loss-FD rel " << worst_loss
           << " (tol 1e-3), worst backward rel " << worst_back << " (tol 1e-4), " << std::fixed
           << std::setprecision(1) << secs << " s (budget 60)";
    return worst_loss <= 1e-3 && worst_back <= 1e-4 && secs < 60.0;
}

bool criterion_fixed_point(std::ostringstream& detail) {
    ContextDag dag = two_var_dag();
    int checked = 0;
    for (int i = 0; i < 10; ++i) {
        Rng rng(400 + i);
        int in_dim = 3 + i % 3;
        ModularRewardNet net = (i % 2 == 0) ? build_modular_net(dag, in_dim, 4, 2)
                                            : build_monolithic_net(in_dim, 4, 2);
        init_params(net, 50 + i);
        testutil::randomize_biases(net, rng);
        Context ctx = net.contexts[i % net.contexts.size()];

        int n_states = 4 + i % 3;
        Matrix feats(n_states, in_dim);
        for (double& x : feats.data()) x = rng.uniform(-1.0, 1.0);
        numvec mu(n_states);
        for (double& x : mu) x = rng.uniform(0.0, 3.0);

        ParamGradients g = chirl_gradient(mu, mu, net, ctx, feats, 0.0, 0.0);
        for (double x : testutil::grad_values(g))
            if (x != 0.0) {
                detail << "nonzero gradient entry " << x << " on instance " << i;
                return false;
            }
        numvec before = testutil::param_values(net);
        sgd_step(net, g, 0.7);
        numvec after = testutil::param_values(net);
        if (before.size() != after.size() ||
            std::memcmp(before.data(), after.data(), before.size() * sizeof(double)) != 0) {
            detail << "sgd_step changed parameters on instance " << i;
            return false;
        }
        ++checked;
    }
    detail << checked << " nets: zero gradient and bitwise-unchanged parameters";
    return true;
}

bool criterion_taxi_sizes(std::ostringstream& detail) {
    EnvBundle abs = build_taxi(5, true);
    EnvBundle flat = build_taxi(5, false);
    int get_id = abs.context_id({{"subtask", "Get"}});
    int put_id = abs.context_id({{"subtask", "Put"}});
    int nav_id = abs.context_id({{"subtask", "Get"}, {"nav", "R"}});
    int get_n = abs.ctxs[get_id].mdp->n_states();
    int put_n = abs.ctxs[put_id].mdp->n_states();
    int nav_n = abs.ctxs[nav_id].mdp->n_states();
    bool ok = get_n == 125 && put_n == 100 && nav_n == 25;
    for (const EnvContext& ec : flat.ctxs) ok = ok && ec.mdp->n_states() == 500;
    detail << "Get " << get_n << ", Put " << put_n << ", Nav " << nav_n << ", flat "
           << flat.ctxs[0].mdp->n_states() << " (want 125/100/25/500)";
    return ok;
}

bool criterion_context_counts(std::ostringstream& detail) {
    int taxi = build_taxi(5, true).n_contexts();
    int jct = build_jctnav().n_contexts();
    int goal = build_goalnav().n_contexts();
    detail << "taxi " << taxi << ", jctnav " << jct << ", goalnav " << goal << " (want 10/6/4)";
    return taxi == 10 && jct == 6 && goal == 4;
}

bool criterion_goalnav_convergence(std::ostringstream& detail) {
    Timer timer;
    EnvBundle bundle = build_goalnav();
    IrlConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.l1 = 1e-3;
    cfg.l2 = 0.8;
    cfg.epochs = 500;
    cfg.width = 64;
    cfg.normalize_by_traj = true;
    cfg.eval_every = 0;

    numvec evd_many, evd_few;
    for (uint64_t s = 0; s < 10; ++s) {
        cfg.seed = s;
        for (int n : {256, 4}) {
            DemoSet demos = generate_demo_set(bundle, n, s);
            TrainResult tr = train(Algo::Chirl, bundle, demos, cfg);
            (n == 256 ? evd_many : evd_few).push_back(bundle_evd(bundle, tr.final_rewards));
        }
    }
    MeanStd many = mean_std(evd_many);
    MeanStd few = mean_std(evd_few);
    double secs = timer.seconds();
    detail << "mean EVD " << many.mean << " +- " << many.std << " at 256 traj vs " << few.mean
           << " at 4 traj, 10 seeds, " << std::fixed << std::setprecision(1) << secs
           << " s (budget 600)";
    return many.mean <= 0.05 && many.mean < few.mean && secs < 600.0;
}

bool criterion_taxi_ordering(std::ostringstream& detail) {
    EnvBundle taxi = build_taxi(5, true);
    IrlConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.l1 = 1e-3;
    cfg.l2 = 0.8;
    cfg.epochs = 500;
    cfg.width = 64;
    cfg.normalize_by_traj = true;
    cfg.eval_every = 0;

    std::map<Algo, numvec> evds;
    for (uint64_t s = 0; s < 10; ++s) {
        DemoSet demos = generate_demo_set(taxi, 256, s);
        for (Algo a : {Algo::Chirl, Algo::Hirl, Algo::DeepIrl}) {
            cfg.seed = s;
            TrainResult tr = train(a, taxi, demos, cfg);
            evds[a].push_back(bundle_evd(taxi, tr.final_rewards));
        }
    }
    MeanStd c = mean_std(evds[Algo::Chirl]);
    MeanStd h = mean_std(evds[Algo::Hirl]);
    MeanStd d = mean_std(evds[Algo::DeepIrl]);
    double pool_ch = std::sqrt(0.5 * (c.std * c.std + h.std * h.std));
    double pool_cd = std::sqrt(0.5 * (c.std * c.std + d.std * d.std));
    detail << "chirl " << c.mean << " +- " << c.std << ", hirl " << h.mean << " +- " << h.std
           << ", deepirl " << d.mean << " +- " << d.std << "; deltas " << (h.mean - c.mean)
           << " / " << (d.mean - c.mean) << ", pooled std " << pool_ch << " / " << pool_cd;
    return c.mean <= h.mean + pool_ch && c.mean <= d.mean + pool_cd;
}

bool criterion_abstraction_timing(std::ostringstream& detail) {
    Timer timer;
    const std::vector<int> grids = {5, 10, 20};
    const int reps = 14, epochs = 12, skip = 2;

    struct Arm {
        EnvBundle bundle;
        DemoSet demos{0};
        std::vector<double> pool;
    };
    // arm 0 keeps the subtask state abstraction, arm 1 trains flat
    std::vector<std::array<Arm, 2>> arms;
    for (int g : grids) {
        std::array<Arm, 2> pair;
        pair[0].bundle = build_taxi(g, true);
        pair[1].bundle = build_taxi(g, false);
        for (Arm& a : pair) a.demos = generate_demo_set(a.bundle, 64, 3);
        arms.push_back(std::move(pair));
    }

    IrlConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.l1 = 1e-3;
    cfg.l2 = 0.8;
    cfg.epochs = epochs;
    cfg.width = 16;
    cfg.normalize_by_traj = true;
    cfg.eval_every = 0;

    for (int rep = 0; rep < reps; ++rep) {
        cfg.seed = 100 + rep;
        for (auto& pair : arms) {
            // alternate which arm runs first so slow drift cancels
            for (int j = 0; j < 2; ++j) {
                Arm& arm = pair[(rep + j) % 2];
                TrainResult tr = train(Algo::Chirl, arm.bundle, arm.demos, cfg);
                for (int e = skip; e < epochs; ++e) arm.pool.push_back(tr.log[e].seconds);
            }
        }
    }

    std::vector<double> ratio, gap;
    for (auto& pair : arms) {
        double abs_med = median(pair[0].pool);
        double flat_med = median(pair[1].pool);
        ratio.push_back(flat_med / abs_med);
        gap.push_back(flat_med - abs_med);
    }
    // per-epoch CPU medians carry a few percent of noise; the ratio trend
    // only has to hold up to that, the absolute gap must strictly widen
    const double tol = 0.05;
    bool ok = ratio[1] >= ratio[0] * (1.0 - tol) && ratio[2] >= ratio[1] * (1.0 - tol) &&
              gap[1] > gap[0] && gap[2] > gap[1];
    double secs = timer.seconds();
    detail << std::fixed << std::setprecision(2) << "flat/abstracted epoch-time ratios "
           << ratio[0] << " -> " << ratio[1] << " -> " << ratio[2] << " (grids 5/10/20), gaps "
           << std::setprecision(3) << gap[0] << " -> " << gap[1] << " -> " << gap[2] << " s, "
           << std::setprecision(1) << secs << " s (budget 1800)";
    return ok && secs < 1800.0;
}

bool criterion_occupancy_oracle(std::ostringstream& detail) {
    const double gammas[] = {0.5, 0.9, 0.95};
    double worst = 0.0;
    const int instances = 120;
    for (int i = 0; i < instances; ++i) {
        Rng rng(7000 + i);
        int n_states = 2 + i % 4;
        int n_actions = 2 + i % 2;
        double gamma = gammas[i % 3];
        TabularMdp mdp = testutil::random_mdp(rng, n_states, n_actions, gamma);
        numvec r = testutil::random_reward(rng, n_states);
        numvec nu(n_states);
        if (i % 4 == 0) {
            double total = 0.0;
            for (double& x : nu) total += x = rng.uniform(0.05, 1.0);
            for (double& x : nu) x /= total;
        } else {
            for (double& x : nu) x = rng.uniform(-1.0, 1.0);
        }

        int iters = default_propagate_iters(gamma, 1e-10);
        numvec mine = expected_svf(mdp, r, nu, 1e-14, iters);
        StochasticPolicy pi = soft_value_iteration(mdp, r, 1e-14).policy;
        Eigen::VectorXd exact = testutil::dense_occupancy_limit(mdp, pi, nu);
        for (int s = 0; s < n_states; ++s)
            worst = std::max(worst, std::abs(mine[s] - exact(s)));
    }
    detail << instances << " models, worst per-state deviation " << worst << " (tol 1e-6)";
    return worst <= 1e-6;
}

bool criterion_evd_properties(std::ostringstream& detail) {
    int self_checks = 0, scale_checks = 0, norm_checks = 0, nonneg_checks = 0;
    double worst_norm = 0.0;

    for (int i = 0; i < 50; ++i) {
        Rng rng(3000 + i);
        int n_states = 2 + i % 5;
        TabularMdp mdp = testutil::random_mdp(rng, n_states, 2 + i % 2, 0.9);
        numvec initial(n_states, 1.0 / n_states);
        numvec r_true = testutil::random_reward(rng, n_states);
        numvec r_learned = testutil::random_reward(rng, n_states);

        if (evd(mdp, r_true, r_true, initial) != 0.0) {
            detail << "evd(r, r) != 0 on instance " << i;
            return false;
        }
        ++self_checks;

        double base = evd(mdp, r_true, r_learned, initial);
        for (double c : {2.0, 0.5, 8.0}) {
            numvec scaled = r_learned;
            for (double& x : scaled) x *= c;
            if (hard_value_iteration(mdp, scaled).policy != hard_value_iteration(mdp, r_learned).policy) {
                detail << "greedy policy changed under x" << c << " on instance " << i;
                return false;
            }
            if (evd(mdp, r_true, scaled, initial) != base) {
                detail << "evd changed under learned-reward scale x" << c << " on instance " << i;
                return false;
            }
            ++scale_checks;
        }
        for (double c : {0.5, 7.0}) {
            numvec scaled = r_true;
            for (double& x : scaled) x *= c;
            worst_norm = std::max(worst_norm, std::abs(evd(mdp, scaled, r_learned, initial) - base));
            ++norm_checks;
        }
    }

    for (int i = 0; i < 200; ++i) {
        Rng rng(5000 + i);
        int n_states = 2 + i % 5;
        TabularMdp mdp = testutil::random_mdp(rng, n_states, 2 + i % 2, 0.9);
        numvec initial(n_states, 1.0 / n_states);
        for (int k = 0; k < 5; ++k) {
            numvec a = testutil::random_reward(rng, n_states);
            numvec b = testutil::random_reward(rng, n_states);
            double v = evd(mdp, a, b, initial);
            if (!(v >= 0.0)) {
                detail << "negative evd " << v << " on instance " << i << "." << k;
                return false;
            }
            ++nonneg_checks;
        }
    }

    detail << self_checks << " self checks exact, " << scale_checks
           << " dyadic rescales policy-identical, true-reward scale deviation " << worst_norm
           << " (tol 1e-9), " << nonneg_checks << " pairs nonnegative";
    return worst_norm <= 1e-9;
}

bool criterion_determinism(std::ostringstream& detail) {
    fs::path root = fs::temp_directory_path() / "chirl_acceptance_det";
    fs::remove_all(root);
    ExperimentSpec spec = preset("goalnav");
    ExperimentOutcome a = run_experiment(spec, (root / "a").string(), 1);
    ExperimentOutcome b = run_experiment(spec, (root / "b").string(), 1);
    if (a.n_failed != 0 || b.n_failed != 0) {
        detail << "failed cells: " << a.n_failed << " / " << b.n_failed;
        return false;
    }

    // results.csv carries two trailing wall-time columns and each training
    // log one; those measure the machine, not the math, so they are the only
    // fields excluded from the bitwise comparison.
    bool same = stripped_lines(root / "a" / "results.csv", 2) ==
                stripped_lines(root / "b" / "results.csv", 2);

    std::set<std::string> names_a, names_b;
    for (const auto& e : fs::directory_iterator(root / "a" / "logs"))
        names_a.insert(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(root / "b" / "logs"))
        names_b.insert(e.path().filename().string());
    same = same && names_a == names_b;
    int compared = 0;
    for (const std::string& name : names_a) {
        if (stripped_lines(root / "a" / "logs" / name, 1) !=
            stripped_lines(root / "b" / "logs" / name, 1)) {
            detail << "log " << name << " differs between runs";
            return false;
        }
        ++compared;
    }
    fs::remove_all(root);
    detail << a.cells.size() << " cells per run, results.csv and " << compared
           << " training logs bitwise identical outside the timing columns";
    return same && static_cast<int>(a.cells.size()) == 160 && compared == 160;
}

bool criterion_parameter_sharing(std::ostringstream& detail) {
    // branchy topology: root -> {A, B, C}, A -> D, B -> D, {C, D} -> leaf
    ContextDag d;
    d.nodes = {{0, NodeKind::Root, "", 0, {}},     {1, NodeKind::Internal, "A", 20, {}},
               {2, NodeKind::Internal, "B", 30, {}}, {3, NodeKind::Internal, "C", 10, {}},
               {4, NodeKind::Internal, "D", 20, {}}, {5, NodeKind::Leaf, "", 0, {}}};
    d.edges = {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 4}, {3, 5}, {4, 5}};
    require_valid_dag(d);

    long long contexts = static_cast<long long>(enumerate_contexts(d).size());
    long long joint = full_joint_context_count(d);
    ParamCount pc = param_count(build_modular_net(d, 9, 8, 2));
    // one parameter set per internal node value plus the two dummies
    long long sets_by_hand = 20 + 30 + 10 + 20 + 2;
    // Counting (value, downstream-choice) slots instead gives
    // 20 + 10 + (20 + 30 + 10) * 20 = 1230; the figure 1250 is sometimes
    // quoted for this topology and matches neither tally. Either way the
    // shared-module count stays two orders of magnitude below per-context
    // tables.
    long long slot_formula = 20 + 10 + (20 + 30 + 10) * 20;
    double reduction = static_cast<double>(joint) / static_cast<double>(pc.parameter_sets);

    detail << "contexts " << contexts << " (want 1010), independent tables " << joint
           << " (want 120000), shared parameter sets " << pc.parameter_sets << " (want "
           << sets_by_hand << "), reduction " << std::fixed << std::setprecision(0) << reduction
           << "x (want >= 100x); note: value-slot tally " << slot_formula
           << ", sometimes quoted as 1250";
    return contexts == 1010 && joint == 120000 && pc.parameter_sets == sets_by_hand &&
           slot_formula == 1230 && reduction >= 100.0;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<bool(std::ostringstream&)> body;
    };
    const std::vector<Criterion> criteria = {
        {1, "gradient check", criterion_gradients},
        {2, "stationary point", criterion_fixed_point},
        {3, "taxi abstraction sizes", criterion_taxi_sizes},
        {4, "context counts", criterion_context_counts},
        {5, "goalnav convergence", criterion_goalnav_convergence},
        {6, "taxi baseline ordering", criterion_taxi_ordering},
        {7, "abstraction timing", criterion_abstraction_timing},
        {8, "occupancy oracle", criterion_occupancy_oracle},
        {9, "evd properties", criterion_evd_properties},
        {10, "experiment determinism", criterion_determinism},
        {11, "parameter sharing", criterion_parameter_sharing},
    };

    int failed = 0;
    for (const Criterion& c : criteria) {
        Timer timer;
        std::ostringstream detail;
        bool ok = false;
        try {
            ok = c.body(detail);
        } catch (const std::exception& e) {
            detail << "exception: " << e.what();
        }
        std::printf("[%2d] %s  %-24s %s  [%.1f s]\n", c.id, ok ? "PASS" : "FAIL", c.name,
                    detail.str().c_str(), timer.seconds());
        std::fflush(stdout);
        if (!ok) ++failed;
    }
    std::printf("%d/%d criteria passed\n", static_cast<int>(criteria.size()) - failed,
                static_cast<int>(criteria.size()));
    return failed == 0 ? 0 : 1;
}
