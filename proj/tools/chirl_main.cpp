#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "chirl/envs.hpp"
#include "chirl/experiment.hpp"
#include "chirl/io.hpp"
#include "chirl/metrics.hpp"

namespace {

std::string join(const std::vector<std::string>& xs, const char* sep) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out += sep;
        out += xs[i];
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Context-hierarchical inverse reinforcement learning benchmarks"};

    std::string env = "goalnav";
    std::string algo = "chirl";
    std::string preset_name;
    std::string spec_path;
    std::string out_dir = "out";
    std::string demo_path;
    int n_traj = 64;
    std::vector<uint64_t> seeds = {0};
    int grid_size = 0;
    int threads = 0;
    bool sample_context = false;
    bool adaptive = false;
    bool raw_counts = false;
    std::string expert = "soft";
    chirl::IrlConfig cfg;
    cfg.normalize_by_traj = true;

    app.add_option("--env", env, "goalnav, jctnav or taxi")
        ->check(CLI::IsMember({"goalnav", "jctnav", "taxi"}));
    app.add_option("--algo", algo, "chirl, chirl-no-abstraction, deepirl, maxent or hirl")
        ->check(CLI::IsMember(
            {"chirl", "chirl-no-abstraction", "chirl-noabs", "deepirl", "maxent", "hirl"}));
    app.add_option("--preset", preset_name,
                   "run a full experiment grid: " + join(chirl::preset_names(), ", "));
    app.add_option("--spec", spec_path, "run an experiment grid from a JSON spec");
    app.add_option("--traj", n_traj, "total expert trajectories, split over contexts");
    app.add_option("--seeds", seeds, "seeds to run (one training per seed)");
    app.add_option("--epochs", cfg.epochs, "gradient steps");
    app.add_option("--lr", cfg.learning_rate, "learning rate");
    app.add_option("--l1", cfg.l1, "L1 penalty weight");
    app.add_option("--l2", cfg.l2, "L2 penalty weight");
    app.add_option("--grid-size", grid_size, "pickup-and-delivery grid side (taxi only)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (default: CHIRL_THREADS or 1)");
    app.add_option("--save-demos", demo_path, "also write the generated demonstrations (JSONL)");
    app.add_flag("--sample-context", sample_context, "one sampled context per epoch");
    app.add_flag("--adaptive", adaptive, "adaptive per-parameter steps instead of plain SGD");
    app.add_flag("--raw-counts", raw_counts, "skip the per-trajectory normalization of counts");
    app.add_option("--expert", expert, "expert policy used for demonstrations")
        ->check(CLI::IsMember({"soft", "greedy"}));

    CLI11_PARSE(app, argc, argv);

    cfg.sample_context = sample_context;
    cfg.adaptive = adaptive;
    if (raw_counts) cfg.normalize_by_traj = false;
    bool greedy_expert = expert == "greedy";

    if (!preset_name.empty() || !spec_path.empty()) {
        chirl::ExperimentSpec spec;
        try {
            spec = !spec_path.empty() ? chirl::spec_from_json_file(spec_path)
                                      : chirl::preset(preset_name);
            if (spec.env != "goalnav" && spec.env != "jctnav" && spec.env != "taxi")
                throw std::invalid_argument("unknown environment '" + spec.env + "'");
            for (const std::string& a : spec.algorithms) chirl::parse_algo(a);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "invalid spec: %s\n", e.what());
            return 2;
        }
        chirl::ExperimentOutcome outcome;
        try {
            outcome = chirl::run_experiment(spec, out_dir, threads);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 1;
        }
        int ok = static_cast<int>(outcome.cells.size()) - outcome.n_failed;
        std::printf("%d/%zu cells finished; results in %s/results.csv\n", ok,
                    outcome.cells.size(), out_dir.c_str());
        if (outcome.n_failed > 0) {
            for (const chirl::CellResult& c : outcome.cells)
                if (!c.ok)
                    std::fprintf(stderr, "failed: %s %s traj=%d seed=%llu: %s\n", c.env.c_str(),
                                 c.algorithm.c_str(), c.n_traj,
                                 static_cast<unsigned long long>(c.seed), c.error.c_str());
            return 1;
        }
        return 0;
    }

    chirl::EnvBundle bundle;
    chirl::Algo algo_id = chirl::Algo::Chirl;
    try {
        algo_id = chirl::parse_algo(algo);
        bool abstraction = algo != "chirl-no-abstraction" && algo != "chirl-noabs";
        bundle = env == "goalnav" ? chirl::build_goalnav()
                 : env == "jctnav"
                     ? chirl::build_jctnav()
                     : chirl::build_taxi(grid_size > 0 ? grid_size : 5, abstraction);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "invalid spec: %s\n", e.what());
        return 2;
    }

    try {
        std::filesystem::create_directories(out_dir);
        for (uint64_t seed : seeds) {
            chirl::DemoSet demos =
                chirl::generate_demo_set(bundle, n_traj, seed, 0, greedy_expert);
            if (!demo_path.empty())
                chirl::io::save_demos(demo_path, bundle.dag, bundle.contexts, demos);
            cfg.seed = seed;
            chirl::TrainResult tr = chirl::train(algo_id, bundle, demos, cfg);

            std::string stem = out_dir + "/" + bundle.name + "_" + algo + "_t" +
                               std::to_string(n_traj) + "_s" + std::to_string(seed);
            chirl::io::write_training_log(stem + ".csv", tr.log);
            for (size_t n = 0; n < tr.nets.size(); ++n)
                chirl::io::save_checkpoint(
                    tr.nets.size() == 1 ? stem : stem + "_net" + std::to_string(n), tr.nets[n]);

            double evd_sum = 0.0, secs = 0.0;
            for (int k = 0; k < bundle.n_contexts(); ++k)
                evd_sum += chirl::evd(*bundle.ctxs[k].mdp, bundle.ctxs[k].r_true,
                                      tr.final_rewards[k], bundle.ctxs[k].initial, cfg.vi_tol);
            for (const chirl::EpochLog& e : tr.log) secs += e.seconds;
            std::printf("%s %s traj=%d seed=%llu: evd=%.6f train=%.2fs log=%s.csv\n",
                        bundle.name.c_str(), algo.c_str(), n_traj,
                        static_cast<unsigned long long>(seed), evd_sum / bundle.n_contexts(),
                        secs, stem.c_str());
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
