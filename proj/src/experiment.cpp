#include "chirl/experiment.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "chirl/envs.hpp"
#include "chirl/io.hpp"
#include "chirl/metrics.hpp"

namespace chirl {

using nlohmann::json;

bool ExperimentSpec::operator==(const ExperimentSpec& o) const {
    auto cfg = [](const IrlConfig& c) {
        return std::tuple(c.learning_rate, c.l1, c.l2, c.epochs, c.vi_tol, c.vi_max_iters,
                          c.propagate_iters, c.seed, c.sample_context, c.normalize_by_traj,
                          c.adaptive, c.width, c.depth, c.eval_every);
    };
    return name == o.name && env == o.env && algorithms == o.algorithms && n_traj == o.n_traj &&
           seeds == o.seeds && grid_sizes == o.grid_sizes && cfg(base) == cfg(o.base);
}

ExperimentSpec preset(const std::string& name) {
    ExperimentSpec s;
    s.name = name;
    s.base.epochs = 500;
    s.base.normalize_by_traj = true;
    s.base.width = 64;
    s.algorithms = {"chirl", "deepirl", "maxent", "hirl"};
    s.n_traj = {4, 16, 64, 256};
    for (uint64_t i = 0; i < 10; ++i) s.seeds.push_back(i);

    if (name == "goalnav") {
        s.env = "goalnav";
        s.base.learning_rate = 1e-2;
        s.base.l1 = 1e-3;
        s.base.l2 = 0.8;
    } else if (name == "jctnav") {
        s.env = "jctnav";
        s.base.learning_rate = 5e-2;
        s.base.l1 = 2.0;
        s.base.l2 = 0.8;
    } else if (name == "taxi") {
        s.env = "taxi";
        s.base.learning_rate = 1e-2;
        s.base.l1 = 1e-3;
        s.base.l2 = 0.8;
    } else if (name == "taxi_scaleup") {
        s.env = "taxi";
        s.algorithms = {"chirl", "chirl-no-abstraction"};
        s.n_traj = {64};
        s.seeds = {0, 1, 2};
        s.grid_sizes = {5, 10, 20};
        s.base.epochs = 30;
        s.base.width = 16;
        s.base.learning_rate = 1e-2;
        s.base.l1 = 1e-3;
        s.base.l2 = 0.8;
    } else if (name == "taxi_ablation") {
        s.env = "taxi";
        s.algorithms = {"chirl", "chirl-no-abstraction", "hirl", "deepirl"};
        s.base.learning_rate = 1e-2;
        s.base.l1 = 1e-3;
        s.base.l2 = 0.8;
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    return s;
}

std::vector<std::string> preset_names() {
    return {"goalnav", "jctnav", "taxi", "taxi_scaleup", "taxi_ablation"};
}

namespace {

json config_to_json(const IrlConfig& c) {
    return json{{"learning_rate", c.learning_rate},
                {"l1", c.l1},
                {"l2", c.l2},
                {"epochs", c.epochs},
                {"vi_tol", c.vi_tol},
                {"vi_max_iters", c.vi_max_iters},
                {"propagate_iters", c.propagate_iters},
                {"sample_context", c.sample_context},
                {"normalize_by_traj", c.normalize_by_traj},
                {"adaptive", c.adaptive},
                {"width", c.width},
                {"depth", c.depth},
                {"eval_every", c.eval_every}};
}

IrlConfig config_from_json(const json& j) {
    IrlConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.l1 = j.value("l1", c.l1);
    c.l2 = j.value("l2", c.l2);
    c.epochs = j.value("epochs", c.epochs);
    c.vi_tol = j.value("vi_tol", c.vi_tol);
    c.vi_max_iters = j.value("vi_max_iters", c.vi_max_iters);
    c.propagate_iters = j.value("propagate_iters", c.propagate_iters);
    c.sample_context = j.value("sample_context", c.sample_context);
    c.normalize_by_traj = j.value("normalize_by_traj", c.normalize_by_traj);
    c.adaptive = j.value("adaptive", c.adaptive);
    c.width = j.value("width", c.width);
    c.depth = j.value("depth", c.depth);
    c.eval_every = j.value("eval_every", c.eval_every);
    return c;
}

}  // namespace

ExperimentSpec spec_from_json_file(const std::string& path) {
    json j = io::load_json(path);
    ExperimentSpec s;
    s.name = j.value("name", "custom");
    s.env = j.at("env").get<std::string>();
    s.algorithms = j.at("algorithms").get<std::vector<std::string>>();
    s.n_traj = j.at("n_traj").get<std::vector<int>>();
    s.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    if (j.contains("grid_sizes")) s.grid_sizes = j.at("grid_sizes").get<std::vector<int>>();
    if (j.contains("config")) s.base = config_from_json(j.at("config"));
    return s;
}

void spec_to_json_file(const std::string& path, const ExperimentSpec& spec) {
    io::save_json(path, json{{"name", spec.name},
                             {"env", spec.env},
                             {"algorithms", spec.algorithms},
                             {"n_traj", spec.n_traj},
                             {"seeds", spec.seeds},
                             {"grid_sizes", spec.grid_sizes},
                             {"config", config_to_json(spec.base)}});
}

namespace {

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("CHIRL_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

// The no-abstraction arm runs the same trainer on a bundle whose option MDPs
// keep the full product state space.
bool flat_variant(const std::string& algo) {
    return algo == "chirl-no-abstraction" || algo == "chirl-noabs";
}

std::shared_ptr<const EnvBundle> build_bundle(const std::string& env, int grid_size,
                                              bool abstraction) {
    if (env == "goalnav") return std::make_shared<EnvBundle>(build_goalnav());
    if (env == "jctnav") return std::make_shared<EnvBundle>(build_jctnav());
    if (env == "taxi")
        return std::make_shared<EnvBundle>(build_taxi(grid_size > 0 ? grid_size : 5, abstraction));
    throw std::invalid_argument("unknown environment '" + env + "'");
}

double mean_final_evd(const EnvBundle& bundle, const TrainResult& tr, double vi_tol) {
    double sum = 0.0;
    for (int k = 0; k < bundle.n_contexts(); ++k) {
        const EnvContext& ec = bundle.ctxs[k];
        sum += evd(*ec.mdp, ec.r_true, tr.final_rewards[k], ec.initial, vi_tol);
    }
    return sum / bundle.n_contexts();
}

std::string cell_stem(const CellResult& c) {
    std::string env_field = c.env + (c.grid_size > 0 ? std::to_string(c.grid_size) : "");
    return env_field + "_" + c.algorithm + "_t" + std::to_string(c.n_traj) + "_s" +
           std::to_string(c.seed);
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                                 int threads) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "logs");

    ExperimentOutcome out;
    std::vector<int> grids = spec.grid_sizes.empty() ? std::vector<int>{0} : spec.grid_sizes;
    for (int grid : grids)
        for (const std::string& algo : spec.algorithms)
            for (int traj : spec.n_traj)
                for (uint64_t seed : spec.seeds) {
                    CellResult c;
                    c.env = spec.env;
                    c.algorithm = algo;
                    c.grid_size = spec.env == "taxi" ? grid : 0;
                    c.n_traj = traj;
                    c.seed = seed;
                    out.cells.push_back(std::move(c));
                }

    // Bundles are shared across cells; build each variant once.
    std::map<std::pair<int, bool>, std::shared_ptr<const EnvBundle>> bundles;
    for (const CellResult& c : out.cells) {
        bundles.try_emplace({c.grid_size, !flat_variant(c.algorithm)}, nullptr);
    }
    for (auto& [key, bundle] : bundles) bundle = build_bundle(spec.env, key.first, key.second);

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= out.cells.size()) break;
            CellResult& c = out.cells[i];
            try {
                const EnvBundle& bundle = *bundles.at({c.grid_size, !flat_variant(c.algorithm)});
                DemoSet demos = generate_demo_set(bundle, c.n_traj, c.seed);
                IrlConfig cfg = spec.base;
                cfg.seed = c.seed;
                TrainResult tr = train(parse_algo(c.algorithm), bundle, demos, cfg);
                c.final_evd = mean_final_evd(bundle, tr, cfg.vi_tol);
                for (const EpochLog& e : tr.log) c.train_seconds += e.seconds;
                c.log = std::move(tr.log);
                c.ok = true;
            } catch (const std::exception& e) {
                c.ok = false;
                c.error = e.what();
            }
        }
    };

    int n_threads = resolve_threads(threads);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    json manifest_cells = json::array();
    for (const CellResult& c : out.cells) {
        if (!c.ok) ++out.n_failed;
        std::string log_rel;
        if (c.ok) {
            log_rel = "logs/" + cell_stem(c) + ".csv";
            io::write_training_log(out_dir + "/" + log_rel, c.log);
        }
        manifest_cells.push_back(json{{"env", c.env},
                                      {"algorithm", c.algorithm},
                                      {"grid_size", c.grid_size},
                                      {"n_traj", c.n_traj},
                                      {"seed", c.seed},
                                      {"ok", c.ok},
                                      {"error", c.error},
                                      {"final_evd", c.final_evd},
                                      {"train_seconds", c.train_seconds},
                                      {"log", log_rel}});
    }

    // One results row per (env, algorithm, n_traj) over the seeds that ran.
    std::vector<io::ResultRow> rows;
    std::map<std::string, size_t> row_of;
    std::map<std::string, std::pair<numvec, numvec>> samples;  // evd, time
    std::vector<std::string> order;
    for (const CellResult& c : out.cells) {
        if (!c.ok) continue;
        std::string env_field = c.env + (c.grid_size > 0 ? std::to_string(c.grid_size) : "");
        std::string key = env_field + "," + c.algorithm + "," + std::to_string(c.n_traj);
        if (!row_of.count(key)) {
            row_of[key] = rows.size();
            order.push_back(key);
            io::ResultRow r;
            r.env = env_field;
            r.algorithm = c.algorithm;
            r.n_traj = c.n_traj;
            rows.push_back(std::move(r));
        }
        samples[key].first.push_back(c.final_evd);
        samples[key].second.push_back(c.train_seconds);
    }
    for (const std::string& key : order) {
        io::ResultRow& r = rows[row_of[key]];
        MeanStd e = mean_std(samples[key].first);
        MeanStd t = mean_std(samples[key].second);
        r.seed_count = static_cast<int>(samples[key].first.size());
        r.evd_mean = e.mean;
        r.evd_std = e.std;
        r.time_mean_s = t.mean;
        r.time_std_s = t.std;
    }
    io::write_results_csv(out_dir + "/results.csv", rows);

    io::save_json(out_dir + "/manifest.json",
                  json{{"name", spec.name},
                       {"env", spec.env},
                       {"algorithms", spec.algorithms},
                       {"n_traj", spec.n_traj},
                       {"seeds", spec.seeds},
                       {"grid_sizes", spec.grid_sizes},
                       {"config", config_to_json(spec.base)},
                       {"n_failed", out.n_failed},
                       {"cells", std::move(manifest_cells)}});
    return out;
}

}  // namespace chirl
