#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "chirl/context.hpp"
#include "chirl/envs.hpp"
#include "chirl/irl.hpp"
#include "chirl/mdp.hpp"
#include "chirl/reward_net.hpp"

namespace chirl::io {

/// Decimal text for a double that parses back to the identical bits.
std::string format_double(double x);

nlohmann::json load_json(const std::string& path);
void save_json(const std::string& path, const nlohmann::json& j);

nlohmann::json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& j);

nlohmann::json dag_to_json(const ContextDag& dag);
ContextDag dag_from_json(const nlohmann::json& j);

nlohmann::json layout_to_json(const GridLayout& g);
GridLayout layout_from_json(const nlohmann::json& j);

/// Demonstrations as JSON lines, one trajectory per line with its context
/// spelled out as a label. Loading resolves labels against `dag` and buckets
/// by position in `contexts`.
void save_demos(const std::string& path, const ContextDag& dag,
                const std::vector<Context>& contexts, const DemoSet& demos);
DemoSet load_demos(const std::string& path, const ContextDag& dag,
                   const std::vector<Context>& contexts);

/// Net checkpoints: `<prefix>.json` describes the structure, `<prefix>.bin`
/// holds every parameter as little-endian float64 in a fixed order (modules
/// by node id, then sets, then layers, weights row-major before biases).
void save_checkpoint(const std::string& prefix, const ModularRewardNet& net);
ModularRewardNet load_checkpoint(const std::string& prefix);

void write_training_log(const std::string& path, const std::vector<EpochLog>& log);

struct ResultRow {
    std::string env;
    std::string algorithm;
    int n_traj = 0;
    int seed_count = 0;
    double evd_mean = 0.0;
    double evd_std = 0.0;
    double time_mean_s = 0.0;
    double time_std_s = 0.0;
};

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);

}  // namespace chirl::io
