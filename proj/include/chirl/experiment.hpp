#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chirl/irl.hpp"

namespace chirl {

/// A grid of training runs: every combination of algorithm, trajectory
/// budget, seed (and grid size, for the pickup-and-delivery scale-up) is one
/// cell. `grid_sizes` is ignored by environments without a size knob.
struct ExperimentSpec {
    std::string name;
    std::string env;  // goalnav | jctnav | taxi
    std::vector<std::string> algorithms;
    std::vector<int> n_traj;
    std::vector<uint64_t> seeds;
    std::vector<int> grid_sizes;
    IrlConfig base;

    bool operator==(const ExperimentSpec& o) const;
};

/// Named experiment configurations matching the benchmark write-ups.
ExperimentSpec preset(const std::string& name);
std::vector<std::string> preset_names();

ExperimentSpec spec_from_json_file(const std::string& path);
void spec_to_json_file(const std::string& path, const ExperimentSpec& spec);

struct CellResult {
    std::string env;
    std::string algorithm;
    int grid_size = 0;  // 0 when the environment has no size knob
    int n_traj = 0;
    uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double final_evd = 0.0;
    double train_seconds = 0.0;  // summed epoch wall time
    std::vector<EpochLog> log;
};

struct ExperimentOutcome {
    std::vector<CellResult> cells;  // one per grid cell, in grid order
    int n_failed = 0;
};

/// Runs the whole grid and writes `results.csv`, `manifest.json` and one
/// training log per cell under `out_dir`. `threads` <= 0 reads the
/// CHIRL_THREADS environment variable, defaulting to 1. Cells are
/// independent and deterministic, so the thread count never changes the
/// numbers; a cell that throws is recorded as failed without stopping the
/// rest.
ExperimentOutcome run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                                 int threads = 0);

}  // namespace chirl
