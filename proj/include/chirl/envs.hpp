#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chirl/context.hpp"
#include "chirl/irl.hpp"
#include "chirl/mdp.hpp"

namespace chirl {

/// Rectangular grid with optional wall segments between adjacent cells and
/// named landmark cells. Coordinates are (x, y) with the origin in the
/// top-left corner, x growing east and y growing south.
struct GridLayout {
    int width = 0;
    int height = 0;
    std::vector<std::pair<std::string, std::pair<int, int>>> landmarks;
    std::vector<std::array<int, 4>> walls;  // {x1, y1, x2, y2}, unordered cell pairs

    bool blocked(int x1, int y1, int x2, int y2) const;
    std::pair<int, int> landmark(const std::string& name) const;

    bool operator==(const GridLayout& o) const {
        return width == o.width && height == o.height && landmarks == o.landmarks &&
               walls == o.walls;
    }
};

/// The classic five-by-five pickup-and-delivery map: four landmarks R, G, Y,
/// B and three interior wall segments.
GridLayout classic_grid_layout();

/// Everything the trainer needs for one context: the decision process, the
/// ground-truth reward used for demonstrations and evaluation, the start
/// distribution and termination rules for rollouts.
struct EnvContext {
    Context ctx;
    ContextLabel label;
    std::shared_ptr<const TabularMdp> mdp;
    numvec r_true;
    numvec initial;
    std::vector<char> terminal;  // absorbing states that end a rollout
    // Some subtasks end on an event rather than a state (e.g. a hand-off
    // action executed at the right cell); when set, a rollout stops after
    // recording a step for which this returns true.
    std::function<bool(int state, int action)> stop_after;
    int default_max_len = 50;
};

/// A benchmark: context DAG plus one EnvContext per enumerated context.
struct EnvBundle {
    std::string name;
    ContextDag dag;
    std::vector<Context> contexts;
    std::vector<EnvContext> ctxs;  // same order as `contexts`
    int feature_dim = 0;
    double discount = 0.9;

    int n_contexts() const { return static_cast<int>(ctxs.size()); }
    /// Context index for a name/value label; throws if it does not resolve.
    int context_id(const ContextLabel& label) const;
};

/// 5x5 navigation benchmark: noisy compass moves (0.8 intended, 0.1 each
/// perpendicular, blocked mass stays put), one context per destination
/// landmark, reward 5 at the destination.
EnvBundle build_goalnav(const GridLayout& layout = classic_grid_layout());

/// 32x32 junction benchmark: two eight-lane roads with center dividers cross
/// at seeded offsets; contexts combine a traffic rule (left/right side) with
/// a driving intention (straight/left/right). Layout generation is a pure
/// function of `seed`.
EnvBundle build_jctnav(uint64_t seed = 7);

/// Pickup-and-delivery benchmark decomposed into Get / Put / Nav(t)
/// subtasks. With `abstraction` each subtask keeps only the state variables
/// it depends on; without it every subtask is posed on the full flat state
/// space (same contexts, same feature layout, bigger models to solve).
EnvBundle build_taxi(int grid_size = 5, bool abstraction = true);

/// Soft-optimal (or greedy) expert rollouts for one context of a bundle.
/// Deterministic in `seed`. Rollouts stop at terminal states, after a stop
/// event, or at `max_len` steps (then flagged truncated).
std::vector<Trajectory> generate_demos(const EnvBundle& bundle, int context_id, int n_traj,
                                       int max_len, uint64_t seed, bool greedy_expert = false);

/// Distributes a total trajectory budget round-robin over all contexts and
/// generates each context's share.
DemoSet generate_demo_set(const EnvBundle& bundle, int total_traj, uint64_t seed,
                          int max_len = 0, bool greedy_expert = false);

struct ExecutionResult {
    bool success = false;
    int primitive_steps = 0;
    int macro_invocations = 0;
    int wrong_pickups = 0;
    int wrong_putdowns = 0;
    bool budget_exhausted = false;
};

/// Runs the learned rewards hierarchically on the flat pickup-and-delivery
/// simulator: greedy policies are derived per context, macro actions
/// recursively invoke the matching navigation policy, and only primitive
/// actions touch the simulator. `rewards` is indexed by context id. Start
/// state: taxi at (tx, ty), passenger waiting at landmark `pl`, destination
/// landmark `dl`.
ExecutionResult execute_hierarchical_policy(const EnvBundle& bundle,
                                            const std::vector<numvec>& rewards, int tx, int ty,
                                            int pl, int dl, uint64_t seed, int budget = 200);

}  // namespace chirl
