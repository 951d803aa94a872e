#include "chirl/envs.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "chirl/rng.hpp"

namespace chirl {

bool GridLayout::blocked(int x1, int y1, int x2, int y2) const {
    if (x2 < 0 || x2 >= width || y2 < 0 || y2 >= height) return true;
    for (const auto& w : walls) {
        if ((w[0] == x1 && w[1] == y1 && w[2] == x2 && w[3] == y2) ||
            (w[0] == x2 && w[1] == y2 && w[2] == x1 && w[3] == y1))
            return true;
    }
    return false;
}

std::pair<int, int> GridLayout::landmark(const std::string& name) const {
    for (const auto& [n, pos] : landmarks)
        if (n == name) return pos;
    throw std::invalid_argument("GridLayout: no landmark named '" + name + "'");
}

GridLayout classic_grid_layout() {
    GridLayout g;
    g.width = 5;
    g.height = 5;
    g.landmarks = {{"R", {0, 0}}, {"G", {4, 0}}, {"B", {3, 4}}, {"Y", {0, 4}}};
    g.walls = {{1, 0, 2, 0}, {1, 1, 2, 1}, {0, 3, 1, 3},
               {0, 4, 1, 4}, {2, 3, 3, 3}, {2, 4, 3, 4}};
    return g;
}

namespace {

constexpr int DX4[4] = {0, 0, 1, -1};  // N, S, E, W
constexpr int DY4[4] = {-1, 1, 0, 0};
constexpr int PERP[4][2] = {{2, 3}, {2, 3}, {0, 1}, {0, 1}};

struct Landing {
    int x, y;
    double p;
};

// Noisy compass move: 0.8 intended, 0.1 each perpendicular; blocked mass
// stays put. Landing cells are merged so each appears once.
std::vector<Landing> noisy_move(const GridLayout& g, int x, int y, int a) {
    const std::pair<int, double> dirs[3] = {{a, 0.8}, {PERP[a][0], 0.1}, {PERP[a][1], 0.1}};
    std::vector<Landing> out;
    for (auto [d, p] : dirs) {
        int nx = x + DX4[d], ny = y + DY4[d];
        if (g.blocked(x, y, nx, ny)) {
            nx = x;
            ny = y;
        }
        bool merged = false;
        for (Landing& l : out)
            if (l.x == nx && l.y == ny) {
                l.p += p;
                merged = true;
                break;
            }
        if (!merged) out.push_back({nx, ny, p});
    }
    return out;
}

void absorb(std::vector<Transition>& tr, int s, int n_actions) {
    for (int a = 0; a < n_actions; ++a) tr.push_back({s, a, s, 1.0});
}

GridLayout taxi_layout(int n) {
    if (n == 5) return classic_grid_layout();
    GridLayout g;
    g.width = g.height = n;
    g.landmarks = {{"R", {0, 0}}, {"G", {n - 1, 0}}, {"B", {n - 2, n - 1}}, {"Y", {0, n - 1}}};
    return g;
}

const char* kLandmarkNames[4] = {"R", "G", "B", "Y"};

}  // namespace

int EnvBundle::context_id(const ContextLabel& label) const {
    Context ctx = resolve_label(dag, label);
    int idx = context_index(contexts, ctx);
    if (idx < 0) throw std::invalid_argument("EnvBundle::context_id: context not in this bundle");
    return idx;
}

EnvBundle build_goalnav(const GridLayout& layout) {
    const int W = layout.width, H = layout.height, S = W * H;
    if (W < 2 || H < 2) throw std::invalid_argument("build_goalnav: grid too small");

    EnvBundle b;
    b.name = "goalnav";
    b.discount = 0.9;
    b.feature_dim = S;
    b.dag.nodes = {
        {0, NodeKind::Root, "", 0, {}},
        {1, NodeKind::Internal, "destination", 4, {"R", "G", "B", "Y"}},
        {2, NodeKind::Leaf, "", 0, {}},
    };
    b.dag.edges = {{0, 1}, {1, 2}};
    require_valid_dag(b.dag);
    b.contexts = enumerate_contexts(b.dag);

    Matrix phi(S, S);
    for (int s = 0; s < S; ++s) phi(s, s) = 1.0;

    for (int c = 0; c < 4; ++c) {
        auto [lx, ly] = layout.landmark(kLandmarkNames[c]);
        int dest = ly * W + lx;

        std::vector<Transition> tr;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                int s = y * W + x;
                if (s == dest) {
                    absorb(tr, s, 4);
                    continue;
                }
                for (int a = 0; a < 4; ++a)
                    for (const Landing& l : noisy_move(layout, x, y, a))
                        tr.push_back({s, a, l.y * W + l.x, l.p});
            }

        EnvContext ec;
        ec.ctx = b.contexts[c];
        ec.label = context_label(b.dag, ec.ctx);
        ec.mdp = std::make_shared<TabularMdp>(S, 4, b.discount, std::move(tr), phi);
        ec.r_true.assign(S, 0.0);
        ec.r_true[dest] = 5.0;
        ec.initial.assign(S, 1.0 / (S - 1));
        ec.initial[dest] = 0.0;
        ec.terminal.assign(S, 0);
        ec.terminal[dest] = 1;
        ec.default_max_len = 40;
        b.ctxs.push_back(std::move(ec));
    }
    return b;
}

namespace {

// Two nine-cell-wide roads crossing at seeded offsets. Row hy..hy+8 is the
// horizontal road (divider row hy+4), column vx..vx+8 the vertical one;
// dividers are interrupted inside the crossing box.
struct JctGeom {
    int hy = 0, vx = 0;

    bool hroad(int y) const { return y >= hy && y <= hy + 8; }
    bool vroad(int x) const { return x >= vx && x <= vx + 8; }
    bool in_box(int x, int y) const { return hroad(y) && vroad(x); }
    bool divider(int x, int y) const {
        return (y == hy + 4 && !vroad(x)) || (x == vx + 4 && !hroad(y));
    }
    // 0 road, 1 divider, 2 offroad
    int cls(int x, int y) const {
        if (x < 0 || x >= 32 || y < 0 || y >= 32) return 2;
        if (divider(x, y)) return 1;
        return (hroad(y) || vroad(x)) ? 0 : 2;
    }
    // Lane index 0..7 counted across the road, skipping the divider; 8 for
    // anything without a single lane identity (box, divider, offroad).
    int lane(int x, int y) const {
        if (in_box(x, y)) return 8;
        if (hroad(y)) {
            int off = y - hy;
            return off == 4 ? 8 : (off < 4 ? off : off - 1);
        }
        if (vroad(x)) {
            int off = x - vx;
            return off == 4 ? 8 : (off < 4 ? off : off - 1);
        }
        return 8;
    }
};

}  // namespace

EnvBundle build_jctnav(uint64_t seed) {
    const int N = 32, S = N * N;
    Rng rng(seed);
    JctGeom g;
    g.hy = 6 + rng.uniform_int(11);
    g.vx = 6 + rng.uniform_int(11);

    EnvBundle b;
    b.name = "jctnav";
    b.discount = 0.9;
    b.feature_dim = 36;
    b.dag.nodes = {
        {0, NodeKind::Root, "", 0, {}},
        {1, NodeKind::Internal, "rule", 2, {"LS", "RS"}},
        {2, NodeKind::Internal, "intention", 3, {"ST", "TL", "TR"}},
        {3, NodeKind::Leaf, "", 0, {}},
    };
    b.dag.edges = {{0, 1}, {1, 2}, {2, 3}};
    require_valid_dag(b.dag);
    b.contexts = enumerate_contexts(b.dag);

    // Features depend only on geometry: own lane plus the 3x3 neighborhood's
    // surface classes.
    Matrix phi(S, 36);
    for (int y = 0; y < N; ++y)
        for (int x = 0; x < N; ++x) {
            double* row = phi.row_ptr(y * N + x);
            row[g.lane(x, y)] = 1.0;
            int k = 9;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx, k += 3) row[k + g.cls(x + dx, y + dy)] = 1.0;
        }

    static constexpr int DX9[9] = {0, 0, 0, 1, -1, 1, -1, 1, -1};
    static constexpr int DY9[9] = {0, -1, 1, 0, 0, -1, -1, 1, 1};

    for (int c = 0; c < 6; ++c) {
        const int rule = c / 3;    // 0 LS, 1 RS
        const int intent = c % 3;  // 0 straight, 1 left turn, 2 right turn

        // Entry is always westbound-to-eastbound; the rule picks the half of
        // the road you drive on.
        auto entry_row = [&](int y) {
            return rule == 1 ? (y >= g.hy + 5 && y <= g.hy + 8) : (y >= g.hy && y <= g.hy + 3);
        };
        // Heading north after a left turn (or south after a right turn), the
        // proper half of the vertical road follows from the same rule.
        bool east_half = intent == 1 ? rule == 1 : rule == 0;
        auto exit_col = [&](int x) {
            return east_half ? (x >= g.vx + 5 && x <= g.vx + 8) : (x >= g.vx && x <= g.vx + 3);
        };

        numvec r(S, -10.0);
        for (int x = 0; x < N; ++x)
            if (!g.vroad(x)) r[(g.hy + 4) * N + x] = -5.0;
        for (int y = 0; y < N; ++y)
            if (!g.hroad(y)) r[y * N + g.vx + 4] = -5.0;

        if (intent == 0) {
            for (int y = 0; y < N; ++y)
                if (entry_row(y))
                    for (int x = 0; x < N; ++x) r[y * N + x] = 0.0;
        } else {
            for (int y = 0; y < N; ++y)
                if (entry_row(y))
                    for (int x = 0; x <= g.vx + 8; ++x) r[y * N + x] = 0.0;
            int y0 = intent == 1 ? 0 : g.hy;
            int y1 = intent == 1 ? g.hy + 8 : N - 1;
            for (int x = 0; x < N; ++x)
                if (exit_col(x))
                    for (int y = y0; y <= y1; ++y) r[y * N + x] = 0.0;
        }

        std::vector<char> term(S, 0);
        if (intent == 0) {
            for (int y = g.hy; y <= g.hy + 8; ++y) {
                if (y == g.hy + 4) continue;
                int s = y * N + (N - 1);
                term[s] = 1;
                r[s] = entry_row(y) ? 1.0 : -10.0;
            }
        } else {
            int ey = intent == 1 ? 0 : N - 1;
            for (int x = g.vx; x <= g.vx + 8; ++x) {
                if (x == g.vx + 4) continue;
                int s = ey * N + x;
                term[s] = 1;
                r[s] = exit_col(x) ? 1.0 : -10.0;
            }
        }

        std::vector<Transition> tr;
        for (int y = 0; y < N; ++y)
            for (int x = 0; x < N; ++x) {
                int s = y * N + x;
                if (term[s]) {
                    absorb(tr, s, 9);
                    continue;
                }
                for (int a = 0; a < 9; ++a) {
                    int nx = x + DX9[a], ny = y + DY9[a];
                    if (nx < 0 || nx >= N || ny < 0 || ny >= N) {
                        nx = x;
                        ny = y;
                    }
                    tr.push_back({s, a, ny * N + nx, 1.0});
                }
            }

        numvec init(S, 0.0);
        for (int y = 0; y < N; ++y)
            if (entry_row(y)) init[y * N] = 0.25;

        EnvContext ec;
        ec.ctx = b.contexts[c];
        ec.label = context_label(b.dag, ec.ctx);
        ec.mdp = std::make_shared<TabularMdp>(S, 9, b.discount, std::move(tr), phi);
        ec.r_true = std::move(r);
        ec.initial = std::move(init);
        ec.terminal = std::move(term);
        ec.default_max_len = 80;
        b.ctxs.push_back(std::move(ec));
    }
    return b;
}

namespace {

void taxi_feature_row(double* row, int n, int x, int y, int pl, int dl) {
    row[x] = 1.0;
    row[n + y] = 1.0;
    row[2 * n + pl] = 1.0;      // 0..3 waiting at that landmark, 4 in taxi, 5 not tracked
    row[2 * n + 6 + dl] = 1.0;  // 0..3 destination, 4 not tracked
}

}  // namespace

EnvBundle build_taxi(int grid_size, bool abstraction) {
    const int n = grid_size;
    if (n < 3) throw std::invalid_argument("build_taxi: grid_size must be at least 3");
    GridLayout layout = taxi_layout(n);

    int lm[4];
    for (int c = 0; c < 4; ++c) {
        auto [lx, ly] = layout.landmark(kLandmarkNames[c]);
        lm[c] = ly * n + lx;
    }

    EnvBundle b;
    b.name = abstraction ? "taxi" : "taxi-noabs";
    b.discount = 0.9;
    b.feature_dim = 2 * n + 11;
    b.dag.nodes = {
        {0, NodeKind::Root, "", 0, {}},
        {1, NodeKind::Internal, "subtask", 1, {"Get"}},
        {2, NodeKind::Internal, "subtask", 1, {"Put"}},
        {3, NodeKind::Internal, "nav", 4, {"R", "G", "B", "Y"}},
        {4, NodeKind::Leaf, "", 0, {}},
    };
    b.dag.edges = {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {1, 4}, {2, 4}, {3, 4}};
    require_valid_dag(b.dag);
    b.contexts = enumerate_contexts(b.dag);
    b.ctxs.resize(10);

    const int P = n * n;

    if (abstraction) {
        // Navigation subtasks: position only. One process per target
        // landmark, shared between the two parent subtasks.
        for (int c = 0; c < 4; ++c) {
            Matrix phi(P, b.feature_dim);
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x) taxi_feature_row(phi.row_ptr(y * n + x), n, x, y, 5, 4);

            std::vector<Transition> tr;
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x) {
                    int s = y * n + x;
                    if (s == lm[c]) {
                        absorb(tr, s, 4);
                        continue;
                    }
                    for (int a = 0; a < 4; ++a)
                        for (const Landing& l : noisy_move(layout, x, y, a))
                            tr.push_back({s, a, l.y * n + l.x, l.p});
                }

            EnvContext ec;
            ec.mdp = std::make_shared<TabularMdp>(P, 4, b.discount, std::move(tr), std::move(phi));
            ec.r_true.assign(P, 0.0);
            ec.r_true[lm[c]] = 5.0;
            ec.initial.assign(P, 1.0 / (P - 1));
            ec.initial[lm[c]] = 0.0;
            ec.terminal.assign(P, 0);
            ec.terminal[lm[c]] = 1;
            ec.default_max_len = 40;

            for (int slot : {c, 5 + c}) {
                EnvContext copy = ec;
                copy.ctx = b.contexts[slot];
                copy.label = context_label(b.dag, copy.ctx);
                b.ctxs[slot] = std::move(copy);
            }
        }

        // Get: position and passenger location, navigation as macro actions.
        {
            const int S = P * 5;
            Matrix phi(S, b.feature_dim);
            std::vector<Transition> tr;
            numvec r(S, -1.0), init(S, 0.0);
            std::vector<char> term(S, 0);
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    for (int pl = 0; pl < 5; ++pl) {
                        int pos = y * n + x;
                        int s = pos * 5 + pl;
                        taxi_feature_row(phi.row_ptr(s), n, x, y, pl, 4);
                        if (pl == 4) {
                            r[s] = 20.0;
                            term[s] = 1;
                            absorb(tr, s, 5);
                            continue;
                        }
                        init[s] = 1.0 / (P * 4);
                        tr.push_back({s, 0, pos == lm[pl] ? pos * 5 + 4 : s, 1.0});
                        for (int L = 0; L < 4; ++L) tr.push_back({s, 1 + L, lm[L] * 5 + pl, 1.0});
                    }

            EnvContext ec;
            ec.ctx = b.contexts[4];
            ec.label = context_label(b.dag, ec.ctx);
            ec.mdp = std::make_shared<TabularMdp>(S, 5, b.discount, std::move(tr), std::move(phi));
            ec.r_true = std::move(r);
            ec.initial = std::move(init);
            ec.terminal = std::move(term);
            ec.default_max_len = 12;
            b.ctxs[4] = std::move(ec);
        }

        // Put: position and destination. Dropping off ends the episode by
        // event rather than by state, so the good states carry the bonus and
        // the drop action loops.
        {
            const int S = P * 4;
            Matrix phi(S, b.feature_dim);
            std::vector<Transition> tr;
            numvec r(S, -1.0), init(S, 1.0 / S);
            std::vector<char> goal(S, 0);
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    for (int dl = 0; dl < 4; ++dl) {
                        int pos = y * n + x;
                        int s = pos * 4 + dl;
                        taxi_feature_row(phi.row_ptr(s), n, x, y, 5, dl);
                        if (pos == lm[dl]) {
                            r[s] = 20.0;
                            goal[s] = 1;
                        }
                        tr.push_back({s, 0, s, 1.0});
                        for (int L = 0; L < 4; ++L) tr.push_back({s, 1 + L, lm[L] * 4 + dl, 1.0});
                    }

            EnvContext ec;
            ec.ctx = b.contexts[9];
            ec.label = context_label(b.dag, ec.ctx);
            ec.mdp = std::make_shared<TabularMdp>(S, 5, b.discount, std::move(tr), std::move(phi));
            ec.r_true = std::move(r);
            ec.initial = std::move(init);
            ec.terminal.assign(S, 0);
            ec.stop_after = [goal](int s, int a) { return a == 0 && goal[s]; };
            ec.default_max_len = 12;
            b.ctxs[9] = std::move(ec);
        }
        return b;
    }

    // Flat variant: every context lives on the full (position, passenger,
    // destination) product with the six primitive actions.
    const int S = P * 20;
    Matrix phi(S, b.feature_dim);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            for (int pl = 0; pl < 5; ++pl)
                for (int dl = 0; dl < 4; ++dl)
                    taxi_feature_row(phi.row_ptr(((y * n + x) * 5 + pl) * 4 + dl), n, x, y, pl, dl);

    auto flat_transitions = [&](const std::vector<char>& term) {
        std::vector<Transition> tr;
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                for (int pl = 0; pl < 5; ++pl)
                    for (int dl = 0; dl < 4; ++dl) {
                        int pos = y * n + x;
                        int s = (pos * 5 + pl) * 4 + dl;
                        if (term[s]) {
                            absorb(tr, s, 6);
                            continue;
                        }
                        for (int a = 0; a < 4; ++a)
                            for (const Landing& l : noisy_move(layout, x, y, a))
                                tr.push_back({s, a, ((l.y * n + l.x) * 5 + pl) * 4 + dl, l.p});
                        int after_pick = (pl < 4 && pos == lm[pl]) ? 4 : pl;
                        tr.push_back({s, 4, (pos * 5 + after_pick) * 4 + dl, 1.0});
                        int after_drop = (pl == 4 && pos == lm[dl]) ? dl : pl;
                        tr.push_back({s, 5, (pos * 5 + after_drop) * 4 + dl, 1.0});
                    }
        return tr;
    };

    // Navigation contexts: reach the landmark whatever the cargo state.
    for (int c = 0; c < 4; ++c) {
        std::vector<char> term(S, 0);
        numvec r(S, 0.0), init(S, 0.0);
        for (int pl = 0; pl < 5; ++pl)
            for (int dl = 0; dl < 4; ++dl) {
                int s = (lm[c] * 5 + pl) * 4 + dl;
                term[s] = 1;
                r[s] = 5.0;
            }
        for (int s = 0; s < S; ++s)
            if (!term[s]) init[s] = 1.0 / (S - 20);

        EnvContext ec;
        ec.mdp = std::make_shared<TabularMdp>(S, 6, b.discount, flat_transitions(term), phi);
        ec.r_true = std::move(r);
        ec.initial = std::move(init);
        ec.terminal = std::move(term);
        ec.default_max_len = 40;

        for (int slot : {c, 5 + c}) {
            EnvContext copy = ec;
            copy.ctx = b.contexts[slot];
            copy.label = context_label(b.dag, copy.ctx);
            b.ctxs[slot] = std::move(copy);
        }
    }

    // Get context: done once the passenger is aboard.
    {
        std::vector<char> term(S, 0);
        numvec r(S, -1.0), init(S, 0.0);
        for (int s = 0; s < S; ++s) {
            int pl = (s / 4) % 5;
            if (pl == 4) {
                term[s] = 1;
                r[s] = 20.0;
            } else {
                init[s] = 1.0 / (P * 16);
            }
        }
        EnvContext ec;
        ec.ctx = b.contexts[4];
        ec.label = context_label(b.dag, ec.ctx);
        ec.mdp = std::make_shared<TabularMdp>(S, 6, b.discount, flat_transitions(term), phi);
        ec.r_true = std::move(r);
        ec.initial = std::move(init);
        ec.terminal = std::move(term);
        ec.default_max_len = 40;
        b.ctxs[4] = std::move(ec);
    }

    // Put context: done once the passenger is at the destination.
    {
        std::vector<char> term(S, 0);
        numvec r(S, -1.0), init(S, 0.0);
        for (int s = 0; s < S; ++s) {
            int pl = (s / 4) % 5;
            int dl = s % 4;
            if (pl == dl) {
                term[s] = 1;
                r[s] = 20.0;
            }
            if (pl == 4) init[s] = 1.0 / (P * 4);
        }
        EnvContext ec;
        ec.ctx = b.contexts[9];
        ec.label = context_label(b.dag, ec.ctx);
        ec.mdp = std::make_shared<TabularMdp>(S, 6, b.discount, flat_transitions(term), phi);
        ec.r_true = std::move(r);
        ec.initial = std::move(init);
        ec.terminal = std::move(term);
        ec.default_max_len = 40;
        b.ctxs[9] = std::move(ec);
    }
    return b;
}

std::vector<Trajectory> generate_demos(const EnvBundle& bundle, int context_id, int n_traj,
                                       int max_len, uint64_t seed, bool greedy_expert) {
    if (context_id < 0 || context_id >= bundle.n_contexts())
        throw std::out_of_range("generate_demos: context id out of range");
    if (n_traj < 0) throw std::invalid_argument("generate_demos: negative trajectory count");
    const EnvContext& ec = bundle.ctxs[context_id];
    const TabularMdp& mdp = *ec.mdp;
    if (max_len <= 0) max_len = ec.default_max_len;

    StochasticPolicy soft;
    std::vector<int> greedy;
    if (greedy_expert)
        greedy = hard_value_iteration(mdp, ec.r_true).policy;
    else
        soft = soft_value_iteration(mdp, ec.r_true).policy;

    uint64_t base = Rng::mix(seed, static_cast<uint64_t>(context_id));
    std::vector<Trajectory> out;
    out.reserve(static_cast<size_t>(n_traj));
    for (int t = 0; t < n_traj; ++t) {
        Rng rng(Rng::mix(base, static_cast<uint64_t>(t)));
        Trajectory traj;
        traj.context = context_id;
        int s = rng.categorical(ec.initial);
        while (true) {
            if (ec.terminal[s]) break;
            if (static_cast<int>(traj.steps.size()) >= max_len) {
                traj.truncated = true;
                break;
            }
            int a = greedy_expert ? greedy[s] : rng.categorical(soft.row(s));
            traj.steps.push_back(DemoStep{s, a});
            if (ec.stop_after && ec.stop_after(s, a)) break;
            auto [it, end] = mdp.row(s, a);
            double u = rng.uniform(), acc = 0.0;
            int nxt = it->next;
            for (; it != end; ++it) {
                acc += it->prob;
                nxt = it->next;
                if (u < acc) break;
            }
            s = nxt;
        }
        out.push_back(std::move(traj));
    }
    return out;
}

DemoSet generate_demo_set(const EnvBundle& bundle, int total_traj, uint64_t seed, int max_len,
                          bool greedy_expert) {
    const int K = bundle.n_contexts();
    if (K == 0) throw std::invalid_argument("generate_demo_set: empty bundle");
    DemoSet out(K);
    for (int k = 0; k < K; ++k) {
        int share = total_traj / K + (k < total_traj % K ? 1 : 0);
        out.by_context[k] = generate_demos(bundle, k, share, max_len, seed, greedy_expert);
    }
    return out;
}

ExecutionResult execute_hierarchical_policy(const EnvBundle& bundle,
                                            const std::vector<numvec>& rewards, int tx, int ty,
                                            int pl, int dl, uint64_t seed, int budget) {
    if (bundle.name != "taxi")
        throw std::invalid_argument(
            "execute_hierarchical_policy: needs the abstracted pickup-and-delivery bundle");
    if (rewards.size() != bundle.ctxs.size())
        throw std::invalid_argument("execute_hierarchical_policy: one reward per context");

    const int n = static_cast<int>(std::lround(std::sqrt(double(bundle.ctxs[0].mdp->n_states()))));
    GridLayout layout = taxi_layout(n);
    int lm[4];
    for (int c = 0; c < 4; ++c) {
        auto [lx, ly] = layout.landmark(kLandmarkNames[c]);
        lm[c] = ly * n + lx;
    }
    if (tx < 0 || tx >= n || ty < 0 || ty >= n || pl < 0 || pl > 3 || dl < 0 || dl > 3)
        throw std::invalid_argument("execute_hierarchical_policy: start state out of range");

    std::vector<int> get_pi = hard_value_iteration(*bundle.ctxs[4].mdp, rewards[4]).policy;
    std::vector<int> put_pi = hard_value_iteration(*bundle.ctxs[9].mdp, rewards[9]).policy;
    std::vector<std::vector<int>> nav_get(4), nav_put(4);
    for (int c = 0; c < 4; ++c) {
        nav_get[c] = hard_value_iteration(*bundle.ctxs[c].mdp, rewards[c]).policy;
        nav_put[c] = hard_value_iteration(*bundle.ctxs[5 + c].mdp, rewards[5 + c]).policy;
    }

    ExecutionResult res;
    Rng rng(seed);
    int x = tx, y = ty, cargo = pl;
    bool delivered = false;
    int left = budget;

    auto prim_move = [&](int a) {
        double u = rng.uniform(), acc = 0.0;
        auto dist = noisy_move(layout, x, y, a);
        int nx = dist.back().x, ny = dist.back().y;
        for (const Landing& l : dist) {
            acc += l.p;
            if (u < acc) {
                nx = l.x;
                ny = l.y;
                break;
            }
        }
        x = nx;
        y = ny;
        ++res.primitive_steps;
        --left;
    };

    auto run_nav = [&](int c, const std::vector<int>& pi) {
        ++res.macro_invocations;
        --left;
        while (left > 0 && y * n + x != lm[c]) prim_move(pi[y * n + x]);
    };

    while (cargo != 4 && left > 0) {
        int a = get_pi[(y * n + x) * 5 + cargo];
        if (a == 0) {
            ++res.primitive_steps;
            --left;
            if (y * n + x == lm[cargo])
                cargo = 4;
            else
                ++res.wrong_pickups;
        } else {
            run_nav(a - 1, nav_get[a - 1]);
        }
    }
    while (!delivered && left > 0) {
        int a = put_pi[(y * n + x) * 4 + dl];
        if (a == 0) {
            ++res.primitive_steps;
            --left;
            if (cargo == 4 && y * n + x == lm[dl])
                delivered = true;
            else
                ++res.wrong_putdowns;
        } else {
            run_nav(a - 1, nav_put[a - 1]);
        }
    }

    res.success = delivered;
    res.budget_exhausted = !delivered && left <= 0;
    return res;
}

}  // namespace chirl
