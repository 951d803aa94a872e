#include "chirl/reward_net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chirl/rng.hpp"

namespace chirl {

const NodeModule& ModularRewardNet::module_for(int node_id) const {
    int i = module_index(node_id);
    if (i < 0) throw std::invalid_argument("ModularRewardNet: no module for node id");
    return modules[i];
}

NodeModule& ModularRewardNet::module_for(int node_id) {
    int i = module_index(node_id);
    if (i < 0) throw std::invalid_argument("ModularRewardNet: no module for node id");
    return modules[i];
}

int ModularRewardNet::module_index(int node_id) const {
    for (size_t i = 0; i < modules.size(); ++i)
        if (modules[i].node_id == node_id) return static_cast<int>(i);
    return -1;
}

namespace {

Mlp make_mlp(int in_dim, int out_dim, int width, int depth) {
    if (depth < 1) throw std::invalid_argument("module depth must be at least 1");
    Mlp m;
    for (int l = 0; l < depth; ++l) {
        int li = (l == 0) ? in_dim : width;
        int lo = (l == depth - 1) ? out_dim : width;
        m.layers.push_back(LinearLayer{Matrix(lo, li), numvec(lo, 0.0)});
    }
    return m;
}

}  // namespace

ModularRewardNet build_modular_net(const ContextDag& dag, int in_dim, int width, int depth) {
    require_valid_dag(dag);
    if (in_dim < 1) throw std::invalid_argument("build_modular_net: in_dim must be positive");
    if (width < 1) throw std::invalid_argument("build_modular_net: width must be positive");
    ModularRewardNet net;
    net.dag = dag;
    net.contexts = enumerate_contexts(dag);
    net.in_dim = in_dim;
    net.interface_width = width;
    std::vector<DagNode> nodes = dag.nodes;
    std::sort(nodes.begin(), nodes.end(),
              [](const DagNode& a, const DagNode& b) { return a.id < b.id; });
    for (const DagNode& n : nodes) {
        NodeModule mod;
        mod.node_id = n.id;
        int sets = 1;
        switch (n.kind) {
            case NodeKind::Root:
                mod.in_dim = in_dim;
                mod.out_dim = width;
                break;
            case NodeKind::Internal:
                mod.in_dim = width;
                mod.out_dim = width;
                sets = n.cardinality;
                break;
            case NodeKind::Leaf:
                mod.in_dim = width;
                mod.out_dim = 1;
                break;
        }
        for (int v = 0; v < sets; ++v) mod.sets.push_back(make_mlp(mod.in_dim, mod.out_dim, width, depth));
        net.modules.push_back(std::move(mod));
    }
    return net;
}

namespace {

ContextDag two_node_dag() {
    ContextDag dag;
    dag.nodes.push_back(DagNode{0, NodeKind::Root, "", 0, {}});
    dag.nodes.push_back(DagNode{1, NodeKind::Leaf, "", 0, {}});
    dag.edges.emplace_back(0, 1);
    return dag;
}

}  // namespace

ModularRewardNet build_monolithic_net(int in_dim, int width, int depth) {
    return build_modular_net(two_node_dag(), in_dim, width, depth);
}

ModularRewardNet build_linear_net(int in_dim) {
    ContextDag dag = two_node_dag();
    ModularRewardNet net;
    net.dag = dag;
    net.contexts = enumerate_contexts(dag);
    net.in_dim = in_dim;
    net.interface_width = 1;
    NodeModule root;
    root.node_id = 0;
    root.in_dim = in_dim;
    root.out_dim = 1;
    root.sets.push_back(make_mlp(in_dim, 1, 1, 1));
    NodeModule leaf;
    leaf.node_id = 1;
    leaf.in_dim = 1;
    leaf.out_dim = 1;
    leaf.sets.push_back(make_mlp(1, 1, 1, 1));
    net.modules.push_back(std::move(root));
    net.modules.push_back(std::move(leaf));
    return net;
}

void init_params(ModularRewardNet& net, uint64_t seed) {
    Rng rng(seed);
    for (NodeModule& mod : net.modules) {
        for (Mlp& set : mod.sets) {
            for (LinearLayer& layer : set.layers) {
                int fan_in = layer.w.cols(), fan_out = layer.w.rows();
                double bound = std::sqrt(6.0 / (fan_in + fan_out));
                for (double& x : layer.w.data()) x = rng.uniform(-bound, bound);
                std::fill(layer.b.begin(), layer.b.end(), 0.0);
            }
        }
    }
}

namespace {

// Affine layer on a batch: Y(s,.) = W X(s,.) + b.
Matrix affine(const Matrix& x, const LinearLayer& layer) {
    const int S = x.rows(), in = layer.w.cols(), out = layer.w.rows();
    if (x.cols() != in) throw std::invalid_argument("reward net: layer input width mismatch");
    Matrix y(S, out);
    for (int s = 0; s < S; ++s) {
        const double* xr = x.row_ptr(s);
        double* yr = y.row_ptr(s);
        for (int o = 0; o < out; ++o) {
            const double* wr = layer.w.row_ptr(o);
            double acc = layer.b[o];
            for (int i = 0; i < in; ++i) acc += wr[i] * xr[i];
            yr[o] = acc;
        }
    }
    return y;
}

Matrix relu(const Matrix& z) {
    Matrix y = z;
    for (double& x : y.data()) x = std::max(0.0, x);
    return y;
}

// Everything the backward pass needs from one module application.
struct ModuleTrace {
    std::vector<Matrix> inputs;    // per layer: the batch fed into it
    std::vector<Matrix> preacts;   // per layer: W x + b before any rectifier
};

Matrix run_module(const Mlp& set, const Matrix& x0, ModuleTrace* trace) {
    Matrix x = x0;
    const int L = static_cast<int>(set.layers.size());
    for (int l = 0; l < L; ++l) {
        if (trace) trace->inputs.push_back(x);
        Matrix z = affine(x, set.layers[l]);
        if (trace) trace->preacts.push_back(z);
        x = (l + 1 < L) ? relu(z) : std::move(z);
    }
    return x;
}

// Row blocks keep the working set of a pass small enough to stay cache
// resident no matter how many states the MDP has. Outputs and gradients are
// identical to a full-batch pass because every row is independent and the
// accumulation order over states is unchanged.
constexpr int kRowTile = 128;

Matrix copy_rows(const Matrix& src, int r0, int r1) {
    Matrix out(r1 - r0, src.cols());
    for (int r = r0; r < r1; ++r) {
        const double* s = src.row_ptr(r);
        double* d = out.row_ptr(r - r0);
        for (int c = 0; c < src.cols(); ++c) d[c] = s[c];
    }
    return out;
}

// Active (module index, set index) pairs along the context's path, in path
// order root -> ... -> leaf.
std::vector<std::pair<int, int>> active_sets(const ModularRewardNet& net, const Context& ctx) {
    std::vector<std::pair<int, int>> out;
    size_t vi = 0;
    for (int id : ctx.path) {
        int mi = net.module_index(id);
        if (mi < 0) throw std::invalid_argument("reward net: context path node has no module");
        const DagNode* n = net.dag.find_node(id);
        int set = 0;
        if (n->kind == NodeKind::Internal) {
            if (vi >= ctx.assignment.size())
                throw std::invalid_argument("reward net: context assignment too short");
            set = ctx.assignment[vi++];
            if (set < 0 || set >= static_cast<int>(net.modules[mi].sets.size()))
                throw std::invalid_argument("reward net: context value out of range");
        }
        out.emplace_back(mi, set);
    }
    if (vi != ctx.assignment.size())
        throw std::invalid_argument("reward net: context assignment too long");
    return out;
}

}  // namespace

numvec forward(const ModularRewardNet& net, const Context& ctx, const Matrix& features) {
    if (features.cols() != net.in_dim)
        throw std::invalid_argument("forward: feature width does not match net input");
    auto path = active_sets(net, ctx);
    const int S = features.rows();
    numvec r(S);
    for (int r0 = 0; r0 < S; r0 += kRowTile) {
        const int r1 = std::min(S, r0 + kRowTile);
        Matrix x = copy_rows(features, r0, r1);
        for (auto [mi, set] : path) x = run_module(net.modules[mi].sets[set], x, nullptr);
        if (x.cols() != 1) throw std::logic_error("forward: leaf module did not produce a scalar");
        for (int s = r0; s < r1; ++s) r[s] = x(s - r0, 0);
    }
    return r;
}

ParamGradients zero_gradients(const ModularRewardNet& net) {
    ParamGradients g;
    for (const NodeModule& mod : net.modules) {
        NodeModule zm;
        zm.node_id = mod.node_id;
        zm.in_dim = mod.in_dim;
        zm.out_dim = mod.out_dim;
        for (const Mlp& set : mod.sets) {
            Mlp zs;
            for (const LinearLayer& layer : set.layers)
                zs.layers.push_back(LinearLayer{Matrix(layer.w.rows(), layer.w.cols()),
                                                numvec(layer.b.size(), 0.0)});
            zm.sets.push_back(std::move(zs));
        }
        g.by_module.push_back(std::move(zm));
    }
    return g;
}

ParamGradients backward(const ModularRewardNet& net, const Context& ctx, const Matrix& features,
                        const numvec& upstream) {
    if (features.cols() != net.in_dim)
        throw std::invalid_argument("backward: feature width does not match net input");
    if (static_cast<int>(upstream.size()) != features.rows())
        throw std::invalid_argument("backward: upstream length must match state count");

    auto path = active_sets(net, ctx);
    ParamGradients grads = zero_gradients(net);
    const int S = features.rows();

    for (int t0 = 0; t0 < S; t0 += kRowTile) {
        const int t1 = std::min(S, t0 + kRowTile);
        const int T = t1 - t0;

        std::vector<ModuleTrace> traces(path.size());
        Matrix x = copy_rows(features, t0, t1);
        for (size_t m = 0; m < path.size(); ++m)
            x = run_module(net.modules[path[m].first].sets[path[m].second], x, &traces[m]);

        // dL/d(output of last module); the leaf emits one column.
        Matrix delta(T, 1);
        for (int s = 0; s < T; ++s) delta(s, 0) = upstream[t0 + s];

        for (int m = static_cast<int>(path.size()) - 1; m >= 0; --m) {
            const Mlp& set = net.modules[path[m].first].sets[path[m].second];
            Mlp& gset = grads.by_module[path[m].first].sets[path[m].second];
            const ModuleTrace& tr = traces[m];
            const int L = static_cast<int>(set.layers.size());
            for (int l = L - 1; l >= 0; --l) {
                // delta currently holds dL/dz for layer l's post-activation on
                // the last layer, or gets masked below for hidden layers.
                const Matrix& input = tr.inputs[l];
                const LinearLayer& layer = set.layers[l];
                Matrix& gw = gset.layers[l].w;
                numvec& gb = gset.layers[l].b;
                const int out = layer.w.rows(), in = layer.w.cols();
                for (int s = 0; s < T; ++s) {
                    const double* dr = delta.row_ptr(s);
                    const double* xr = input.row_ptr(s);
                    for (int o = 0; o < out; ++o) {
                        double d = dr[o];
                        if (d == 0.0) continue;
                        double* gwr = gw.row_ptr(o);
                        for (int i = 0; i < in; ++i) gwr[i] += d * xr[i];
                        gb[o] += d;
                    }
                }
                // dL/d(input of this layer)
                Matrix dx(T, in);
                for (int s = 0; s < T; ++s) {
                    const double* dr = delta.row_ptr(s);
                    double* dxr = dx.row_ptr(s);
                    for (int i = 0; i < in; ++i) {
                        double acc = 0.0;
                        for (int o = 0; o < out; ++o) acc += dr[o] * layer.w(o, i);
                        dxr[i] = acc;
                    }
                }
                if (l > 0) {
                    // pass through the rectifier of the previous layer
                    const Matrix& z = tr.preacts[l - 1];
                    for (int s = 0; s < T; ++s)
                        for (int i = 0; i < in; ++i)
                            if (z(s, i) <= 0.0) dx(s, i) = 0.0;
                }
                delta = std::move(dx);
            }
            // delta now carries dL/d(input of module m) == dL/d(output of
            // m-1); modules are linked linearly, no rectifier between them.
        }
    }
    return grads;
}

namespace {

void check_same_shape(const ParamGradients& a, const ParamGradients& b) {
    if (a.by_module.size() != b.by_module.size())
        throw std::invalid_argument("gradient shape mismatch");
    for (size_t m = 0; m < a.by_module.size(); ++m)
        if (a.by_module[m].sets.size() != b.by_module[m].sets.size())
            throw std::invalid_argument("gradient shape mismatch");
}

}  // namespace

void accumulate(ParamGradients& acc, const ParamGradients& g) {
    check_same_shape(acc, g);
    for (size_t m = 0; m < acc.by_module.size(); ++m) {
        for (size_t v = 0; v < acc.by_module[m].sets.size(); ++v) {
            Mlp& as = acc.by_module[m].sets[v];
            const Mlp& gs = g.by_module[m].sets[v];
            for (size_t l = 0; l < as.layers.size(); ++l) {
                numvec& aw = as.layers[l].w.data();
                const numvec& gw = gs.layers[l].w.data();
                for (size_t i = 0; i < aw.size(); ++i) aw[i] += gw[i];
                for (size_t i = 0; i < as.layers[l].b.size(); ++i)
                    as.layers[l].b[i] += gs.layers[l].b[i];
            }
        }
    }
}

void scale(ParamGradients& g, double c) {
    for (NodeModule& mod : g.by_module)
        for (Mlp& set : mod.sets)
            for (LinearLayer& layer : set.layers) {
                for (double& x : layer.w.data()) x *= c;
                for (double& x : layer.b) x *= c;
            }
}

namespace {

double reg_value_of_set(const Mlp& set, double l1, double l2) {
    double acc = 0.0;
    for (const LinearLayer& layer : set.layers) {
        for (double x : layer.w.data()) acc += l1 * std::abs(x) + 0.5 * l2 * x * x;
        for (double x : layer.b) acc += l1 * std::abs(x) + 0.5 * l2 * x * x;
    }
    return acc;
}

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

double regularizer_value(const ModularRewardNet& net, double l1, double l2, const Context& ctx) {
    double acc = 0.0;
    for (auto [mi, set] : active_sets(net, ctx))
        acc += reg_value_of_set(net.modules[mi].sets[set], l1, l2);
    return acc;
}

ParamGradients regularizer_grad(const ModularRewardNet& net, double l1, double l2,
                                const Context& ctx) {
    ParamGradients g = zero_gradients(net);
    for (auto [mi, si] : active_sets(net, ctx)) {
        const Mlp& set = net.modules[mi].sets[si];
        Mlp& gset = g.by_module[mi].sets[si];
        for (size_t l = 0; l < set.layers.size(); ++l) {
            const numvec& w = set.layers[l].w.data();
            numvec& gw = gset.layers[l].w.data();
            for (size_t i = 0; i < w.size(); ++i) gw[i] += l1 * sgn(w[i]) + l2 * w[i];
            const numvec& b = set.layers[l].b;
            numvec& gb = gset.layers[l].b;
            for (size_t i = 0; i < b.size(); ++i) gb[i] += l1 * sgn(b[i]) + l2 * b[i];
        }
    }
    return g;
}

void sgd_step(ModularRewardNet& net, const ParamGradients& grads, double lr) {
    if (grads.by_module.size() != net.modules.size())
        throw std::invalid_argument("sgd_step: gradient shape mismatch");
    for (size_t m = 0; m < net.modules.size(); ++m) {
        NodeModule& mod = net.modules[m];
        const NodeModule& gmod = grads.by_module[m];
        if (gmod.sets.size() != mod.sets.size())
            throw std::invalid_argument("sgd_step: gradient shape mismatch");
        for (size_t v = 0; v < mod.sets.size(); ++v) {
            for (size_t l = 0; l < mod.sets[v].layers.size(); ++l) {
                numvec& w = mod.sets[v].layers[l].w.data();
                const numvec& gw = gmod.sets[v].layers[l].w.data();
                for (size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
                numvec& b = mod.sets[v].layers[l].b;
                const numvec& gb = gmod.sets[v].layers[l].b;
                for (size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
            }
        }
    }
}

ParamCount param_count(const ModularRewardNet& net) {
    ParamCount pc;
    for (const NodeModule& mod : net.modules) {
        pc.parameter_sets += static_cast<long long>(mod.sets.size());
        for (const Mlp& set : mod.sets)
            for (const LinearLayer& layer : set.layers)
                pc.scalars += static_cast<long long>(layer.w.data().size()) +
                              static_cast<long long>(layer.b.size());
    }
    return pc;
}

}  // namespace chirl
