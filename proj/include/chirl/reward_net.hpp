#pragma once

#include <cstdint>
#include <vector>

#include "chirl/context.hpp"
#include "chirl/linalg.hpp"

namespace chirl {

/// One affine layer y = W x + b with W stored out_dim x in_dim.
struct LinearLayer {
    Matrix w;
    numvec b;
};

/// Small multilayer perceptron: rectifier between layers, linear output.
/// A single-layer Mlp is therefore a plain affine map.
struct Mlp {
    std::vector<LinearLayer> layers;
};

/// All parameter sets attached to one DAG node. Internal nodes hold one set
/// per variable value; root and leaf dummies hold exactly one.
struct NodeModule {
    int node_id = 0;
    int in_dim = 0;
    int out_dim = 0;
    std::vector<Mlp> sets;
};

/// Reward function composed along a context DAG: for a context with path
/// root -> v1 -> ... -> leaf the reward of state s is
///   R(s) = f_leaf(f_vk(... f_root(phi(s)) ...))
/// where each internal f_vi uses the parameter set selected by the context's
/// value for that node. Sharing modules across contexts is the whole point:
/// contexts that agree on a node value train the same parameters.
struct ModularRewardNet {
    ContextDag dag;
    std::vector<Context> contexts;    // enumerate_contexts(dag), cached
    std::vector<NodeModule> modules;  // ordered by ascending node id
    int in_dim = 0;
    int interface_width = 0;

    const NodeModule& module_for(int node_id) const;
    NodeModule& module_for(int node_id);
    int module_index(int node_id) const;
};

/// Gradient container mirroring the net's parameter structure:
/// by_module[i].sets[v] has the same layer shapes as net.modules[i].sets[v].
struct ParamGradients {
    std::vector<NodeModule> by_module;
};

/// Builds the DAG-shaped net. Every module is `depth` affine layers with
/// rectifiers between them; root maps the feature dimension to `width`,
/// internal modules map width to width, leaves map width to a scalar.
ModularRewardNet build_modular_net(const ContextDag& dag, int in_dim, int width = 16,
                                   int depth = 2);

/// Degenerate two-node DAG (root -> leaf): one monolithic MLP. Context
/// identity must then be carried by the input features.
ModularRewardNet build_monolithic_net(int in_dim, int width = 16, int depth = 2);

/// Single affine map from features to reward (root and leaf are both
/// one-layer, so the composition stays linear).
ModularRewardNet build_linear_net(int in_dim);

/// Fills all weights with fan-scaled uniform draws, bound
/// sqrt(6 / (fan_in + fan_out)), and zeroes all biases. Deterministic in
/// `seed`: the same seed always produces bitwise-identical parameters.
void init_params(ModularRewardNet& net, uint64_t seed);

/// Reward for every state under one context. `features` must have
/// net.in_dim columns.
numvec forward(const ModularRewardNet& net, const Context& ctx, const Matrix& features);

/// Hand-derived backward pass. `upstream` holds dL/dR(s) per state; the
/// result accumulates dL/dtheta into the parameter sets active under `ctx`
/// (all other entries stay zero).
ParamGradients backward(const ModularRewardNet& net, const Context& ctx, const Matrix& features,
                        const numvec& upstream);

/// Zero-filled gradients with the net's shape.
ParamGradients zero_gradients(const ModularRewardNet& net);

/// acc += g, shape-checked.
void accumulate(ParamGradients& acc, const ParamGradients& g);

/// g *= c.
void scale(ParamGradients& g, double c);

/// lambda1 * |theta|_1 + 0.5 * lambda2 * |theta|_2^2 over the parameter sets
/// active under `ctx`.
double regularizer_value(const ModularRewardNet& net, double l1, double l2, const Context& ctx);

/// Subgradient of the above: lambda1 * sign(theta) + lambda2 * theta on the
/// active sets, zero elsewhere. sign(0) = 0.
ParamGradients regularizer_grad(const ModularRewardNet& net, double l1, double l2,
                                const Context& ctx);

/// theta <- theta - lr * grad over every parameter.
void sgd_step(ModularRewardNet& net, const ParamGradients& grads, double lr);

struct ParamCount {
    long long parameter_sets = 0;
    long long scalars = 0;
};

/// Structural size of the net: number of parameter sets (one per internal
/// node value plus one per dummy node) and total scalar parameters.
ParamCount param_count(const ModularRewardNet& net);

}  // namespace chirl
