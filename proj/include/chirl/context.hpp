#pragma once

#include <string>
#include <utility>
#include <vector>

namespace chirl {

enum class NodeKind { Root, Internal, Leaf };

/// Node of a context DAG. Root and leaf nodes are dummies that carry no
/// variable; internal nodes each represent one context variable with
/// `cardinality` possible values. `values` optionally names those values so
/// data files can refer to them symbolically; when empty, the decimal index
/// is the name.
struct DagNode {
    int id = 0;
    NodeKind kind = NodeKind::Internal;
    std::string variable;
    int cardinality = 0;
    std::vector<std::string> values;
};

struct ContextDag {
    std::vector<DagNode> nodes;
    std::vector<std::pair<int, int>> edges;  // directed, in declaration order

    const DagNode* find_node(int id) const {
        for (const DagNode& n : nodes)
            if (n.id == id) return &n;
        return nullptr;
    }

    std::vector<int> children(int id) const {
        std::vector<int> out;
        for (const auto& e : edges)
            if (e.first == id) out.push_back(e.second);
        return out;
    }

    bool operator==(const ContextDag& o) const;
};

inline bool operator==(const DagNode& a, const DagNode& b) {
    return a.id == b.id && a.kind == b.kind && a.variable == b.variable &&
           a.cardinality == b.cardinality && a.values == b.values;
}

inline bool ContextDag::operator==(const ContextDag& o) const {
    return nodes == o.nodes && edges == o.edges;
}

/// A context is one root-to-leaf path plus a value choice for every internal
/// node along it. `assignment[i]` is the value index of the i-th internal
/// node of `path`.
struct Context {
    std::vector<int> path;        // node ids, root first, leaf last
    std::vector<int> assignment;  // one value per internal node on the path

    bool operator==(const Context& o) const {
        return path == o.path && assignment == o.assignment;
    }
};

/// Name/value string pairs, the external form of a context.
using ContextLabel = std::vector<std::pair<std::string, std::string>>;

/// Structural checks: unique ids, exactly one root, at least one leaf,
/// acyclicity, every node on some root-to-leaf path, sane cardinalities.
/// Returns one message per violation; empty means valid.
std::vector<std::string> validate_dag(const ContextDag& dag);

/// Throws std::invalid_argument with the first validation message if the DAG
/// is not valid.
void require_valid_dag(const ContextDag& dag);

/// All contexts in a fixed deterministic order: paths are walked depth-first
/// following edge declaration order, assignments are counted with the last
/// internal node varying fastest.
std::vector<Context> enumerate_contexts(const ContextDag& dag);

/// Internal node ids along a context's path, in path order.
std::vector<int> internal_nodes(const ContextDag& dag, const Context& ctx);

/// Maps a name/value label to the unique matching context. When paths with
/// different variable sets overlap, a label can satisfy several contexts; in
/// that case the one whose variables are all pinned by the label wins, so
/// labels produced by context_label always resolve back. Throws
/// std::invalid_argument naming the problem when a variable is unknown, a
/// value is out of range, nothing matches, or the match is ambiguous.
Context resolve_label(const ContextDag& dag, const ContextLabel& label);

/// Inverse of resolve_label for a concrete context.
ContextLabel context_label(const ContextDag& dag, const Context& ctx);

/// Position of `ctx` in enumerate_contexts order; -1 if absent.
int context_index(const std::vector<Context>& contexts, const Context& ctx);

/// Number of parameter sets a per-context table would need if every joint
/// assignment of all internal variables were handled independently.
long long full_joint_context_count(const ContextDag& dag);

}  // namespace chirl
