#include "chirl/context.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace chirl {

namespace {

std::string kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Root: return "root";
        case NodeKind::Internal: return "internal";
        case NodeKind::Leaf: return "leaf";
    }
    return "?";
}

// value index -> display name
std::string value_name(const DagNode& n, int idx) {
    if (idx >= 0 && idx < static_cast<int>(n.values.size())) return n.values[idx];
    return std::to_string(idx);
}

// display name or decimal index -> value index, -1 if no match
int value_index(const DagNode& n, const std::string& val) {
    for (int i = 0; i < static_cast<int>(n.values.size()); ++i)
        if (n.values[i] == val) return i;
    try {
        size_t pos = 0;
        int idx = std::stoi(val, &pos);
        if (pos == val.size() && idx >= 0 && idx < n.cardinality) return idx;
    } catch (const std::exception&) {
    }
    return -1;
}

}  // namespace

std::vector<std::string> validate_dag(const ContextDag& dag) {
    std::vector<std::string> report;
    std::set<int> ids;
    int n_roots = 0, n_leaves = 0;
    for (const DagNode& n : dag.nodes) {
        if (!ids.insert(n.id).second)
            report.push_back("duplicate node id " + std::to_string(n.id));
        if (n.kind == NodeKind::Root) ++n_roots;
        if (n.kind == NodeKind::Leaf) ++n_leaves;
        if (n.kind == NodeKind::Internal) {
            if (n.variable.empty())
                report.push_back("internal node " + std::to_string(n.id) + " has no variable name");
            if (n.cardinality < 1)
                report.push_back("internal node " + std::to_string(n.id) +
                                 " has cardinality " + std::to_string(n.cardinality));
            if (!n.values.empty() && static_cast<int>(n.values.size()) != n.cardinality)
                report.push_back("internal node " + std::to_string(n.id) +
                                 ": value name count does not match cardinality");
        } else if (!n.variable.empty()) {
            report.push_back(kind_name(n.kind) + " node " + std::to_string(n.id) +
                             " must not declare a variable");
        }
    }
    if (n_roots != 1) report.push_back("expected exactly one root node, found " + std::to_string(n_roots));
    if (n_leaves < 1) report.push_back("expected at least one leaf node");

    std::set<std::pair<int, int>> seen_edges;
    for (const auto& e : dag.edges) {
        if (!ids.count(e.first) || !ids.count(e.second)) {
            report.push_back("edge (" + std::to_string(e.first) + ", " + std::to_string(e.second) +
                             ") references unknown node");
            continue;
        }
        if (e.first == e.second)
            report.push_back("self edge on node " + std::to_string(e.first));
        if (!seen_edges.insert(e).second)
            report.push_back("duplicate edge (" + std::to_string(e.first) + ", " +
                             std::to_string(e.second) + ")");
        const DagNode* from = dag.find_node(e.first);
        const DagNode* to = dag.find_node(e.second);
        if (from && from->kind == NodeKind::Leaf)
            report.push_back("leaf node " + std::to_string(e.first) + " has an outgoing edge");
        if (to && to->kind == NodeKind::Root)
            report.push_back("root node " + std::to_string(e.second) + " has an incoming edge");
    }
    if (!report.empty()) return report;

    // Kahn's algorithm for acyclicity.
    std::map<int, int> indeg;
    for (const DagNode& n : dag.nodes) indeg[n.id] = 0;
    for (const auto& e : dag.edges) ++indeg[e.second];
    std::vector<int> frontier;
    for (auto& [id, d] : indeg)
        if (d == 0) frontier.push_back(id);
    size_t visited = 0;
    while (!frontier.empty()) {
        int id = frontier.back();
        frontier.pop_back();
        ++visited;
        for (int c : dag.children(id))
            if (--indeg[c] == 0) frontier.push_back(c);
    }
    if (visited != dag.nodes.size()) {
        report.push_back("graph contains a cycle");
        return report;
    }

    // Every node must sit on some root-to-leaf path.
    int root_id = -1;
    for (const DagNode& n : dag.nodes)
        if (n.kind == NodeKind::Root) root_id = n.id;
    std::set<int> from_root;
    std::vector<int> stack{root_id};
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        if (!from_root.insert(id).second) continue;
        for (int c : dag.children(id)) stack.push_back(c);
    }
    std::set<int> to_leaf;
    for (const DagNode& n : dag.nodes)
        if (n.kind == NodeKind::Leaf) {
            to_leaf.insert(n.id);
            stack.push_back(n.id);
        }
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        for (const auto& e : dag.edges)
            if (e.second == id && to_leaf.insert(e.first).second) stack.push_back(e.first);
    }
    for (const DagNode& n : dag.nodes) {
        if (!from_root.count(n.id))
            report.push_back("node " + std::to_string(n.id) + " is unreachable from the root");
        else if (!to_leaf.count(n.id))
            report.push_back("node " + std::to_string(n.id) + " cannot reach any leaf");
    }
    return report;
}

void require_valid_dag(const ContextDag& dag) {
    auto report = validate_dag(dag);
    if (!report.empty()) throw std::invalid_argument("invalid context DAG: " + report.front());
}

namespace {

void collect_paths(const ContextDag& dag, int id, std::vector<int>& path,
                   std::vector<std::vector<int>>& out) {
    path.push_back(id);
    const DagNode* n = dag.find_node(id);
    if (n->kind == NodeKind::Leaf) {
        out.push_back(path);
    } else {
        for (int c : dag.children(id)) collect_paths(dag, c, path, out);
    }
    path.pop_back();
}

}  // namespace

std::vector<Context> enumerate_contexts(const ContextDag& dag) {
    require_valid_dag(dag);
    int root_id = -1;
    for (const DagNode& n : dag.nodes)
        if (n.kind == NodeKind::Root) root_id = n.id;
    std::vector<std::vector<int>> paths;
    std::vector<int> scratch;
    collect_paths(dag, root_id, scratch, paths);

    std::vector<Context> out;
    for (const auto& path : paths) {
        std::vector<int> cards;
        for (int id : path) {
            const DagNode* n = dag.find_node(id);
            if (n->kind == NodeKind::Internal) cards.push_back(n->cardinality);
        }
        std::vector<int> assignment(cards.size(), 0);
        while (true) {
            out.push_back(Context{path, assignment});
            // odometer increment, last position fastest
            int i = static_cast<int>(cards.size()) - 1;
            for (; i >= 0; --i) {
                if (++assignment[i] < cards[i]) break;
                assignment[i] = 0;
            }
            if (i < 0) break;  // wrapped around (or the path has no variables)
        }
    }
    return out;
}

std::vector<int> internal_nodes(const ContextDag& dag, const Context& ctx) {
    std::vector<int> out;
    for (int id : ctx.path) {
        const DagNode* n = dag.find_node(id);
        if (!n) throw std::invalid_argument("context path references unknown node");
        if (n->kind == NodeKind::Internal) out.push_back(id);
    }
    return out;
}

Context resolve_label(const ContextDag& dag, const ContextLabel& label) {
    require_valid_dag(dag);
    // Vet every entry against the DAG first so typos get a precise message.
    for (const auto& [var, val] : label) {
        bool var_known = false, val_known = false;
        for (const DagNode& n : dag.nodes) {
            if (n.kind != NodeKind::Internal || n.variable != var) continue;
            var_known = true;
            if (value_index(n, val) >= 0) val_known = true;
        }
        if (!var_known) throw std::invalid_argument("resolve_label: unknown variable '" + var + "'");
        if (!val_known)
            throw std::invalid_argument("resolve_label: variable '" + var + "' has no value '" +
                                        val + "'");
    }
    std::vector<Context> matches;
    for (const Context& ctx : enumerate_contexts(dag)) {
        std::vector<int> internals = internal_nodes(dag, ctx);
        bool ok = true;
        for (const auto& [var, val] : label) {
            bool applied = false;
            for (size_t i = 0; i < internals.size(); ++i) {
                const DagNode* n = dag.find_node(internals[i]);
                if (n->variable != var) continue;
                if (ctx.assignment[i] == value_index(*n, val)) applied = true;
            }
            if (!applied) {
                ok = false;
                break;
            }
        }
        if (ok) matches.push_back(ctx);
    }
    if (matches.empty())
        throw std::invalid_argument("resolve_label: label does not match any context");
    if (matches.size() > 1) {
        // A short path's full label can also pass the filter on longer paths
        // that leave extra variables free; the context the label pins
        // completely is the intended one.
        std::vector<const Context*> exact;
        for (const Context& ctx : matches) {
            bool all_pinned = true;
            for (int id : internal_nodes(dag, ctx)) {
                const DagNode* n = dag.find_node(id);
                bool in_label = false;
                for (const auto& [var, val] : label)
                    if (var == n->variable) in_label = true;
                if (!in_label) {
                    all_pinned = false;
                    break;
                }
            }
            if (all_pinned) exact.push_back(&ctx);
        }
        if (exact.size() != 1)
            throw std::invalid_argument("resolve_label: ambiguous label, matches " +
                                        std::to_string(matches.size()) + " contexts");
        return *exact.front();
    }
    return matches.front();
}

ContextLabel context_label(const ContextDag& dag, const Context& ctx) {
    ContextLabel out;
    std::vector<int> internals = internal_nodes(dag, ctx);
    if (internals.size() != ctx.assignment.size())
        throw std::invalid_argument("context_label: assignment length mismatch");
    for (size_t i = 0; i < internals.size(); ++i) {
        const DagNode* n = dag.find_node(internals[i]);
        out.emplace_back(n->variable, value_name(*n, ctx.assignment[i]));
    }
    return out;
}

int context_index(const std::vector<Context>& contexts, const Context& ctx) {
    for (size_t i = 0; i < contexts.size(); ++i)
        if (contexts[i] == ctx) return static_cast<int>(i);
    return -1;
}

long long full_joint_context_count(const ContextDag& dag) {
    long long total = 1;
    for (const DagNode& n : dag.nodes)
        if (n.kind == NodeKind::Internal) total *= n.cardinality;
    return total;
}

}  // namespace chirl
