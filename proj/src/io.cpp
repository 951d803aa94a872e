#include "chirl/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chirl::io {

using nlohmann::json;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

json mdp_to_json(const TabularMdp& mdp) {
    json tr = json::array();
    for (const Transition& t : mdp.entries()) tr.push_back({t.state, t.action, t.next, t.prob});
    json feat = json::array();
    const Matrix& phi = mdp.features();
    for (int s = 0; s < phi.rows(); ++s) {
        json row = json::array();
        for (int c = 0; c < phi.cols(); ++c) row.push_back(phi(s, c));
        feat.push_back(std::move(row));
    }
    return json{{"n_states", mdp.n_states()},
                {"n_actions", mdp.n_actions()},
                {"discount", mdp.discount()},
                {"transitions", std::move(tr)},
                {"features", std::move(feat)}};
}

TabularMdp mdp_from_json(const json& j) {
    std::vector<Transition> tr;
    for (const json& t : j.at("transitions"))
        tr.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>(),
                      t.at(3).get<double>()});
    const json& feat = j.at("features");
    int rows = static_cast<int>(feat.size());
    int cols = rows > 0 ? static_cast<int>(feat.at(0).size()) : 0;
    Matrix phi(rows, cols);
    for (int s = 0; s < rows; ++s)
        for (int c = 0; c < cols; ++c) phi(s, c) = feat.at(s).at(c).get<double>();
    return TabularMdp(j.at("n_states").get<int>(), j.at("n_actions").get<int>(),
                      j.at("discount").get<double>(), std::move(tr), std::move(phi));
}

namespace {

const char* kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Root: return "root";
        case NodeKind::Internal: return "internal";
        case NodeKind::Leaf: return "leaf";
    }
    return "?";
}

NodeKind kind_from(const std::string& s) {
    if (s == "root") return NodeKind::Root;
    if (s == "internal") return NodeKind::Internal;
    if (s == "leaf") return NodeKind::Leaf;
    throw std::invalid_argument("unknown node kind '" + s + "'");
}

}  // namespace

json dag_to_json(const ContextDag& dag) {
    json nodes = json::array();
    for (const DagNode& n : dag.nodes) {
        json jn{{"id", n.id}, {"kind", kind_name(n.kind)}};
        if (n.kind == NodeKind::Internal) {
            jn["variable"] = n.variable;
            jn["cardinality"] = n.cardinality;
            if (!n.values.empty()) jn["values"] = n.values;
        }
        nodes.push_back(std::move(jn));
    }
    json edges = json::array();
    for (auto [a, b] : dag.edges) edges.push_back({a, b});
    return json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

ContextDag dag_from_json(const json& j) {
    ContextDag dag;
    for (const json& jn : j.at("nodes")) {
        DagNode n;
        n.id = jn.at("id").get<int>();
        n.kind = kind_from(jn.at("kind").get<std::string>());
        if (jn.contains("variable")) n.variable = jn.at("variable").get<std::string>();
        if (jn.contains("cardinality")) n.cardinality = jn.at("cardinality").get<int>();
        if (jn.contains("values")) n.values = jn.at("values").get<std::vector<std::string>>();
        dag.nodes.push_back(std::move(n));
    }
    for (const json& je : j.at("edges"))
        dag.edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
    return dag;
}

json layout_to_json(const GridLayout& g) {
    json lms = json::array();
    for (const auto& [name, pos] : g.landmarks) lms.push_back({name, {pos.first, pos.second}});
    json walls = json::array();
    for (const auto& w : g.walls) walls.push_back({w[0], w[1], w[2], w[3]});
    return json{{"width", g.width},
                {"height", g.height},
                {"landmarks", std::move(lms)},
                {"walls", std::move(walls)}};
}

GridLayout layout_from_json(const json& j) {
    GridLayout g;
    g.width = j.at("width").get<int>();
    g.height = j.at("height").get<int>();
    for (const json& lm : j.at("landmarks"))
        g.landmarks.push_back({lm.at(0).get<std::string>(),
                               {lm.at(1).at(0).get<int>(), lm.at(1).at(1).get<int>()}});
    for (const json& w : j.at("walls"))
        g.walls.push_back({w.at(0).get<int>(), w.at(1).get<int>(), w.at(2).get<int>(),
                           w.at(3).get<int>()});
    return g;
}

void save_demos(const std::string& path, const ContextDag& dag,
                const std::vector<Context>& contexts, const DemoSet& demos) {
    if (demos.n_contexts() != static_cast<int>(contexts.size()))
        throw std::invalid_argument("save_demos: context count mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (int k = 0; k < demos.n_contexts(); ++k) {
        json label = json::array();
        for (const auto& [var, val] : context_label(dag, contexts[k])) label.push_back({var, val});
        for (const Trajectory& traj : demos.by_context[k]) {
            json steps = json::array();
            for (const DemoStep& st : traj.steps) steps.push_back({st.state, st.action});
            json line{{"context", label}, {"steps", std::move(steps)}};
            if (traj.truncated) line["truncated"] = true;
            out << line.dump() << '\n';
        }
    }
}

DemoSet load_demos(const std::string& path, const ContextDag& dag,
                   const std::vector<Context>& contexts) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    DemoSet out(static_cast<int>(contexts.size()));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line);
        ContextLabel label;
        for (const json& e : j.at("context"))
            label.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
        int k = context_index(contexts, resolve_label(dag, label));
        if (k < 0)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": context not in this bundle");
        Trajectory traj;
        traj.context = k;
        for (const json& st : j.at("steps"))
            traj.steps.push_back({st.at(0).get<int>(), st.at(1).get<int>()});
        traj.truncated = j.value("truncated", false);
        out.by_context[k].push_back(std::move(traj));
    }
    return out;
}

void save_checkpoint(const std::string& prefix, const ModularRewardNet& net) {
    json modules = json::array();
    std::vector<double> blob;
    for (const NodeModule& m : net.modules) {
        json layers = json::array();
        for (const Mlp& mlp : m.sets) {
            for (const LinearLayer& l : mlp.layers) {
                blob.insert(blob.end(), l.w.data().begin(), l.w.data().end());
                blob.insert(blob.end(), l.b.begin(), l.b.end());
            }
        }
        if (!m.sets.empty())
            for (const LinearLayer& l : m.sets[0].layers) layers.push_back({l.w.rows(), l.w.cols()});
        modules.push_back(json{{"node_id", m.node_id},
                               {"in_dim", m.in_dim},
                               {"out_dim", m.out_dim},
                               {"sets", m.sets.size()},
                               {"layers", std::move(layers)}});
    }
    save_json(prefix + ".json", json{{"format", "chirl-net"},
                                     {"byte_order", "little"},
                                     {"in_dim", net.in_dim},
                                     {"interface_width", net.interface_width},
                                     {"dag", dag_to_json(net.dag)},
                                     {"modules", std::move(modules)},
                                     {"scalars", blob.size()}});
    std::ofstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write " + prefix + ".bin");
    bin.write(reinterpret_cast<const char*>(blob.data()),
              static_cast<std::streamsize>(blob.size() * sizeof(double)));
}

ModularRewardNet load_checkpoint(const std::string& prefix) {
    json j = load_json(prefix + ".json");
    if (j.value("format", "") != "chirl-net")
        throw std::runtime_error(prefix + ".json: not a net checkpoint");

    ModularRewardNet net;
    net.dag = dag_from_json(j.at("dag"));
    net.contexts = enumerate_contexts(net.dag);
    net.in_dim = j.at("in_dim").get<int>();
    net.interface_width = j.at("interface_width").get<int>();
    for (const json& jm : j.at("modules")) {
        NodeModule m;
        m.node_id = jm.at("node_id").get<int>();
        m.in_dim = jm.at("in_dim").get<int>();
        m.out_dim = jm.at("out_dim").get<int>();
        Mlp proto;
        for (const json& shape : jm.at("layers")) {
            int rows = shape.at(0).get<int>(), cols = shape.at(1).get<int>();
            proto.layers.push_back({Matrix(rows, cols), numvec(rows, 0.0)});
        }
        m.sets.assign(jm.at("sets").get<size_t>(), proto);
        net.modules.push_back(std::move(m));
    }
    size_t scalars = 0;
    for (const NodeModule& m : net.modules)
        for (const Mlp& mlp : m.sets)
            for (const LinearLayer& l : mlp.layers)
                scalars += l.w.data().size() + l.b.size();
    if (scalars != j.at("scalars").get<size_t>())
        throw std::runtime_error(prefix + ".json: scalar count mismatch");

    std::ifstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot open " + prefix + ".bin");
    std::vector<double> blob(scalars);
    bin.read(reinterpret_cast<char*>(blob.data()),
             static_cast<std::streamsize>(scalars * sizeof(double)));
    if (static_cast<size_t>(bin.gcount()) != scalars * sizeof(double))
        throw std::runtime_error(prefix + ".bin: short read");

    size_t off = 0;
    for (NodeModule& m : net.modules)
        for (Mlp& mlp : m.sets)
            for (LinearLayer& l : mlp.layers) {
                std::memcpy(l.w.data().data(), blob.data() + off,
                            l.w.data().size() * sizeof(double));
                off += l.w.data().size();
                std::memcpy(l.b.data(), blob.data() + off, l.b.size() * sizeof(double));
                off += l.b.size();
            }
    return net;
}

void write_training_log(const std::string& path, const std::vector<EpochLog>& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch,context_sweep_loss,evd,epoch_seconds\n";
    for (const EpochLog& e : log)
        out << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.evd) << ','
            << format_double(e.seconds) << '\n';
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "env,algorithm,n_traj,seed_count,evd_mean,evd_std,time_mean_s,time_std_s\n";
    for (const ResultRow& r : rows)
        out << r.env << ',' << r.algorithm << ',' << r.n_traj << ',' << r.seed_count << ','
            << format_double(r.evd_mean) << ',' << format_double(r.evd_std) << ','
            << format_double(r.time_mean_s) << ',' << format_double(r.time_std_s) << '\n';
}

}  // namespace chirl::io
