#include "wkforge/assembly.hpp"

#include "json_util.hpp"
#include "wkforge/errors.hpp"

#include <algorithm>
#include <cmath>

namespace wkforge {

using detail::json;

namespace {

// Cosine comparisons against alpha tolerate rounding in both alpha and the cosine.
constexpr double kAlphaTolerance = 1e-9;

} // namespace

// ---------------------------------------------------------------------------
// WorkflowGraph

std::vector<std::string> WorkflowGraph::successors(const std::string& id) const {
    std::vector<std::string> out;
    for (auto it = edges.lower_bound(DagEdge{id, std::string()}); it != edges.end() && it->first == id; ++it) {
        out.push_back(it->second);
    }
    return out;
}

std::vector<std::string> WorkflowGraph::predecessors(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& [a, b] : edges) {
        if (b == id) out.push_back(a);
    }
    return out;
}

bool WorkflowGraph::reaches(const std::string& from, const std::string& to) const {
    if (from == to) return true;
    std::set<std::string> seen{from};
    std::vector<std::string> stack{from};
    while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        for (const auto& v : successors(u)) {
            if (v == to) return true;
            if (seen.insert(v).second) stack.push_back(v);
        }
    }
    return false;
}

bool WorkflowGraph::add_edge_if_acyclic(const std::string& src, const std::string& dst) {
    if (src == dst || edges.contains({src, dst})) return false;
    if (!nodes.contains(src) || !nodes.contains(dst)) {
        throw Error(ErrorCode::UnknownNode, "WFG edge " + src + " -> " + dst + " names an unknown node");
    }
    if (reaches(dst, src)) return false;
    edges.emplace(src, dst);
    return true;
}

bool WorkflowGraph::acyclic() const {
    std::vector<std::string> ids;
    for (const auto& [id, t] : nodes) ids.push_back(id);
    return is_acyclic(ids, {edges.begin(), edges.end()});
}

std::map<std::string, std::string> WorkflowGraph::wkg_members() const {
    std::map<std::string, std::string> out;
    for (const auto& [id, t] : nodes) {
        if (t.wkg_node_id && !is_terminal(id)) out.emplace(*t.wkg_node_id, id);
    }
    return out;
}

std::string wfg_id_for(const GeneratedTask& task, std::size_t dag_index) {
    if (task.wkg_node_id) return "wkg/" + *task.wkg_node_id;
    return "dag" + std::to_string(dag_index) + "/" + task.local_id;
}

// ---------------------------------------------------------------------------
// Algorithm 1

WorkflowGraph assemble_wfg(const std::vector<WorkflowDag>& dags, const WorkKnowledgeGraph& graph) {
    if (dags.empty()) throw Error(ErrorCode::InvalidInput, "assembly needs at least one workflow");

    WorkflowGraph wfg;
    // per DAG: local id -> WFG id
    std::vector<std::map<std::string, std::string>> ids(dags.size());
    for (std::size_t k = 0; k < dags.size(); ++k) {
        std::vector<std::string> local;
        for (const auto& t : dags[k].nodes) local.push_back(t.local_id);
        if (!is_acyclic(local, dags[k].edges)) {
            throw Error(ErrorCode::InvalidInput, "workflow " + std::to_string(k + 1) + " is not acyclic");
        }
        for (const auto& t : dags[k].nodes) {
            const auto id = wfg_id_for(t, k + 1);
            ids[k][t.local_id] = id;
            if (!wfg.nodes.contains(id)) {
                GeneratedTask copy = t;
                copy.local_id = id;
                wfg.nodes.emplace(id, std::move(copy));
            }
        }
    }
    for (std::size_t k = 0; k < dags.size(); ++k) {
        for (const auto& [a, b] : dags[k].edges) wfg.add_edge_if_acyclic(ids[k].at(a), ids[k].at(b));
    }

    // tagged nodes of each DAG, sorted by WFG id
    std::vector<std::vector<std::pair<std::string, std::string>>> tagged(dags.size()); // (wfg id, wkg id)
    for (std::size_t k = 0; k < dags.size(); ++k) {
        for (const auto& t : dags[k].nodes) {
            if (t.wkg_node_id && graph.has_node(*t.wkg_node_id)) tagged[k].emplace_back(ids[k].at(t.local_id), *t.wkg_node_id);
        }
        std::sort(tagged[k].begin(), tagged[k].end());
        tagged[k].erase(std::unique(tagged[k].begin(), tagged[k].end()), tagged[k].end());
    }
    for (std::size_t k = 0; k < dags.size(); ++k) {
        for (const auto& [v_wfg, v_wkg] : tagged[k]) {
            for (std::size_t other = 0; other < dags.size(); ++other) {
                if (other == k) continue;
                for (const auto& [x_wfg, x_wkg] : tagged[other]) {
                    if (graph.has_edge(v_wkg, x_wkg)) wfg.add_edge_if_acyclic(v_wfg, x_wfg);
                }
            }
        }
    }
    return wfg;
}

// ---------------------------------------------------------------------------
// connectivity

std::vector<std::set<std::string>> weak_components(const WorkflowGraph& wfg) {
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& [id, t] : wfg.nodes) {
        if (!wfg.is_terminal(id)) adj[id];
    }
    for (const auto& [a, b] : wfg.edges) {
        if (wfg.is_terminal(a) || wfg.is_terminal(b)) continue;
        adj[a].insert(b);
        adj[b].insert(a);
    }
    std::vector<std::set<std::string>> out;
    std::set<std::string> seen;
    for (const auto& [root, unused] : adj) {
        if (seen.contains(root)) continue;
        std::set<std::string> component{root};
        std::vector<std::string> stack{root};
        seen.insert(root);
        while (!stack.empty()) {
            const auto u = stack.back();
            stack.pop_back();
            for (const auto& v : adj[u]) {
                if (seen.insert(v).second) {
                    component.insert(v);
                    stack.push_back(v);
                }
            }
        }
        out.push_back(std::move(component));
    }
    return out;
}

bool is_weakly_connected(const WorkflowGraph& wfg) { return weak_components(wfg).size() <= 1; }

// ---------------------------------------------------------------------------
// Algorithm 2

void EnhanceConfig::validate() const {
    if (!(delta_alpha > 0.0)) throw Error(ErrorCode::InvalidInput, "delta_alpha must be positive");
    if (!(alpha_floor >= 0.0 && alpha_floor < alpha_start && alpha_start <= 1.0)) {
        throw Error(ErrorCode::InvalidInput, "expected 0 <= alpha_floor < alpha_start <= 1");
    }
}

int EnhanceConfig::max_iterations() const {
    return static_cast<int>(std::ceil((alpha_start - alpha_floor) / delta_alpha - 1e-9));
}

namespace {

std::string describe_components(const std::vector<std::set<std::string>>& components) {
    std::string s;
    for (std::size_t i = 0; i < components.size(); ++i) {
        s += "\n  component " + std::to_string(i + 1) + ": {";
        bool first = true;
        for (const auto& id : components[i]) {
            s += (first ? "" : ", ") + id;
            first = false;
        }
        s += "}";
    }
    return s;
}

GeneratedTask adopted_task(const TaskNode& node) {
    GeneratedTask t;
    t.local_id = "wkg/" + node.id;
    t.title = node.title;
    t.description = node.description;
    t.wkg_node_id = node.id;
    return t;
}

} // namespace

WorkflowGraph enhance_wfg(WorkflowGraph wfg, const WorkKnowledgeGraph& graph, const EnhanceConfig& cfg,
                          EnhanceReport* report) {
    cfg.validate();
    EnhanceReport local;
    EnhanceReport& rep = report ? *report : local;
    rep = EnhanceReport{};
    rep.final_alpha = cfg.alpha_start;

    for (int step = 1; !is_weakly_connected(wfg); ++step) {
        const double alpha = cfg.alpha_start - step * cfg.delta_alpha;
        if (alpha < cfg.alpha_floor - kAlphaTolerance) {
            throw Error(ErrorCode::CannotConnect, "workflow graph stays disconnected down to alpha " +
                                                      std::to_string(cfg.alpha_floor) +
                                                      describe_components(weak_components(wfg)));
        }
        ++rep.iterations;
        rep.final_alpha = alpha;

        auto members = wfg.wkg_members();
        std::vector<std::string> adopted;
        for (bool grew = true; grew;) {
            grew = false;
            std::set<std::string> candidates;
            for (const auto& [member, unused] : members) {
                for (const auto& c : graph.neighbors(member)) {
                    if (members.contains(c) || candidates.contains(c)) continue;
                    if (cosine(graph.embedding(c), graph.embedding(member)) >= alpha - kAlphaTolerance) {
                        candidates.insert(c);
                    }
                }
            }
            for (const auto& c : candidates) {
                auto task = adopted_task(graph.node(c));
                members.emplace(c, task.local_id);
                wfg.nodes.emplace(task.local_id, std::move(task));
                adopted.push_back(c);
                rep.added_nodes.push_back("wkg/" + c);
                grew = true;
            }
        }

        std::sort(adopted.begin(), adopted.end());
        for (const auto& c : adopted) {
            const auto& c_wfg = members.at(c);
            for (const auto& n : graph.neighbors(c)) {
                auto it = members.find(n);
                if (it == members.end()) continue;
                if (graph.has_edge(c, n) && wfg.add_edge_if_acyclic(c_wfg, it->second)) {
                    rep.added_edges.emplace_back(c_wfg, it->second);
                }
                if (graph.has_edge(n, c) && wfg.add_edge_if_acyclic(it->second, c_wfg)) {
                    rep.added_edges.emplace_back(it->second, c_wfg);
                }
            }
        }
    }
    return wfg;
}

// ---------------------------------------------------------------------------
// terminals

WorkflowGraph attach_terminals(WorkflowGraph wfg) {
    if (!wfg.acyclic()) throw Error(ErrorCode::InvalidInput, "cannot attach terminals to a cyclic graph");
    if (!wfg.has_terminals()) {
        wfg.entry_id = std::string(kEntryId);
        wfg.exit_id = std::string(kExitId);
    }
    wfg.nodes.try_emplace(wfg.entry_id, GeneratedTask{wfg.entry_id, "Client Input", "Virtual entry node", {}, {}});
    wfg.nodes.try_emplace(wfg.exit_id, GeneratedTask{wfg.exit_id, "Client Output", "Virtual exit node", {}, {}});

    bool any_task = false;
    std::set<std::string> has_in;
    std::set<std::string> has_out;
    for (const auto& [a, b] : wfg.edges) {
        has_out.insert(a);
        has_in.insert(b);
    }
    for (const auto& [id, t] : wfg.nodes) {
        if (wfg.is_terminal(id)) continue;
        any_task = true;
        if (!has_in.contains(id)) wfg.edges.emplace(wfg.entry_id, id);
        if (!has_out.contains(id)) wfg.edges.emplace(id, wfg.exit_id);
    }
    if (!any_task) wfg.edges.emplace(wfg.entry_id, wfg.exit_id);
    return wfg;
}

std::vector<std::string> off_path_nodes(const WorkflowGraph& wfg) {
    std::vector<std::string> out;
    if (!wfg.has_terminals()) {
        for (const auto& [id, t] : wfg.nodes) out.push_back(id);
        return out;
    }
    auto sweep = [&](const std::string& start, bool forward) {
        std::set<std::string> seen{start};
        std::vector<std::string> stack{start};
        while (!stack.empty()) {
            const auto u = stack.back();
            stack.pop_back();
            for (const auto& v : forward ? wfg.successors(u) : wfg.predecessors(u)) {
                if (seen.insert(v).second) stack.push_back(v);
            }
        }
        return seen;
    };
    const auto from_entry = sweep(wfg.entry_id, true);
    const auto to_exit = sweep(wfg.exit_id, false);
    for (const auto& [id, t] : wfg.nodes) {
        if (wfg.is_terminal(id)) continue;
        if (!from_entry.contains(id) || !to_exit.contains(id)) out.push_back(id);
    }
    return out;
}

// ---------------------------------------------------------------------------
// file format

std::string wfg_to_json_text(const WorkflowGraph& wfg) {
    WorkflowDag as_dag;
    for (const auto& [id, t] : wfg.nodes) as_dag.nodes.push_back(t);
    as_dag.edges.assign(wfg.edges.begin(), wfg.edges.end());
    json doc = json::parse(workflow_to_json_text(as_dag));
    doc["entry_id"] = wfg.has_terminals() ? json(wfg.entry_id) : json(nullptr);
    doc["exit_id"] = wfg.has_terminals() ? json(wfg.exit_id) : json(nullptr);
    return doc.dump(2) + "\n";
}

WorkflowGraph wfg_from_json_text(const std::string& content, const std::string& source) {
    const auto dag = workflow_from_json_text(content, source);
    const json doc = detail::parse_document(content, source);
    WorkflowGraph wfg;
    for (const auto& t : dag.nodes) wfg.nodes.emplace(t.local_id, t);
    wfg.edges.insert(dag.edges.begin(), dag.edges.end());
    const auto entry = detail::optional_string(doc, "entry_id", source, "");
    const auto exit = detail::optional_string(doc, "exit_id", source, "");
    if (entry.empty() != exit.empty()) detail::field_error(source, "/entry_id", "entry_id and exit_id go together");
    if (!entry.empty()) {
        if (!wfg.nodes.contains(entry)) detail::field_error(source, "/entry_id", "unknown node '" + entry + "'");
        if (!wfg.nodes.contains(exit)) detail::field_error(source, "/exit_id", "unknown node '" + exit + "'");
        wfg.entry_id = entry;
        wfg.exit_id = exit;
    }
    return wfg;
}

void save_wfg(const WorkflowGraph& wfg, const std::filesystem::path& path) {
    detail::write_file(path, wfg_to_json_text(wfg));
}

WorkflowGraph load_wfg(const std::filesystem::path& path) {
    return wfg_from_json_text(detail::read_file(path), path.string());
}

} // namespace wkforge
