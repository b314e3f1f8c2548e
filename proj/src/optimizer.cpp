#include "wkforge/optimizer.hpp"

#include "json_util.hpp"
#include "wkforge/errors.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

namespace wkforge {

using detail::json;

void CostWeights::validate() const {
    if (!(w_compute >= 0.0 && w_time >= 0.0 && w_model >= 0.0)) {
        throw Error(ErrorCode::InvalidInput, "cost weights must be non-negative");
    }
}

void CostDefaults::validate() const {
    if (!(compute >= 0.0 && time >= 0.0 && model >= 0.0)) {
        throw Error(ErrorCode::InvalidInput, "default task costs must be non-negative");
    }
}

TaskCost combine(double compute, double time, double model, const CostWeights& weights) {
    if (!(compute >= 0.0 && time >= 0.0 && model >= 0.0)) {
        throw Error(ErrorCode::InvalidInput, "task costs must be non-negative");
    }
    return TaskCost{compute, time, model, weights.w_compute * compute + weights.w_time * time + weights.w_model * model};
}

TaskCost task_cost(const WorkflowGraph& wfg, const std::string& node_id, const WorkKnowledgeGraph& history,
                   const CostWeights& weights, const CostDefaults& defaults) {
    weights.validate();
    defaults.validate();
    auto it = wfg.nodes.find(node_id);
    if (it == wfg.nodes.end()) throw Error(ErrorCode::UnknownNode, "no WFG node '" + node_id + "'");
    if (wfg.is_terminal(node_id)) return TaskCost{};
    const auto& tag = it->second.wkg_node_id;
    if (tag) {
        if (auto stats = history.cost_stats(*tag)) return combine(stats->compute, stats->time, stats->model, weights);
    }
    return combine(defaults.compute, defaults.time, defaults.model, weights);
}

std::map<std::string, TaskCost> node_costs(const WorkflowGraph& wfg, const WorkKnowledgeGraph& history,
                                           const CostWeights& weights, const CostDefaults& defaults) {
    std::map<std::string, TaskCost> out;
    for (const auto& [id, t] : wfg.nodes) out.emplace(id, task_cost(wfg, id, history, weights, defaults));
    return out;
}

namespace {

double combined_of(const std::map<std::string, TaskCost>& costs, const std::string& id) {
    auto it = costs.find(id);
    if (it == costs.end()) throw Error(ErrorCode::InvalidInput, "no cost for node '" + id + "'");
    if (!(it->second.combined >= 0.0)) throw Error(ErrorCode::InvalidInput, "negative cost for node '" + id + "'");
    return it->second.combined;
}

struct Label {
    double cost = std::numeric_limits<double>::infinity();
    std::vector<std::string> path;
};

} // namespace

PathResult optimal_path(const WorkflowGraph& wfg, const std::map<std::string, TaskCost>& costs) {
    if (!wfg.has_terminals()) throw Error(ErrorCode::InvalidInput, "attach terminals before optimizing");
    if (!wfg.acyclic()) throw Error(ErrorCode::InvalidInput, "workflow graph is not acyclic");

    std::map<std::string, Label> labels;
    labels[wfg.entry_id] = Label{combined_of(costs, wfg.entry_id), {wfg.entry_id}};
    using Entry = std::tuple<double, std::string>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    heap.emplace(labels[wfg.entry_id].cost, wfg.entry_id);

    // Labels are (cost, path) compared lexicographically. A tie that improves a
    // label re-queues the node, so zero-cost tasks cannot lock in a worse path.
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        const Label& lu = labels[u];
        if (d != lu.cost) continue;
        const auto path_u = lu.path;
        for (const auto& v : wfg.successors(u)) {
            const double nd = d + combined_of(costs, v);
            auto candidate = path_u;
            candidate.push_back(v);
            auto& lv = labels[v];
            if (nd < lv.cost || (nd == lv.cost && candidate < lv.path)) {
                lv.cost = nd;
                lv.path = std::move(candidate);
                heap.emplace(nd, v);
            }
        }
    }

    auto it = labels.find(wfg.exit_id);
    if (it == labels.end() || it->second.path.empty()) {
        throw Error(ErrorCode::NoPath, "exit '" + wfg.exit_id + "' is unreachable from entry '" + wfg.entry_id + "'");
    }
    PathResult result;
    result.node_ids = it->second.path;
    result.total_cost = it->second.cost;
    for (const auto& id : result.node_ids) result.per_task.push_back(costs.at(id));
    return result;
}

PathResult optimal_path(const WorkflowGraph& wfg, const WorkKnowledgeGraph& history, const CostWeights& weights,
                        const CostDefaults& defaults) {
    return optimal_path(wfg, node_costs(wfg, history, weights, defaults));
}

double path_cost(const WorkflowGraph& wfg, const std::vector<std::string>& node_ids,
                 const std::map<std::string, TaskCost>& costs) {
    if (!wfg.has_terminals()) throw Error(ErrorCode::InvalidPath, "workflow graph has no terminals");
    if (node_ids.size() < 2 || node_ids.front() != wfg.entry_id || node_ids.back() != wfg.exit_id) {
        throw Error(ErrorCode::InvalidPath, "path must run from '" + wfg.entry_id + "' to '" + wfg.exit_id + "'");
    }
    double total = combined_of(costs, node_ids.front());
    for (std::size_t i = 0; i + 1 < node_ids.size(); ++i) {
        if (!wfg.edges.contains({node_ids[i], node_ids[i + 1]})) {
            throw Error(ErrorCode::InvalidPath, "no edge " + node_ids[i] + " -> " + node_ids[i + 1]);
        }
        total += combined_of(costs, node_ids[i + 1]);
    }
    return total;
}

double path_cost(const WorkflowGraph& wfg, const std::vector<std::string>& node_ids,
                 const WorkKnowledgeGraph& history, const CostWeights& weights, const CostDefaults& defaults) {
    return path_cost(wfg, node_ids, node_costs(wfg, history, weights, defaults));
}

std::string path_to_json_text(const PathResult& path, const WorkflowGraph& wfg) {
    json per_task = json::array();
    for (std::size_t i = 0; i < path.node_ids.size(); ++i) {
        const auto& c = path.per_task.at(i);
        per_task.push_back(json{{"id", path.node_ids[i]},
                                {"c_compute", c.c_compute},
                                {"c_time", c.c_time},
                                {"c_model", c.c_model},
                                {"combined", c.combined}});
    }
    json tasks = json::array();
    json edges = json::array();
    std::string previous;
    for (const auto& id : path.node_ids) {
        if (wfg.is_terminal(id)) continue;
        const auto& t = wfg.nodes.at(id);
        json j{{"id", id}, {"title", t.title}, {"description", t.description}, {"instructions", t.instructions}};
        if (t.wkg_node_id) j["wkg_node_id"] = *t.wkg_node_id;
        tasks.push_back(std::move(j));
        if (!previous.empty()) edges.push_back(json::array({previous, id}));
        previous = id;
    }
    json doc;
    doc["path"] = json{{"node_ids", path.node_ids}, {"total_cost", path.total_cost}, {"per_task", std::move(per_task)}};
    doc["tasks"] = std::move(tasks);
    doc["edges"] = std::move(edges);
    return doc.dump(2) + "\n";
}

} // namespace wkforge
