#pragma once

#include "wkforge/assembly.hpp"
#include "wkforge/wkg.hpp"

#include <map>
#include <string>
#include <vector>

namespace wkforge {

// Weight factors of the linear cost model (compute, time, model usage).
struct CostWeights {
    double w_compute = 1.0;
    double w_time = 1.0;
    double w_model = 1.0;

    void validate() const;
};

// Costs used for tasks without history.
struct CostDefaults {
    double compute = 1.0;
    double time = 1.0;
    double model = 1.0;

    void validate() const;
};

struct TaskCost {
    double c_compute = 0.0;
    double c_time = 0.0;
    double c_model = 0.0;
    double combined = 0.0;
};

struct PathResult {
    std::vector<std::string> node_ids; // entry ... exit
    double total_cost = 0.0;
    std::vector<TaskCost> per_task;    // parallel to node_ids; terminals cost zero
};

TaskCost combine(double compute, double time, double model, const CostWeights& weights);

// Historical means for WKG-tagged tasks with history, defaults otherwise;
// terminal nodes cost zero.
TaskCost task_cost(const WorkflowGraph& wfg, const std::string& node_id, const WorkKnowledgeGraph& history,
                   const CostWeights& weights, const CostDefaults& defaults);

// Node costs as a lookup table, keyed by WFG id.
std::map<std::string, TaskCost> node_costs(const WorkflowGraph& wfg, const WorkKnowledgeGraph& history,
                                           const CostWeights& weights, const CostDefaults& defaults);

// Minimum-cost entry -> exit path. Each edge u -> v carries the combined cost of
// v, so plain Dijkstra applies; among equal costs the lexicographically
// smallest node-id sequence wins. Throws NoPath when the exit is unreachable.
PathResult optimal_path(const WorkflowGraph& wfg, const std::map<std::string, TaskCost>& costs);
PathResult optimal_path(const WorkflowGraph& wfg, const WorkKnowledgeGraph& history, const CostWeights& weights,
                        const CostDefaults& defaults);

// Sum of combined costs over the non-terminal nodes of a valid entry -> exit
// path. Throws InvalidPath otherwise.
double path_cost(const WorkflowGraph& wfg, const std::vector<std::string>& node_ids,
                 const std::map<std::string, TaskCost>& costs);
double path_cost(const WorkflowGraph& wfg, const std::vector<std::string>& node_ids,
                 const WorkKnowledgeGraph& history, const CostWeights& weights, const CostDefaults& defaults);

// Path file: {"path": {node_ids, total_cost, per_task}, plus "tasks"/"edges" of
// the path's tasks in order, so the file also reads as a workflow file.
std::string path_to_json_text(const PathResult& path, const WorkflowGraph& wfg);

} // namespace wkforge
