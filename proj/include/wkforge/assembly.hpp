#pragma once

#include "wkforge/generation.hpp"
#include "wkforge/wkg.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace wkforge {

inline constexpr std::string_view kEntryId = "__input__";
inline constexpr std::string_view kExitId = "__output__";

// Workflow Graph. WKG-tagged tasks are keyed "wkg/<node id>" so equal tags
// merge across DAGs; untagged tasks are keyed "dag<k>/<local id>".
struct WorkflowGraph {
    std::map<std::string, GeneratedTask> nodes; // GeneratedTask::local_id == key
    std::set<DagEdge> edges;
    std::string entry_id; // empty until attach_terminals()
    std::string exit_id;

    bool has_terminals() const { return !entry_id.empty(); }
    bool is_terminal(const std::string& id) const { return has_terminals() && (id == entry_id || id == exit_id); }

    // Adds the edge unless it already exists, is a self-loop, or would close a
    // cycle. Returns true when the edge was added.
    bool add_edge_if_acyclic(const std::string& src, const std::string& dst);
    bool reaches(const std::string& from, const std::string& to) const;
    bool acyclic() const;

    std::vector<std::string> successors(const std::string& id) const;
    std::vector<std::string> predecessors(const std::string& id) const;

    // WKG node ids present in the graph, mapped to their WFG ids.
    std::map<std::string, std::string> wkg_members() const;
};

// dag_index counts from 1, like the dag_<k>.json outputs.
std::string wfg_id_for(const GeneratedTask& task, std::size_t dag_index);

struct EnhanceConfig {
    double alpha_start = 1.0;
    double delta_alpha = 0.05;
    double alpha_floor = 0.0;

    void validate() const;
    // Upper bound on the number of threshold steps: ceil((start - floor) / delta).
    int max_iterations() const;
};

struct EnhanceReport {
    int iterations = 0;
    double final_alpha = 1.0;
    std::vector<std::string> added_nodes;
    std::vector<DagEdge> added_edges;
};

// Union of the DAGs, then every WKG edge (v, x) between tagged nodes of two
// different DAGs. Processing order is DAG index then WFG id; edges that would
// close a cycle are skipped.
WorkflowGraph assemble_wfg(const std::vector<WorkflowDag>& dags, const WorkKnowledgeGraph& graph);

// Connectivity of the undirected view restricted to non-terminal nodes.
bool is_weakly_connected(const WorkflowGraph& wfg);
std::vector<std::set<std::string>> weak_components(const WorkflowGraph& wfg);

// While the WFG is not weakly connected, lowers alpha by delta and adopts every
// WKG node outside the WFG that is WKG-adjacent to an adopted or existing WKG
// member with embedding cosine >= alpha (repeated to a fixpoint at each alpha),
// together with the WKG edges linking it to members. Requires WKG embeddings.
// Throws CannotConnect, listing the components, once alpha drops below the floor.
WorkflowGraph enhance_wfg(WorkflowGraph wfg, const WorkKnowledgeGraph& graph, const EnhanceConfig& cfg,
                          EnhanceReport* report = nullptr);

// Adds the virtual entry/exit nodes: entry -> every source, every sink -> exit.
// Idempotent.
WorkflowGraph attach_terminals(WorkflowGraph wfg);

// Non-terminal nodes that are not on any entry -> exit path.
std::vector<std::string> off_path_nodes(const WorkflowGraph& wfg);

// The workflow file format plus "entry_id" / "exit_id".
std::string wfg_to_json_text(const WorkflowGraph& wfg);
WorkflowGraph wfg_from_json_text(const std::string& content, const std::string& source_name = "<memory>");
void save_wfg(const WorkflowGraph& wfg, const std::filesystem::path& path);
WorkflowGraph load_wfg(const std::filesystem::path& path);

} // namespace wkforge
