#pragma once

#include "wkforge/providers.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace wkforge {

inline constexpr double kDefaultLambda = 0.5;

struct TaskNode {
    std::string id;
    std::string title;
    std::string description;
    std::string industry;
    std::vector<std::string> implementation_summaries;
    // Lazily computed from semantic_text(); reset whenever the node is replaced.
    std::optional<EmbeddingVector> embedding;

    // "title\ndescription\nindustry", the text used for the node embedding.
    std::string semantic_text() const;
};

struct EdgeStat {
    std::string src;
    std::string dst;
    long long pair_count = 0;
    double weight = 0.0; // always edge_weight(pair_count, lambda)
};

struct WorkflowImplementationRecord {
    std::string workflow_id;
    std::vector<std::string> task_ids;
    double cost_compute = 0.0;
    double cost_time = 0.0;  // seconds
    double cost_model = 0.0; // currency units
    bool success = true;
};

// Mean historical costs of one task over every appearance in the retained history.
struct CostStats {
    double compute = 0.0;
    double time = 0.0;
    double model = 0.0;
    std::size_t samples = 0;
};

// gamma = 1 - exp(-lambda * pair_count). Throws InvalidInput when lambda is
// outside (0, 1] or pair_count is negative.
double edge_weight(long long pair_count, double lambda);

using EdgeKey = std::pair<std::string, std::string>;

// Directed Work Knowledge Graph. Nodes and edges are kept in id order so every
// traversal is deterministic. Mutations need exclusive access; const queries
// may run concurrently between mutations.
class WorkKnowledgeGraph {
public:
    explicit WorkKnowledgeGraph(double lambda = kDefaultLambda);

    double lambda() const noexcept { return lambda_; }

    // Inserts or replaces a node by id. Throws InvalidInput on an empty id,
    // title or description.
    const std::string& upsert_task(TaskNode node);

    // Adds an edge with an explicit pair count (used when loading curated graphs).
    // Throws UnknownNode for a missing endpoint and InvalidInput for self-loops
    // or negative counts.
    void set_edge(const std::string& src, const std::string& dst, long long pair_count);

    // Increments the pair count of every consecutive (k, k+1) pair and keeps the
    // record for cost statistics. Consecutive repeats of one task are skipped.
    // Returns the touched edges after the update.
    std::vector<EdgeStat> record_workflow_implementation(const WorkflowImplementationRecord& rec);

    // Removes every retained record with this workflow id and decrements the pair
    // counts it contributed; edges left at zero are dropped. Returns the number
    // of records removed.
    std::size_t remove_workflow_implementation(const std::string& workflow_id);

    // Retains a record for cost statistics without touching edges. Used when
    // loading a file whose edges already account for the record.
    void import_history_record(WorkflowImplementationRecord rec);

    bool has_node(const std::string& id) const { return nodes_.contains(id); }
    const TaskNode& node(const std::string& id) const;
    const std::map<std::string, TaskNode>& nodes() const noexcept { return nodes_; }
    const std::map<EdgeKey, EdgeStat>& edges() const noexcept { return edges_; }
    const std::vector<WorkflowImplementationRecord>& history() const noexcept { return history_; }

    const EdgeStat* find_edge(const std::string& src, const std::string& dst) const;
    bool has_edge(const std::string& src, const std::string& dst) const { return find_edge(src, dst) != nullptr; }

    // Undirected adjacency in ascending id order.
    std::vector<std::string> neighbors(const std::string& id) const;

    std::optional<CostStats> cost_stats(const std::string& task_id) const;

    // Computes and caches embeddings for nodes that lack one.
    void compute_embeddings(Embedder& embedder);
    bool embeddings_ready() const;
    // Throws InvalidInput when the node has no cached embedding.
    const EmbeddingVector& embedding(const std::string& id) const;

    long long total_pair_count() const;

    // Structural equality: lambda, nodes (ignoring cached embeddings), edges, history.
    bool same_structure(const WorkKnowledgeGraph& other) const;

private:
    void bump_edge(const std::string& src, const std::string& dst, long long delta);
    void drop_adjacency_if_unlinked(const std::string& a, const std::string& b);

    double lambda_;
    std::map<std::string, TaskNode> nodes_;
    std::map<EdgeKey, EdgeStat> edges_;
    std::map<std::string, std::set<std::string>> undirected_;
    std::vector<WorkflowImplementationRecord> history_;
};

// WKG file: UTF-8 JSON with `lambda`, `tasks`, `edges` ({src, dst, pair_count})
// and `history`. Weights are derived on load and never written.
void save_graph(const WorkKnowledgeGraph& graph, const std::filesystem::path& path);
WorkKnowledgeGraph load_graph(const std::filesystem::path& path);

std::string graph_to_json_text(const WorkKnowledgeGraph& graph);
// Throws ParseError with line or field context.
WorkKnowledgeGraph graph_from_json_text(const std::string& content, const std::string& source_name = "<memory>");

// Parses a JSON array of WorkflowImplementationRecord objects.
std::vector<WorkflowImplementationRecord> records_from_json_text(const std::string& content,
                                                                 const std::string& source_name = "<memory>");

} // namespace wkforge
