#pragma once

#include "wkforge/intention.hpp"
#include "wkforge/retrieval.hpp"
#include "wkforge/wkg.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wkforge {

struct GeneratedTask {
    std::string local_id;
    std::string title;
    std::string description;
    std::vector<std::string> instructions;
    std::optional<std::string> wkg_node_id;

    bool operator==(const GeneratedTask&) const = default;
};

struct TaskSequence {
    std::vector<GeneratedTask> tasks;
    std::string source_swkg;
};

using DagEdge = std::pair<std::string, std::string>;

struct WorkflowDag {
    std::vector<GeneratedTask> nodes;
    std::vector<DagEdge> edges;
};

inline constexpr double kWkgMatchSimilarity = 0.95;

// Fixed header, decoded intention block, work-knowledge block (between
// kSwkgBlockBegin / kSwkgBlockEnd) and the "title :: description" output contract.
std::string build_prompt(const DecodedIntention& dec, std::string_view swkg_text);

// One task per non-empty line of the form "title :: description"; other lines
// are skipped. local ids are t1, t2, ... in order.
std::vector<GeneratedTask> parse_sequence(std::string_view text);

// Sets wkg_node_id by exact case-insensitive title match (SWKG members first,
// then smallest id), else by the most similar node embedding with cosine >=
// similarity. Needs graph embeddings only when an exact match is missing.
void tag_tasks(std::vector<GeneratedTask>& tasks, const WorkKnowledgeGraph& graph, Embedder& embedder,
               const SubWKG* swkg = nullptr, double similarity = kWkgMatchSimilarity);

// complete() + parse_sequence() + tag_tasks(). Throws MalformedResponse when
// no task can be parsed.
TaskSequence generate_sequence(const std::string& prompt, Generator& generator, const WorkKnowledgeGraph& graph,
                               Embedder& embedder, std::string source_swkg, const SubWKG* swkg = nullptr);

// Indices of tasks tagged with a node of the SWKG, and of all other tasks.
struct SequencePartition {
    std::vector<std::size_t> in_swkg;
    std::vector<std::size_t> outside_swkg;
};
SequencePartition partition_by_swkg(const TaskSequence& seq, const SubWKG& swkg);

// Produces the dependency edges of a sequence, by local id.
class DependencyAnalyzer {
public:
    virtual ~DependencyAnalyzer() = default;
    virtual std::vector<DagEdge> analyze(const TaskSequence& seq) = 0;
};

// t_i -> t_{i+1}.
class ChainAnalyzer final : public DependencyAnalyzer {
public:
    std::vector<DagEdge> analyze(const TaskSequence& seq) override;
};

// Consecutive groups of mutually independent tasks, given by size in sequence
// order; every task of one group precedes every task of the next.
class ParallelGroupsAnalyzer final : public DependencyAnalyzer {
public:
    explicit ParallelGroupsAnalyzer(std::vector<std::size_t> group_sizes) : group_sizes_(std::move(group_sizes)) {}
    std::vector<DagEdge> analyze(const TaskSequence& seq) override;

private:
    std::vector<std::size_t> group_sizes_;
};

// Uses ChainAnalyzer when `analyzer` is null. Throws InvalidAnalyzerOutput when
// the edges are cyclic, reference unknown tasks, or leave a task unreachable
// from the first one.
WorkflowDag sequence_to_dag(const TaskSequence& seq, DependencyAnalyzer* analyzer = nullptr);

// Kahn's algorithm; false when the edges contain a cycle or unknown endpoints.
bool is_acyclic(const std::vector<std::string>& ids, const std::vector<DagEdge>& edges);

// Workflow file: {"tasks": [{id, title, description, instructions, wkg_node_id?}],
// "edges": [[src, dst], ...]}.
std::string workflow_to_json_text(const WorkflowDag& dag);
WorkflowDag workflow_from_json_text(const std::string& content, const std::string& source_name = "<memory>");
void save_workflow(const WorkflowDag& dag, const std::filesystem::path& path);
WorkflowDag load_workflow(const std::filesystem::path& path);

// Task order used for evaluation: topological, ties broken by file order.
std::vector<GeneratedTask> linearize(const WorkflowDag& dag);

} // namespace wkforge
