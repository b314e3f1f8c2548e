#include "wkforge/wkg.hpp"

#include "json_util.hpp"
#include "wkforge/errors.hpp"
#include "wkforge/text.hpp"

#include <cmath>

namespace wkforge {

using detail::json;

std::string TaskNode::semantic_text() const { return title + "\n" + description + "\n" + industry; }

double edge_weight(long long pair_count, double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0)) {
        throw Error(ErrorCode::InvalidInput, "lambda must lie in (0, 1], got " + std::to_string(lambda));
    }
    if (pair_count < 0) throw Error(ErrorCode::InvalidInput, "pair_count must be non-negative");
    return -std::expm1(-lambda * static_cast<double>(pair_count));
}

WorkKnowledgeGraph::WorkKnowledgeGraph(double lambda) : lambda_(lambda) {
    edge_weight(0, lambda_); // validates lambda
}

const std::string& WorkKnowledgeGraph::upsert_task(TaskNode node) {
    if (node.id.empty()) throw Error(ErrorCode::InvalidInput, "task id must be non-empty");
    if (text::trim(node.title).empty()) throw Error(ErrorCode::InvalidInput, "task '" + node.id + "' has an empty title");
    if (text::trim(node.description).empty()) {
        throw Error(ErrorCode::InvalidInput, "task '" + node.id + "' has an empty description");
    }
    node.embedding.reset();
    auto id = node.id;
    auto [it, inserted] = nodes_.insert_or_assign(std::move(id), std::move(node));
    undirected_[it->first];
    return it->first;
}

const TaskNode& WorkKnowledgeGraph::node(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(ErrorCode::UnknownNode, "no task with id '" + id + "'");
    return it->second;
}

const EdgeStat* WorkKnowledgeGraph::find_edge(const std::string& src, const std::string& dst) const {
    auto it = edges_.find(EdgeKey{src, dst});
    return it == edges_.end() ? nullptr : &it->second;
}

std::vector<std::string> WorkKnowledgeGraph::neighbors(const std::string& id) const {
    auto it = undirected_.find(id);
    if (it == undirected_.end()) return {};
    return {it->second.begin(), it->second.end()};
}

void WorkKnowledgeGraph::drop_adjacency_if_unlinked(const std::string& a, const std::string& b) {
    if (has_edge(a, b) || has_edge(b, a)) return;
    undirected_[a].erase(b);
    undirected_[b].erase(a);
}

void WorkKnowledgeGraph::bump_edge(const std::string& src, const std::string& dst, long long delta) {
    auto it = edges_.find(EdgeKey{src, dst});
    if (it == edges_.end()) {
        if (delta <= 0) return;
        it = edges_.emplace(EdgeKey{src, dst}, EdgeStat{src, dst, 0, 0.0}).first;
        undirected_[src].insert(dst);
        undirected_[dst].insert(src);
    }
    it->second.pair_count = std::max(0LL, it->second.pair_count + delta);
    if (it->second.pair_count == 0 && delta < 0) {
        edges_.erase(it);
        drop_adjacency_if_unlinked(src, dst);
        return;
    }
    it->second.weight = edge_weight(it->second.pair_count, lambda_);
}

void WorkKnowledgeGraph::set_edge(const std::string& src, const std::string& dst, long long pair_count) {
    if (!has_node(src)) throw Error(ErrorCode::UnknownNode, "edge source '" + src + "' is not a task");
    if (!has_node(dst)) throw Error(ErrorCode::UnknownNode, "edge target '" + dst + "' is not a task");
    if (src == dst) throw Error(ErrorCode::InvalidInput, "self-loop on '" + src + "'");
    const double w = edge_weight(pair_count, lambda_);
    edges_.insert_or_assign(EdgeKey{src, dst}, EdgeStat{src, dst, pair_count, w});
    undirected_[src].insert(dst);
    undirected_[dst].insert(src);
}

namespace {

void validate_record(const WorkflowImplementationRecord& rec, const WorkKnowledgeGraph& g) {
    if (rec.task_ids.empty()) throw Error(ErrorCode::InvalidInput, "record '" + rec.workflow_id + "' has no tasks");
    if (rec.cost_compute < 0.0 || rec.cost_time < 0.0 || rec.cost_model < 0.0) {
        throw Error(ErrorCode::InvalidInput, "record '" + rec.workflow_id + "' has a negative cost");
    }
    for (const auto& id : rec.task_ids) {
        if (!g.has_node(id)) {
            throw Error(ErrorCode::UnknownNode, "record '" + rec.workflow_id + "' references unknown task '" + id + "'");
        }
    }
}

} // namespace

std::vector<EdgeStat> WorkKnowledgeGraph::record_workflow_implementation(const WorkflowImplementationRecord& rec) {
    validate_record(rec, *this);
    std::vector<EdgeKey> touched;
    for (std::size_t k = 0; k + 1 < rec.task_ids.size(); ++k) {
        const auto& a = rec.task_ids[k];
        const auto& b = rec.task_ids[k + 1];
        if (a == b) continue;
        bump_edge(a, b, 1);
        touched.emplace_back(a, b);
    }
    history_.push_back(rec);

    std::vector<EdgeStat> out;
    out.reserve(touched.size());
    for (const auto& key : touched) out.push_back(edges_.at(key));
    return out;
}

std::size_t WorkKnowledgeGraph::remove_workflow_implementation(const std::string& workflow_id) {
    std::size_t removed = 0;
    std::vector<WorkflowImplementationRecord> kept;
    kept.reserve(history_.size());
    for (auto& rec : history_) {
        if (rec.workflow_id != workflow_id) {
            kept.push_back(std::move(rec));
            continue;
        }
        ++removed;
        for (std::size_t k = 0; k + 1 < rec.task_ids.size(); ++k) {
            if (rec.task_ids[k] != rec.task_ids[k + 1]) bump_edge(rec.task_ids[k], rec.task_ids[k + 1], -1);
        }
    }
    history_ = std::move(kept);
    return removed;
}

void WorkKnowledgeGraph::import_history_record(WorkflowImplementationRecord rec) {
    validate_record(rec, *this);
    history_.push_back(std::move(rec));
}

std::optional<CostStats> WorkKnowledgeGraph::cost_stats(const std::string& task_id) const {
    CostStats s;
    for (const auto& rec : history_) {
        for (const auto& id : rec.task_ids) {
            if (id != task_id) continue;
            s.compute += rec.cost_compute;
            s.time += rec.cost_time;
            s.model += rec.cost_model;
            ++s.samples;
        }
    }
    if (s.samples == 0) return std::nullopt;
    const auto n = static_cast<double>(s.samples);
    s.compute /= n;
    s.time /= n;
    s.model /= n;
    return s;
}

void WorkKnowledgeGraph::compute_embeddings(Embedder& embedder) {
    for (auto& [id, node] : nodes_) {
        if (!node.embedding || node.embedding->dim() != embedder.dimension()) {
            node.embedding = embedder.embed(node.semantic_text());
        }
    }
}

bool WorkKnowledgeGraph::embeddings_ready() const {
    for (const auto& [id, node] : nodes_) {
        if (!node.embedding) return false;
    }
    return true;
}

const EmbeddingVector& WorkKnowledgeGraph::embedding(const std::string& id) const {
    const auto& n = node(id);
    if (!n.embedding) throw Error(ErrorCode::InvalidInput, "embedding of task '" + id + "' has not been computed");
    return *n.embedding;
}

long long WorkKnowledgeGraph::total_pair_count() const {
    long long total = 0;
    for (const auto& [key, e] : edges_) total += e.pair_count;
    return total;
}

bool WorkKnowledgeGraph::same_structure(const WorkKnowledgeGraph& other) const {
    if (lambda_ != other.lambda_ || nodes_.size() != other.nodes_.size() || edges_.size() != other.edges_.size() ||
        history_.size() != other.history_.size()) {
        return false;
    }
    for (auto a = nodes_.begin(), b = other.nodes_.begin(); a != nodes_.end(); ++a, ++b) {
        const auto& x = a->second;
        const auto& y = b->second;
        if (x.id != y.id || x.title != y.title || x.description != y.description || x.industry != y.industry ||
            x.implementation_summaries != y.implementation_summaries) {
            return false;
        }
    }
    for (auto a = edges_.begin(), b = other.edges_.begin(); a != edges_.end(); ++a, ++b) {
        if (a->first != b->first || a->second.pair_count != b->second.pair_count ||
            a->second.weight != b->second.weight) {
            return false;
        }
    }
    for (std::size_t i = 0; i < history_.size(); ++i) {
        const auto& x = history_[i];
        const auto& y = other.history_[i];
        if (x.workflow_id != y.workflow_id || x.task_ids != y.task_ids || x.cost_compute != y.cost_compute ||
            x.cost_time != y.cost_time || x.cost_model != y.cost_model || x.success != y.success) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// file format

namespace {

json record_to_json(const WorkflowImplementationRecord& rec) {
    return json{{"workflow_id", rec.workflow_id}, {"task_ids", rec.task_ids}, {"cost_compute", rec.cost_compute},
                {"cost_time", rec.cost_time},     {"cost_model", rec.cost_model}, {"success", rec.success}};
}

WorkflowImplementationRecord record_from_json(const json& j, const std::string& source, const std::string& ptr) {
    WorkflowImplementationRecord rec;
    rec.workflow_id = detail::require_string(j, "workflow_id", source, ptr);
    const auto& ids = detail::require_array(j, "task_ids", source, ptr);
    if (ids.empty()) detail::field_error(source, ptr + "/task_ids", "must list at least one task");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!ids[i].is_string()) detail::field_error(source, ptr + "/task_ids/" + std::to_string(i), "expected a string");
        rec.task_ids.push_back(ids[i].get<std::string>());
    }
    auto cost = [&](const char* key) {
        if (!j.contains(key)) return 0.0;
        const double v = detail::require_number(j, key, source, ptr);
        if (v < 0.0) detail::field_error(source, ptr + "/" + key, "must be non-negative");
        return v;
    };
    rec.cost_compute = cost("cost_compute");
    rec.cost_time = cost("cost_time");
    rec.cost_model = cost("cost_model");
    if (j.contains("success")) {
        if (!j["success"].is_boolean()) detail::field_error(source, ptr + "/success", "expected a boolean");
        rec.success = j["success"].get<bool>();
    }
    return rec;
}

} // namespace

std::string graph_to_json_text(const WorkKnowledgeGraph& graph) {
    json tasks = json::array();
    for (const auto& [id, n] : graph.nodes()) {
        tasks.push_back(json{{"id", n.id},
                             {"title", n.title},
                             {"description", n.description},
                             {"industry", n.industry},
                             {"implementation_summaries", n.implementation_summaries}});
    }
    json edges = json::array();
    for (const auto& [key, e] : graph.edges()) {
        edges.push_back(json{{"src", e.src}, {"dst", e.dst}, {"pair_count", e.pair_count}});
    }
    json history = json::array();
    for (const auto& rec : graph.history()) history.push_back(record_to_json(rec));

    json doc;
    doc["lambda"] = graph.lambda();
    doc["tasks"] = std::move(tasks);
    doc["edges"] = std::move(edges);
    doc["history"] = std::move(history);
    return doc.dump(2) + "\n";
}

WorkKnowledgeGraph graph_from_json_text(const std::string& content, const std::string& source) {
    const json doc = detail::parse_document(content, source);
    detail::require_object(doc, source, "");

    const double lambda = detail::require_number(doc, "lambda", source, "");
    if (!(lambda > 0.0 && lambda <= 1.0)) detail::field_error(source, "/lambda", "must lie in (0, 1]");
    WorkKnowledgeGraph g(lambda);

    const auto& tasks = detail::require_array(doc, "tasks", source, "");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const std::string ptr = "/tasks/" + std::to_string(i);
        TaskNode n;
        n.id = detail::require_string(tasks[i], "id", source, ptr, true);
        n.title = detail::require_string(tasks[i], "title", source, ptr, true);
        n.description = detail::require_string(tasks[i], "description", source, ptr, true);
        n.industry = detail::optional_string(tasks[i], "industry", source, ptr);
        if (tasks[i].contains("implementation_summaries")) {
            const auto& sums = detail::require_array(tasks[i], "implementation_summaries", source, ptr);
            for (std::size_t k = 0; k < sums.size(); ++k) {
                if (!sums[k].is_string()) {
                    detail::field_error(source, ptr + "/implementation_summaries/" + std::to_string(k), "expected a string");
                }
                n.implementation_summaries.push_back(sums[k].get<std::string>());
            }
        }
        if (g.has_node(n.id)) detail::field_error(source, ptr + "/id", "duplicate task id '" + n.id + "'");
        g.upsert_task(std::move(n));
    }

    const auto& edges = detail::require_array(doc, "edges", source, "");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string ptr = "/edges/" + std::to_string(i);
        const auto src = detail::require_string(edges[i], "src", source, ptr);
        const auto dst = detail::require_string(edges[i], "dst", source, ptr);
        const auto& count = detail::require(edges[i], "pair_count", source, ptr);
        if (!count.is_number_integer() || count.get<long long>() < 0) {
            detail::field_error(source, ptr + "/pair_count", "expected a non-negative integer");
        }
        if (!g.has_node(src)) detail::field_error(source, ptr + "/src", "unknown task '" + src + "'");
        if (!g.has_node(dst)) detail::field_error(source, ptr + "/dst", "unknown task '" + dst + "'");
        if (src == dst) detail::field_error(source, ptr, "self-loop on '" + src + "'");
        if (g.has_edge(src, dst)) detail::field_error(source, ptr, "duplicate edge " + src + " -> " + dst);
        g.set_edge(src, dst, count.get<long long>());
    }

    if (doc.contains("history")) {
        const auto& history = detail::require_array(doc, "history", source, "");
        for (std::size_t i = 0; i < history.size(); ++i) {
            const std::string ptr = "/history/" + std::to_string(i);
            auto rec = record_from_json(history[i], source, ptr);
            for (std::size_t k = 0; k < rec.task_ids.size(); ++k) {
                if (!g.has_node(rec.task_ids[k])) {
                    detail::field_error(source, ptr + "/task_ids/" + std::to_string(k),
                                        "unknown task '" + rec.task_ids[k] + "'");
                }
            }
            g.import_history_record(std::move(rec));
        }
    }
    return g;
}

std::vector<WorkflowImplementationRecord> records_from_json_text(const std::string& content,
                                                                 const std::string& source) {
    const json doc = detail::parse_document(content, source);
    const json* arr = &doc;
    if (doc.is_object() && doc.contains("records")) arr = &doc["records"];
    if (!arr->is_array()) detail::field_error(source, "", "expected an array of workflow implementation records");
    std::vector<WorkflowImplementationRecord> out;
    for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(record_from_json((*arr)[i], source, "/" + std::to_string(i)));
    return out;
}

void save_graph(const WorkKnowledgeGraph& graph, const std::filesystem::path& path) {
    detail::write_file(path, graph_to_json_text(graph));
}

WorkKnowledgeGraph load_graph(const std::filesystem::path& path) {
    return graph_from_json_text(detail::read_file(path), path.string());
}

} // namespace wkforge
