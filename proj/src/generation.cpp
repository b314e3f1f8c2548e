#include "wkforge/generation.hpp"

#include "json_util.hpp"
#include "wkforge/errors.hpp"
#include "wkforge/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <queue>
#include <set>

namespace wkforge {

using detail::json;

std::string build_prompt(const DecodedIntention& dec, std::string_view swkg_text) {
    std::string p;
    p += "You design executable business workflows as ordered sequences of tasks.\n"
         "Produce one workflow that turns the client input into the client output, following the\n"
         "process described below and reusing the tasks of the work knowledge where they fit.\n\n";
    p += "## Intention\n";
    p += "Client input: " + dec.input_description + "\n";
    p += "Client output: " + dec.output_description + "\n";
    p += "Process: " + dec.process_description + "\n\n";
    p += "## Work knowledge (depth-first traversal, one task per line: id | title | description)\n";
    p += std::string(kSwkgBlockBegin) + "\n";
    p += swkg_text;
    if (!swkg_text.empty() && swkg_text.back() != '\n') p += "\n";
    p += std::string(kSwkgBlockEnd) + "\n\n";
    p += "## Output format\n"
         "Write one task per line, in execution order, exactly as:\n"
         "title :: description\n"
         "Do not write anything else.\n";
    return p;
}

namespace {

// Drops "- ", "* " and "12. " / "12) " list markers.
std::string_view strip_list_marker(std::string_view s) {
    if (s.starts_with("- ") || s.starts_with("* ")) return text::trim(s.substr(2));
    std::size_t i = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i > 0 && i + 1 < s.size() && (s[i] == '.' || s[i] == ')') && s[i + 1] == ' ') return text::trim(s.substr(i + 2));
    return s;
}

std::string normalized_title(std::string_view title) { return text::ascii_lower(text::collapse_whitespace(title)); }

} // namespace

std::vector<GeneratedTask> parse_sequence(std::string_view input) {
    std::vector<GeneratedTask> tasks;
    for (const auto& raw : text::split_lines(input)) {
        const auto line = text::trim(raw);
        if (line.empty()) continue;
        const auto sep = line.find("::");
        if (sep == std::string_view::npos) continue;
        const auto title = text::collapse_whitespace(strip_list_marker(text::trim(line.substr(0, sep))));
        if (title.empty()) continue;
        GeneratedTask t;
        t.local_id = "t" + std::to_string(tasks.size() + 1);
        t.title = title;
        t.description = text::collapse_whitespace(line.substr(sep + 2));
        tasks.push_back(std::move(t));
    }
    return tasks;
}

void tag_tasks(std::vector<GeneratedTask>& tasks, const WorkKnowledgeGraph& graph, Embedder& embedder,
               const SubWKG* swkg, double similarity) {
    std::map<std::string, std::vector<std::string>> by_title;
    for (const auto& [id, node] : graph.nodes()) by_title[normalized_title(node.title)].push_back(id);

    for (auto& task : tasks) {
        task.wkg_node_id.reset();
        if (auto it = by_title.find(normalized_title(task.title)); it != by_title.end()) {
            const auto& ids = it->second; // ascending
            auto in_swkg = std::find_if(ids.begin(), ids.end(),
                                        [&](const std::string& id) { return swkg && swkg->node_ids.contains(id); });
            task.wkg_node_id = in_swkg != ids.end() ? *in_swkg : ids.front();
            continue;
        }
        if (graph.nodes().empty()) continue;
        const auto v = embedder.embed(task.title + "\n" + task.description);
        double best = -2.0;
        std::string best_id;
        for (const auto& [id, node] : graph.nodes()) {
            const double c = cosine(v, graph.embedding(id));
            if (c > best) {
                best = c;
                best_id = id;
            }
        }
        if (best >= similarity) task.wkg_node_id = best_id;
    }
}

TaskSequence generate_sequence(const std::string& prompt, Generator& generator, const WorkKnowledgeGraph& graph,
                               Embedder& embedder, std::string source_swkg, const SubWKG* swkg) {
    const std::string reply = generator.complete(prompt);
    if (text::trim(reply).empty()) throw Error(ErrorCode::MalformedResponse, "generation backend returned nothing");
    TaskSequence seq;
    seq.tasks = parse_sequence(reply);
    if (seq.tasks.empty()) throw Error(ErrorCode::MalformedResponse, "no 'title :: description' line in the response");
    seq.source_swkg = std::move(source_swkg);
    tag_tasks(seq.tasks, graph, embedder, swkg);
    return seq;
}

SequencePartition partition_by_swkg(const TaskSequence& seq, const SubWKG& swkg) {
    SequencePartition p;
    for (std::size_t i = 0; i < seq.tasks.size(); ++i) {
        const auto& tag = seq.tasks[i].wkg_node_id;
        if (tag && swkg.node_ids.contains(*tag)) {
            p.in_swkg.push_back(i);
        } else {
            p.outside_swkg.push_back(i);
        }
    }
    return p;
}

std::vector<DagEdge> ChainAnalyzer::analyze(const TaskSequence& seq) {
    std::vector<DagEdge> edges;
    for (std::size_t i = 0; i + 1 < seq.tasks.size(); ++i) {
        edges.emplace_back(seq.tasks[i].local_id, seq.tasks[i + 1].local_id);
    }
    return edges;
}

std::vector<DagEdge> ParallelGroupsAnalyzer::analyze(const TaskSequence& seq) {
    std::size_t total = 0;
    for (auto s : group_sizes_) total += s;
    if (total != seq.tasks.size() || std::find(group_sizes_.begin(), group_sizes_.end(), 0u) != group_sizes_.end()) {
        throw Error(ErrorCode::InvalidAnalyzerOutput, "group sizes do not partition the sequence");
    }
    std::vector<DagEdge> edges;
    std::size_t start = 0;
    for (std::size_t g = 0; g + 1 < group_sizes_.size(); ++g) {
        const std::size_t next = start + group_sizes_[g];
        for (std::size_t i = start; i < next; ++i) {
            for (std::size_t j = next; j < next + group_sizes_[g + 1]; ++j) {
                edges.emplace_back(seq.tasks[i].local_id, seq.tasks[j].local_id);
            }
        }
        start = next;
    }
    return edges;
}

bool is_acyclic(const std::vector<std::string>& ids, const std::vector<DagEdge>& edges) {
    std::map<std::string, int> indegree;
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& id : ids) indegree[id] = 0;
    for (const auto& [a, b] : edges) {
        if (!indegree.contains(a) || !indegree.contains(b)) return false;
        ++indegree[b];
        out[a].push_back(b);
    }
    std::queue<std::string> ready;
    for (const auto& [id, d] : indegree) {
        if (d == 0) ready.push(id);
    }
    std::size_t seen = 0;
    while (!ready.empty()) {
        const auto u = ready.front();
        ready.pop();
        ++seen;
        for (const auto& v : out[u]) {
            if (--indegree[v] == 0) ready.push(v);
        }
    }
    return seen == indegree.size();
}

WorkflowDag sequence_to_dag(const TaskSequence& seq, DependencyAnalyzer* analyzer) {
    if (seq.tasks.empty()) throw Error(ErrorCode::InvalidInput, "cannot build a workflow from an empty sequence");
    std::vector<std::string> ids;
    std::set<std::string> unique;
    for (const auto& t : seq.tasks) {
        if (t.title.empty()) throw Error(ErrorCode::InvalidInput, "task '" + t.local_id + "' has an empty title");
        if (!unique.insert(t.local_id).second) {
            throw Error(ErrorCode::InvalidInput, "duplicate local id '" + t.local_id + "'");
        }
        ids.push_back(t.local_id);
    }

    ChainAnalyzer chain;
    DependencyAnalyzer& a = analyzer ? *analyzer : chain;
    auto edges = a.analyze(seq);

    std::set<DagEdge> dedup;
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [src, dst] : edges) {
        if (!unique.contains(src) || !unique.contains(dst)) {
            throw Error(ErrorCode::InvalidAnalyzerOutput, "edge " + src + " -> " + dst + " names an unknown task");
        }
        if (src == dst) throw Error(ErrorCode::InvalidAnalyzerOutput, "self-loop on " + src);
        if (dedup.insert({src, dst}).second) out[src].push_back(dst);
    }
    std::vector<DagEdge> unique_edges(dedup.begin(), dedup.end());
    if (!is_acyclic(ids, unique_edges)) throw Error(ErrorCode::InvalidAnalyzerOutput, "dependency edges contain a cycle");

    std::set<std::string> reached{ids.front()};
    std::vector<std::string> stack{ids.front()};
    while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        for (const auto& v : out[u]) {
            if (reached.insert(v).second) stack.push_back(v);
        }
    }
    if (reached.size() != ids.size()) {
        throw Error(ErrorCode::InvalidAnalyzerOutput, "some tasks are unreachable from the first task");
    }

    // keep analyzer order for readability, minus duplicates
    std::vector<DagEdge> ordered;
    std::set<DagEdge> emitted;
    for (const auto& e : edges) {
        if (emitted.insert(e).second) ordered.push_back(e);
    }
    return WorkflowDag{seq.tasks, std::move(ordered)};
}

// ---------------------------------------------------------------------------
// workflow file

std::string workflow_to_json_text(const WorkflowDag& dag) {
    json tasks = json::array();
    for (const auto& t : dag.nodes) {
        json j{{"id", t.local_id}, {"title", t.title}, {"description", t.description}, {"instructions", t.instructions}};
        if (t.wkg_node_id) j["wkg_node_id"] = *t.wkg_node_id;
        tasks.push_back(std::move(j));
    }
    json edges = json::array();
    for (const auto& [a, b] : dag.edges) edges.push_back(json::array({a, b}));
    json doc;
    doc["tasks"] = std::move(tasks);
    doc["edges"] = std::move(edges);
    return doc.dump(2) + "\n";
}

WorkflowDag workflow_from_json_text(const std::string& content, const std::string& source) {
    const json doc = detail::parse_document(content, source);
    detail::require_object(doc, source, "");
    WorkflowDag dag;
    std::set<std::string> ids;
    const auto& tasks = detail::require_array(doc, "tasks", source, "");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const std::string ptr = "/tasks/" + std::to_string(i);
        GeneratedTask t;
        t.local_id = detail::require_string(tasks[i], "id", source, ptr, true);
        t.title = detail::require_string(tasks[i], "title", source, ptr, true);
        t.description = detail::optional_string(tasks[i], "description", source, ptr);
        if (tasks[i].contains("instructions")) {
            const auto& ins = detail::require_array(tasks[i], "instructions", source, ptr);
            for (std::size_t k = 0; k < ins.size(); ++k) {
                if (!ins[k].is_string()) detail::field_error(source, ptr + "/instructions/" + std::to_string(k), "expected a string");
                t.instructions.push_back(ins[k].get<std::string>());
            }
        }
        if (auto tag = detail::optional_string(tasks[i], "wkg_node_id", source, ptr); !tag.empty()) t.wkg_node_id = tag;
        if (!ids.insert(t.local_id).second) detail::field_error(source, ptr + "/id", "duplicate id '" + t.local_id + "'");
        dag.nodes.push_back(std::move(t));
    }
    if (dag.nodes.empty()) detail::field_error(source, "/tasks", "must contain at least one task");
    if (doc.contains("edges")) {
        const auto& edges = detail::require_array(doc, "edges", source, "");
        for (std::size_t i = 0; i < edges.size(); ++i) {
            const std::string ptr = "/edges/" + std::to_string(i);
            const auto& e = edges[i];
            if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
                detail::field_error(source, ptr, "expected [src, dst]");
            }
            const auto a = e[0].get<std::string>();
            const auto b = e[1].get<std::string>();
            if (!ids.contains(a)) detail::field_error(source, ptr + "/0", "unknown task '" + a + "'");
            if (!ids.contains(b)) detail::field_error(source, ptr + "/1", "unknown task '" + b + "'");
            dag.edges.emplace_back(a, b);
        }
    }
    std::vector<std::string> order;
    for (const auto& t : dag.nodes) order.push_back(t.local_id);
    if (!is_acyclic(order, dag.edges)) detail::field_error(source, "/edges", "edges contain a cycle");
    return dag;
}

void save_workflow(const WorkflowDag& dag, const std::filesystem::path& path) {
    detail::write_file(path, workflow_to_json_text(dag));
}

WorkflowDag load_workflow(const std::filesystem::path& path) {
    return workflow_from_json_text(detail::read_file(path), path.string());
}

std::vector<GeneratedTask> linearize(const WorkflowDag& dag) {
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < dag.nodes.size(); ++i) position[dag.nodes[i].local_id] = i;
    std::vector<int> indegree(dag.nodes.size(), 0);
    std::vector<std::vector<std::size_t>> out(dag.nodes.size());
    for (const auto& [a, b] : dag.edges) {
        out[position.at(a)].push_back(position.at(b));
        ++indegree[position.at(b)];
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
        if (indegree[i] == 0) ready.push(i);
    }
    std::vector<GeneratedTask> order;
    while (!ready.empty()) {
        const auto u = ready.top();
        ready.pop();
        order.push_back(dag.nodes[u]);
        for (auto v : out[u]) {
            if (--indegree[v] == 0) ready.push(v);
        }
    }
    if (order.size() != dag.nodes.size()) throw Error(ErrorCode::InvalidInput, "workflow contains a cycle");
    return order;
}

} // namespace wkforge
