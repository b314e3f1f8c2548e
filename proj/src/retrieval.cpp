#include "wkforge/retrieval.hpp"

#include "wkforge/errors.hpp"
#include "wkforge/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <tuple>

namespace wkforge {

namespace {

constexpr double kSimilarityTolerance = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
        return true;
    }

private:
    std::vector<std::size_t> parent_;
};

std::vector<NodeSet> group_components(const std::vector<std::string>& ids, UnionFind& uf) {
    std::map<std::size_t, NodeSet> groups;
    for (std::size_t i = 0; i < ids.size(); ++i) groups[uf.find(i)].insert(ids[i]);
    std::vector<NodeSet> out;
    for (auto& [root, set] : groups) out.push_back(std::move(set));
    std::sort(out.begin(), out.end(), [](const NodeSet& a, const NodeSet& b) { return *a.begin() < *b.begin(); });
    return out;
}

struct Label {
    double dist = kInf;
    std::vector<std::string> path; // from the source, inclusive
};

bool better(double dist, const std::vector<std::string>& path, const Label& current) {
    if (dist != current.dist) return dist < current.dist;
    return path < current.path;
}

// Single-source shortest paths over the undirected WKG view. Ties are broken
// by the lexicographically smallest node sequence; labels are re-opened when a
// tie improves them so zero-length links cannot freeze a worse label.
std::map<std::string, Label> shortest_paths(const WorkKnowledgeGraph& graph, const std::string& source) {
    std::map<std::string, Label> labels;
    labels[source] = Label{0.0, {source}};
    using Entry = std::tuple<double, std::string>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        const Label& lu = labels[u];
        if (d != lu.dist) continue;
        const auto path_u = lu.path;
        for (const auto& w : graph.neighbors(u)) {
            if (std::find(path_u.begin(), path_u.end(), w) != path_u.end()) continue;
            const double nd = d + link_length(graph, u, w);
            auto candidate = path_u;
            candidate.push_back(w);
            auto& lw = labels[w];
            if (better(nd, candidate, lw)) {
                lw.dist = nd;
                lw.path = std::move(candidate);
                heap.emplace(nd, w);
            }
        }
    }
    return labels;
}

using Link = std::pair<std::string, std::string>; // a < b

Link make_link(const std::string& a, const std::string& b) { return a < b ? Link{a, b} : Link{b, a}; }

// Kruskal over the given links; ties broken by (length, a, b).
std::set<Link> minimum_spanning_forest(const WorkKnowledgeGraph& graph, const NodeSet& nodes,
                                       const std::set<Link>& links) {
    std::vector<std::tuple<double, std::string, std::string>> sorted;
    sorted.reserve(links.size());
    for (const auto& [a, b] : links) sorted.emplace_back(link_length(graph, a, b), a, b);
    std::sort(sorted.begin(), sorted.end());

    std::vector<std::string> ids(nodes.begin(), nodes.end());
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
    UnionFind uf(ids.size());
    std::set<Link> out;
    for (const auto& [len, a, b] : sorted) {
        if (uf.unite(index.at(a), index.at(b))) out.insert(Link{a, b});
    }
    return out;
}

} // namespace

void RoutingConfig::validate() const {
    if (knn_k < 1) throw Error(ErrorCode::InvalidInput, "knn_k must be >= 1");
    if (!(similarity_threshold >= -1.0 - 1e-12) || std::isnan(similarity_threshold)) {
        throw Error(ErrorCode::InvalidInput, "similarity threshold must be >= -1");
    }
}

NodeSet route(const EncodedIntention& enc, const WorkKnowledgeGraph& graph, const RoutingConfig& cfg) {
    cfg.validate();
    if (graph.nodes().empty()) throw Error(ErrorCode::InvalidInput, "cannot route over an empty graph");
    NodeSet v;
    for (const auto& [id, node] : graph.nodes()) {
        if (cosine(graph.embedding(id), enc.gamma) >= cfg.similarity_threshold - kSimilarityTolerance) v.insert(id);
    }
    return v;
}

std::vector<NodeSet> split_neighborhoods(const NodeSet& v, const WorkKnowledgeGraph& graph, const RoutingConfig& cfg) {
    cfg.validate();
    if (v.empty()) throw Error(ErrorCode::InvalidInput, "cannot split an empty node set");
    const std::vector<std::string> ids(v.begin(), v.end());
    const std::size_t n = ids.size();

    std::vector<std::vector<double>> sim(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            sim[i][j] = sim[j][i] = cosine(graph.embedding(ids[i]), graph.embedding(ids[j]));
        }
    }

    std::vector<std::vector<bool>> knn(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> others;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) others.push_back(sim[i][j]);
        }
        if (others.empty()) continue;
        std::sort(others.begin(), others.end(), std::greater<>());
        const double kth = others[std::min<std::size_t>(static_cast<std::size_t>(cfg.knn_k), others.size()) - 1];
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && sim[i][j] >= kth - kSimilarityTolerance) knn[i][j] = true;
        }
    }

    UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool linked = cfg.mutual_knn ? (knn[i][j] && knn[j][i]) : (knn[i][j] || knn[j][i]);
            if (linked) uf.unite(i, j);
        }
    }
    return group_components(ids, uf);
}

double link_length(const WorkKnowledgeGraph& graph, const std::string& a, const std::string& b) {
    const EdgeStat* ab = graph.find_edge(a, b);
    const EdgeStat* ba = graph.find_edge(b, a);
    if (!ab && !ba) throw Error(ErrorCode::InvalidInput, "no WKG link between '" + a + "' and '" + b + "'");
    double w = 0.0;
    if (ab) w = std::max(w, ab->weight);
    if (ba) w = std::max(w, ba->weight);
    return 1.0 - w;
}

std::vector<NodeSet> weak_components(const WorkKnowledgeGraph& graph) {
    std::vector<std::string> ids;
    std::map<std::string, std::size_t> index;
    for (const auto& [id, node] : graph.nodes()) {
        index[id] = ids.size();
        ids.push_back(id);
    }
    UnionFind uf(ids.size());
    for (const auto& [key, e] : graph.edges()) uf.unite(index.at(e.src), index.at(e.dst));
    return group_components(ids, uf);
}

SubWKG extract_swkg(const NodeSet& terminals, const WorkKnowledgeGraph& graph) {
    if (terminals.empty()) throw Error(ErrorCode::InvalidInput, "Steiner extraction needs at least one terminal");
    for (const auto& t : terminals) {
        if (!graph.has_node(t)) throw Error(ErrorCode::UnknownNode, "terminal '" + t + "' is not in the graph");
    }
    SubWKG out;
    out.terminals = terminals;
    if (terminals.size() == 1) {
        out.node_ids = terminals;
        return out;
    }

    // metric closure over the terminals
    std::map<std::string, std::map<std::string, Label>> from;
    for (const auto& t : terminals) from.emplace(t, shortest_paths(graph, t));

    std::vector<std::tuple<double, std::string, std::string>> closure;
    for (auto a = terminals.begin(); a != terminals.end(); ++a) {
        for (auto b = std::next(a); b != terminals.end(); ++b) {
            const auto& labels = from.at(*a);
            auto it = labels.find(*b);
            if (it == labels.end() || it->second.dist == kInf) {
                throw Error(ErrorCode::DisconnectedTerminals,
                            "terminals '" + *a + "' and '" + *b + "' lie in different WKG components");
            }
            closure.emplace_back(it->second.dist, *a, *b);
        }
    }
    std::sort(closure.begin(), closure.end());

    std::vector<std::string> tids(terminals.begin(), terminals.end());
    std::map<std::string, std::size_t> tindex;
    for (std::size_t i = 0; i < tids.size(); ++i) tindex[tids[i]] = i;
    UnionFind uf(tids.size());

    // expand the closure MST into WKG paths
    NodeSet nodes;
    for (const auto& [d, a, b] : closure) {
        if (!uf.unite(tindex.at(a), tindex.at(b))) continue;
        const auto& path = from.at(a).at(b).path;
        nodes.insert(path.begin(), path.end());
    }

    std::set<Link> induced;
    for (const auto& u : nodes) {
        for (const auto& w : graph.neighbors(u)) {
            if (u < w && nodes.contains(w)) induced.insert(Link{u, w});
        }
    }
    std::set<Link> tree = minimum_spanning_forest(graph, nodes, induced);

    // prune non-terminal leaves
    bool pruned = true;
    while (pruned) {
        pruned = false;
        std::map<std::string, int> degree;
        for (const auto& [a, b] : tree) {
            ++degree[a];
            ++degree[b];
        }
        for (auto it = nodes.begin(); it != nodes.end();) {
            if (!terminals.contains(*it) && degree[*it] <= 1) {
                const std::string leaf = *it;
                it = nodes.erase(it);
                std::erase_if(tree, [&](const Link& l) { return l.first == leaf || l.second == leaf; });
                pruned = true;
            } else {
                ++it;
            }
        }
    }

    out.node_ids = std::move(nodes);
    for (const auto& [a, b] : tree) {
        const EdgeStat* ab = graph.find_edge(a, b);
        const EdgeStat* ba = graph.find_edge(b, a);
        if (ab && (!ba || ab->weight >= ba->weight)) {
            out.edge_list.emplace_back(a, b);
        } else {
            out.edge_list.emplace_back(b, a);
        }
    }
    std::sort(out.edge_list.begin(), out.edge_list.end());
    return out;
}

std::vector<SubWKG> extract_swkgs(const NodeSet& terminals, const WorkKnowledgeGraph& graph) {
    std::vector<SubWKG> out;
    for (const auto& component : weak_components(graph)) {
        NodeSet part;
        for (const auto& t : terminals) {
            if (component.contains(t)) part.insert(t);
        }
        if (!part.empty()) out.push_back(extract_swkg(part, graph));
    }
    return out;
}

double swkg_cost(const SubWKG& swkg, const WorkKnowledgeGraph& graph) {
    std::set<Link> links;
    for (const auto& [a, b] : swkg.edge_list) links.insert(make_link(a, b));
    double total = 0.0;
    for (const auto& [a, b] : links) total += link_length(graph, a, b);
    return total;
}

std::string textualize_swkg(const SubWKG& swkg, const WorkKnowledgeGraph& graph) {
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& id : swkg.node_ids) adj[id];
    for (const auto& [a, b] : swkg.edge_list) {
        adj[a].insert(b);
        adj[b].insert(a);
    }

    std::string out;
    std::set<std::string> visited;
    for (const auto& [root, unused] : adj) {
        if (visited.contains(root)) continue;
        // explicit stack of (node, depth); children pushed in reverse to pop ascending
        std::vector<std::pair<std::string, int>> stack{{root, 0}};
        while (!stack.empty()) {
            auto [id, depth] = stack.back();
            stack.pop_back();
            if (!visited.insert(id).second) continue;
            const auto& n = graph.node(id);
            out.append(static_cast<std::size_t>(depth) * 2, ' ');
            out += n.id + " | " + text::collapse_whitespace(n.title) + " | " + text::collapse_whitespace(n.description) + "\n";
            const auto& next = adj.at(id);
            for (auto it = next.rbegin(); it != next.rend(); ++it) {
                if (!visited.contains(*it)) stack.emplace_back(*it, depth + 1);
            }
        }
    }
    return out;
}

} // namespace wkforge
