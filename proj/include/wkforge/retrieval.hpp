#pragma once

#include "wkforge/intention.hpp"
#include "wkforge/wkg.hpp"

#include <set>
#include <string>
#include <utility>
#include <vector>

namespace wkforge {

struct RoutingConfig {
    double similarity_threshold = 0.3;
    int knn_k = 5;
    bool mutual_knn = true;

    void validate() const;
};

using NodeSet = std::set<std::string>;

// Sub-graph of the WKG spanning one neighborhood.
struct SubWKG {
    NodeSet node_ids;
    std::vector<EdgeKey> edge_list; // directed WKG edges, sorted
    NodeSet terminals;
};

// Nodes whose embedding has cosine >= threshold with gamma.
NodeSet route(const EncodedIntention& enc, const WorkKnowledgeGraph& graph, const RoutingConfig& cfg);

// Connected components of the k-NN graph over the routed nodes' embeddings.
// Neighbors tied with the k-th best similarity are all kept, so identical
// embeddings always end up in one neighborhood. Output is sorted by smallest id.
std::vector<NodeSet> split_neighborhoods(const NodeSet& v, const WorkKnowledgeGraph& graph, const RoutingConfig& cfg);

// Length of an undirected WKG link {a, b}: 1 - max weight over both directions.
double link_length(const WorkKnowledgeGraph& graph, const std::string& a, const std::string& b);

// Steiner tree over the undirected WKG (metric closure, MST of the closure,
// path expansion, MST of the expansion, pruning of non-terminal leaves).
// Throws DisconnectedTerminals when the terminals span several components.
SubWKG extract_swkg(const NodeSet& terminals, const WorkKnowledgeGraph& graph);

// Splits the terminals by WKG weak component and extracts one SubWKG per part.
std::vector<SubWKG> extract_swkgs(const NodeSet& terminals, const WorkKnowledgeGraph& graph);

// Sum of link lengths over the SubWKG's undirected links.
double swkg_cost(const SubWKG& swkg, const WorkKnowledgeGraph& graph);

// DFS from the smallest id, neighbors ascending, one line per node:
// two spaces per depth + "id | title | description".
std::string textualize_swkg(const SubWKG& swkg, const WorkKnowledgeGraph& graph);

// Weakly connected components of the WKG, each sorted; list sorted by first id.
std::vector<NodeSet> weak_components(const WorkKnowledgeGraph& graph);

} // namespace wkforge
