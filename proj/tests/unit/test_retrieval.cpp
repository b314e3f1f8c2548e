#include "test_support.hpp"

#include "wkforge/errors.hpp"
#include "wkforge/retrieval.hpp"
#include "wkforge/text.hpp"

#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include <queue>

using namespace wkforge;
using wkforge::testing::Rng;
using wkforge::testing::TableEmbedder;

namespace {

TaskNode task(std::string id, std::string title, std::string description, std::string industry = "") {
    return TaskNode{std::move(id), std::move(title), std::move(description), std::move(industry), {}, {}};
}

WorkKnowledgeGraph routing_graph() {
    WorkKnowledgeGraph g;
    g.upsert_task(task("n1", "Score Data Points", "Sum reviewed data into a category", "coding"));
    g.upsert_task(task("n2", "Score Problem Points", "Combine problem classifications", "coding"));
    g.upsert_task(task("n3", "Submit Coded Claim", "Send the claim to the payer", "billing"));
    g.upsert_task(task("n4", "Greet Visitor", "Welcome guests at the front desk", "hospitality"));
    g.upsert_task(task("n5", "Determine Level of Risk", "Risk of complications", "coding"));
    return g;
}

EncodedIntention intention_of(EmbeddingVector v) {
    EncodedIntention enc;
    enc.gamma = std::move(v);
    return enc;
}

// Graph whose embeddings come from a table keyed by node id.
WorkKnowledgeGraph table_graph(const std::map<std::string, std::vector<double>>& vectors) {
    WorkKnowledgeGraph g;
    TableEmbedder e(vectors.begin()->second.size());
    for (const auto& [id, v] : vectors) {
        g.upsert_task(task(id, id, "d"));
        e.set(id + "\nd\n", v);
    }
    g.compute_embeddings(e);
    return g;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidInput;
}

bool is_tree_over_nodes(const SubWKG& s) {
    std::set<std::pair<std::string, std::string>> links;
    for (const auto& [a, b] : s.edge_list) links.insert(std::minmax(a, b));
    if (links.size() + 1 != s.node_ids.size()) return false;
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& [a, b] : links) {
        if (!s.node_ids.contains(a) || !s.node_ids.contains(b)) return false;
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::set<std::string> seen{*s.node_ids.begin()};
    std::queue<std::string> q;
    q.push(*s.node_ids.begin());
    while (!q.empty()) {
        auto u = q.front();
        q.pop();
        for (const auto& v : adj[u]) {
            if (seen.insert(v).second) q.push(v);
        }
    }
    return seen.size() == s.node_ids.size();
}

} // namespace

TEST(Route, FixtureAtDefaultThreshold) {
    auto g = routing_graph();
    OfflineEmbedder e(256, 0);
    g.compute_embeddings(e);
    const auto enc = intention_of(e.embed("score the data points and problem points for coding"));
    EXPECT_NEAR(cosine(enc.gamma, g.embedding("n1")), 0.5358485153435871, 1e-12);
    EXPECT_NEAR(cosine(enc.gamma, g.embedding("n3")), 0.23195714987447547, 1e-12);
    EXPECT_NEAR(cosine(enc.gamma, g.embedding("n5")), 0.04465195489297519, 1e-12);
    EXPECT_EQ(route(enc, g, RoutingConfig{}), (NodeSet{"n1", "n2"}));
    EXPECT_EQ(route(enc, g, RoutingConfig{0.2, 5, true}), (NodeSet{"n1", "n2", "n3"}));
    EXPECT_EQ(route(enc, g, RoutingConfig{0.0, 5, true}).size(), 5u);
}

TEST(Route, MonotoneInThreshold) {
    auto g = routing_graph();
    OfflineEmbedder e(64, 9);
    g.compute_embeddings(e);
    const auto enc = intention_of(e.embed("claim coding risk"));
    NodeSet previous = route(enc, g, RoutingConfig{-1.0, 5, true});
    EXPECT_EQ(previous.size(), 5u);
    for (double t = -1.0; t <= 1.0; t += 0.01) {
        const auto now = route(enc, g, RoutingConfig{t, 5, true});
        EXPECT_TRUE(std::includes(previous.begin(), previous.end(), now.begin(), now.end())) << t;
        previous = now;
    }
}

TEST(Route, BoundaryCases) {
    auto g = table_graph({{"a", {1, 0}}, {"b", {0, 1}}, {"c", {1, 1}}});
    const auto enc = intention_of(normalized({1, 0}));
    EXPECT_EQ(route(enc, g, RoutingConfig{1.0, 5, true}), NodeSet{"a"});
    EXPECT_EQ(route(enc, g, RoutingConfig{0.0, 5, true}), (NodeSet{"a", "b", "c"}));
    EXPECT_EQ(route(enc, g, RoutingConfig{1e-9, 5, true}), (NodeSet{"a", "c"}));
    EXPECT_TRUE(route(enc, g, RoutingConfig{1.01, 5, true}).empty());
}

TEST(Route, RequiresEmbeddings) {
    const auto g = routing_graph();
    EXPECT_THROW(route(intention_of(normalized({1, 0})), g, RoutingConfig{}), Error);
}

TEST(RoutingConfig, Validation) {
    EXPECT_NO_THROW(RoutingConfig{}.validate());
    EXPECT_EQ(code_of([] { RoutingConfig{0.3, 0, true}.validate(); }), ErrorCode::InvalidInput);
    EXPECT_EQ(code_of([] { RoutingConfig{std::nan(""), 5, true}.validate(); }), ErrorCode::InvalidInput);
}

TEST(Split, TwoClusters) {
    auto g = table_graph({{"a1", {1, 0.05, 0}}, {"a2", {1, 0, 0.05}}, {"a3", {1, 0.02, 0.02}},
                          {"b1", {0, 1, 0.05}}, {"b2", {0.05, 1, 0}}, {"b3", {0.02, 1, 0.02}}});
    const NodeSet all{"a1", "a2", "a3", "b1", "b2", "b3"};
    const auto parts = split_neighborhoods(all, g, RoutingConfig{0.3, 2, true});
    ASSERT_EQ(parts.size(), 2u);
    EXPECT_EQ(parts[0], (NodeSet{"a1", "a2", "a3"}));
    EXPECT_EQ(parts[1], (NodeSet{"b1", "b2", "b3"}));
}

TEST(Split, DegenerateInputs) {
    auto g = table_graph({{"a", {1, 0}}, {"b", {1, 0}}, {"c", {1, 0}}, {"d", {0, 1}}});
    EXPECT_EQ(code_of([&] { split_neighborhoods({}, g, RoutingConfig{}); }), ErrorCode::InvalidInput);
    const auto one = split_neighborhoods({"d"}, g, RoutingConfig{});
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0], NodeSet{"d"});
    const auto same = split_neighborhoods({"a", "b", "c"}, g, RoutingConfig{0.3, 1, true});
    ASSERT_EQ(same.size(), 1u);
    EXPECT_EQ(same[0].size(), 3u);
}

TEST(Split, AlwaysAPartition) {
    Rng rng(23);
    for (int trial = 0; trial < 60; ++trial) {
        std::map<std::string, std::vector<double>> vectors;
        const int n = rng.uniform_int(1, 12);
        for (int i = 0; i < n; ++i) {
            vectors["v" + std::to_string(i)] = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.01, 1)};
        }
        auto g = table_graph(vectors);
        NodeSet all;
        for (const auto& [id, v] : vectors) all.insert(id);
        const RoutingConfig cfg{0.3, rng.uniform_int(1, 6), rng.chance(0.5)};
        const auto parts = split_neighborhoods(all, g, cfg);
        NodeSet seen;
        std::size_t total = 0;
        for (const auto& p : parts) {
            EXPECT_FALSE(p.empty());
            total += p.size();
            seen.insert(p.begin(), p.end());
        }
        EXPECT_EQ(total, all.size());
        EXPECT_EQ(seen, all);
        for (std::size_t i = 1; i < parts.size(); ++i) EXPECT_LT(*parts[i - 1].begin(), *parts[i].begin());
    }
}

TEST(Extract, SingleTerminal) {
    const auto g = load_graph(wkforge::testing::fixture("steiner/chain.json"));
    const auto s = extract_swkg({"c"}, g);
    EXPECT_EQ(s.node_ids, NodeSet{"c"});
    EXPECT_TRUE(s.edge_list.empty());
    EXPECT_EQ(swkg_cost(s, g), 0.0);
}

TEST(Extract, IntermediateNodeIsKept) {
    WorkKnowledgeGraph g;
    for (const char* id : {"a", "b", "c"}) g.upsert_task(task(id, id, "d"));
    g.set_edge("a", "b", 2);
    g.set_edge("b", "c", 2);
    const auto s = extract_swkg({"a", "c"}, g);
    EXPECT_EQ(s.node_ids, (NodeSet{"a", "b", "c"}));
    EXPECT_EQ(s.terminals, (NodeSet{"a", "c"}));
    EXPECT_NEAR(swkg_cost(s, g), 2.0 * std::exp(-1.0), 1e-12);
}

TEST(Extract, LinkLengthUsesStrongerDirection) {
    WorkKnowledgeGraph g;
    for (const char* id : {"a", "b"}) g.upsert_task(task(id, id, "d"));
    g.set_edge("a", "b", 1);
    g.set_edge("b", "a", 4);
    EXPECT_NEAR(link_length(g, "a", "b"), std::exp(-2.0), 1e-15);
    EXPECT_NEAR(link_length(g, "b", "a"), std::exp(-2.0), 1e-15);
}

TEST(Extract, WithinTwiceOptimalOnFixtures) {
    const auto cases = nlohmann::json::parse(wkforge::testing::slurp(wkforge::testing::fixture("steiner/cases.json")));
    for (const auto& c : cases.at("cases")) {
        const auto name = c.at("graph").get<std::string>();
        const auto g = load_graph(wkforge::testing::fixture("steiner/" + name));
        NodeSet terminals;
        for (const auto& t : c.at("terminals")) terminals.insert(t.get<std::string>());
        const double optimum = c.at("optimal_cost").get<double>();
        EXPECT_NEAR(wkforge::testing::brute_force_steiner(g, terminals), optimum, 1e-12) << name;

        const auto s = extract_swkg(terminals, g);
        EXPECT_TRUE(std::includes(s.node_ids.begin(), s.node_ids.end(), terminals.begin(), terminals.end())) << name;
        EXPECT_EQ(s.terminals, terminals) << name;
        EXPECT_TRUE(is_tree_over_nodes(s)) << name;
        EXPECT_LE(swkg_cost(s, g), 2.0 * optimum + 1e-12) << name;
        EXPECT_GE(swkg_cost(s, g), optimum - 1e-12) << name;
    }
}

TEST(Extract, RandomGraphsAgainstBruteForce) {
    Rng rng(41);
    for (int trial = 0; trial < 40; ++trial) {
        WorkKnowledgeGraph g(rng.uniform(0.1, 1.0));
        const int n = rng.uniform_int(3, 9);
        std::vector<std::string> ids;
        for (int i = 0; i < n; ++i) {
            ids.push_back("x" + std::to_string(i));
            g.upsert_task(task(ids.back(), ids.back(), "d"));
        }
        // Spanning chain keeps everything connected; extra links at random.
        for (int i = 1; i < n; ++i) g.set_edge(ids[static_cast<std::size_t>(rng.uniform_int(0, i - 1))], ids[static_cast<std::size_t>(i)], rng.uniform_int(1, 6));
        for (int k = 0; k < n; ++k) {
            const auto a = ids[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
            const auto b = ids[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
            if (a != b) g.set_edge(a, b, rng.uniform_int(1, 6));
        }
        NodeSet terminals;
        const int t = rng.uniform_int(1, n);
        while (static_cast<int>(terminals.size()) < t) terminals.insert(ids[static_cast<std::size_t>(rng.uniform_int(0, n - 1))]);
        const double optimum = wkforge::testing::brute_force_steiner(g, terminals);
        const auto s = extract_swkg(terminals, g);
        EXPECT_TRUE(is_tree_over_nodes(s));
        EXPECT_LE(swkg_cost(s, g), 2.0 * optimum + 1e-12);
        // Every leaf of the pruned tree is a terminal.
        std::map<std::string, int> degree;
        for (const auto& [a, b] : s.edge_list) {
            ++degree[a];
            ++degree[b];
        }
        for (const auto& [id, d] : degree) {
            if (d == 1) EXPECT_TRUE(terminals.contains(id)) << id;
        }
    }
}

TEST(Extract, DisconnectedTerminals) {
    WorkKnowledgeGraph g;
    for (const char* id : {"a", "b", "c", "d"}) g.upsert_task(task(id, id, "d"));
    g.set_edge("a", "b", 1);
    g.set_edge("c", "d", 1);
    EXPECT_EQ(code_of([&] { extract_swkg({"a", "c"}, g); }), ErrorCode::DisconnectedTerminals);
    EXPECT_EQ(code_of([&] { extract_swkg({}, g); }), ErrorCode::InvalidInput);
    EXPECT_EQ(code_of([&] { extract_swkg({"zz"}, g); }), ErrorCode::UnknownNode);

    const auto parts = extract_swkgs({"a", "b", "c"}, g);
    ASSERT_EQ(parts.size(), 2u);
    EXPECT_EQ(parts[0].node_ids, (NodeSet{"a", "b"}));
    EXPECT_EQ(parts[1].node_ids, NodeSet{"c"});
    const auto comps = weak_components(g);
    ASSERT_EQ(comps.size(), 2u);
    EXPECT_EQ(comps[1], (NodeSet{"c", "d"}));
}

TEST(Textualize, ChainDepths) {
    WorkKnowledgeGraph g;
    g.upsert_task(task("a", "Alpha", "first"));
    g.upsert_task(task("b", "Beta", "second"));
    g.upsert_task(task("c", "Gamma", "third"));
    g.set_edge("a", "b", 1);
    g.set_edge("b", "c", 1);
    const auto s = extract_swkg({"a", "c"}, g);
    const auto text = textualize_swkg(s, g);
    EXPECT_EQ(text, "a | Alpha | first\n  b | Beta | second\n    c | Gamma | third\n");
    EXPECT_EQ(text, textualize_swkg(s, g));
}

TEST(Textualize, BranchesVisitNeighborsInOrder) {
    const auto g = load_graph(wkforge::testing::fixture("steiner/star.json"));
    const auto s = extract_swkg({"a", "b", "c"}, g);
    const auto lines = text::split_lines(textualize_swkg(s, g));
    ASSERT_GE(lines.size(), 3u);
    EXPECT_TRUE(lines[0].starts_with("a | "));
}
