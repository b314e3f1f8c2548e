#include "test_support.hpp"

#include "wkforge/errors.hpp"
#include "wkforge/providers.hpp"
#include "wkforge/wkg.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace wkforge;
using wkforge::testing::Rng;

namespace {

TaskNode node(const std::string& id) { return TaskNode{id, "Title " + id, "Description " + id, "ops", {}, {}}; }

WorkKnowledgeGraph abc_graph(double lambda = 0.5) {
    WorkKnowledgeGraph g(lambda);
    for (const char* id : {"A", "B", "C", "D"}) g.upsert_task(node(id));
    return g;
}

WorkflowImplementationRecord rec(std::string id, std::vector<std::string> ids, double c = 1.0, double t = 2.0,
                                 double m = 3.0) {
    return WorkflowImplementationRecord{std::move(id), std::move(ids), c, t, m, true};
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

} // namespace

TEST(EdgeWeight, ClosedFormValues) {
    EXPECT_EQ(edge_weight(0, 0.5), 0.0);
    EXPECT_NEAR(edge_weight(2, 0.5), 0.6321206, 1e-6);
    EXPECT_NEAR(edge_weight(10, 1.0), 0.9999546, 1e-6);
    EXPECT_EQ(code_of([] { edge_weight(1, 0.0); }), ErrorCode::InvalidInput);
    EXPECT_EQ(code_of([] { edge_weight(1, 1.5); }), ErrorCode::InvalidInput);
    EXPECT_EQ(code_of([] { edge_weight(-1, 0.5); }), ErrorCode::InvalidInput);
}

// Property over the range where consecutive weights stay distinct in double
// precision: lambda >= 0.05 and lambda * (count + 1) <= 30.
TEST(EdgeWeight, BoundsAndMonotonicityWhereRepresentable) {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const double lambda = rng.uniform(0.05, 1.0);
        const long long max_count = static_cast<long long>(30.0 / lambda) - 1;
        const long long c = std::uniform_int_distribution<long long>(0, max_count)(rng.engine());
        const double w = edge_weight(c, lambda);
        EXPECT_GE(w, 0.0);
        EXPECT_LT(w, 1.0);
        EXPECT_EQ(w == 0.0, c == 0);
        EXPECT_LT(w, edge_weight(c + 1, lambda)) << "count " << c << " lambda " << lambda;
    }
}

TEST(Wkg, UpsertTask) {
    WorkKnowledgeGraph g;
    g.upsert_task(node("A"));
    EXPECT_EQ(g.nodes().size(), 1u);
    g.upsert_task(node("A"));
    EXPECT_EQ(g.nodes().size(), 1u);
    auto bad = node("B");
    bad.title = " ";
    EXPECT_EQ(code_of([&] { g.upsert_task(bad); }), ErrorCode::InvalidInput);
    EXPECT_EQ(code_of([&] { g.upsert_task(TaskNode{"", "t", "d", "", {}, {}}); }), ErrorCode::InvalidInput);
}

TEST(Wkg, UpsertInvalidatesCachedEmbedding) {
    auto g = abc_graph();
    OfflineEmbedder e(16, 0);
    g.compute_embeddings(e);
    EXPECT_TRUE(g.embeddings_ready());
    auto changed = node("A");
    changed.description = "something else";
    g.upsert_task(changed);
    EXPECT_FALSE(g.embeddings_ready());
    EXPECT_THROW(g.embedding("A"), Error);
}

TEST(Wkg, RecordCreatesConsecutiveEdges) {
    auto g = abc_graph();
    const auto touched = g.record_workflow_implementation(rec("w1", {"A", "B", "C"}));
    EXPECT_EQ(touched.size(), 2u);
    ASSERT_NE(g.find_edge("A", "B"), nullptr);
    EXPECT_EQ(g.find_edge("A", "B")->pair_count, 1);
    EXPECT_EQ(g.find_edge("B", "C")->pair_count, 1);
    EXPECT_EQ(g.find_edge("B", "A"), nullptr);
    EXPECT_EQ(g.find_edge("A", "C"), nullptr);
    EXPECT_EQ(g.edges().size(), 2u);
}

TEST(Wkg, RecordsAccumulate) {
    auto g = abc_graph();
    g.record_workflow_implementation(rec("w1", {"A", "B", "C"}));
    g.record_workflow_implementation(rec("w2", {"D", "A", "B"}));
    EXPECT_EQ(g.find_edge("A", "B")->pair_count, 2);
    EXPECT_NEAR(g.find_edge("A", "B")->weight, 0.632121, 1e-6);
    EXPECT_EQ(g.total_pair_count(), 4);
}

TEST(Wkg, RecordSkipsSelfPairsAndRejectsUnknownIds) {
    auto g = abc_graph();
    g.record_workflow_implementation(rec("w1", {"A", "A", "B"}));
    EXPECT_EQ(g.find_edge("A", "A"), nullptr);
    EXPECT_EQ(g.find_edge("A", "B")->pair_count, 1);

    const auto before = g.total_pair_count();
    EXPECT_EQ(code_of([&] { g.record_workflow_implementation(rec("w2", {"A", "Z"})); }), ErrorCode::UnknownNode);
    EXPECT_EQ(g.total_pair_count(), before);
    EXPECT_EQ(g.history().size(), 1u);
    EXPECT_EQ(code_of([&] { g.record_workflow_implementation(rec("w3", {})); }), ErrorCode::InvalidInput);
    EXPECT_EQ(code_of([&] { g.record_workflow_implementation(rec("w4", {"A"}, -1.0)); }), ErrorCode::InvalidInput);
}

TEST(Wkg, SetEdgeValidation) {
    auto g = abc_graph();
    EXPECT_EQ(code_of([&] { g.set_edge("A", "Z", 1); }), ErrorCode::UnknownNode);
    EXPECT_EQ(code_of([&] { g.set_edge("A", "A", 1); }), ErrorCode::InvalidInput);
    EXPECT_EQ(code_of([&] { g.set_edge("A", "B", -2); }), ErrorCode::InvalidInput);
    g.set_edge("A", "B", 3);
    EXPECT_NEAR(g.find_edge("A", "B")->weight, edge_weight(3, 0.5), 1e-15);
    const std::vector<std::string> want{"B"};
    EXPECT_EQ(g.neighbors("A"), want);
}

TEST(Wkg, RemoveWorkflowImplementationDecrementsCounts) {
    auto g = abc_graph();
    g.record_workflow_implementation(rec("w1", {"A", "B", "C"}));
    g.record_workflow_implementation(rec("w2", {"A", "B"}));
    EXPECT_EQ(g.remove_workflow_implementation("w1"), 1u);
    EXPECT_EQ(g.find_edge("A", "B")->pair_count, 1);
    EXPECT_EQ(g.find_edge("B", "C"), nullptr);
    EXPECT_TRUE(g.neighbors("C").empty());
    EXPECT_EQ(g.remove_workflow_implementation("w1"), 0u);
}

TEST(Wkg, CostStatsAreMeansOverAppearances) {
    auto g = abc_graph();
    g.record_workflow_implementation(rec("w1", {"A", "B"}, 2.0, 10.0, 0.5));
    g.record_workflow_implementation(rec("w2", {"B", "C"}, 4.0, 30.0, 1.5));
    const auto b = g.cost_stats("B");
    ASSERT_TRUE(b.has_value());
    EXPECT_DOUBLE_EQ(b->compute, 3.0);
    EXPECT_DOUBLE_EQ(b->time, 20.0);
    EXPECT_DOUBLE_EQ(b->model, 1.0);
    EXPECT_EQ(b->samples, 2u);
    EXPECT_FALSE(g.cost_stats("D").has_value());
}

TEST(Wkg, WeightLawHoldsAfterRandomRecordSequences) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        WorkKnowledgeGraph g(rng.uniform(0.05, 1.0));
        const int n = rng.uniform_int(2, 8);
        std::vector<std::string> ids;
        for (int i = 0; i < n; ++i) {
            ids.push_back("t" + std::to_string(i));
            g.upsert_task(node(ids.back()));
        }
        std::map<EdgeKey, long long> expected;
        for (int r = 0; r < 20; ++r) {
            std::vector<std::string> seq;
            const int len = rng.uniform_int(1, 6);
            for (int k = 0; k < len; ++k) seq.push_back(ids[static_cast<std::size_t>(rng.uniform_int(0, n - 1))]);
            g.record_workflow_implementation(rec("w" + std::to_string(r), seq));
            for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
                if (seq[k] != seq[k + 1]) ++expected[{seq[k], seq[k + 1]}];
            }
        }
        ASSERT_EQ(g.edges().size(), expected.size());
        for (const auto& [key, e] : g.edges()) {
            EXPECT_EQ(e.pair_count, expected.at(key));
            EXPECT_NEAR(e.weight, 1.0 - std::exp(-g.lambda() * static_cast<double>(e.pair_count)), 1e-15);
        }
    }
}

TEST(WkgFile, RoundTripOfFixture) {
    const auto g = load_graph(wkforge::testing::fixture("medical/wkg.json"));
    EXPECT_EQ(g.nodes().size(), 20u);
    EXPECT_EQ(g.history().size(), 8u);
    wkforge::testing::TempDir dir("wkg");
    save_graph(g, dir / "copy.json");
    const auto back = load_graph(dir / "copy.json");
    EXPECT_TRUE(back.same_structure(g));
    EXPECT_EQ(graph_to_json_text(back), graph_to_json_text(g));
}

TEST(WkgFile, MalformedDocuments) {
    auto parse_code = [](const std::string& text) {
        return code_of([&] { graph_from_json_text(text, "g.json"); });
    };
    EXPECT_EQ(parse_code(R"({"tasks": [], "edges": []})"), ErrorCode::ParseError);
    EXPECT_EQ(parse_code(R"({"lambda": 0.5, "tasks": [], "edges": [{"src": "a", "dst": "b", "pair_count": 1}]})"),
              ErrorCode::ParseError);
    EXPECT_EQ(parse_code("{\"lambda\": 0.5,\n \"tasks\": [}"), ErrorCode::ParseError);
    EXPECT_EQ(parse_code(R"({"lambda": 2.0, "tasks": [], "edges": []})"), ErrorCode::ParseError);

    try {
        graph_from_json_text(R"({"tasks": [], "edges": []})", "g.json");
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("lambda"), std::string::npos) << e.what();
    }
    try {
        graph_from_json_text("{\n\"lambda\": 0.5,\n\"tasks\": [\n}", "g.json");
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("g.json:4"), std::string::npos) << e.what();
    }
}

TEST(WkgFile, RecordsAcceptArrayOrObject) {
    const auto a = records_from_json_text(R"([{"workflow_id": "w", "task_ids": ["A"]}])");
    const auto b = records_from_json_text(R"({"records": [{"workflow_id": "w", "task_ids": ["A"]}]})");
    ASSERT_EQ(a.size(), 1u);
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(a[0].task_ids, b[0].task_ids);
    EXPECT_EQ(code_of([] { records_from_json_text(R"([{"task_ids": ["A"]}])"); }), ErrorCode::ParseError);
}
