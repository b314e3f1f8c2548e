// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance               run every criterion
//   acceptance --criterion N run criterion N only
// Exit status is non-zero when any selected criterion fails.

#include "test_support.hpp"

#include "wkforge/commands.hpp"
#include "wkforge/evaluation.hpp"
#include "wkforge/retrieval.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

using namespace wkforge;
using wkforge::testing::fixture;
using wkforge::testing::Rng;

namespace {

// Tolerances and limits.
constexpr double kDeltaTolerance = 0.005;
constexpr double kAreaTolerance = 0.002;
constexpr double kAllOnesTolerance = 1e-4;
constexpr double kBleuTolerance = 1e-6;
constexpr double kExactTolerance = 1e-12;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Outcome table1_deltas() {
    Outcome o;
    const auto rows = metrics_table_from_csv_text(wkforge::testing::slurp(fixture("table1.csv")));
    std::map<std::string, double> mean;
    for (const auto& r : rank_by_pentagon(rows)) mean[r.model] = r.mean;
    const double large = mean.at("opus-large") - mean.at("claude-3.5");
    const double small = mean.at("opus-small") - mean.at("claude-3.5");
    o.detail = "deltas " + fmt(large) + ", " + fmt(small);
    o.require(std::abs(large - 0.384) <= kDeltaTolerance, "opus-large delta " + fmt(large) + " not 0.384");
    o.require(std::abs(small - 0.293) <= kDeltaTolerance, "opus-small delta " + fmt(small) + " not 0.293");
    return o;
}

Outcome table1_ranking() {
    Outcome o;
    const auto rows = metrics_table_from_csv_text(wkforge::testing::slurp(fixture("table1.csv")));
    const std::array<double, 7> want{0.712, 0.389, 0.052, 0.039, 0.027, 0.025, 0.018};
    const auto ranked = rank_by_pentagon(rows);
    o.require(ranked.size() == rows.size(), "row count");
    std::string areas;
    for (std::size_t i = 0; i < ranked.size() && o.pass; ++i) {
        o.require(ranked[i].model == rows[i].model, "rank " + std::to_string(i + 1) + " is " + ranked[i].model);
        if (i > 0) o.require(ranked[i].area < ranked[i - 1].area, "areas not strictly decreasing at " + ranked[i].model);
        o.require(std::abs(ranked[i].area - want[i]) <= kAreaTolerance, ranked[i].model + " area " + fmt(ranked[i].area));
        areas += (i ? ", " : "") + fmt(ranked[i].area);
    }
    if (o.pass) o.detail = "areas " + areas;
    return o;
}

Outcome optimizer_oracle() {
    Outcome o;
    Rng rng(20241015);
    std::size_t ties = 0;
    for (int trial = 0; trial < 200 && o.pass; ++trial) {
        const auto g = wkforge::testing::random_wfg(rng, rng.uniform_int(1, 12), rng.uniform(0.1, 0.7));
        std::map<std::string, double> cost;
        std::map<std::string, TaskCost> table;
        const bool integral = trial % 2 == 0;
        for (const auto& [id, n] : g.nodes) {
            double c = 0.0;
            if (!g.is_terminal(id)) c = integral ? rng.uniform_int(0, 3) : rng.uniform(0.0, 10.0);
            cost[id] = c;
            table[id] = TaskCost{c, 0.0, 0.0, c};
        }
        const auto p = optimal_path(g, table);
        const auto brute = wkforge::testing::brute_force_path(g, cost);
        o.require(p.total_cost == brute.cost,
                  "trial " + std::to_string(trial) + ": " + fmt(p.total_cost) + " vs " + fmt(brute.cost));
        o.require(p.node_ids == brute.nodes, "trial " + std::to_string(trial) + ": tie-break differs");
        if (brute.paths > 1) ++ties;
    }
    if (o.pass) o.detail = "200 DAGs, " + std::to_string(ties) + " with several paths";
    return o;
}

WorkflowDag tagged_chain(const std::vector<std::string>& wkg_ids) {
    WorkflowDag d;
    for (std::size_t i = 0; i < wkg_ids.size(); ++i) {
        d.nodes.push_back(wkforge::testing::plain_task("t" + std::to_string(i + 1), wkg_ids[i]));
        if (i > 0) d.edges.emplace_back("t" + std::to_string(i), "t" + std::to_string(i + 1));
    }
    return d;
}

// Random WKG over `ids` whose undirected view is a connected spanning tree plus
// extras, with non-negative embeddings.
void random_connected_wkg(Rng& rng, WorkKnowledgeGraph& g, wkforge::testing::TableEmbedder& e,
                          const std::vector<std::string>& ids) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
        g.upsert_task(TaskNode{ids[i], "Task " + ids[i], "d", "", {}, {}});
        e.set(g.node(ids[i]).semantic_text(), {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0.01, 1)});
        if (i > 0) {
            const auto& other = ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))];
            if (rng.chance(0.5)) {
                g.set_edge(other, ids[i], rng.uniform_int(1, 5));
            } else {
                g.set_edge(ids[i], other, rng.uniform_int(1, 5));
            }
        }
    }
    for (std::size_t k = 0; k < ids.size() / 2; ++k) {
        const auto& a = ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(ids.size()) - 1))];
        const auto& b = ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(ids.size()) - 1))];
        if (a != b) g.set_edge(a, b, rng.uniform_int(1, 5));
    }
}

Outcome enhancement() {
    Outcome o;
    Rng rng(404);
    int bridged = 0;
    for (int trial = 0; trial < 100 && o.pass; ++trial) {
        const bool bridgeable = trial % 4 != 3;
        WorkKnowledgeGraph g;
        wkforge::testing::TableEmbedder e(3);
        std::vector<std::string> left;
        std::vector<std::string> right;
        const int n = rng.uniform_int(4, 14);
        for (int i = 0; i < n; ++i) (i % 2 ? right : left).push_back("k" + std::to_string(i));
        if (bridgeable) {
            std::vector<std::string> all = left;
            all.insert(all.end(), right.begin(), right.end());
            std::shuffle(all.begin(), all.end(), rng.engine());
            random_connected_wkg(rng, g, e, all);
        } else {
            random_connected_wkg(rng, g, e, left);
            random_connected_wkg(rng, g, e, right);
        }
        g.compute_embeddings(e);

        // Two or three DAGs over disjoint WKG nodes; the second one sits on the right side.
        std::vector<std::string> left_pool = left;
        std::vector<std::string> right_pool = right;
        std::shuffle(left_pool.begin(), left_pool.end(), rng.engine());
        std::shuffle(right_pool.begin(), right_pool.end(), rng.engine());
        auto take = [&](std::vector<std::string>& pool, int want) {
            std::vector<std::string> out;
            while (want-- > 0 && !pool.empty()) {
                out.push_back(pool.back());
                pool.pop_back();
            }
            return out;
        };
        std::vector<WorkflowDag> dags;
        dags.push_back(tagged_chain(take(left_pool, 1)));
        dags.push_back(tagged_chain(take(right_pool, rng.uniform_int(1, 2))));
        if (rng.chance(0.5) && !left_pool.empty()) dags.push_back(tagged_chain(take(left_pool, 1)));
        const auto wfg = assemble_wfg(dags, g);
        const EnhanceConfig cfg{1.0, rng.uniform(0.03, 0.25), 0.0};
        EnhanceReport rep;
        const auto tag = "instance " + std::to_string(trial);
        try {
            const auto out = enhance_wfg(wfg, g, cfg, &rep);
            o.require(is_weakly_connected(out), tag + ": returned a disconnected graph");
            o.require(out.acyclic(), tag + ": cycle");
            o.require(rep.iterations <= cfg.max_iterations(), tag + ": " + std::to_string(rep.iterations) + " iterations");
            o.require(bridgeable || is_weakly_connected(wfg), tag + ": unbridgeable instance connected");
            if (!is_weakly_connected(wfg)) ++bridged;
        } catch (const Error& err) {
            o.require(err.code() == ErrorCode::CannotConnect, tag + ": " + err.what());
            o.require(!bridgeable, tag + ": CannotConnect on a bridgeable instance");
            o.require(rep.iterations <= cfg.max_iterations(), tag + ": iteration bound");
        }
    }
    if (o.pass) o.detail = "100 instances, " + std::to_string(bridged) + " bridged";
    return o;
}

Outcome edge_weight_law() {
    Outcome o;
    Rng rng(5150);
    for (int i = 0; i < 1000 && o.pass; ++i) {
        const long long c = std::uniform_int_distribution<long long>(0, 10000)(rng.engine());
        double lambda = rng.uniform(0.0, 1.0);
        if (lambda == 0.0) lambda = 1.0;
        const double w = edge_weight(c, lambda);
        const std::string at = "count " + std::to_string(c) + ", lambda " + fmt(lambda) + ": ";
        o.require(w >= 0.0 && w < 1.0, at + "weight " + fmt(w) + " outside [0,1)");
        o.require((w == 0.0) == (c == 0), at + "zero iff count is zero");
        if (c < 10000) o.require(edge_weight(c + 1, lambda) > w, at + "not strictly increasing");
    }
    for (int trial = 0; trial < 1000 && o.pass; ++trial) {
        WorkKnowledgeGraph g(std::max(1e-6, rng.uniform(0.0, 1.0)));
        const int n = rng.uniform_int(2, 6);
        for (int i = 0; i < n; ++i) g.upsert_task(TaskNode{"t" + std::to_string(i), "T", "d", "", {}, {}});
        const int records = rng.uniform_int(1, 8);
        for (int r = 0; r < records; ++r) {
            std::vector<std::string> seq;
            for (int k = rng.uniform_int(1, 6); k > 0; --k) seq.push_back("t" + std::to_string(rng.uniform_int(0, n - 1)));
            g.record_workflow_implementation({"w" + std::to_string(r), seq, 0, 0, 0, true});
        }
        for (const auto& [key, e] : g.edges()) {
            const double expected = 1.0 - std::exp(-g.lambda() * static_cast<double>(e.pair_count));
            o.require(std::abs(e.weight - expected) <= kExactTolerance, "record sequence " + std::to_string(trial));
        }
    }
    if (o.pass) o.detail = "1000 weight cases, 1000 record sequences";
    return o;
}

Outcome metric_oracles() {
    Outcome o;
    auto order = [](std::vector<std::size_t> v) {
        Matching m;
        for (std::size_t i = 0; i < v.size(); ++i) m.pairs.push_back(MatchPair{i, v[i], 1.0});
        return m;
    };
    const std::vector<std::size_t> identity{0, 1, 2};
    const std::vector<std::size_t> reversed{2, 1, 0};
    const std::vector<std::size_t> swapped{0, 2, 1};
    o.require(kendall_tau_a(identity) == 1.0, "kendall identity");
    o.require(kendall_tau_a(reversed) == -1.0, "kendall reversal");
    o.require(std::abs(kendall_tau_a(swapped) - 1.0 / 3.0) <= kExactTolerance, "kendall [1,3,2]");

    const std::vector<std::size_t> a{1, 2, 3};
    const std::vector<std::size_t> b{1, 3, 2};
    o.require(dtw_normalized(a, a) == 1.0, "dtw identical");
    // Table minimum: cost 2 along a length-3 warping path.
    o.require(std::abs(dtw_normalized(b, a) - 1.0 / 3.0) <= kExactTolerance, "dtw [1,2,3] vs [1,3,2]");
    o.require(dtw_score(order({0, 1, 2}), 3, 3) == 1.0, "dtw score identical");

    o.require(std::abs(sentence_bleu("assign the visit level code", "assign the visit level code") - 1.0) <= kBleuTolerance,
              "bleu identical");
    const std::vector<EvalTask> gen{{"g1", "Assign Code", "pick the ICD code"}, {"g2", "Unrelated", "nothing"}};
    const ReferenceWorkflow ref{{{"r1", "Assign Code", "pick the ICD code"}}};
    o.require(std::abs(bleu_score(order({0}), gen, ref) - 0.5) <= kBleuTolerance, "bleu half matched");

    o.require(coverage_ratio(order({0, 1, 2}), 4) == 0.75, "coverage 3 of 4");
    const std::array<double, 5> ones{1, 1, 1, 1, 1};
    o.require(std::abs(pentagon_area(ones) - 2.37764) <= kAllOnesTolerance, "pentagon all ones " + fmt(pentagon_area(ones)));
    if (o.pass) o.detail = "kendall, dtw, bleu, coverage, pentagon fixtures";
    return o;
}

Outcome end_to_end() {
    Outcome o;
    wkforge::testing::TempDir a("accept");
    wkforge::testing::TempDir b("accept");
    std::ostringstream log;
    auto cfg = RunConfig{};
    cfg.wkg_path = fixture("medical/wkg.json");
    cfg.intention_dir = fixture("medical/intention");
    cfg.provider.offline_mode = true;
    cfg.output_dir = a.path();
    const auto first = cmd_generate(cfg, log);
    cfg.output_dir = b.path();
    cmd_generate(cfg, log);
    const auto wfg_a = wkforge::testing::slurp(a / "wfg.json");
    o.require(!wfg_a.empty() && wfg_a == wkforge::testing::slurp(b / "wfg.json"), "wfg.json differs between runs");
    const auto wfg = load_wfg(a / "wfg.json");
    o.require(wfg.acyclic(), "wfg is cyclic");
    o.require(wfg.entry_id == kEntryId && wfg.exit_id == kExitId, "terminals missing");
    o.require(wfg.predecessors(wfg.entry_id).empty() && wfg.successors(wfg.exit_id).empty(), "terminal degrees");
    o.require(off_path_nodes(wfg).empty(), "nodes off every entry-exit path");

    cfg.trials = 1;
    const auto report = cmd_evaluate({fixture("medical/reference.json")}, fixture("medical/reference.json"), cfg,
                                     a / "eval.json", log);
    o.require(report.coverage == 1.0, "self coverage " + fmt(report.coverage));
    o.require(report.kendall_weighted == 1.0, "self kendall " + fmt(report.kendall_weighted));
    if (o.pass) o.detail = std::to_string(first.wfg.nodes.size()) + "-node WFG identical across runs; self-eval 1/1";
    return o;
}

Outcome steiner_bound() {
    Outcome o;
    const auto cases = nlohmann::json::parse(wkforge::testing::slurp(fixture("steiner/cases.json")));
    std::size_t count = 0;
    double worst = 1.0;
    for (const auto& c : cases.at("cases")) {
        const auto name = c.at("graph").get<std::string>();
        const auto g = load_graph(fixture("steiner/" + name));
        o.require(g.nodes().size() <= 8, name + " exceeds 8 nodes");
        NodeSet terminals;
        for (const auto& t : c.at("terminals")) terminals.insert(t.get<std::string>());
        const double optimum = wkforge::testing::brute_force_steiner(g, terminals);
        const auto s = extract_swkg(terminals, g);
        const double cost = swkg_cost(s, g);
        o.require(cost <= 2.0 * optimum + kExactTolerance, name + ": " + fmt(cost) + " > 2 x " + fmt(optimum));
        o.require(std::includes(s.node_ids.begin(), s.node_ids.end(), terminals.begin(), terminals.end()),
                  name + ": terminal missing");
        if (optimum > 0) worst = std::max(worst, cost / optimum);
        ++count;
    }
    if (o.pass) o.detail = std::to_string(count) + " fixtures, worst ratio " + fmt(worst);
    return o;
}

struct Criterion {
    const char* name;
    double limit_seconds;
    Outcome (*run)();
};

const std::array<Criterion, 8> kCriteria{{
    {"Table 1 mean deltas", 1.0, table1_deltas},
    {"pentagon ranking of Table 1", 1.0, table1_ranking},
    {"optimal path equals exhaustive minimum", 10.0, optimizer_oracle},
    {"enhancement terminates and connects", 10.0, enhancement},
    {"edge-weight law", 5.0, edge_weight_law},
    {"metric oracle fixtures", 5.0, metric_oracles},
    {"hermetic end-to-end determinism", 30.0, end_to_end},
    {"Steiner extraction within twice optimal", 5.0, steiner_bound},
}};

bool run_criterion(std::size_t index) {
    const auto& c = kCriteria[index];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = c.run();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.pass && elapsed > c.limit_seconds) {
        o.pass = false;
        o.detail = "took " + fmt(elapsed) + " s, limit " + fmt(c.limit_seconds) + " s";
    }
    std::printf("%s criterion %zu: %s (%s; %.3f s)\n", o.pass ? "PASS" : "FAIL", index + 1, c.name, o.detail.c_str(),
                elapsed);
    std::fflush(stdout);
    return o.pass;
}

} // namespace

int main(int argc, char** argv) {
    setenv("WKFORGE_OFFLINE", "1", 1);
    std::vector<std::size_t> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            const int n = std::atoi(argv[++i]);
            if (n < 1 || n > static_cast<int>(kCriteria.size())) {
                std::fprintf(stderr, "criterion must be 1..%zu\n", kCriteria.size());
                return 2;
            }
            selected.push_back(static_cast<std::size_t>(n - 1));
        } else {
            std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
            return 2;
        }
    }
    if (selected.empty()) {
        for (std::size_t i = 0; i < kCriteria.size(); ++i) selected.push_back(i);
    }
    bool all = true;
    for (auto i : selected) all = run_criterion(i) && all;
    return all ? 0 : 1;
}
