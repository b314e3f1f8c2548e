#include "wkforge/commands.hpp"

#include "json_util.hpp"
#include "wkforge/errors.hpp"
#include "wkforge/generation.hpp"
#include "wkforge/intention.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace wkforge {

using detail::json;
namespace fs = std::filesystem;

void RunConfig::validate() const {
    provider.validate();
    routing.validate();
    enhance.validate();
    weights.validate();
    cost_defaults.validate();
    if (trials < 1) throw Error(ErrorCode::InvalidInput, "trials must be >= 1");
    if (!(eval.tau >= 0.0 && eval.tau <= 1.0)) throw Error(ErrorCode::InvalidInput, "match threshold must be in [0,1]");
}

ProviderConfig RunConfig::effective_provider() const {
    ProviderConfig p = provider;
    p.seed = seed;
    return apply_environment(std::move(p));
}

namespace {

std::string fixed(double v, int digits = 6) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

// Error text without the leading "<Code>: ".
std::string bare_message(const Error& e) {
    std::string what = e.what();
    const std::string prefix = std::string(to_string(e.code())) + ": ";
    return what.starts_with(prefix) ? what.substr(prefix.size()) : what;
}

template <class F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

std::vector<TaskSequence> generate_all(const std::vector<SubWKG>& swkgs, const DecodedIntention& decoded,
                                       const WorkKnowledgeGraph& graph, Providers& providers, int max_in_flight) {
    const std::size_t n = swkgs.size();
    std::vector<TaskSequence> out(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                const auto prompt = build_prompt(decoded, textualize_swkg(swkgs[i], graph));
                out[i] = generate_sequence(prompt, *providers.generator, graph, *providers.embedder,
                                           "swkg" + std::to_string(i + 1), &swkgs[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, max_in_flight)));
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    pool.clear();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

} // namespace

GenerateResult run_pipeline(const RunConfig& cfg, WorkKnowledgeGraph graph, IntentionBundle bundle,
                            Providers& providers) {
    cfg.validate();
    const auto provider_cfg = cfg.effective_provider();
    GenerateResult result;

    const auto [encoded, decoded] = stage("encode", [&] {
        bundle.validate();
        preprocess_bundle(bundle);
        graph.compute_embeddings(*providers.embedder);
        auto enc = encode_intention(bundle, *providers.embedder);
        auto dec = decode_intention(enc, bundle, provider_cfg, *providers.generator);
        return std::pair{std::move(enc), std::move(dec)};
    });

    result.routed = stage("route", [&] {
        auto v = route(encoded, graph, cfg.routing);
        if (v.empty()) {
            throw Error(ErrorCode::EmptyRouting,
                        "no WKG node reaches similarity " + fixed(cfg.routing.similarity_threshold, 4));
        }
        return v;
    });

    const auto neighborhoods = stage("split", [&] { return split_neighborhoods(result.routed, graph, cfg.routing); });

    result.swkgs = stage("extract", [&] {
        std::vector<SubWKG> all;
        for (const auto& hood : neighborhoods) {
            for (auto& s : extract_swkgs(hood, graph)) all.push_back(std::move(s));
        }
        return all;
    });

    stage("textualize", [&] {
        for (const auto& s : result.swkgs) (void)textualize_swkg(s, graph);
        return 0;
    });

    const auto sequences = stage("generate", [&] {
        return generate_all(result.swkgs, decoded, graph, providers, provider_cfg.max_in_flight);
    });

    result.dags = stage("dagify", [&] {
        std::vector<WorkflowDag> dags;
        for (const auto& seq : sequences) dags.push_back(sequence_to_dag(seq));
        return dags;
    });

    auto wfg = stage("assemble", [&] { return assemble_wfg(result.dags, graph); });
    wfg = stage("enhance", [&] { return enhance_wfg(std::move(wfg), graph, cfg.enhance, &result.enhance); });
    result.wfg = stage("attach", [&] { return attach_terminals(std::move(wfg)); });
    return result;
}

std::string manifest_to_json_text(const RunConfig& cfg, const GenerateResult& result) {
    const auto p = cfg.effective_provider();
    json provider{{"endpoint_url", p.endpoint_url},
                  {"api_key_env", p.api_key_env},
                  {"timeout_s", p.timeout.count()},
                  {"max_in_flight", p.max_in_flight},
                  {"offline_mode", p.offline_mode},
                  {"seed", p.seed},
                  {"dimension", p.dimension},
                  {"retry_backoff_ms", p.retry_backoff.count()},
                  {"judge_prompt", p.judge_prompt}};
    json config{{"wkg_path", cfg.wkg_path.generic_string()},
                {"intention_dir", cfg.intention_dir.generic_string()},
                {"output_dir", cfg.output_dir.generic_string()},
                {"provider", std::move(provider)},
                {"routing",
                 {{"similarity_threshold", cfg.routing.similarity_threshold},
                  {"knn_k", cfg.routing.knn_k},
                  {"mutual_knn", cfg.routing.mutual_knn}}},
                {"enhance",
                 {{"alpha_start", cfg.enhance.alpha_start},
                  {"delta_alpha", cfg.enhance.delta_alpha},
                  {"alpha_floor", cfg.enhance.alpha_floor}}},
                {"weights",
                 {{"w_compute", cfg.weights.w_compute}, {"w_time", cfg.weights.w_time}, {"w_model", cfg.weights.w_model}}},
                {"cost_defaults",
                 {{"compute", cfg.cost_defaults.compute},
                  {"time", cfg.cost_defaults.time},
                  {"model", cfg.cost_defaults.model}}},
                {"match_threshold", cfg.eval.tau},
                {"trials", cfg.trials}};

    json swkgs = json::array();
    for (const auto& s : result.swkgs) swkgs.push_back(json{{"terminals", s.terminals}, {"nodes", s.node_ids}});
    json added_edges = json::array();
    for (const auto& [a, b] : result.enhance.added_edges) added_edges.push_back(json::array({a, b}));
    json outputs = json::array();
    for (const auto& f : result.written) outputs.push_back(f.filename().generic_string());

    json doc;
    doc["seed"] = cfg.seed;
    doc["config"] = std::move(config);
    doc["stages"] = json{{"routed", result.routed},
                         {"swkgs", std::move(swkgs)},
                         {"enhance",
                          {{"iterations", result.enhance.iterations},
                           {"final_alpha", result.enhance.final_alpha},
                           {"added_nodes", result.enhance.added_nodes},
                           {"added_edges", std::move(added_edges)}}}};
    doc["outputs"] = std::move(outputs);
    return doc.dump(2) + "\n";
}

GenerateResult cmd_generate(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    auto graph = stage("load", [&] { return load_graph(cfg.wkg_path); });
    auto bundle = stage("load", [&] { return load_intention_bundle(cfg.intention_dir); });
    auto providers = make_providers(cfg.effective_provider());

    auto result = run_pipeline(cfg, std::move(graph), std::move(bundle), providers);

    stage("write", [&] {
        fs::create_directories(cfg.output_dir);
        for (std::size_t k = 0; k < result.dags.size(); ++k) {
            const auto path = cfg.output_dir / ("dag_" + std::to_string(k + 1) + ".json");
            save_workflow(result.dags[k], path);
            result.written.push_back(path);
        }
        const auto wfg_path = cfg.output_dir / "wfg.json";
        save_wfg(result.wfg, wfg_path);
        result.written.push_back(wfg_path);
        const auto manifest_path = cfg.output_dir / "manifest.json";
        result.written.push_back(manifest_path);
        detail::write_file(manifest_path, manifest_to_json_text(cfg, result));
        return 0;
    });

    std::size_t tasks = 0;
    for (const auto& [id, t] : result.wfg.nodes) tasks += result.wfg.is_terminal(id) ? 0 : 1;
    out << "routed nodes: " << result.routed.size() << "\n"
        << "sub-graphs: " << result.swkgs.size() << "\n"
        << "workflows: " << result.dags.size() << "\n"
        << "wfg tasks: " << tasks << ", edges: " << result.wfg.edges.size() << "\n"
        << "enhance iterations: " << result.enhance.iterations << "\n";
    for (const auto& f : result.written) out << "wrote " << f.generic_string() << "\n";
    return result;
}

IngestSummary cmd_ingest(const fs::path& records_path, const fs::path& wkg_path, std::ostream& out) {
    auto graph = load_graph(wkg_path);
    const auto records = records_from_json_text(detail::read_file(records_path), records_path.generic_string());
    for (std::size_t i = 0; i < records.size(); ++i) {
        try {
            graph.record_workflow_implementation(records[i]);
        } catch (const Error& e) {
            throw Error(e.code(), "record " + std::to_string(i) + ": " + bare_message(e));
        }
    }
    save_graph(graph, wkg_path);
    IngestSummary s{records.size(), graph.nodes().size(), graph.edges().size(), graph.total_pair_count()};
    out << "records: " << s.records << "\n"
        << "nodes: " << s.nodes << "\n"
        << "edges: " << s.edges << "\n"
        << "total pair count: " << s.total_pair_count << "\n";
    return s;
}

PathResult cmd_optimize(const fs::path& wfg_path, const std::optional<fs::path>& wkg_path,
                        const CostWeights& weights, const CostDefaults& defaults, const fs::path& out_path,
                        std::ostream& out) {
    auto wfg = load_wfg(wfg_path);
    if (!wfg.has_terminals()) wfg = attach_terminals(std::move(wfg));
    const auto history = wkg_path ? load_graph(*wkg_path) : WorkKnowledgeGraph{};
    const auto path = optimal_path(wfg, history, weights, defaults);
    detail::write_file(out_path, path_to_json_text(path, wfg));

    out << "total cost: " << fixed(path.total_cost) << "\n";
    for (std::size_t i = 0; i < path.node_ids.size(); ++i) {
        const auto& id = path.node_ids[i];
        out << "  " << i << ". " << id << " | " << wfg.nodes.at(id).title << " | "
            << fixed(path.per_task[i].combined) << "\n";
    }
    return path;
}

MetricReport cmd_evaluate(const std::vector<fs::path>& generated_paths, const fs::path& reference_path,
                          const RunConfig& cfg, const fs::path& out_path, std::ostream& out) {
    if (generated_paths.empty()) throw Error(ErrorCode::InvalidInput, "no generated workflow files");
    cfg.validate();
    const auto reference = reference_from_workflow(load_workflow(reference_path));
    auto providers = make_providers(cfg.effective_provider());

    std::vector<std::vector<EvalTask>> generated;
    std::vector<TrialResult> trials;
    std::vector<MetricReport> reports;
    for (const auto& p : generated_paths) {
        auto tasks = eval_tasks_from_workflow(load_workflow(p));
        if (tasks.empty()) throw Error(ErrorCode::InvalidInput, p.generic_string() + ": workflow has no tasks");
        trials.push_back(evaluate_trial(tasks, reference, *providers.judge, *providers.embedder, cfg.eval));
        reports.push_back(trials.back().report);
        generated.push_back(std::move(tasks));
    }
    const auto average = evaluate_trials(reports);
    detail::write_file(out_path, eval_report_to_json_text(trials, average, reference.tasks, generated));

    if (static_cast<int>(generated_paths.size()) != cfg.trials) {
        out << "note: " << generated_paths.size() << " trial(s) evaluated, " << cfg.trials << " configured\n";
    }
    out << "coverage: " << fixed(average.coverage) << "\n"
        << "kendall: " << fixed(average.kendall_weighted) << " (raw " << fixed(average.kendall_raw) << ")\n"
        << "dtw: " << fixed(average.dtw) << "\n"
        << "cosine: " << fixed(average.cosine) << "\n"
        << "bleu: " << fixed(average.bleu) << "\n"
        << "pentagon area: " << fixed(average.pentagon_area) << "\n";
    return average;
}

std::vector<RankedModel> cmd_rank(const fs::path& metrics_csv, const std::optional<fs::path>& out_path,
                                  std::ostream& out) {
    const auto rows = metrics_table_from_csv_text(detail::read_file(metrics_csv), metrics_csv.generic_string());
    const auto ranking = rank_by_pentagon(rows);
    if (out_path) detail::write_file(*out_path, ranking_to_json_text(ranking));
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        out << i + 1 << ". " << ranking[i].model << "  area " << fixed(ranking[i].area, 5) << "  mean "
            << fixed(ranking[i].mean, 4) << "\n";
    }
    return ranking;
}

} // namespace wkforge
