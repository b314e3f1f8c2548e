// wkforge command-line entry point.
#include "wkforge/commands.hpp"
#include "wkforge/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using namespace wkforge;
namespace fs = std::filesystem;

void add_provider_flags(CLI::App& cmd, RunConfig& cfg, double& timeout_s, int& backoff_ms, bool& online) {
    cmd.add_option("--endpoint", cfg.provider.endpoint_url, "Provider base URL (online mode)");
    cmd.add_option("--api-key-env", cfg.provider.api_key_env, "Environment variable holding the bearer token")
        ->capture_default_str();
    cmd.add_option("--timeout", timeout_s, "Provider request timeout in seconds")->capture_default_str();
    cmd.add_option("--max-in-flight", cfg.provider.max_in_flight, "Concurrent provider requests")
        ->capture_default_str();
    cmd.add_option("--dimension", cfg.provider.dimension, "Embedding dimension")->capture_default_str();
    cmd.add_option("--retry-backoff-ms", backoff_ms, "Base delay before the provider retry")->capture_default_str();
    cmd.add_option("--judge-prompt", cfg.provider.judge_prompt, "Judge template with {generated} and {reference}");
    cmd.add_flag("--online", online, "Use the HTTP providers instead of the offline ones");
    cmd.add_option("--seed", cfg.seed, "Run seed")->capture_default_str();
}

void finish_provider(RunConfig& cfg, double timeout_s, int backoff_ms, bool online) {
    cfg.provider.timeout = std::chrono::duration<double>(timeout_s);
    cfg.provider.retry_backoff = std::chrono::milliseconds(backoff_ms);
    cfg.provider.offline_mode = !online;
}

void add_weight_flags(CLI::App& cmd, RunConfig& cfg) {
    cmd.add_option("--w-compute", cfg.weights.w_compute, "Weight of compute cost")->capture_default_str();
    cmd.add_option("--w-time", cfg.weights.w_time, "Weight of time cost")->capture_default_str();
    cmd.add_option("--w-model", cfg.weights.w_model, "Weight of model-usage cost")->capture_default_str();
    cmd.add_option("--default-compute", cfg.cost_defaults.compute, "Compute cost of tasks without history")
        ->capture_default_str();
    cmd.add_option("--default-time", cfg.cost_defaults.time, "Time cost of tasks without history")
        ->capture_default_str();
    cmd.add_option("--default-model", cfg.cost_defaults.model, "Model cost of tasks without history")
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wkforge: workflow generation over a work knowledge graph"};
    app.require_subcommand(1);

    RunConfig cfg;
    double timeout_s = cfg.provider.timeout.count();
    int backoff_ms = static_cast<int>(cfg.provider.retry_backoff.count());
    bool online = false;

    fs::path records_path;
    auto* ingest = app.add_subcommand("ingest", "Apply implementation records to a WKG file");
    ingest->add_option("records", records_path, "Records file")->required()->check(CLI::ExistingFile);
    ingest->add_option("wkg", cfg.wkg_path, "WKG file, updated in place")->required()->check(CLI::ExistingFile);

    auto* generate = app.add_subcommand("generate", "Run the generation pipeline and write the WFG");
    generate->add_option("--wkg", cfg.wkg_path, "WKG file")->required()->check(CLI::ExistingFile);
    generate->add_option("--intention", cfg.intention_dir, "Intention bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    generate->add_option("--out", cfg.output_dir, "Output directory")->required();
    generate->add_option("--threshold", cfg.routing.similarity_threshold, "Routing similarity threshold")
        ->capture_default_str();
    generate->add_option("--knn-k", cfg.routing.knn_k, "Neighbors per node when splitting")->capture_default_str();
    generate->add_flag("!--no-mutual", cfg.routing.mutual_knn, "Keep one-sided k-NN links");
    generate->add_option("--alpha-start", cfg.enhance.alpha_start, "Initial enhancement threshold")
        ->capture_default_str();
    generate->add_option("--delta-alpha", cfg.enhance.delta_alpha, "Enhancement threshold step")
        ->capture_default_str();
    generate->add_option("--alpha-floor", cfg.enhance.alpha_floor, "Lowest enhancement threshold")
        ->capture_default_str();
    add_provider_flags(*generate, cfg, timeout_s, backoff_ms, online);

    fs::path wfg_path;
    fs::path out_path;
    std::optional<fs::path> history_path;
    auto* optimize = app.add_subcommand("optimize", "Find the minimum-cost path through a WFG");
    optimize->add_option("wfg", wfg_path, "WFG file")->required()->check(CLI::ExistingFile);
    optimize->add_option("--wkg", history_path, "WKG file with cost history")->check(CLI::ExistingFile);
    optimize->add_option("--out", out_path, "Path file")->required();
    add_weight_flags(*optimize, cfg);

    std::vector<fs::path> generated_paths;
    fs::path reference_path;
    bool hungarian = false;
    auto* evaluate = app.add_subcommand("evaluate", "Score generated workflows against a reference");
    evaluate->add_option("generated", generated_paths, "Generated workflow files, one per trial")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--reference", reference_path, "Reference workflow file")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--out", out_path, "Report file")->required();
    evaluate->add_option("--tau", cfg.eval.tau, "Judge score needed for a match")->capture_default_str();
    evaluate->add_flag("--hungarian", hungarian, "Optimal assignment instead of greedy matching");
    evaluate->add_option("--trials", cfg.trials, "Expected number of trials")->capture_default_str();
    add_provider_flags(*evaluate, cfg, timeout_s, backoff_ms, online);

    fs::path metrics_path;
    std::optional<fs::path> rank_out;
    auto* rank = app.add_subcommand("rank", "Rank models by pentagon area");
    rank->add_option("metrics", metrics_path, "CSV with model,coverage,kendall,dtw,cosine,bleu")
        ->required()
        ->check(CLI::ExistingFile);
    rank->add_option("--out", rank_out, "Ranking file");

    CLI11_PARSE(app, argc, argv);
    finish_provider(cfg, timeout_s, backoff_ms, online);
    cfg.eval.strategy = hungarian ? MatchStrategy::Hungarian : MatchStrategy::Greedy;

    try {
        if (*ingest) cmd_ingest(records_path, cfg.wkg_path, std::cout);
        else if (*generate) cmd_generate(cfg, std::cout);
        else if (*optimize) cmd_optimize(wfg_path, history_path, cfg.weights, cfg.cost_defaults, out_path, std::cout);
        else if (*evaluate) cmd_evaluate(generated_paths, reference_path, cfg, out_path, std::cout);
        else if (*rank) cmd_rank(metrics_path, rank_out, std::cout);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
