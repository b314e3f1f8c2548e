#pragma once

#include "wkforge/assembly.hpp"
#include "wkforge/evaluation.hpp"
#include "wkforge/optimizer.hpp"
#include "wkforge/providers.hpp"
#include "wkforge/retrieval.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wkforge {

struct RunConfig {
    std::filesystem::path wkg_path;
    std::filesystem::path intention_dir;
    std::filesystem::path output_dir;
    ProviderConfig provider;
    RoutingConfig routing;
    EnhanceConfig enhance;
    CostWeights weights;
    CostDefaults cost_defaults;
    EvalOptions eval;
    int trials = 10;
    std::uint64_t seed = 0;

    void validate() const;
    // Provider settings with the run seed and the WKFORGE_OFFLINE override applied.
    ProviderConfig effective_provider() const;
};

struct IngestSummary {
    std::size_t records = 0;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    long long total_pair_count = 0;
};

// Applies every record of the records file to the WKG file in place.
// Errors name the offending record index; the WKG file is untouched on error.
IngestSummary cmd_ingest(const std::filesystem::path& records_path, const std::filesystem::path& wkg_path,
                         std::ostream& out);

struct GenerateResult {
    WorkflowGraph wfg;
    std::vector<WorkflowDag> dags;
    std::vector<SubWKG> swkgs;
    NodeSet routed;
    EnhanceReport enhance;
    std::vector<std::filesystem::path> written;
};

// encode -> route -> split -> extract -> textualize -> generate -> dagify ->
// assemble -> enhance -> attach. Writes dag_<k>.json, wfg.json and
// manifest.json into cfg.output_dir. Failures surface as StageError.
GenerateResult cmd_generate(const RunConfig& cfg, std::ostream& out);

// Same pipeline without touching the file system.
GenerateResult run_pipeline(const RunConfig& cfg, WorkKnowledgeGraph graph, IntentionBundle bundle,
                            Providers& providers);

PathResult cmd_optimize(const std::filesystem::path& wfg_path, const std::optional<std::filesystem::path>& wkg_path,
                        const CostWeights& weights, const CostDefaults& defaults,
                        const std::filesystem::path& out_path, std::ostream& out);

// Every generated workflow file is one trial.
MetricReport cmd_evaluate(const std::vector<std::filesystem::path>& generated_paths,
                          const std::filesystem::path& reference_path, const RunConfig& cfg,
                          const std::filesystem::path& out_path, std::ostream& out);

std::vector<RankedModel> cmd_rank(const std::filesystem::path& metrics_csv,
                                  const std::optional<std::filesystem::path>& out_path, std::ostream& out);

std::string manifest_to_json_text(const RunConfig& cfg, const GenerateResult& result);

} // namespace wkforge
