#pragma once

#include "wkforge/generation.hpp"
#include "wkforge/providers.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace wkforge {

struct EvalTask {
    std::string id;
    std::string title;
    std::string description;

    // "title\ndescription", the text shown to judges and embedders.
    std::string text() const;
};

struct ReferenceWorkflow {
    std::vector<EvalTask> tasks;

    void validate() const; // non-empty, unique ids
};

// Tasks of a workflow file in topological order (ties by file order).
std::vector<EvalTask> eval_tasks_from_workflow(const WorkflowDag& dag);
ReferenceWorkflow reference_from_workflow(const WorkflowDag& dag);

struct MatchPair {
    std::size_t generated = 0;
    std::size_t reference = 0;
    double score = 0.0;
};

struct Matching {
    std::vector<MatchPair> pairs; // sorted by generated index
    std::vector<std::size_t> unmatched_generated;
};

inline constexpr double kDefaultMatchThreshold = 0.75;

enum class MatchStrategy { Greedy, Hungarian };

// Scores every (generated, reference) pair with the judge. Greedy accepts
// pairs by descending score (ties by generated then reference index) while both
// sides are free; Hungarian maximises the summed score of pairs at or above the
// threshold. Only pairs with score >= tau are kept either way.
Matching match_tasks(const std::vector<EvalTask>& generated, const ReferenceWorkflow& reference, Judge& judge,
                     double tau = kDefaultMatchThreshold, MatchStrategy strategy = MatchStrategy::Greedy);

// Same, over a precomputed score matrix scores[g][r].
Matching match_scores(const std::vector<std::vector<double>>& scores, double tau = kDefaultMatchThreshold,
                      MatchStrategy strategy = MatchStrategy::Greedy);

double coverage_ratio(const Matching& matching, std::size_t generated_count);

struct KendallScore {
    double raw = 0.0;
    double weighted = 0.0;
};

// Tau-a over the reference indices of the matched pairs read in generated order.
KendallScore kendall_score(const Matching& matching, std::size_t generated_count);
double kendall_tau_a(std::span<const std::size_t> order);

// DTW between the matched reference ids in generated order and the same ids in
// reference order, 0/1 local cost. Among minimum-cost warping paths the
// shortest is used. Returns (1 - cost / length) scaled by coverage.
double dtw_score(const Matching& matching, std::size_t generated_count, std::size_t reference_count);
double dtw_normalized(std::span<const std::size_t> a, std::span<const std::size_t> b);

inline constexpr double kBleuEpsilon = 1e-9;

// Sentence BLEU over word tokens, up to 4-grams limited to the orders the
// hypothesis actually has, uniform weights, brevity penalty, add-epsilon for
// orders without matches.
double sentence_bleu(std::string_view hypothesis, std::string_view reference);
double bleu_score(const Matching& matching, const std::vector<EvalTask>& generated, const ReferenceWorkflow& reference);

double cosine_score(const Matching& matching, const std::vector<EvalTask>& generated,
                    const ReferenceWorkflow& reference, Embedder& embedder);

inline constexpr std::array<const char*, 5> kPentagonAxes = {"coverage", "kendall", "dtw", "cosine", "bleu"};

// Area of the radar pentagon with equal angles; values are clamped to [0,1].
double pentagon_area(std::span<const double> values);

struct MetricReport {
    double coverage = 0.0;
    double kendall_raw = 0.0;
    double kendall_weighted = 0.0;
    double dtw = 0.0;
    double bleu = 0.0;
    double cosine = 0.0;
    double pentagon_area = 0.0;
    int trials = 1;

    // coverage, kendall (weighted), dtw, cosine, bleu
    std::array<double, 5> axes() const;
    double mean() const;
};

MetricReport make_report(double coverage, double kendall_raw, double kendall_weighted, double dtw, double cosine,
                         double bleu);

struct TrialResult {
    MetricReport report;
    Matching matching;
};

struct EvalOptions {
    double tau = kDefaultMatchThreshold;
    MatchStrategy strategy = MatchStrategy::Greedy;
};

TrialResult evaluate_trial(const std::vector<EvalTask>& generated, const ReferenceWorkflow& reference, Judge& judge,
                           Embedder& embedder, const EvalOptions& options = {});

// Per-metric arithmetic mean; pentagon area recomputed from the means.
MetricReport evaluate_trials(const std::vector<MetricReport>& reports);

struct ModelRow {
    std::string model;
    std::array<double, 5> values{}; // pentagon axis order
};

struct RankedModel {
    std::string model;
    double area = 0.0;
    double mean = 0.0;
};

// Descending pentagon area; equal areas keep input order.
std::vector<RankedModel> rank_by_pentagon(const std::vector<ModelRow>& rows);

// CSV with a header naming "model" and the five axis columns in any order.
std::vector<ModelRow> metrics_table_from_csv_text(const std::string& content, const std::string& source_name = "<memory>");

std::string eval_report_to_json_text(const std::vector<TrialResult>& trials, const MetricReport& average,
                                     const std::vector<EvalTask>& reference_tasks,
                                     const std::vector<std::vector<EvalTask>>& generated_tasks);
std::string ranking_to_json_text(const std::vector<RankedModel>& ranking);

} // namespace wkforge
