#include "wkforge/evaluation.hpp"

#include "json_util.hpp"
#include "wkforge/errors.hpp"
#include "wkforge/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <tuple>

namespace wkforge {

using detail::json;

std::string EvalTask::text() const { return title + "\n" + description; }

void ReferenceWorkflow::validate() const {
    if (tasks.empty()) throw Error(ErrorCode::InvalidInput, "reference workflow has no tasks");
    std::set<std::string> seen;
    for (const auto& t : tasks) {
        if (!seen.insert(t.id).second) throw Error(ErrorCode::InvalidInput, "duplicate reference task id '" + t.id + "'");
    }
}

std::vector<EvalTask> eval_tasks_from_workflow(const WorkflowDag& dag) {
    std::vector<EvalTask> out;
    for (const auto& t : linearize(dag)) out.push_back(EvalTask{t.local_id, t.title, t.description});
    return out;
}

ReferenceWorkflow reference_from_workflow(const WorkflowDag& dag) {
    ReferenceWorkflow ref{eval_tasks_from_workflow(dag)};
    ref.validate();
    return ref;
}

// ---------------------------------------------------------------------------
// matching

namespace {

std::vector<MatchPair> greedy_pairs(const std::vector<std::vector<double>>& scores, double tau) {
    std::vector<MatchPair> candidates;
    for (std::size_t g = 0; g < scores.size(); ++g) {
        for (std::size_t r = 0; r < scores[g].size(); ++r) {
            if (scores[g][r] >= tau) candidates.push_back({g, r, scores[g][r]});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const MatchPair& a, const MatchPair& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.generated, a.reference) < std::tie(b.generated, b.reference);
    });
    std::set<std::size_t> used_g;
    std::set<std::size_t> used_r;
    std::vector<MatchPair> out;
    for (const auto& c : candidates) {
        if (used_g.contains(c.generated) || used_r.contains(c.reference)) continue;
        used_g.insert(c.generated);
        used_r.insert(c.reference);
        out.push_back(c);
    }
    return out;
}

// Minimum-cost assignment on a square matrix (potentials method), 1-based.
std::vector<std::size_t> assignment(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
}

std::vector<MatchPair> hungarian_pairs(const std::vector<std::vector<double>>& scores, double tau) {
    const std::size_t rows = scores.size();
    const std::size_t cols = rows ? scores[0].size() : 0;
    const std::size_t n = std::max(rows, cols);
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
    for (std::size_t g = 0; g < rows; ++g) {
        for (std::size_t r = 0; r < cols; ++r) {
            if (scores[g][r] >= tau) cost[g][r] = -scores[g][r];
        }
    }
    const auto col = assignment(cost);
    std::vector<MatchPair> out;
    for (std::size_t g = 0; g < rows; ++g) {
        const std::size_t r = col[g];
        if (r < cols && scores[g][r] >= tau) out.push_back({g, r, scores[g][r]});
    }
    return out;
}

} // namespace

Matching match_scores(const std::vector<std::vector<double>>& scores, double tau, MatchStrategy strategy) {
    if (scores.empty() || scores[0].empty()) throw Error(ErrorCode::InvalidInput, "matching needs non-empty task lists");
    for (const auto& row : scores) {
        if (row.size() != scores[0].size()) throw Error(ErrorCode::InvalidInput, "score matrix is ragged");
        for (double s : row) {
            if (!std::isfinite(s)) throw Error(ErrorCode::InvalidInput, "non-finite judge score");
        }
    }
    if (!std::isfinite(tau)) throw Error(ErrorCode::InvalidInput, "match threshold must be finite");

    Matching m;
    m.pairs = strategy == MatchStrategy::Greedy ? greedy_pairs(scores, tau) : hungarian_pairs(scores, tau);
    std::sort(m.pairs.begin(), m.pairs.end(),
              [](const MatchPair& a, const MatchPair& b) { return a.generated < b.generated; });
    std::vector<bool> matched(scores.size(), false);
    for (const auto& p : m.pairs) matched[p.generated] = true;
    for (std::size_t g = 0; g < scores.size(); ++g) {
        if (!matched[g]) m.unmatched_generated.push_back(g);
    }
    return m;
}

Matching match_tasks(const std::vector<EvalTask>& generated, const ReferenceWorkflow& reference, Judge& judge,
                     double tau, MatchStrategy strategy) {
    if (generated.empty() || reference.tasks.empty()) {
        throw Error(ErrorCode::InvalidInput, "matching needs non-empty task lists");
    }
    std::vector<std::vector<double>> scores(generated.size(), std::vector<double>(reference.tasks.size()));
    for (std::size_t g = 0; g < generated.size(); ++g) {
        const auto gt = generated[g].text();
        for (std::size_t r = 0; r < reference.tasks.size(); ++r) {
            scores[g][r] = judge.judge_match(gt, reference.tasks[r].text());
        }
    }
    return match_scores(scores, tau, strategy);
}

// ---------------------------------------------------------------------------
// metrics

double coverage_ratio(const Matching& matching, std::size_t generated_count) {
    if (generated_count == 0) throw Error(ErrorCode::InvalidInput, "coverage needs at least one generated task");
    if (matching.pairs.size() > generated_count) {
        throw Error(ErrorCode::InvalidInput, "more pairs than generated tasks");
    }
    return static_cast<double>(matching.pairs.size()) / static_cast<double>(generated_count);
}

namespace {

std::vector<std::size_t> reference_order(const Matching& matching) {
    auto pairs = matching.pairs;
    std::sort(pairs.begin(), pairs.end(),
              [](const MatchPair& a, const MatchPair& b) { return a.generated < b.generated; });
    std::vector<std::size_t> out;
    for (const auto& p : pairs) out.push_back(p.reference);
    return out;
}

} // namespace

double kendall_tau_a(std::span<const std::size_t> order) {
    const std::size_t n = order.size();
    if (n < 2) return 0.0;
    long long concordant = 0;
    long long discordant = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (order[i] < order[j]) ++concordant;
            else if (order[i] > order[j]) ++discordant;
        }
    }
    const double total = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    return static_cast<double>(concordant - discordant) / total;
}

KendallScore kendall_score(const Matching& matching, std::size_t generated_count) {
    const auto order = reference_order(matching);
    KendallScore k;
    k.raw = kendall_tau_a(order);
    k.weighted = k.raw * coverage_ratio(matching, generated_count);
    return k;
}

double dtw_normalized(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.empty() || b.empty()) return 0.0;
    // Each cell holds (cost, path length); lexicographic minimum.
    using Cell = std::pair<long long, long long>;
    const Cell inf{std::numeric_limits<long long>::max() / 4, 0};
    std::vector<std::vector<Cell>> d(a.size(), std::vector<Cell>(b.size(), inf));
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const long long local = a[i] == b[j] ? 0 : 1;
            Cell best = (i == 0 && j == 0) ? Cell{0, 0} : inf;
            if (i > 0) best = std::min(best, d[i - 1][j]);
            if (j > 0) best = std::min(best, d[i][j - 1]);
            if (i > 0 && j > 0) best = std::min(best, d[i - 1][j - 1]);
            d[i][j] = {best.first + local, best.second + 1};
        }
    }
    const auto [cost, length] = d.back().back();
    return 1.0 - static_cast<double>(cost) / static_cast<double>(length);
}

double dtw_score(const Matching& matching, std::size_t generated_count, std::size_t reference_count) {
    for (const auto& p : matching.pairs) {
        if (p.reference >= reference_count) throw Error(ErrorCode::InvalidInput, "reference index out of range");
    }
    const double coverage = coverage_ratio(matching, generated_count);
    if (matching.pairs.empty()) return 0.0;
    const auto generated_order = reference_order(matching);
    auto sorted = generated_order;
    std::sort(sorted.begin(), sorted.end());
    return dtw_normalized(generated_order, sorted) * coverage;
}

namespace {

using Ngrams = std::map<std::vector<std::string>, int>;

Ngrams ngrams(const std::vector<std::string>& tokens, std::size_t n) {
    Ngrams out;
    if (tokens.size() < n) return out;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return out;
}

} // namespace

double sentence_bleu(std::string_view hypothesis, std::string_view reference) {
    const auto hyp = text::word_tokens(hypothesis);
    const auto ref = text::word_tokens(reference);
    if (hyp.empty() || ref.empty()) return 0.0;
    const std::size_t order = std::min<std::size_t>(4, hyp.size());
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= order; ++n) {
        const auto h = ngrams(hyp, n);
        const auto r = ngrams(ref, n);
        long long matched = 0;
        for (const auto& [g, count] : h) {
            auto it = r.find(g);
            if (it != r.end()) matched += std::min(count, it->second);
        }
        const double total = static_cast<double>(hyp.size() - n + 1);
        const double p = matched > 0 ? static_cast<double>(matched) / total : kBleuEpsilon / total;
        log_sum += std::log(p);
    }
    const double c = static_cast<double>(hyp.size());
    const double rl = static_cast<double>(ref.size());
    const double bp = c >= rl ? 1.0 : std::exp(1.0 - rl / c);
    return std::clamp(bp * std::exp(log_sum / static_cast<double>(order)), 0.0, 1.0);
}

namespace {

std::string bleu_text(const EvalTask& t) { return t.title + " " + t.description; }

void check_pairs(const Matching& matching, std::size_t generated, std::size_t reference) {
    for (const auto& p : matching.pairs) {
        if (p.generated >= generated || p.reference >= reference) {
            throw Error(ErrorCode::InvalidInput, "matching index out of range");
        }
    }
}

} // namespace

double bleu_score(const Matching& matching, const std::vector<EvalTask>& generated,
                  const ReferenceWorkflow& reference) {
    if (generated.empty()) throw Error(ErrorCode::InvalidInput, "no generated tasks");
    check_pairs(matching, generated.size(), reference.tasks.size());
    double sum = 0.0;
    for (const auto& p : matching.pairs) {
        sum += sentence_bleu(bleu_text(generated[p.generated]), bleu_text(reference.tasks[p.reference]));
    }
    return sum / static_cast<double>(generated.size());
}

double cosine_score(const Matching& matching, const std::vector<EvalTask>& generated,
                    const ReferenceWorkflow& reference, Embedder& embedder) {
    if (generated.empty()) throw Error(ErrorCode::InvalidInput, "no generated tasks");
    check_pairs(matching, generated.size(), reference.tasks.size());
    double sum = 0.0;
    for (const auto& p : matching.pairs) {
        const auto a = embedder.embed(generated[p.generated].text());
        const auto b = embedder.embed(reference.tasks[p.reference].text());
        sum += std::max(0.0, cosine(a, b));
    }
    return std::clamp(sum / static_cast<double>(generated.size()), 0.0, 1.0);
}

double pentagon_area(std::span<const double> values) {
    if (values.size() != 5) {
        throw Error(ErrorCode::InvalidInput, "pentagon needs 5 values, got " + std::to_string(values.size()));
    }
    std::array<double, 5> v{};
    for (std::size_t i = 0; i < 5; ++i) {
        if (std::isnan(values[i])) throw Error(ErrorCode::InvalidInput, "pentagon value is NaN");
        v[i] = std::clamp(values[i], 0.0, 1.0);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < 5; ++i) sum += v[i] * v[(i + 1) % 5];
    return 0.5 * std::sin(2.0 * std::numbers::pi / 5.0) * sum;
}

std::array<double, 5> MetricReport::axes() const { return {coverage, kendall_weighted, dtw, cosine, bleu}; }

double MetricReport::mean() const {
    const auto a = axes();
    return (a[0] + a[1] + a[2] + a[3] + a[4]) / 5.0;
}

MetricReport make_report(double coverage, double kendall_raw, double kendall_weighted, double dtw, double cosine,
                         double bleu) {
    MetricReport r;
    r.coverage = coverage;
    r.kendall_raw = kendall_raw;
    r.kendall_weighted = kendall_weighted;
    r.dtw = dtw;
    r.cosine = cosine;
    r.bleu = bleu;
    const auto axes = r.axes();
    r.pentagon_area = pentagon_area(axes);
    return r;
}

TrialResult evaluate_trial(const std::vector<EvalTask>& generated, const ReferenceWorkflow& reference, Judge& judge,
                           Embedder& embedder, const EvalOptions& options) {
    reference.validate();
    TrialResult out;
    out.matching = match_tasks(generated, reference, judge, options.tau, options.strategy);
    const auto& m = out.matching;
    const auto k = kendall_score(m, generated.size());
    out.report = make_report(coverage_ratio(m, generated.size()), k.raw, k.weighted,
                             dtw_score(m, generated.size(), reference.tasks.size()),
                             cosine_score(m, generated, reference, embedder), bleu_score(m, generated, reference));
    return out;
}

MetricReport evaluate_trials(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw Error(ErrorCode::InvalidInput, "no trials to average");
    MetricReport sum;
    for (const auto& r : reports) {
        sum.coverage += r.coverage;
        sum.kendall_raw += r.kendall_raw;
        sum.kendall_weighted += r.kendall_weighted;
        sum.dtw += r.dtw;
        sum.cosine += r.cosine;
        sum.bleu += r.bleu;
    }
    const double n = static_cast<double>(reports.size());
    auto avg = make_report(sum.coverage / n, sum.kendall_raw / n, sum.kendall_weighted / n, sum.dtw / n,
                           sum.cosine / n, sum.bleu / n);
    avg.trials = static_cast<int>(reports.size());
    return avg;
}

// ---------------------------------------------------------------------------
// ranking

std::vector<RankedModel> rank_by_pentagon(const std::vector<ModelRow>& rows) {
    std::vector<RankedModel> out;
    for (const auto& row : rows) {
        double sum = 0.0;
        for (double v : row.values) sum += v;
        out.push_back({row.model, pentagon_area(row.values), sum / 5.0});
    }
    std::stable_sort(out.begin(), out.end(), [](const RankedModel& a, const RankedModel& b) { return a.area > b.area; });
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.emplace_back(text::trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

std::vector<ModelRow> metrics_table_from_csv_text(const std::string& content, const std::string& source_name) {
    std::vector<std::string> lines;
    for (auto& l : text::split_lines(content)) {
        if (!text::trim(l).empty()) lines.push_back(l);
    }
    if (lines.empty()) throw Error(ErrorCode::ParseError, source_name + ": empty metrics table");
    const auto header = split_csv_line(lines[0]);
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column[text::ascii_lower(header[i])] = i;
    auto col = [&](const std::string& name) {
        auto it = column.find(name);
        if (it == column.end()) throw Error(ErrorCode::ParseError, source_name + ": missing column '" + name + "'");
        return it->second;
    };
    const std::size_t model_col = col("model");
    std::array<std::size_t, 5> axis_col{};
    for (std::size_t a = 0; a < 5; ++a) axis_col[a] = col(kPentagonAxes[a]);

    std::vector<ModelRow> rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto cells = split_csv_line(lines[li]);
        const std::string where = source_name + ": line " + std::to_string(li + 1);
        if (cells.size() != header.size()) {
            throw Error(ErrorCode::ParseError, where + ": expected " + std::to_string(header.size()) + " cells");
        }
        ModelRow row;
        row.model = cells[model_col];
        for (std::size_t a = 0; a < 5; ++a) {
            const auto& cell = cells[axis_col[a]];
            try {
                std::size_t used = 0;
                row.values[a] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::logic_error&) {
                throw Error(ErrorCode::ParseError, where + ": '" + cell + "' is not a number");
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// reports

namespace {

json report_json(const MetricReport& r) {
    return json{{"coverage", r.coverage},
                {"kendall_raw", r.kendall_raw},
                {"kendall_weighted", r.kendall_weighted},
                {"dtw", r.dtw},
                {"cosine", r.cosine},
                {"bleu", r.bleu},
                {"pentagon_area", r.pentagon_area},
                {"mean", r.mean()},
                {"trials", r.trials}};
}

} // namespace

std::string eval_report_to_json_text(const std::vector<TrialResult>& trials, const MetricReport& average,
                                     const std::vector<EvalTask>& reference_tasks,
                                     const std::vector<std::vector<EvalTask>>& generated_tasks) {
    json rows = json::array();
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& t = trials[i];
        json row = report_json(t.report);
        row["trial"] = i + 1;
        json pairs = json::array();
        for (const auto& p : t.matching.pairs) {
            pairs.push_back(json{{"generated", p.generated},
                                 {"reference", p.reference},
                                 {"generated_id", generated_tasks.at(i).at(p.generated).id},
                                 {"reference_id", reference_tasks.at(p.reference).id},
                                 {"score", p.score}});
        }
        row["matching"] = json{{"pairs", std::move(pairs)}, {"unmatched_generated", t.matching.unmatched_generated}};
        rows.push_back(std::move(row));
    }
    json axes = json::array();
    for (const char* a : kPentagonAxes) axes.push_back(a);
    const auto values = average.axes();
    json clamped = json::array();
    for (double v : values) clamped.push_back(std::clamp(v, 0.0, 1.0));
    json doc;
    doc["trials"] = std::move(rows);
    doc["average"] = report_json(average);
    doc["radar"] = json{{"axes", std::move(axes)}, {"values", std::move(clamped)}};
    return doc.dump(2) + "\n";
}

std::string ranking_to_json_text(const std::vector<RankedModel>& ranking) {
    json rows = json::array();
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        rows.push_back(json{{"rank", i + 1},
                            {"model", ranking[i].model},
                            {"pentagon_area", ranking[i].area},
                            {"mean", ranking[i].mean}});
    }
    return json{{"ranking", std::move(rows)}}.dump(2) + "\n";
}

} // namespace wkforge
