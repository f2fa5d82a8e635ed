#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

#include "mcqeval/question.hpp"
#include "mcqeval/scoring.hpp"

namespace mcqeval {

struct MethodAccuracy {
    Method method = Method::raw;
    Dataset dataset = Dataset::mmlu;
    std::string model_tag;
    double accuracy_percent = 0.0; // 100 * n_correct / n_total
    std::size_t n_total = 0;
    std::size_t n_correct = 0;
};

/// Per-(model, dataset) spread of accuracies across methods:
/// delta = max - min.
struct DisparityRecord {
    std::string model_tag;
    Dataset dataset = Dataset::mmlu;
    std::map<Method, double> per_method; // method -> accuracy_percent
    double delta = 0.0;
};

/// One question's option-length geometry: the correct option's length
/// against the median length of the wrong options (characters).
struct LengthBiasPoint {
    std::string question_id;
    int correct_len = 0;
    double median_wrong_len = 0.0;
    double mean_len = 0.0; // (correct_len + median_wrong_len) / 2
    double diff = 0.0;     // correct_len - median_wrong_len
    bool in_error_set = false;
};

struct BiasSummary {
    enum class Subset { all, errors };
    Subset subset = Subset::all;
    std::size_t n = 0;
    double mean_diff = 0.0;
    double sd_diff = 0.0; // population standard deviation
    double loa_low = 0.0; // mean -/+ 1.96 * sd
    double loa_high = 0.0;
};

// All predictions must share one method; empty input is an error.
MethodAccuracy accuracy(const std::vector<Prediction>& predictions, Dataset dataset,
                        const std::string& model_tag);

// Requires >= 2 methods.
DisparityRecord disparity(const std::map<Method, double>& per_method,
                          const std::string& model_tag, Dataset dataset);

// Lengths are Unicode scalar counts of the raw choice texts; an even number
// of wrong options takes the mean of the two middle lengths.
LengthBiasPoint length_stats(const Question& question);

struct BlandAltmanResult {
    std::vector<LengthBiasPoint> points; // in_error_set filled in
    BiasSummary all;
    std::optional<BiasSummary> errors; // absent when error_ids is empty
};

BlandAltmanResult bland_altman(std::vector<LengthBiasPoint> points,
                               const std::set<std::string>& error_ids);

struct HistogramBin {
    double bin_low = 0.0;
    std::size_t count = 0;
};

// Half-open bins [n*w, (n+1)*w) anchored at zero; only non-empty bins are
// returned, in ascending order. bin_width must be positive.
std::vector<HistogramBin> histogram(const std::vector<double>& diffs, double bin_width);

/// Everything one run (or one offline reduction) produced, tagged with its
/// run id so reports can refuse to merge unrelated artifacts.
struct RunArtifacts {
    std::string run_id;
    std::vector<MethodAccuracy> accuracies;
    std::vector<DisparityRecord> disparities;
    std::vector<LengthBiasPoint> bias_points;
    std::vector<BiasSummary> bias_summaries;
};

struct EvaluationReport {
    std::string run_id;
    std::string length_unit = "unicode_chars";
    std::vector<MethodAccuracy> accuracies;
    std::vector<DisparityRecord> disparities;
    std::vector<LengthBiasPoint> bias_points;
    std::vector<BiasSummary> bias_summaries;

    nlohmann::json to_json() const; // deterministic field ordering
};

// Merges artifact bundles into one report. Errors on mixed run ids or a
// duplicate (model, dataset, method) accuracy cell.
EvaluationReport build_report(std::span<const RunArtifacts> inputs);

// Flat CSV emission. Columns are documented in the README.
void write_accuracies_csv(std::ostream& out, const std::vector<MethodAccuracy>& rows);
void write_disparity_csv(std::ostream& out, const std::vector<DisparityRecord>& rows);
void write_bias_points_csv(std::ostream& out, const std::vector<LengthBiasPoint>& rows);
void write_bias_summary_csv(std::ostream& out, const std::vector<BiasSummary>& rows);

const char* bias_subset_name(BiasSummary::Subset s);

} // namespace mcqeval
