#include "mcqeval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mcqeval/errors.hpp"
#include "mcqeval/text.hpp"

namespace mcqeval {

MethodAccuracy accuracy(const std::vector<Prediction>& predictions, Dataset dataset,
                        const std::string& model_tag) {
    if (predictions.empty()) throw ConfigError("accuracy: no predictions");
    MethodAccuracy acc;
    acc.method = predictions.front().method;
    acc.dataset = dataset;
    acc.model_tag = model_tag;
    for (const auto& p : predictions) {
        if (p.method != acc.method)
            throw ConfigError("accuracy: mixed methods in prediction list");
        ++acc.n_total;
        if (p.is_correct) ++acc.n_correct;
    }
    acc.accuracy_percent =
        100.0 * static_cast<double>(acc.n_correct) / static_cast<double>(acc.n_total);
    return acc;
}

DisparityRecord disparity(const std::map<Method, double>& per_method,
                          const std::string& model_tag, Dataset dataset) {
    if (per_method.size() < 2) throw ConfigError("disparity: need >= 2 methods");
    DisparityRecord rec;
    rec.model_tag = model_tag;
    rec.dataset = dataset;
    rec.per_method = per_method;
    double lo = per_method.begin()->second;
    double hi = lo;
    for (const auto& [m, acc] : per_method) {
        lo = std::min(lo, acc);
        hi = std::max(hi, acc);
    }
    rec.delta = hi - lo;
    return rec;
}

LengthBiasPoint length_stats(const Question& question) {
    LengthBiasPoint pt;
    pt.question_id = question.id;
    pt.correct_len = static_cast<int>(
        utf8_scalar_count(question.choices[static_cast<std::size_t>(question.correct_index)]));
    std::vector<int> wrong;
    for (std::size_t i = 0; i < question.choices.size(); ++i) {
        if (static_cast<int>(i) == question.correct_index) continue;
        wrong.push_back(static_cast<int>(utf8_scalar_count(question.choices[i])));
    }
    std::sort(wrong.begin(), wrong.end());
    const std::size_t n = wrong.size();
    pt.median_wrong_len = (n % 2 == 1)
                              ? static_cast<double>(wrong[n / 2])
                              : (static_cast<double>(wrong[n / 2 - 1]) + wrong[n / 2]) / 2.0;
    pt.diff = pt.correct_len - pt.median_wrong_len;
    pt.mean_len = (pt.correct_len + pt.median_wrong_len) / 2.0;
    return pt;
}

namespace {

BiasSummary summarize(const std::vector<double>& diffs, BiasSummary::Subset subset) {
    BiasSummary s;
    s.subset = subset;
    s.n = diffs.size();
    double sum = 0.0;
    for (double d : diffs) sum += d;
    s.mean_diff = sum / static_cast<double>(s.n);
    double sq = 0.0;
    for (double d : diffs) sq += (d - s.mean_diff) * (d - s.mean_diff);
    s.sd_diff = std::sqrt(sq / static_cast<double>(s.n));
    s.loa_low = s.mean_diff - 1.96 * s.sd_diff;
    s.loa_high = s.mean_diff + 1.96 * s.sd_diff;
    return s;
}

} // namespace

BlandAltmanResult bland_altman(std::vector<LengthBiasPoint> points,
                               const std::set<std::string>& error_ids) {
    std::set<std::string> point_ids;
    for (const auto& p : points) point_ids.insert(p.question_id);
    for (const auto& id : error_ids) {
        if (!point_ids.count(id))
            throw ConfigError("bland_altman: error id not among points: " + id);
    }

    BlandAltmanResult result;
    std::vector<double> all_diffs;
    std::vector<double> err_diffs;
    for (auto& p : points) {
        p.in_error_set = error_ids.count(p.question_id) > 0;
        all_diffs.push_back(p.diff);
        if (p.in_error_set) err_diffs.push_back(p.diff);
    }
    if (all_diffs.empty()) throw ConfigError("bland_altman: no points");
    result.points = std::move(points);
    result.all = summarize(all_diffs, BiasSummary::Subset::all);
    if (!err_diffs.empty()) result.errors = summarize(err_diffs, BiasSummary::Subset::errors);
    return result;
}

std::vector<HistogramBin> histogram(const std::vector<double>& diffs, double bin_width) {
    if (!(bin_width > 0.0)) throw ConfigError("histogram: bin_width must be positive");
    std::map<long long, std::size_t> bins;
    for (double d : diffs) {
        const auto idx = static_cast<long long>(std::floor(d / bin_width));
        ++bins[idx];
    }
    std::vector<HistogramBin> out;
    out.reserve(bins.size());
    for (const auto& [idx, count] : bins)
        out.push_back({static_cast<double>(idx) * bin_width, count});
    return out;
}

const char* bias_subset_name(BiasSummary::Subset s) {
    return s == BiasSummary::Subset::all ? "all" : "errors";
}

namespace {

nlohmann::json accuracy_to_json(const MethodAccuracy& a) {
    return nlohmann::json{
        {"model", a.model_tag},
        {"dataset", dataset_name(a.dataset)},
        {"method", method_name(a.method)},
        {"accuracy_percent", a.accuracy_percent},
        {"n_total", a.n_total},
        {"n_correct", a.n_correct},
    };
}

nlohmann::json disparity_to_json(const DisparityRecord& d) {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [m, acc] : d.per_method) per[method_name(m)] = acc;
    return nlohmann::json{
        {"model", d.model_tag},
        {"dataset", dataset_name(d.dataset)},
        {"per_method", per},
        {"delta", d.delta},
    };
}

nlohmann::json bias_summary_to_json(const BiasSummary& s) {
    return nlohmann::json{
        {"subset", bias_subset_name(s.subset)}, {"n", s.n},
        {"mean_diff", s.mean_diff},             {"sd_diff", s.sd_diff},
        {"loa_low", s.loa_low},                 {"loa_high", s.loa_high},
    };
}

} // namespace

nlohmann::json EvaluationReport::to_json() const {
    nlohmann::json accs = nlohmann::json::array();
    for (const auto& a : accuracies) accs.push_back(accuracy_to_json(a));
    nlohmann::json disps = nlohmann::json::array();
    for (const auto& d : disparities) disps.push_back(disparity_to_json(d));
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : bias_points) {
        pts.push_back({
            {"question_id", p.question_id},
            {"correct_len", p.correct_len},
            {"median_wrong_len", p.median_wrong_len},
            {"mean_len", p.mean_len},
            {"diff", p.diff},
            {"in_error_set", p.in_error_set},
        });
    }
    nlohmann::json sums = nlohmann::json::array();
    for (const auto& s : bias_summaries) sums.push_back(bias_summary_to_json(s));
    // nlohmann::json orders object keys lexicographically, so dumping this is
    // deterministic.
    return nlohmann::json{
        {"run_id", run_id},         {"length_unit", length_unit},
        {"accuracies", accs},       {"disparities", disps},
        {"bias_points", pts},       {"bias_summaries", sums},
    };
}

EvaluationReport build_report(std::span<const RunArtifacts> inputs) {
    if (inputs.empty()) throw ConfigError("build_report: no inputs");
    EvaluationReport report;
    report.run_id = inputs.front().run_id;
    std::set<std::string> cells;
    for (const auto& in : inputs) {
        if (in.run_id != report.run_id)
            throw ConfigError("build_report: mixed run ids: '" + report.run_id + "' vs '" +
                              in.run_id + "'");
        for (const auto& a : in.accuracies) {
            const std::string cell = a.model_tag + "\x1f" + dataset_name(a.dataset) + "\x1f" +
                                     method_name(a.method);
            if (!cells.insert(cell).second)
                throw ConfigError("build_report: duplicate cell (" + a.model_tag + ", " +
                                  dataset_name(a.dataset) + ", " + method_name(a.method) + ")");
            report.accuracies.push_back(a);
        }
        report.disparities.insert(report.disparities.end(), in.disparities.begin(),
                                  in.disparities.end());
        report.bias_points.insert(report.bias_points.end(), in.bias_points.begin(),
                                  in.bias_points.end());
        report.bias_summaries.insert(report.bias_summaries.end(), in.bias_summaries.begin(),
                                     in.bias_summaries.end());
    }
    return report;
}

void write_accuracies_csv(std::ostream& out, const std::vector<MethodAccuracy>& rows) {
    out << "model,dataset,method,accuracy_percent,n_correct,n_total\n";
    for (const auto& a : rows) {
        out << csv_quote(a.model_tag) << "," << dataset_name(a.dataset) << ","
            << method_name(a.method) << "," << format_double(a.accuracy_percent) << ","
            << a.n_correct << "," << a.n_total << "\n";
    }
}

void write_disparity_csv(std::ostream& out, const std::vector<DisparityRecord>& rows) {
    static const Method kOrder[] = {Method::oc, Method::raw, Method::t_norm, Method::b_norm,
                                    Method::exact_match};
    out << "model,dataset,oc,raw,t_norm,b_norm,exact_match,delta\n";
    for (const auto& d : rows) {
        out << csv_quote(d.model_tag) << "," << dataset_name(d.dataset);
        for (Method m : kOrder) {
            out << ",";
            auto it = d.per_method.find(m);
            if (it != d.per_method.end()) out << format_double(it->second);
        }
        out << "," << format_double(d.delta) << "\n";
    }
}

void write_bias_points_csv(std::ostream& out, const std::vector<LengthBiasPoint>& rows) {
    out << "question_id,correct_len,median_wrong_len,mean_len,diff,in_error_set\n";
    for (const auto& p : rows) {
        out << csv_quote(p.question_id) << "," << p.correct_len << ","
            << format_double(p.median_wrong_len) << "," << format_double(p.mean_len) << ","
            << format_double(p.diff) << "," << (p.in_error_set ? "true" : "false") << "\n";
    }
}

void write_bias_summary_csv(std::ostream& out, const std::vector<BiasSummary>& rows) {
    out << "subset,n,mean_diff,sd_diff,loa_low,loa_high\n";
    for (const auto& s : rows) {
        out << bias_subset_name(s.subset) << "," << s.n << "," << format_double(s.mean_diff)
            << "," << format_double(s.sd_diff) << "," << format_double(s.loa_low) << ","
            << format_double(s.loa_high) << "\n";
    }
}

} // namespace mcqeval
