#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

namespace mcqeval {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFindings = 1; // validation findings (rejected records)
inline constexpr int kExitConfig = 2;   // usage / config error
inline constexpr int kExitBackend = 3;  // backend failure

/// Effective configuration of one evaluation run. `backend` is
/// "table:<path>", "trace:<path>" or "remote:<url>"; `dataset_tag` is one of
/// the four dataset names or "canonical" for the internal record format.
struct RunConfig {
    std::string dataset;
    std::string dataset_tag;
    std::string backend;
    std::string tokenizer = "whitespace";
    std::vector<std::string> methods;
    int shots = 0;
    std::uint64_t seed = 0;
    std::string out = "out";
    int workers = 1;
    std::string error_policy = "abort"; // abort | skip
    std::string model_tag;              // defaults to the backend spec string
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& c);

// Throws ConfigError naming the offending field.
void validate_run_config(const RunConfig& c);

// Identity of what a run computes: a digest over every field that affects
// results (workers and the output directory are excluded).
std::string run_id_for(const RunConfig& c);

// Runs the whole pipeline and writes config.echo, predictions/, tables/ and
// log under c.out. Nothing is written when the run aborts. Diagnostics go to
// `err`.
int cmd_run(const RunConfig& c, std::ostream& err);

// Recomputes disparity records offline from a published accuracy table
// (CSV with model,dataset,method,accuracy_percent columns).
int cmd_report(const std::string& table_csv, const std::string& out_dir, std::ostream& err);

struct BiasArgs {
    std::string predictions_file;
    std::string dataset;
    std::string dataset_tag;
    std::string method;
    std::string out_dir;
    double bin_width = 5.0;
};

// Option-length bias analysis for one method's predictions: bias_points.csv,
// bias_summary.csv and the scatter/histogram SVGs.
int cmd_bias(const BiasArgs& args, std::ostream& err);

// Parses a dataset, prints its stats document, optionally emits the
// canonical record file. Exit 0 only when nothing was rejected.
int cmd_validate(const std::string& dataset_path, const std::string& dataset_tag,
                 const std::string& emit_canonical, std::ostream& out, std::ostream& err);

} // namespace mcqeval
