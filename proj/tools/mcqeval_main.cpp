#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

#include "mcqeval/cli.hpp"
#include "mcqeval/errors.hpp"

namespace {

mcqeval::RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mcqeval::ConfigError("cannot open config file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw mcqeval::ConfigError("config file is not valid JSON: " + path);
    return mcqeval::run_config_from_json(j);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiple-choice evaluation harness over log-probability backends"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Evaluate a dataset with one or more methods");
    std::string config_path;
    mcqeval::RunConfig config;
    run->add_option("--config", config_path, "JSON config file; flags override its fields");
    auto* dataset_opt = run->add_option("--dataset", config.dataset, "Dataset file or directory");
    auto* tag_opt = run->add_option("--dataset-tag", config.dataset_tag,
                                    "hellaswag|medqa|mmlu|openbookqa|canonical");
    auto* backend_opt =
        run->add_option("--backend", config.backend, "table:<path> | trace:<path> | remote:<url>");
    auto* tokenizer_opt = run->add_option("--tokenizer", config.tokenizer, "char|whitespace");
    std::vector<std::string> methods;
    auto* methods_opt = run->add_option("--methods", methods,
                                        "Comma-separated: oc,raw,t_norm,b_norm,exact_match")
                            ->delimiter(',');
    auto* shots_opt = run->add_option("--shots", config.shots, "Few-shot exemplar count");
    auto* seed_opt = run->add_option("--seed", config.seed, "Exemplar sampling seed");
    auto* out_opt = run->add_option("--out", config.out, "Output directory");
    auto* workers_opt = run->add_option("--workers", config.workers, "Worker thread count");
    auto* policy_opt = run->add_option("--error-policy", config.error_policy, "abort|skip");
    auto* model_opt = run->add_option("--model-tag", config.model_tag, "Model label for reports");

    // report
    auto* report = app.add_subcommand("report", "Disparity records from an accuracy table CSV");
    std::string table_csv;
    std::string report_out = "out";
    report->add_option("--table", table_csv, "CSV with model,dataset,method,accuracy_percent")
        ->required();
    report->add_option("--out", report_out, "Output directory");

    // bias
    auto* bias = app.add_subcommand("bias", "Option-length bias analysis for one method");
    mcqeval::BiasArgs bias_args;
    bias->add_option("--predictions", bias_args.predictions_file, "Predictions JSONL file")
        ->required();
    bias->add_option("--dataset", bias_args.dataset, "Dataset file or directory")->required();
    bias->add_option("--dataset-tag", bias_args.dataset_tag,
                     "hellaswag|medqa|mmlu|openbookqa|canonical")
        ->required();
    bias->add_option("--method", bias_args.method, "Method whose errors to overlay")->required();
    bias->add_option("--out", bias_args.out_dir, "Output directory")->required();
    bias->add_option("--bin-width", bias_args.bin_width, "Histogram bin width (chars)");

    // validate
    auto* validate = app.add_subcommand("validate", "Parse a dataset and print its stats");
    std::string val_dataset;
    std::string val_tag;
    std::string val_emit;
    validate->add_option("--dataset", val_dataset, "Dataset file or directory")->required();
    validate->add_option("--dataset-tag", val_tag, "hellaswag|medqa|mmlu|openbookqa|canonical")
        ->required();
    validate->add_option("--emit-canonical", val_emit, "Also write the canonical record file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mcqeval::kExitConfig;
    }

    try {
        if (run->parsed()) {
            mcqeval::RunConfig effective;
            if (!config_path.empty()) effective = load_config_file(config_path);
            if (*dataset_opt) effective.dataset = config.dataset;
            if (*tag_opt) effective.dataset_tag = config.dataset_tag;
            if (*backend_opt) effective.backend = config.backend;
            if (*tokenizer_opt) effective.tokenizer = config.tokenizer;
            if (*methods_opt) effective.methods = methods;
            if (*shots_opt) effective.shots = config.shots;
            if (*seed_opt) effective.seed = config.seed;
            if (*out_opt) effective.out = config.out;
            if (*workers_opt) effective.workers = config.workers;
            if (*policy_opt) effective.error_policy = config.error_policy;
            if (*model_opt) effective.model_tag = config.model_tag;
            return mcqeval::cmd_run(effective, std::cerr);
        }
        if (report->parsed()) return mcqeval::cmd_report(table_csv, report_out, std::cerr);
        if (bias->parsed()) return mcqeval::cmd_bias(bias_args, std::cerr);
        if (validate->parsed())
            return mcqeval::cmd_validate(val_dataset, val_tag, val_emit, std::cout, std::cerr);
    } catch (const mcqeval::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return mcqeval::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return mcqeval::kExitBackend;
    }
    return mcqeval::kExitConfig;
}
