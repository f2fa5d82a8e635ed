#include "mcqeval/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "mcqeval/analysis.hpp"
#include "mcqeval/backend.hpp"
#include "mcqeval/errors.hpp"
#include "mcqeval/ingest.hpp"
#include "mcqeval/remote_backend.hpp"
#include "mcqeval/scoring.hpp"
#include "mcqeval/svg.hpp"
#include "mcqeval/text.hpp"

namespace mcqeval {

namespace fs = std::filesystem;

RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
        if (j.contains("dataset_tag")) c.dataset_tag = j.at("dataset_tag").get<std::string>();
        if (j.contains("backend")) c.backend = j.at("backend").get<std::string>();
        if (j.contains("tokenizer")) c.tokenizer = j.at("tokenizer").get<std::string>();
        if (j.contains("methods")) c.methods = j.at("methods").get<std::vector<std::string>>();
        if (j.contains("shots")) c.shots = j.at("shots").get<int>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("out")) c.out = j.at("out").get<std::string>();
        if (j.contains("workers")) c.workers = j.at("workers").get<int>();
        if (j.contains("error_policy")) c.error_policy = j.at("error_policy").get<std::string>();
        if (j.contains("model_tag")) c.model_tag = j.at("model_tag").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config file: ") + e.what());
    }
    return c;
}

nlohmann::json run_config_to_json(const RunConfig& c) {
    return nlohmann::json{
        {"dataset", c.dataset},   {"dataset_tag", c.dataset_tag},
        {"backend", c.backend},   {"tokenizer", c.tokenizer},
        {"methods", c.methods},   {"shots", c.shots},
        {"seed", c.seed},         {"out", c.out},
        {"workers", c.workers},   {"error_policy", c.error_policy},
        {"model_tag", c.model_tag},
    };
}

namespace {

struct ParsedBackendSpec {
    std::string kind; // table | trace | remote
    std::string location;
};

ParsedBackendSpec parse_backend_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw ConfigError("backend: expected table:<path>, trace:<path> or remote:<url>");
    ParsedBackendSpec p{spec.substr(0, colon), spec.substr(colon + 1)};
    if (p.kind != "table" && p.kind != "trace" && p.kind != "remote")
        throw ConfigError("backend: unknown kind '" + p.kind + "'");
    if (p.location.empty()) throw ConfigError("backend: empty location");
    return p;
}

bool is_dataset_tag(const std::string& tag) {
    return tag == "canonical" || dataset_from_name(tag).has_value();
}

} // namespace

void validate_run_config(const RunConfig& c) {
    if (c.dataset.empty()) throw ConfigError("dataset: path is required");
    if (!fs::exists(c.dataset)) throw ConfigError("dataset: path does not exist: " + c.dataset);
    if (!is_dataset_tag(c.dataset_tag))
        throw ConfigError("dataset_tag: expected hellaswag|medqa|mmlu|openbookqa|canonical, got '" +
                          c.dataset_tag + "'");
    const auto spec = parse_backend_spec(c.backend);
    if (spec.kind != "remote" && !fs::exists(spec.location))
        throw ConfigError("backend: file does not exist: " + spec.location);
    if (!tokenizer_from_name(c.tokenizer))
        throw ConfigError("tokenizer: expected char|whitespace, got '" + c.tokenizer + "'");
    if (c.methods.empty()) throw ConfigError("methods: at least one method is required");
    std::set<std::string> seen;
    for (const auto& m : c.methods) {
        if (!method_from_name(m)) throw ConfigError("methods: unknown method '" + m + "'");
        if (!seen.insert(m).second) throw ConfigError("methods: duplicate method '" + m + "'");
    }
    if (c.shots < 0) throw ConfigError("shots: must be >= 0");
    if (c.workers < 1) throw ConfigError("workers: must be >= 1");
    if (c.error_policy != "abort" && c.error_policy != "skip")
        throw ConfigError("error_policy: expected abort|skip, got '" + c.error_policy + "'");
    if (c.out.empty()) throw ConfigError("out: output directory is required");
}

std::string run_id_for(const RunConfig& c) {
    nlohmann::json identity{
        {"dataset", c.dataset},   {"dataset_tag", c.dataset_tag},
        {"backend", c.backend},   {"tokenizer", c.tokenizer},
        {"methods", c.methods},   {"shots", c.shots},
        {"error_policy", c.error_policy},
        {"model_tag", c.model_tag},
    };
    // the seed only drives exemplar sampling, so without shots it is not
    // part of the run's identity
    if (c.shots > 0) identity["seed"] = c.seed;
    return sha256_hex(identity.dump()).substr(0, 12);
}

namespace {

struct LoadedDataset {
    std::vector<Question> questions;
    std::vector<Rejection> rejected;
    std::string split;
    Dataset tag = Dataset::mmlu;
};

LoadedDataset load_questions(const std::string& path, const std::string& tag) {
    LoadedDataset out;
    if (tag == "canonical") {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open dataset file: " + path);
        out.questions = read_canonical(in);
        if (out.questions.empty()) throw ConfigError("canonical dataset is empty: " + path);
        out.tag = out.questions.front().dataset;
        for (const auto& q : out.questions) {
            if (q.dataset != out.tag)
                throw ConfigError("canonical dataset mixes dataset tags: " + path);
        }
        out.split = "canonical";
        return out;
    }
    const auto ds = dataset_from_name(tag);
    if (!ds) throw ConfigError("unknown dataset tag: " + tag);
    auto result = read_dataset(path, *ds);
    out.questions = std::move(result.questions);
    out.rejected = std::move(result.rejected);
    out.split = std::move(result.split);
    out.tag = *ds;
    return out;
}

std::unique_ptr<Backend> make_backend(const RunConfig& c) {
    const auto spec = parse_backend_spec(c.backend);
    if (spec.kind == "table") return std::make_unique<TableModel>(TableModelSpec::load_file(spec.location));
    if (spec.kind == "trace") return std::make_unique<TraceBackend>(spec.location, c.tokenizer);
    return std::make_unique<RemoteBackend>(spec.location, c.tokenizer);
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path.string());
    out << content;
}

// Rounded form for diagnostic lines; CSV output keeps full precision.
std::string fmt_percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace

int cmd_run(const RunConfig& config, std::ostream& err) {
    try {
        validate_run_config(config);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    const std::string run_id = run_id_for(config);
    const std::string model_tag = config.model_tag.empty() ? config.backend : config.model_tag;

    std::map<std::string, std::string> prediction_files; // method -> jsonl body
    std::vector<MethodAccuracy> accuracies;
    std::vector<DisparityRecord> disparities;
    std::ostringstream log;

    try {
        const auto data = load_questions(config.dataset, config.dataset_tag);
        const auto backend = make_backend(config);

        RunOptions options;
        options.tokenizer = *tokenizer_from_name(config.tokenizer);
        options.n_shots = config.shots;
        options.seed = config.seed;
        options.error_policy = config.error_policy == "skip" ? ErrorPolicy::skip_errors
                                                             : ErrorPolicy::abort_run;
        options.workers = config.workers;

        log << "run_id=" << run_id << "\n";
        log << "dataset=" << dataset_name(data.tag) << " path=" << config.dataset
            << " split=" << data.split << " questions=" << data.questions.size()
            << " rejected=" << data.rejected.size() << "\n";
        for (const auto& r : data.rejected)
            log << "rejected locator=" << r.locator << " reason=" << r.reason << "\n";
        if (data.questions.empty()) {
            err << "config error: dataset has no parseable questions\n";
            return kExitConfig;
        }

        std::map<Method, double> per_method;
        for (const auto& name : config.methods) {
            const Method method = *method_from_name(name);
            const Scheme scheme = required_scheme(method);
            const MethodRun run = run_method(*backend, data.questions, method, scheme, options);
            if (run.predictions.empty()) {
                err << "backend error: every question errored for method " << name << "\n";
                return kExitBackend;
            }
            const MethodAccuracy acc = accuracy(run.predictions, data.tag, model_tag);
            accuracies.push_back(acc);
            per_method[method] = acc.accuracy_percent;

            std::ostringstream body;
            write_predictions(body, run.predictions);
            prediction_files[name] = body.str();

            log << "method=" << name << " scheme=" << scheme_name(scheme)
                << " n=" << acc.n_total << " correct=" << acc.n_correct
                << " accuracy=" << fmt_percent(acc.accuracy_percent)
                << " errored=" << run.errored.size() << "\n";
            for (const auto& e : run.errored)
                log << "errored question=" << e.locator << " reason=" << e.reason << "\n";
        }
        if (per_method.size() >= 2) {
            disparities.push_back(disparity(per_method, model_tag, data.tag));
            log << "disparity delta=" << fmt_percent(disparities.back().delta)
                << " methods=" << per_method.size() << "\n";
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TransportError& e) {
        err << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const TraceMissError& e) {
        err << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const ValidationError& e) {
        err << "backend error: " << e.what() << "\n";
        return kExitBackend;
    }

    // All computation succeeded; only now touch the output directory.
    try {
        const fs::path out_dir(config.out);
        fs::create_directories(out_dir / "predictions");
        fs::create_directories(out_dir / "tables");
        fs::create_directories(out_dir / "figures");

        nlohmann::json echo = run_config_to_json(config);
        echo["run_id"] = run_id;
        write_text_file(out_dir / "config.echo", echo.dump(2) + "\n");

        for (const auto& [name, body] : prediction_files)
            write_text_file(out_dir / "predictions" / (name + ".jsonl"), body);

        std::ostringstream acc_csv;
        write_accuracies_csv(acc_csv, accuracies);
        write_text_file(out_dir / "tables" / "accuracies.csv", acc_csv.str());

        if (!disparities.empty()) {
            std::ostringstream disp_csv;
            write_disparity_csv(disp_csv, disparities);
            write_text_file(out_dir / "tables" / "disparity.csv", disp_csv.str());
        }

        RunArtifacts artifacts;
        artifacts.run_id = run_id;
        artifacts.accuracies = accuracies;
        artifacts.disparities = disparities;
        const auto report = build_report(std::span(&artifacts, 1));
        write_text_file(out_dir / "tables" / "report.json", report.to_json().dump(2) + "\n");

        write_text_file(out_dir / "log", log.str());
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}

int cmd_report(const std::string& table_csv, const std::string& out_dir, std::ostream& err) {
    std::ifstream in(table_csv);
    if (!in) {
        err << "config error: cannot open accuracy table: " << table_csv << "\n";
        return kExitConfig;
    }
    std::string header_line;
    if (!std::getline(in, header_line)) {
        err << "config error: empty accuracy table\n";
        return kExitConfig;
    }
    if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
    const auto header = parse_csv_row(header_line);
    const auto col = [&](const char* name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw ConfigError(std::string("accuracy table: missing column '") + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };

    // (model, dataset) -> method -> accuracy, insertion order preserved for
    // deterministic output
    std::vector<std::pair<std::string, Dataset>> order;
    std::map<std::pair<std::string, Dataset>, std::map<Method, double>> cells;
    try {
        const std::size_t model_col = col("model");
        const std::size_t dataset_col = col("dataset");
        const std::size_t method_col = col("method");
        const std::size_t acc_col = col("accuracy_percent");

        std::string line;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            const auto cells_in = parse_csv_row(line);
            const auto need = std::max({model_col, dataset_col, method_col, acc_col}) + 1;
            if (cells_in.size() < need)
                throw ConfigError("accuracy table line " + std::to_string(lineno) +
                                  ": expected >= " + std::to_string(need) + " cells");
            const std::string model = trim(cells_in[model_col]);
            const auto ds = dataset_from_name(trim(cells_in[dataset_col]));
            if (!ds)
                throw ConfigError("accuracy table line " + std::to_string(lineno) +
                                  ": unknown dataset '" + cells_in[dataset_col] + "'");
            const auto m = method_from_name(trim(cells_in[method_col]));
            if (!m)
                throw ConfigError("accuracy table line " + std::to_string(lineno) +
                                  ": unknown method '" + cells_in[method_col] + "'");
            double acc = 0.0;
            try {
                acc = std::stod(trim(cells_in[acc_col]));
            } catch (...) {
                throw ConfigError("accuracy table line " + std::to_string(lineno) +
                                  ": bad accuracy '" + cells_in[acc_col] + "'");
            }
            if (acc < 0.0 || acc > 100.0)
                throw ConfigError("accuracy table line " + std::to_string(lineno) +
                                  ": accuracy " + format_double(acc) + " outside [0,100]");
            const auto key = std::make_pair(model, *ds);
            if (!cells.count(key)) order.push_back(key);
            if (!cells[key].emplace(*m, acc).second)
                throw ConfigError("accuracy table line " + std::to_string(lineno) +
                                  ": duplicate cell (" + model + ", " + dataset_name(*ds) +
                                  ", " + method_name(*m) + ")");
        }

        std::vector<DisparityRecord> records;
        for (const auto& key : order) {
            if (cells[key].size() < 2)
                throw ConfigError("need >= 2 methods for (" + key.first + ", " +
                                  dataset_name(key.second) + ")");
            records.push_back(disparity(cells[key], key.first, key.second));
        }
        if (records.empty()) throw ConfigError("accuracy table has no data rows");

        fs::create_directories(out_dir);
        std::ostringstream csv;
        write_disparity_csv(csv, records);
        write_text_file(fs::path(out_dir) / "disparity.csv", csv.str());

        const auto min_it = std::min_element(records.begin(), records.end(),
                                             [](const auto& a, const auto& b) {
                                                 return a.delta < b.delta;
                                             });
        const auto max_it = std::max_element(records.begin(), records.end(),
                                             [](const auto& a, const auto& b) {
                                                 return a.delta < b.delta;
                                             });
        for (const auto& r : records)
            err << "delta model=" << r.model_tag << " dataset=" << dataset_name(r.dataset)
                << " delta=" << fmt_percent(r.delta) << "\n";
        err << "min_delta=" << fmt_percent(min_it->delta) << " (" << min_it->model_tag
            << ", " << dataset_name(min_it->dataset) << ")\n";
        err << "max_delta=" << fmt_percent(max_it->delta) << " (" << max_it->model_tag
            << ", " << dataset_name(max_it->dataset) << ")\n";
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}

int cmd_bias(const BiasArgs& args, std::ostream& err) {
    try {
        if (!method_from_name(args.method))
            throw ConfigError("unknown method '" + args.method + "'");
        const Method method = *method_from_name(args.method);
        if (!(args.bin_width > 0.0)) throw ConfigError("bin-width must be positive");

        std::ifstream pin(args.predictions_file);
        if (!pin) throw ConfigError("cannot open predictions file: " + args.predictions_file);
        const auto all_predictions = read_predictions(pin);

        std::map<std::string, const Prediction*> by_id;
        for (const auto& p : all_predictions) {
            if (p.method == method) by_id[p.question_id] = &p;
        }
        if (by_id.empty())
            throw ConfigError("method '" + args.method + "' not present in predictions file");

        const auto data = load_questions(args.dataset, args.dataset_tag);
        std::vector<std::string> missing;
        for (const auto& q : data.questions) {
            if (!by_id.count(q.id)) missing.push_back(q.id);
        }
        if (!missing.empty()) {
            std::string list;
            for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
                if (i) list += ", ";
                list += missing[i];
            }
            if (missing.size() > 10) list += ", ...";
            throw ConfigError("predictions do not cover " + std::to_string(missing.size()) +
                              " dataset ids for method " + args.method + ": " + list);
        }

        std::vector<LengthBiasPoint> points;
        std::set<std::string> error_ids;
        for (const auto& q : data.questions) {
            points.push_back(length_stats(q));
            if (!by_id.at(q.id)->is_correct) error_ids.insert(q.id);
        }

        const auto result = bland_altman(std::move(points), error_ids);

        std::vector<double> all_diffs;
        std::vector<double> err_diffs;
        for (const auto& p : result.points) {
            all_diffs.push_back(p.diff);
            if (p.in_error_set) err_diffs.push_back(p.diff);
        }
        const auto all_bins = histogram(all_diffs, args.bin_width);
        const auto err_bins = histogram(err_diffs, args.bin_width);

        fs::create_directories(args.out_dir);
        const fs::path out_dir(args.out_dir);

        std::ostringstream pts_csv;
        write_bias_points_csv(pts_csv, result.points);
        write_text_file(out_dir / "bias_points.csv", pts_csv.str());

        std::vector<BiasSummary> summaries{result.all};
        if (result.errors) summaries.push_back(*result.errors);
        std::ostringstream sum_csv;
        write_bias_summary_csv(sum_csv, summaries);
        write_text_file(out_dir / "bias_summary.csv", sum_csv.str());

        std::ostringstream scatter;
        write_bland_altman_svg(scatter, result.points, result.all, result.errors);
        write_text_file(out_dir / "bias_scatter.svg", scatter.str());

        std::ostringstream hist;
        write_histogram_svg(hist, all_bins, err_bins, args.bin_width);
        write_text_file(out_dir / "bias_histogram.svg", hist.str());

        err << "bias n=" << result.all.n << " mean_diff=" << fmt_percent(result.all.mean_diff)
            << " sd=" << fmt_percent(result.all.sd_diff) << "\n";
        if (result.errors)
            err << "bias errors n=" << result.errors->n
                << " mean_diff=" << fmt_percent(result.errors->mean_diff)
                << " sd=" << fmt_percent(result.errors->sd_diff) << "\n";
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ValidationError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}

int cmd_validate(const std::string& dataset_path, const std::string& dataset_tag,
                 const std::string& emit_canonical, std::ostream& out, std::ostream& err) {
    try {
        const auto data = load_questions(dataset_path, dataset_tag);
        const auto stats =
            validate_dataset(data.questions, data.tag, data.rejected, data.split);
        out << stats_to_json(stats).dump(2) << "\n";
        if (!emit_canonical.empty()) {
            std::ofstream canon(emit_canonical, std::ios::binary);
            if (!canon) throw ConfigError("cannot write canonical file: " + emit_canonical);
            write_canonical(canon, data.questions);
        }
        return stats.rejected.empty() ? kExitOk : kExitFindings;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ValidationError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
}

} // namespace mcqeval
