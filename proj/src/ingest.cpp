#include "mcqeval/ingest.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "mcqeval/errors.hpp"
#include "mcqeval/text.hpp"

namespace mcqeval {

namespace {

std::optional<Question> finish(Question q, std::string* reason) {
    q.stem = trim(q.stem);
    for (auto& c : q.choices) c = trim(c);
    if (auto bad = check_question_invariants(q); !bad.empty()) {
        *reason = bad;
        return std::nullopt;
    }
    return q;
}

std::optional<std::string> get_string(const nlohmann::json& rec, const char* key) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

} // namespace

std::optional<Question> parse_hellaswag(const nlohmann::json& record, std::size_t ordinal,
                                        std::string* reason) {
    if (!record.is_object()) {
        *reason = "record is not an object";
        return std::nullopt;
    }
    auto ctx = get_string(record, "ctx");
    if (!ctx) {
        *reason = "missing field: ctx";
        return std::nullopt;
    }
    auto endings = record.find("endings");
    if (endings == record.end() || !endings->is_array()) {
        *reason = "missing field: endings";
        return std::nullopt;
    }
    if (endings->size() != 4) {
        *reason = "choice count " + std::to_string(endings->size()) + " != 4 for hellaswag";
        return std::nullopt;
    }
    auto label = record.find("label");
    long idx = -1;
    if (label == record.end()) {
        *reason = "missing field: label";
        return std::nullopt;
    } else if (label->is_number_integer()) {
        idx = label->get<long>();
    } else if (label->is_string()) {
        try {
            idx = std::stol(label->get<std::string>());
        } catch (...) {
            *reason = "label is not an index";
            return std::nullopt;
        }
    } else {
        *reason = "label is not an index";
        return std::nullopt;
    }
    if (idx < 0 || idx >= 4) {
        *reason = "label " + std::to_string(idx) + " out of range";
        return std::nullopt;
    }

    Question q;
    q.dataset = Dataset::hellaswag;
    if (record.contains("ind") && record["ind"].is_number_integer())
        q.id = "hellaswag/" + std::to_string(record["ind"].get<long>());
    else
        q.id = "hellaswag/" + std::to_string(ordinal);
    q.stem = *ctx;
    for (const auto& e : *endings) {
        if (!e.is_string()) {
            *reason = "ending is not a string";
            return std::nullopt;
        }
        q.choices.push_back(e.get<std::string>());
    }
    q.correct_index = static_cast<int>(idx);
    return finish(std::move(q), reason);
}

std::optional<Question> parse_medqa(const nlohmann::json& record, std::size_t ordinal,
                                    std::string* reason) {
    if (!record.is_object()) {
        *reason = "record is not an object";
        return std::nullopt;
    }
    auto question = get_string(record, "question");
    if (!question) {
        *reason = "missing field: question";
        return std::nullopt;
    }
    auto options = record.find("options");
    if (options == record.end() || !options->is_object()) {
        *reason = "missing field: options";
        return std::nullopt;
    }
    if (options->size() < 2 || options->size() > 5) {
        *reason = "option count " + std::to_string(options->size()) + " outside [2,5]";
        return std::nullopt;
    }
    auto answer = get_string(record, "answer_idx");
    if (!answer) {
        *reason = "missing field: answer_idx";
        return std::nullopt;
    }

    // nlohmann objects iterate in key order, so letter order comes for free.
    std::vector<std::string> letters;
    Question q;
    q.dataset = Dataset::medqa;
    q.id = "medqa/" + std::to_string(ordinal);
    q.stem = *question;
    for (auto it = options->begin(); it != options->end(); ++it) {
        if (!it.value().is_string()) {
            *reason = "option " + it.key() + " is not a string";
            return std::nullopt;
        }
        letters.push_back(it.key());
        q.choices.push_back(it.value().get<std::string>());
    }
    auto pos = std::find(letters.begin(), letters.end(), *answer);
    if (pos == letters.end()) {
        *reason = "answer key '" + *answer + "' absent from options";
        return std::nullopt;
    }
    q.correct_index = static_cast<int>(pos - letters.begin());
    return finish(std::move(q), reason);
}

std::optional<Question> parse_mmlu(const nlohmann::json& record, std::size_t ordinal,
                                   std::string* reason) {
    if (!record.is_object()) {
        *reason = "record is not an object";
        return std::nullopt;
    }
    auto question = get_string(record, "question");
    if (!question) {
        *reason = "missing field: question";
        return std::nullopt;
    }
    auto choices = record.find("choices");
    if (choices == record.end() || !choices->is_array() || choices->size() != 4) {
        *reason = "expected exactly 4 choices";
        return std::nullopt;
    }
    auto answer = get_string(record, "answer");
    if (!answer) {
        *reason = "missing field: answer";
        return std::nullopt;
    }
    const std::string letter = trim(*answer);
    if (letter.size() != 1 || letter[0] < 'A' || letter[0] > 'D') {
        *reason = "answer letter out of range: '" + *answer + "'";
        return std::nullopt;
    }

    Question q;
    q.dataset = Dataset::mmlu;
    auto subject = get_string(record, "subject");
    q.subject = subject.value_or("unknown");
    q.id = "mmlu/" + *q.subject + "/" + std::to_string(ordinal);
    q.stem = *question;
    for (const auto& c : *choices) {
        if (!c.is_string()) {
            *reason = "choice is not a string";
            return std::nullopt;
        }
        q.choices.push_back(c.get<std::string>());
    }
    q.correct_index = letter[0] - 'A';
    return finish(std::move(q), reason);
}

std::optional<Question> parse_openbookqa(const nlohmann::json& record, std::size_t ordinal,
                                         std::string* reason) {
    if (!record.is_object()) {
        *reason = "record is not an object";
        return std::nullopt;
    }
    auto qobj = record.find("question");
    if (qobj == record.end() || !qobj->is_object()) {
        *reason = "missing field: question";
        return std::nullopt;
    }
    auto stem = get_string(*qobj, "stem");
    if (!stem) {
        *reason = "missing field: question.stem";
        return std::nullopt;
    }
    auto choices = qobj->find("choices");
    if (choices == qobj->end() || !choices->is_array() || choices->size() != 4) {
        *reason = "expected exactly 4 choices";
        return std::nullopt;
    }
    auto answer = get_string(record, "answerKey");
    if (!answer) {
        *reason = "missing field: answerKey";
        return std::nullopt;
    }

    // label -> text, ordered by label letter
    std::vector<std::pair<std::string, std::string>> labeled;
    for (const auto& c : *choices) {
        auto text = get_string(c, "text");
        auto label = get_string(c, "label");
        if (!text || !label) {
            *reason = "choice missing text/label";
            return std::nullopt;
        }
        labeled.emplace_back(*label, *text);
    }
    std::sort(labeled.begin(), labeled.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    Question q;
    q.dataset = Dataset::openbookqa;
    auto id = get_string(record, "id");
    q.id = "openbookqa/" + (id ? *id : std::to_string(ordinal));
    q.stem = *stem;
    int correct = -1;
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        q.choices.push_back(labeled[i].second);
        if (labeled[i].first == *answer) correct = static_cast<int>(i);
    }
    if (correct < 0) {
        *reason = "answer key '" + *answer + "' absent from choice labels";
        return std::nullopt;
    }
    q.correct_index = correct;
    return finish(std::move(q), reason);
}

namespace {

using RecordParser =
    std::optional<Question> (*)(const nlohmann::json&, std::size_t, std::string*);

void read_jsonl(const std::filesystem::path& path, RecordParser parse, IngestResult* out) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset file: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    std::size_t ordinal = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const std::string locator = path.filename().string() + ":" + std::to_string(lineno);
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded()) {
            out->rejected.push_back({locator, "invalid JSON"});
            ++ordinal;
            continue;
        }
        std::string reason;
        if (auto q = parse(rec, ordinal, &reason))
            out->questions.push_back(std::move(*q));
        else
            out->rejected.push_back({locator, reason});
        ++ordinal;
    }
}

std::string subject_from_filename(const std::filesystem::path& p) {
    std::string stem = p.stem().string(); // e.g. "high_school_microeconomics_test"
    for (const char* suffix : {"_test", "_val", "_dev"}) {
        if (ends_with(stem, suffix)) {
            stem.resize(stem.size() - std::strlen(suffix));
            break;
        }
    }
    return stem;
}

// Published MMLU layout: headerless CSV, question,opt1,opt2,opt3,opt4,answer.
void read_mmlu_csv(const std::filesystem::path& path, IngestResult* out) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset file: " + path.string());
    const std::string subject = subject_from_filename(path);
    std::string line;
    std::size_t lineno = 0;
    std::size_t ordinal = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::string locator = path.filename().string() + ":" + std::to_string(lineno);
        auto cells = parse_csv_row(line);
        if (cells.size() != 6) {
            out->rejected.push_back(
                {locator, "expected 6 CSV cells, got " + std::to_string(cells.size())});
            ++ordinal;
            continue;
        }
        nlohmann::json rec{
            {"question", cells[0]},
            {"choices", {cells[1], cells[2], cells[3], cells[4]}},
            {"answer", cells[5]},
            {"subject", subject},
        };
        std::string reason;
        if (auto q = parse_mmlu(rec, ordinal, &reason))
            out->questions.push_back(std::move(*q));
        else
            out->rejected.push_back({locator, reason});
        ++ordinal;
    }
}

} // namespace

IngestResult read_dataset(const std::filesystem::path& path, Dataset tag) {
    IngestResult out;
    switch (tag) {
        case Dataset::hellaswag:
            out.split = "validation";
            read_jsonl(path, &parse_hellaswag, &out);
            break;
        case Dataset::medqa:
            out.split = "test";
            read_jsonl(path, &parse_medqa, &out);
            break;
        case Dataset::openbookqa:
            out.split = "test";
            read_jsonl(path, &parse_openbookqa, &out);
            break;
        case Dataset::mmlu: {
            out.split = "test";
            if (std::filesystem::is_directory(path)) {
                std::vector<std::filesystem::path> files;
                for (const auto& e : std::filesystem::directory_iterator(path)) {
                    if (e.is_regular_file() && e.path().extension() == ".csv")
                        files.push_back(e.path());
                }
                std::sort(files.begin(), files.end());
                if (files.empty())
                    throw ConfigError("no .csv files in mmlu directory: " + path.string());
                for (const auto& f : files) read_mmlu_csv(f, &out);
            } else {
                read_mmlu_csv(path, &out);
            }
            break;
        }
    }
    return out;
}

DatasetStats validate_dataset(const std::vector<Question>& questions, Dataset tag,
                              std::vector<Rejection> rejected, std::string split) {
    DatasetStats stats;
    stats.dataset = tag;
    stats.split = std::move(split);
    stats.count = questions.size();
    for (const auto& q : questions)
        ++stats.per_choice_count_histogram[static_cast<int>(q.choices.size())];
    stats.rejected = std::move(rejected);
    return stats;
}

} // namespace mcqeval
