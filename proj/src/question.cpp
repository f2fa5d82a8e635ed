#include "mcqeval/question.hpp"

#include <istream>
#include <ostream>
#include <set>

#include "mcqeval/errors.hpp"
#include "mcqeval/text.hpp"

namespace mcqeval {

const char* dataset_name(Dataset d) {
    switch (d) {
        case Dataset::hellaswag: return "hellaswag";
        case Dataset::medqa: return "medqa";
        case Dataset::mmlu: return "mmlu";
        case Dataset::openbookqa: return "openbookqa";
    }
    return "unknown";
}

std::optional<Dataset> dataset_from_name(std::string_view name) {
    if (name == "hellaswag") return Dataset::hellaswag;
    if (name == "medqa") return Dataset::medqa;
    if (name == "mmlu") return Dataset::mmlu;
    if (name == "openbookqa") return Dataset::openbookqa;
    return std::nullopt;
}

std::string check_question_invariants(const Question& q) {
    if (q.id.empty()) return "empty id";
    if (trim(q.stem).empty()) return "empty stem";
    if (q.choices.size() < 2 || q.choices.size() > 5)
        return "choice count " + std::to_string(q.choices.size()) + " outside [2,5]";
    if (q.correct_index < 0 || q.correct_index >= static_cast<int>(q.choices.size()))
        return "correct_index " + std::to_string(q.correct_index) + " out of range";
    std::set<std::string> seen;
    for (const auto& c : q.choices) {
        if (trim(c).empty()) return "empty choice text";
        if (!seen.insert(c).second) return "choices not distinct";
    }
    return "";
}

nlohmann::json question_to_json(const Question& q) {
    nlohmann::json j{
        {"id", q.id},
        {"stem", q.stem},
        {"choices", q.choices},
        {"correct_index", q.correct_index},
        {"dataset", dataset_name(q.dataset)},
    };
    if (q.subject) j["subject"] = *q.subject;
    return j;
}

Question question_from_json(const nlohmann::json& j) {
    Question q;
    try {
        q.id = j.at("id").get<std::string>();
        q.stem = j.at("stem").get<std::string>();
        q.choices = j.at("choices").get<std::vector<std::string>>();
        q.correct_index = j.at("correct_index").get<int>();
        const auto ds = dataset_from_name(j.at("dataset").get<std::string>());
        if (!ds) throw ValidationError("unknown dataset tag: " + j.at("dataset").dump());
        q.dataset = *ds;
        if (j.contains("subject")) q.subject = j.at("subject").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed canonical record: ") + e.what());
    }
    if (auto bad = check_question_invariants(q); !bad.empty())
        throw ValidationError("canonical record violates invariant: " + bad);
    return q;
}

void write_canonical(std::ostream& out, const std::vector<Question>& questions) {
    for (const auto& q : questions) out << question_to_json(q).dump() << "\n";
}

std::vector<Question> read_canonical(std::istream& in) {
    std::vector<Question> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ValidationError("canonical line " + std::to_string(lineno) + ": invalid JSON");
        out.push_back(question_from_json(j));
    }
    return out;
}

nlohmann::json stats_to_json(const DatasetStats& s) {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [k, n] : s.per_choice_count_histogram) hist[std::to_string(k)] = n;
    nlohmann::json rejected = nlohmann::json::array();
    for (const auto& r : s.rejected)
        rejected.push_back({{"locator", r.locator}, {"reason", r.reason}});
    return nlohmann::json{
        {"dataset", dataset_name(s.dataset)},
        {"split", s.split},
        {"count", s.count},
        {"per_choice_count_histogram", hist},
        {"rejected", rejected},
    };
}

} // namespace mcqeval
