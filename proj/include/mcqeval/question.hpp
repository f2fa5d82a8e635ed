#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

namespace mcqeval {

enum class Dataset { hellaswag, medqa, mmlu, openbookqa };

const char* dataset_name(Dataset d);
std::optional<Dataset> dataset_from_name(std::string_view name);

/// One multiple-choice question in canonical form: a stem, an ordered choice
/// set of 2..5 pairwise-distinct options, and the index of the correct one.
struct Question {
    std::string id;                     // dataset-scoped, stable
    std::string stem;
    std::vector<std::string> choices;
    int correct_index = 0;
    Dataset dataset = Dataset::mmlu;
    std::optional<std::string> subject; // MMLU task name

    bool operator==(const Question&) const = default;
};

// Returns an empty string when all Question invariants hold, otherwise the
// first violated one.
std::string check_question_invariants(const Question& q);

struct Rejection {
    std::string locator; // "file:line" or record index; unique per source record
    std::string reason;

    bool operator==(const Rejection&) const = default;
};

struct DatasetStats {
    Dataset dataset = Dataset::mmlu;
    std::string split;
    std::size_t count = 0;
    std::map<int, std::size_t> per_choice_count_histogram; // k -> count
    std::vector<Rejection> rejected;
};

nlohmann::json question_to_json(const Question& q);

// Throws ValidationError when a field is missing/ill-typed or an invariant
// fails.
Question question_from_json(const nlohmann::json& j);

// Canonical internal format: one JSON document per line, UTF-8.
void write_canonical(std::ostream& out, const std::vector<Question>& questions);
std::vector<Question> read_canonical(std::istream& in);

nlohmann::json stats_to_json(const DatasetStats& s);

} // namespace mcqeval
