#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

#include "mcqeval/question.hpp"

namespace mcqeval {

// Per-record parsers for the four published dataset formats. Each returns the
// canonical Question or, when the record is malformed, nullopt with *reason
// set. `ordinal` is the 0-based record index within its source file and backs
// the generated id when the record carries no natural one.

// HellaSwag JSONL: {"ctx": str, "endings": [str x4], "label": int, ...};
// an integer "ind" field, when present, becomes the id.
std::optional<Question> parse_hellaswag(const nlohmann::json& record, std::size_t ordinal,
                                        std::string* reason);

// MedQA JSONL: {"question": str, "options": {"A": str, ...}, "answer_idx": letter}.
// Up to five options; choices are ordered by letter.
std::optional<Question> parse_medqa(const nlohmann::json& record, std::size_t ordinal,
                                    std::string* reason);

// MMLU record: {"question": str, "choices": [str x4], "answer": "A".."D",
// "subject": str}. The CSV reader builds these from the published
// question,opt1..opt4,answer rows, deriving the subject from the filename.
std::optional<Question> parse_mmlu(const nlohmann::json& record, std::size_t ordinal,
                                   std::string* reason);

// OpenBookQA JSONL: {"id": str, "question": {"stem": str, "choices":
// [{"text": str, "label": letter} x4]}, "answerKey": letter}.
std::optional<Question> parse_openbookqa(const nlohmann::json& record, std::size_t ordinal,
                                         std::string* reason);

struct IngestResult {
    std::vector<Question> questions; // source order
    std::vector<Rejection> rejected;
    std::string split;
};

/// Reads a dataset in its published file format. For mmlu the path may be a
/// directory of per-subject `*_test.csv` files (read in sorted filename order)
/// or a single CSV file; the other datasets are line-delimited JSON files.
/// Malformed records are skipped with a report, never fatal. Throws
/// ConfigError when the path cannot be read at all.
IngestResult read_dataset(const std::filesystem::path& path, Dataset tag);

// Counts accepted questions; rejections from ingestion are carried through.
DatasetStats validate_dataset(const std::vector<Question>& questions, Dataset tag,
                              std::vector<Rejection> rejected = {}, std::string split = {});

} // namespace mcqeval
