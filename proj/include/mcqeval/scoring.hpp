#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mcqeval/backend.hpp"
#include "mcqeval/prompt.hpp"
#include "mcqeval/question.hpp"
#include "mcqeval/tokenize.hpp"

namespace mcqeval {

enum class Method { oc, raw, t_norm, b_norm, exact_match };

const char* method_name(Method m);
std::optional<Method> method_from_name(std::string_view name);

// The continuation-target scheme a method scores against.
Scheme required_scheme(Method m);

/// One candidate's likelihood scores. raw is the summed log-probability of
/// the continuation tokens; t_norm and b_norm divide it by the token count
/// and by the candidate's character count; perplexity is
/// exp(-raw/token_count).
struct ScoredChoice {
    int choice_index = 0;
    double raw = 0.0;
    int token_count = 0; // continuation tokens (n_k - m); from the backend trace
    int char_count = 0;  // characters of the candidate text, no separator space
    double t_norm = 0.0;
    double b_norm = 0.0;
    double perplexity = 1.0;
};

struct Prediction {
    std::string question_id;
    Method method = Method::raw;
    std::optional<int> predicted_index; // nullopt = "none" (exact_match miss)
    bool is_correct = false;
    std::vector<ScoredChoice> scored; // empty for exact_match
};

// Scores every candidate of the prompt against the backend. The continuation
// sent to the backend is a single separator space plus the candidate text.
std::vector<ScoredChoice> score_candidates(const Backend& backend, const PromptInstance& prompt,
                                           TokenizerKind tokenizer);

// Label-scheme scoring by candidate perplexity; lowest perplexity wins, ties
// break to the lowest choice index. For single-token label candidates this
// reduces to the next-token argmax over the labels.
Prediction score_oc(const Backend& backend, const PromptInstance& prompt,
                    const Question& question, TokenizerKind tokenizer);

Prediction score_raw(const Backend& backend, const PromptInstance& prompt,
                     const Question& question, TokenizerKind tokenizer);

Prediction score_tnorm(const Backend& backend, const PromptInstance& prompt,
                       const Question& question, TokenizerKind tokenizer);

Prediction score_bnorm(const Backend& backend, const PromptInstance& prompt,
                       const Question& question, TokenizerKind tokenizer);

/// Greedy generation (up to 32 tokens, stopping at a newline token) followed
/// by exact matching: the generated text, trimmed and with surrounding
/// parentheses / a trailing period stripped, must equal a choice letter or a
/// choice's full text (case-sensitive); otherwise the prediction is "none"
/// and counts as incorrect.
Prediction score_exact_match(const Backend& backend, const PromptInstance& prompt,
                             const Question& question, TokenizerKind tokenizer);

// The fixed normalization applied to generated text before matching.
std::string normalize_generated(std::string_view text);

enum class ErrorPolicy { abort_run, skip_errors };

struct RunOptions {
    TokenizerKind tokenizer = TokenizerKind::whitespace;
    int n_shots = 0;
    std::uint64_t seed = 0; // drives exemplar sampling only
    ErrorPolicy error_policy = ErrorPolicy::abort_run;
    int workers = 1;
};

struct MethodRun {
    std::vector<Prediction> predictions;  // input order
    std::vector<Rejection> errored;       // only under skip_errors; locator = question id
};

/// Runs one method over all questions, preserving input order regardless of
/// worker parallelism. Throws ConfigError before any backend call when the
/// method/scheme pairing is incompatible or there are not enough exemplars
/// for n_shots. Backend errors abort the run unless the skip policy is set,
/// in which case the question lands in `errored` and is excluded from the
/// accuracy denominator.
MethodRun run_method(const Backend& backend, const std::vector<Question>& questions,
                     Method method, Scheme scheme, const RunOptions& options);

void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions);
std::vector<Prediction> read_predictions(std::istream& in);

} // namespace mcqeval
