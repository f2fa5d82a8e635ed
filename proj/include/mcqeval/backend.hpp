#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

#include "mcqeval/tokenize.hpp"

namespace mcqeval {

// Log-probability assigned to a continuation token that a complete
// distribution (or the model vocabulary) does not contain. Finite so sums
// stay arithmetic, low enough to be dominated by any real mass.
inline constexpr double kUnknownTokenFloor = -30.0;

/// A conditional next-token distribution in natural-log space. `complete`
/// means the entries cover the full vocabulary and their probabilities sum
/// to one; top-K slices of a larger distribution set it to false.
struct NextTokenDistribution {
    std::map<std::string, double> entries; // token -> log-probability
    bool complete = true;

    // Distinct "unknown" outcome for absent tokens, never silently 0.
    std::optional<double> logprob(const std::string& token) const;

    // Throws ValidationError naming `where` plus the offending entry when a
    // log-probability is positive or non-finite, or when a complete
    // distribution's mass is off unit by more than 1e-6 (an incomplete one
    // may not exceed unit mass).
    void validate(const std::string& where) const;
};

/// Per-token conditional log-probabilities of one continuation, aligned with
/// its tokens (teacher forcing: each token is conditioned on the gold
/// prefix).
struct LogProbTrace {
    std::vector<double> per_token;

    double sum() const;
    void validate(const std::string& where) const; // all entries <= 0, finite
};

class Backend {
public:
    virtual ~Backend() = default;

    // Complete (or declared-incomplete) distribution over the next token
    // given the prompt.
    virtual NextTokenDistribution next_token_logprobs(const TokenizedSequence& prompt) const = 0;

    // Teacher-forced trace of the continuation given the prompt. Entry j is
    // the log-probability of continuation token j conditioned on the prompt
    // plus continuation tokens 0..j-1.
    virtual LogProbTrace continuation_logprobs(const TokenizedSequence& prompt,
                                               const TokenizedSequence& continuation) const = 0;
};

// Default continuation path: accumulate next_token_logprobs lookups while
// appending each gold token. Absent tokens score kUnknownTokenFloor.
LogProbTrace teacher_forced_trace(const Backend& backend, const TokenizedSequence& prompt,
                                  const TokenizedSequence& continuation);

// next_token_logprobs as a free operation; validates that the prompt is
// non-empty.
NextTokenDistribution next_token_logprobs(const Backend& backend,
                                          const TokenizedSequence& prompt);

/// Greedy decoding: repeatedly append the argmax token (ties broken toward
/// the lexicographically smallest token) until a stop token would be emitted
/// or max_tokens tokens have been generated. Returns the generated text,
/// stop token excluded.
std::string generate_greedy(const Backend& backend, const TokenizedSequence& prompt,
                            int max_tokens, const std::set<std::string>& stop);

/// Deterministic table model: an ordered rule list mapping context suffixes
/// to explicit next-token distributions, with a uniform fallback over the
/// vocabulary. The first rule whose suffix matches the current context text
/// wins.
struct TableRule {
    std::string suffix;
    NextTokenDistribution distribution;
};

struct TableModelSpec {
    std::vector<std::string> vocabulary;
    std::vector<TableRule> rules;

    void validate() const; // throws ValidationError
    static TableModelSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static TableModelSpec load_file(const std::filesystem::path& path);
};

class TableModel : public Backend {
public:
    explicit TableModel(TableModelSpec spec);

    NextTokenDistribution next_token_logprobs(const TokenizedSequence& prompt) const override;
    LogProbTrace continuation_logprobs(const TokenizedSequence& prompt,
                                       const TokenizedSequence& continuation) const override;

    const TableModelSpec& spec() const { return spec_; }

private:
    TableModelSpec spec_;
    double uniform_logprob_ = 0.0;
    std::set<std::string> vocab_;
};

// Replay key: lowercase-hex SHA-256 over the exact prompt string, a 0x1F
// separator byte, and the tokenizer tag.
std::string trace_key(const std::string& prompt_text, const std::string& tokenizer_tag);

/// Replays previously recorded next-token distributions from a line-delimited
/// file of {"key": hex, "tokens": [...], "logprobs": [...]} records (optional
/// "complete": bool, default true). An unknown prompt raises TraceMissError
/// naming the prompt hash.
class TraceBackend : public Backend {
public:
    TraceBackend(const std::filesystem::path& path, std::string tokenizer_tag);

    NextTokenDistribution next_token_logprobs(const TokenizedSequence& prompt) const override;
    LogProbTrace continuation_logprobs(const TokenizedSequence& prompt,
                                       const TokenizedSequence& continuation) const override;

    std::size_t record_count() const { return records_.size(); }

private:
    std::map<std::string, NextTokenDistribution> records_;
    std::string tokenizer_tag_;
};

// One trace record in the file format TraceBackend reads.
nlohmann::json trace_record(const std::string& key, const NextTokenDistribution& dist);

/// Assigns one fixed log-probability to every continuation token. This is
/// the degenerate model behind the shortest-candidate analysis; it cannot
/// form a unit-mass next-token distribution, so only the continuation
/// surface is supported and next_token_logprobs throws.
class ConstantBackend : public Backend {
public:
    explicit ConstantBackend(double logprob);

    NextTokenDistribution next_token_logprobs(const TokenizedSequence& prompt) const override;
    LogProbTrace continuation_logprobs(const TokenizedSequence& prompt,
                                       const TokenizedSequence& continuation) const override;

private:
    double logprob_;
};

} // namespace mcqeval
