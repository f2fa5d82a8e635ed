#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcqeval/question.hpp"

namespace mcqeval {

enum class Scheme { label_only, full_answer };

const char* scheme_name(Scheme s);
std::optional<Scheme> scheme_from_name(std::string_view name);

// The answer cue every prompt ends with. A single separator space is inserted
// between the cue and a scored continuation at scoring time; that space is
// not part of any candidate's text or lengths.
inline constexpr const char* kAnswerCue = "Answer:";

/// One scored continuation: the candidate string as presented to the model
/// (label_only: "A."; full_answer: "(A) <choice>") plus its lengths.
struct ContinuationCandidate {
    int choice_index = 0;
    std::string text;
    int char_length = 0; // Unicode scalars of text, no leading separator space
    int byte_length = 0; // UTF-8 bytes of text
};

struct PromptInstance {
    std::string prompt_text; // ends with kAnswerCue
    std::vector<ContinuationCandidate> candidates;
    Scheme scheme = Scheme::full_answer;
    int n_shots = 0;
};

char choice_letter(int index); // 0 -> 'A' ... 4 -> 'E'; throws beyond that

std::vector<ContinuationCandidate> candidate_targets(const Question& question, Scheme scheme);

/// Renders the standardized prompt: for each exemplar its question block plus
/// the correct full answer, then the target's question block ending with
/// "Answer:". A question block is the stem, a blank line, one "(A) <choice>"
/// line per choice, a blank line, and the cue. Throws std::invalid_argument
/// when n_shots != |exemplars|, an exemplar repeats the target question, or a
/// question has more choices than there are letter labels.
PromptInstance build_prompt(const Question& question, Scheme scheme, int n_shots,
                            const std::vector<Question>& exemplars);

// Golden prompt for one dataset, rendered from the bundled example question.
// Throws std::invalid_argument for an unsupported dataset tag.
std::string render_report_prompt_fixture(Dataset dataset);

// The bundled example question for a dataset (the same ones behind
// render_report_prompt_fixture).
const Question& example_question(Dataset dataset);

// Full documentation text for docs/prompt_templates.txt.
std::string prompt_templates_document();

} // namespace mcqeval
