#include "mcqeval/prompt.hpp"

#include <stdexcept>

#include "mcqeval/text.hpp"

namespace mcqeval {

const char* scheme_name(Scheme s) {
    return s == Scheme::label_only ? "label_only" : "full_answer";
}

std::optional<Scheme> scheme_from_name(std::string_view name) {
    if (name == "label_only") return Scheme::label_only;
    if (name == "full_answer") return Scheme::full_answer;
    return std::nullopt;
}

char choice_letter(int index) {
    if (index < 0 || index > 4)
        throw std::invalid_argument("choice index " + std::to_string(index) +
                                    " has no letter label");
    return static_cast<char>('A' + index);
}

std::vector<ContinuationCandidate> candidate_targets(const Question& question, Scheme scheme) {
    std::vector<ContinuationCandidate> out;
    out.reserve(question.choices.size());
    for (std::size_t i = 0; i < question.choices.size(); ++i) {
        ContinuationCandidate c;
        c.choice_index = static_cast<int>(i);
        const char letter = choice_letter(static_cast<int>(i));
        if (scheme == Scheme::label_only)
            c.text = std::string(1, letter) + ".";
        else
            c.text = std::string("(") + letter + ") " + question.choices[i];
        c.char_length = static_cast<int>(utf8_scalar_count(c.text));
        c.byte_length = static_cast<int>(c.text.size());
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

std::string question_block(const Question& q) {
    std::string out = q.stem;
    out += "\n\n";
    for (std::size_t i = 0; i < q.choices.size(); ++i) {
        out += "(";
        out += choice_letter(static_cast<int>(i));
        out += ") ";
        out += q.choices[i];
        out += "\n";
    }
    out += "\n";
    out += kAnswerCue;
    return out;
}

} // namespace

PromptInstance build_prompt(const Question& question, Scheme scheme, int n_shots,
                            const std::vector<Question>& exemplars) {
    if (n_shots < 0 || static_cast<std::size_t>(n_shots) != exemplars.size())
        throw std::invalid_argument("n_shots (" + std::to_string(n_shots) +
                                    ") != exemplar count (" + std::to_string(exemplars.size()) +
                                    ")");
    if (question.choices.size() > 5)
        throw std::invalid_argument("question has more choices than letter labels");

    PromptInstance p;
    p.scheme = scheme;
    p.n_shots = n_shots;
    for (const auto& ex : exemplars) {
        if (ex.id == question.id)
            throw std::invalid_argument("exemplar repeats the target question: " + ex.id);
        if (ex.choices.size() > 5)
            throw std::invalid_argument("exemplar has more choices than letter labels");
        const auto answers = candidate_targets(ex, Scheme::full_answer);
        p.prompt_text += question_block(ex);
        p.prompt_text += " ";
        p.prompt_text += answers[static_cast<std::size_t>(ex.correct_index)].text;
        p.prompt_text += "\n\n";
    }
    p.prompt_text += question_block(question);
    p.candidates = candidate_targets(question, scheme);
    return p;
}

namespace {

Question make_example(Dataset ds, std::string id, std::string stem,
                      std::vector<std::string> choices, int correct,
                      std::optional<std::string> subject = std::nullopt) {
    Question q;
    q.dataset = ds;
    q.id = std::move(id);
    q.stem = std::move(stem);
    q.choices = std::move(choices);
    q.correct_index = correct;
    q.subject = std::move(subject);
    return q;
}

const Question& hellaswag_example() {
    static const Question q = make_example(
        Dataset::hellaswag, "hellaswag/example",
        "A bearded man is seen speaking to the camera and making several faces. The man",
        {
            "then holds up a razor and begins shaving his face.",
            "then switches off and shows himself via the washer and dryer rolling down a "
            "towel and scrubbing the floor.",
            "then rubs and wipes down an individual's face and leads into another man "
            "playing another person's flute.",
            "is then seen eating food on a ladder while still speaking.",
        },
        0);
    return q;
}

const Question& medqa_example() {
    static const Question q = make_example(
        Dataset::medqa, "medqa/example",
        "A 23-year-old pregnant woman at 22 weeks gestation presents with burning upon "
        "urination. She states it started 1 day ago and has been worsening despite drinking "
        "more water and taking cranberry extract. She otherwise feels well and is followed "
        "by a doctor for her pregnancy. Her temperature is 97.7\u00b0F (36.5\u00b0C), blood "
        "pressure is 122/77 mmHg, pulse is 80/min, respirations are 19/min, and oxygen "
        "saturation is 98% on room air. Physical exam is notable for an absence of "
        "costovertebral angle tenderness and a gravid uterus. Which of the following is the "
        "best treatment for this patient?",
        {"Ampicillin", "Ceftriaxone", "Ciprofloxacin", "Doxycycline", "Nitrofurantoin"}, 4);
    return q;
}

const Question& mmlu_example() {
    static const Question q = make_example(
        Dataset::mmlu, "mmlu/high_school_microeconomics/example",
        "One of the reasons that the government discourages and regulates monopolies is that",
        {
            "producer surplus is lost and consumer surplus is gained.",
            "monopoly prices ensure productive efficiency but cost society allocative "
            "efficiency.",
            "monopoly firms do not engage in significant research and development.",
            "consumer surplus is lost with higher prices and lower levels of output.",
        },
        3, "high_school_microeconomics");
    return q;
}

const Question& openbookqa_example() {
    static const Question q = make_example(
        Dataset::openbookqa, "openbookqa/example",
        "Which of these would let the most heat travel through?",
        {
            "a new pair of jeans.",
            "a steel spoon in a cafeteria.",
            "a cotton candy at a store.",
            "Doxycycline.",
        },
        1);
    return q;
}

} // namespace

const Question& example_question(Dataset dataset) {
    switch (dataset) {
        case Dataset::hellaswag: return hellaswag_example();
        case Dataset::medqa: return medqa_example();
        case Dataset::mmlu: return mmlu_example();
        case Dataset::openbookqa: return openbookqa_example();
    }
    throw std::invalid_argument("unsupported dataset");
}

std::string render_report_prompt_fixture(Dataset dataset) {
    return build_prompt(example_question(dataset), Scheme::full_answer, 0, {}).prompt_text;
}

std::string prompt_templates_document() {
    std::string doc =
        "Standardized zero-shot prompt templates\n"
        "=======================================\n"
        "\n"
        "Every question is rendered as one block: the stem, a blank line, one\n"
        "\"(A) <choice>\" line per choice, a blank line, and the cue \"Answer:\"\n"
        "(no trailing space). The scored continuation is appended after a single\n"
        "separator space; that space is not counted in any candidate's\n"
        "char_length or byte_length.\n"
        "\n"
        "Scoring candidates for choice X:\n"
        "  label_only  -> \"X.\"            e.g. \"A.\"\n"
        "  full_answer -> \"(X) <choice>\"  e.g. \"(A) producer surplus ...\"\n"
        "\n"
        "Few-shot prompts prepend, for each exemplar, its question block, one\n"
        "space, and the exemplar's correct full_answer candidate, followed by a\n"
        "blank line.\n"
        "\n"
        "The block layout is a single harness-wide convention applied uniformly\n"
        "to all four datasets; other evaluation stacks may format these datasets\n"
        "differently.\n";
    for (Dataset ds :
         {Dataset::hellaswag, Dataset::medqa, Dataset::mmlu, Dataset::openbookqa}) {
        doc += "\n--- ";
        doc += dataset_name(ds);
        doc += " ---\n";
        doc += render_report_prompt_fixture(ds);
        doc += "\n";
    }
    return doc;
}

} // namespace mcqeval
