#pragma once

// Shared helpers for the acceptance binary: randomized table-model instance
// generation and small utilities. Kept header-only next to acceptance_main.cpp.

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mcqeval/backend.hpp"
#include "mcqeval/prompt.hpp"
#include "mcqeval/question.hpp"
#include "mcqeval/tokenize.hpp"

namespace acceptance {

struct Instance {
    mcqeval::Question question;
    mcqeval::TableModelSpec spec;
    mcqeval::TokenizerKind tokenizer = mcqeval::TokenizerKind::whitespace;
};

inline mcqeval::Question base_question(int k, std::vector<std::string> choices, int correct) {
    mcqeval::Question q;
    q.id = "synthetic/q";
    q.dataset = mcqeval::Dataset::mmlu;
    q.stem = "Q" + std::to_string(k);
    q.choices = std::move(choices);
    q.correct_index = correct;
    return q;
}

// Random weights over `tokens`, normalized to unit mass, in log space.
inline mcqeval::NextTokenDistribution random_distribution(std::mt19937_64& rng,
                                                          const std::vector<std::string>& tokens) {
    std::uniform_real_distribution<double> w(0.05, 1.0);
    std::vector<double> weights;
    double total = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        weights.push_back(w(rng));
        total += weights.back();
    }
    mcqeval::NextTokenDistribution dist;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        dist.entries[tokens[i]] = std::log(weights[i] / total);
    return dist;
}

// A table-model instance whose rules are anchored to suffixes of contexts
// that actually occur while scoring the instance's candidates (both schemes),
// so rule hits, misses, partial coverage and the fallback are all exercised.
inline Instance random_instance(std::mt19937_64& rng, bool equal_length_choices) {
    Instance inst;
    const int k = 2 + static_cast<int>(rng() % 4);
    inst.tokenizer = equal_length_choices ? mcqeval::TokenizerKind::chars
                     : (rng() % 2 == 0)   ? mcqeval::TokenizerKind::whitespace
                                          : mcqeval::TokenizerKind::chars;

    std::vector<std::string> choices;
    std::set<std::string> used;
    const std::string alphabet = "abcdefghij";
    const char* words[] = {"cat", "dog", "tree", "blue", "run", "jump", "red", "fox"};
    while (static_cast<int>(choices.size()) < k) {
        std::string text;
        if (inst.tokenizer == mcqeval::TokenizerKind::chars) {
            const std::size_t len = equal_length_choices ? 3 : 1 + rng() % 3;
            for (std::size_t i = 0; i < len; ++i) text += alphabet[rng() % alphabet.size()];
        } else {
            const std::size_t nwords = 1 + rng() % 4; // candidate stays <= 8 tokens
            for (std::size_t i = 0; i < nwords; ++i) {
                if (i) text += " ";
                text += words[rng() % std::size(words)];
            }
        }
        if (used.insert(text).second) choices.push_back(text);
    }
    inst.question = base_question(k, choices, static_cast<int>(rng() % k));

    // vocabulary: every token either scheme's candidates can produce + noise
    std::set<std::string> vocab;
    for (auto scheme : {mcqeval::Scheme::label_only, mcqeval::Scheme::full_answer}) {
        for (const auto& cand : mcqeval::candidate_targets(inst.question, scheme)) {
            for (const auto& tok : mcqeval::tokenize(" " + cand.text, inst.tokenizer).tokens)
                vocab.insert(tok);
        }
    }
    vocab.insert(inst.tokenizer == mcqeval::TokenizerKind::chars ? "z" : " zz");
    vocab.insert(inst.tokenizer == mcqeval::TokenizerKind::chars ? "q" : " qq");
    inst.spec.vocabulary.assign(vocab.begin(), vocab.end());

    // contexts seen while teacher-forcing each candidate
    std::vector<std::pair<std::string, std::string>> steps; // (context, next token)
    for (auto scheme : {mcqeval::Scheme::label_only, mcqeval::Scheme::full_answer}) {
        const auto prompt = mcqeval::build_prompt(inst.question, scheme, 0, {});
        for (const auto& cand : mcqeval::candidate_targets(inst.question, scheme)) {
            std::string context = prompt.prompt_text;
            for (const auto& tok : mcqeval::tokenize(" " + cand.text, inst.tokenizer).tokens) {
                steps.emplace_back(context, tok);
                context += tok;
            }
        }
    }

    for (const auto& [context, next] : steps) {
        if (rng() % 2) continue;
        mcqeval::TableRule rule;
        const std::size_t max_len = std::min<std::size_t>(context.size(), 48);
        rule.suffix = context.substr(context.size() - (1 + rng() % max_len));
        std::vector<std::string> members;
        for (const auto& tok : inst.spec.vocabulary)
            if (rng() % 2) members.push_back(tok);
        if (rng() % 10 < 7 &&
            std::find(members.begin(), members.end(), next) == members.end())
            members.push_back(next); // usually cover the gold token
        if (members.empty()) members.push_back(next);
        rule.distribution = random_distribution(rng, members);
        inst.spec.rules.push_back(std::move(rule));
    }
    std::shuffle(inst.spec.rules.begin(), inst.spec.rules.end(), rng);
    inst.spec.validate();
    return inst;
}

inline bool close_rel(double a, double b, double tol) {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= tol * scale;
}

} // namespace acceptance
