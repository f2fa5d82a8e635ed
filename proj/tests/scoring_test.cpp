#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "mcqeval/errors.hpp"
#include "mcqeval/scoring.hpp"

using namespace mcqeval;

namespace {

// Serves prescribed traces keyed by the exact continuation text.
struct FakeBackend : Backend {
    std::map<std::string, std::vector<double>> traces;

    NextTokenDistribution next_token_logprobs(const TokenizedSequence&) const override {
        throw std::logic_error("FakeBackend has no next-token surface");
    }
    LogProbTrace continuation_logprobs(const TokenizedSequence&,
                                       const TokenizedSequence& continuation) const override {
        auto it = traces.find(continuation.text());
        if (it == traces.end())
            throw TraceMissError("no fake trace for '" + continuation.text() + "'");
        LogProbTrace t;
        t.per_token = it->second;
        return t;
    }
};

Question question_with(std::vector<std::string> choices, int correct,
                       const std::string& id = "q/0") {
    Question q;
    q.id = id;
    q.dataset = Dataset::mmlu;
    q.stem = "Pick one";
    q.choices = std::move(choices);
    q.correct_index = correct;
    return q;
}

// Wires FakeBackend traces onto a question's candidates: traces[i] scores
// choice i under the given scheme.
FakeBackend fake_for(const Question& q, Scheme scheme,
                     const std::vector<std::vector<double>>& traces) {
    FakeBackend backend;
    const auto targets = candidate_targets(q, scheme);
    REQUIRE(targets.size() == traces.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
        backend.traces[" " + targets[i].text] = traces[i];
    return backend;
}

} // namespace

TEST_CASE("score_oc: single-token labels reduce to next-token argmax") {
    const auto q = question_with({"w", "x", "y", "z"}, 0);
    const auto prompt = build_prompt(q, Scheme::label_only, 0, {});
    const auto backend = fake_for(q, Scheme::label_only, {{-0.2}, {-1.0}, {-2.0}, {-3.0}});
    const auto p = score_oc(backend, prompt, q, TokenizerKind::whitespace);
    CHECK(p.predicted_index == 0);
    CHECK(p.is_correct);
    CHECK(p.method == Method::oc);
    REQUIRE(p.scored.size() == 4);
    CHECK(p.scored[0].perplexity == std::exp(0.2));
    for (const auto& sc : p.scored) CHECK(sc.perplexity >= 1.0);
}

TEST_CASE("score_oc: uniform tie breaks to index 0") {
    const auto q = question_with({"w", "x", "y", "z"}, 2);
    const auto prompt = build_prompt(q, Scheme::label_only, 0, {});
    const auto backend = fake_for(
        q, Scheme::label_only, {{-1.3863}, {-1.3863}, {-1.3863}, {-1.3863}});
    const auto p = score_oc(backend, prompt, q, TokenizerKind::whitespace);
    CHECK(p.predicted_index == 0);
    CHECK(!p.is_correct);
}

TEST_CASE("score_oc: multi-token label perplexity") {
    const auto q = question_with({"w", "x"}, 0);
    const auto prompt = build_prompt(q, Scheme::label_only, 0, {});
    const auto backend = fake_for(q, Scheme::label_only, {{-0.5, -0.1}, {-2.0, -2.0}});
    const auto p = score_oc(backend, prompt, q, TokenizerKind::whitespace);
    CHECK(p.scored[0].perplexity == std::exp(0.3));
    CHECK(p.scored[0].perplexity == doctest::Approx(1.3499).epsilon(1e-4));
    CHECK(p.predicted_index == 0);
}

TEST_CASE("score_raw: longer continuation can still win on total mass") {
    const auto q = question_with({"x", "y"}, 1);
    const auto prompt = build_prompt(q, Scheme::full_answer, 0, {});
    const auto backend =
        fake_for(q, Scheme::full_answer, {{-1.0, -1.0}, {-0.5, -0.5, -0.5}});
    const auto p = score_raw(backend, prompt, q, TokenizerKind::whitespace);
    CHECK(p.scored[0].raw == -2.0);
    CHECK(p.scored[1].raw == -1.5);
    CHECK(p.predicted_index == 1);
    CHECK(p.is_correct);
}

TEST_CASE("score_raw: constant per-token logprob selects the shortest candidate") {
    const auto q = question_with({"aa", "bb cc", "dd ee ff"}, 2);
    const auto prompt = build_prompt(q, Scheme::full_answer, 0, {});
    // whitespace tokens per candidate: " (A) aa" -> 2, " (B) bb cc" -> 3, ...
    ConstantBackend backend(-1.0);
    const auto p = score_raw(backend, prompt, q, TokenizerKind::whitespace);
    CHECK(p.scored[0].token_count == 2);
    CHECK(p.scored[1].token_count == 3);
    CHECK(p.scored[2].token_count == 4);
    CHECK(p.scored[0].raw == -2.0);
    CHECK(p.predicted_index == 0); // shortest
}

TEST_CASE("score_raw: identical traces tie to index 0") {
    const auto q = question_with({"x", "y"}, 1);
    const auto prompt = build_prompt(q, Scheme::full_answer, 0, {});
    const auto backend = fake_for(q, Scheme::full_answer, {{-1.0, -1.0}, {-1.0, -1.0}});
    const auto p = score_raw(backend, prompt, q, TokenizerKind::whitespace);
    CHECK(p.predicted_index == 0);
}

TEST_CASE("score_tnorm: mean log-probability ranking") {
    const auto q = question_with({"x", "y"}, 1);
    const auto prompt = build_prompt(q, Scheme::full_answer, 0, {});
    const auto backend =
        fake_for(q, Scheme::full_answer, {{-1.0, -1.0}, {-0.5, -0.5, -0.5}});
    const auto p = score_tnorm(backend, prompt, q, TokenizerKind::whitespace);
    CHECK(p.scored[0].t_norm == -1.0);
    CHECK(p.scored[1].t_norm == -0.5);
    CHECK(p.predicted_index == 1);
}

TEST_CASE("score_tnorm: constant logprob makes every candidate tie") {
    const auto q = question_with({"aa", "bb cc", "dd ee ff", "gg"}, 3);
    const auto prompt = build_prompt(q, Scheme::full_answer, 0, {});
    ConstantBackend backend(-0.5);
    const auto p = score_tnorm(backend, prompt, q, TokenizerKind::whitespace);
    for (const auto& sc : p.scored) CHECK(sc.t_norm == -0.5);
    CHECK(p.predicted_index == 0);
}

TEST_CASE("score_tnorm: equal token counts reproduce the raw ranking") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lp(-5.0, -0.01);
    for (int iter = 0; iter < 50; ++iter) {
        const auto q = question_with({"a", "b", "c"}, 0);
        const auto prompt = build_prompt(q, Scheme::full_answer, 0, {});
        std::vector<std::vector<double>> traces(3);
        for (auto& t : traces) t = {lp(rng), lp(rng)}; // all 2 tokens
        const auto backend = fake_for(q, Scheme::full_answer, traces);
        const auto raw = score_raw(backend, prompt, q, TokenizerKind::whitespace);
        const auto tn = score_tnorm(backend, prompt, q, TokenizerKind::whitespace);
        CHECK(raw.predicted_index == tn.predicted_index);
    }
}

TEST_CASE("score_bnorm: per-character division is exact") {
    // candidate "(A) abcdef" has 10 characters
    const auto q = question_with({"abcdef", "x"}, 0);
    const auto prompt = build_prompt(q, Scheme::full_answer, 0, {});
    const auto backend = fake_for(q, Scheme::full_answer, {{-1.0, -1.0, -1.0}, {-4.0}});
    const auto p = score_bnorm(backend, prompt, q, TokenizerKind::whitespace);
    CHECK(p.scored[0].char_count == 10);
    CHECK(p.scored[0].b_norm == -3.0 / 10);
    CHECK(p.scored[0].b_norm == -0.30);
}

TEST_CASE("score_bnorm: normalization can flip the raw ranking") {
    const auto q = question_with({"abcd", "abcdefghijklmnop"}, 1);
    const auto prompt = build_prompt(q, Scheme::full_answer, 0, {});
    // X: raw -2 over 8 chars (-0.25); Y: raw -3 over 20 chars (-0.15)
    const auto backend = fake_for(q, Scheme::full_answer, {{-2.0}, {-3.0}});
    const auto raw = score_raw(backend, prompt, q, TokenizerKind::whitespace);
    const auto bn = score_bnorm(backend, prompt, q, TokenizerKind::whitespace);
    CHECK(raw.predicted_index == 0);
    CHECK(bn.predicted_index == 1);
    CHECK(bn.scored[0].b_norm == -0.25);
    CHECK(bn.scored[1].b_norm == -0.15);
}

TEST_CASE("score_bnorm: equal char counts reproduce the raw ranking") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> lp(-5.0, -0.01);
    for (int iter = 0; iter < 50; ++iter) {
        const auto q = question_with({"aaaa", "bbbb", "cccc"}, 0);
        const auto prompt = build_prompt(q, Scheme::full_answer, 0, {});
        std::vector<std::vector<double>> traces(3);
        for (auto& t : traces) t = {lp(rng), lp(rng), lp(rng)};
        const auto backend = fake_for(q, Scheme::full_answer, traces);
        const auto raw = score_raw(backend, prompt, q, TokenizerKind::whitespace);
        const auto bn = score_bnorm(backend, prompt, q, TokenizerKind::whitespace);
        CHECK(raw.predicted_index == bn.predicted_index);
    }
}

namespace {

// Table model that greedily generates `text` after the cue, then a newline.
TableModel generator_model(const std::string& text) {
    TableModelSpec spec;
    spec.vocabulary = {"\n", " " + text, " pad"};
    NextTokenDistribution after_cue;
    after_cue.entries[" " + text] = std::log(0.8);
    after_cue.entries["\n"] = std::log(0.2);
    NextTokenDistribution then_newline;
    then_newline.entries["\n"] = std::log(0.9);
    then_newline.entries[" pad"] = std::log(0.1);
    spec.rules.push_back({"Answer: " + text, then_newline});
    spec.rules.push_back({"Answer:", after_cue});
    return TableModel(spec);
}

} // namespace

TEST_CASE("score_exact_match: generated letter matches") {
    const auto q = example_question(Dataset::mmlu); // gold D
    const auto prompt = build_prompt(q, Scheme::label_only, 0, {});
    const auto model = generator_model("D");
    const auto p = score_exact_match(model, prompt, q, TokenizerKind::whitespace);
    CHECK(p.predicted_index == 3);
    CHECK(p.is_correct);
    CHECK(p.scored.empty());
}

TEST_CASE("score_exact_match: off-range generation scores none") {
    const auto q = example_question(Dataset::mmlu);
    const auto prompt = build_prompt(q, Scheme::label_only, 0, {});
    const auto model = generator_model("elephant");
    const auto p = score_exact_match(model, prompt, q, TokenizerKind::whitespace);
    CHECK(!p.predicted_index.has_value());
    CHECK(!p.is_correct);
}

TEST_CASE("score_exact_match: parenthesized letter normalizes") {
    const auto q = example_question(Dataset::mmlu);
    const auto prompt = build_prompt(q, Scheme::label_only, 0, {});
    const auto model = generator_model("(B)");
    const auto p = score_exact_match(model, prompt, q, TokenizerKind::whitespace);
    CHECK(p.predicted_index == 1);
    CHECK(!p.is_correct);
}

TEST_CASE("score_exact_match: full choice text matches case-sensitively") {
    const auto q = question_with({"steel spoon", "wool sock"}, 0);
    const auto prompt = build_prompt(q, Scheme::label_only, 0, {});
    CHECK(score_exact_match(generator_model("steel spoon"), prompt, q,
                            TokenizerKind::whitespace)
              .predicted_index == 0);
    CHECK(!score_exact_match(generator_model("Steel Spoon"), prompt, q,
                             TokenizerKind::whitespace)
               .predicted_index.has_value());
}

TEST_CASE("normalize_generated") {
    CHECK(normalize_generated(" D") == "D");
    CHECK(normalize_generated("B.") == "B");
    CHECK(normalize_generated("(B)") == "B");
    CHECK(normalize_generated("(B).") == "B");
    CHECK(normalize_generated("  a steel spoon.  ") == "a steel spoon");
    CHECK(normalize_generated("") == "");
}

TEST_CASE("run_method: order, scheme checks, zero-shot prompts") {
    std::vector<Question> questions;
    for (int i = 0; i < 4; ++i)
        questions.push_back(
            question_with({"a" + std::to_string(i), "bb", "ccc dd"}, i % 3,
                          "q/" + std::to_string(i)));
    ConstantBackend backend(-1.0);
    RunOptions options;

    const auto run = run_method(backend, questions, Method::raw, Scheme::full_answer, options);
    REQUIRE(run.predictions.size() == 4);
    CHECK(run.errored.empty());
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(run.predictions[i].question_id == questions[i].id);
        // n_shots=0: equal to scoring the bare zero-shot prompt directly
        const auto direct = score_raw(backend, build_prompt(questions[i], Scheme::full_answer,
                                                            0, {}),
                                      questions[i], options.tokenizer);
        CHECK(run.predictions[i].predicted_index == direct.predicted_index);
        CHECK(run.predictions[i].scored.size() == direct.scored.size());
    }

    CHECK_THROWS_AS(run_method(backend, questions, Method::oc, Scheme::full_answer, options),
                    ConfigError);
    CHECK_THROWS_AS(
        run_method(backend, questions, Method::raw, Scheme::label_only, options),
        ConfigError);
}

TEST_CASE("run_method: worker counts do not change results") {
    std::vector<Question> questions;
    for (int i = 0; i < 23; ++i)
        questions.push_back(question_with({"aa bb", "c", "dd ee ff", "gg hh"}, i % 4,
                                          "q/" + std::to_string(i)));
    ConstantBackend backend(-0.25);
    RunOptions seq;
    RunOptions par;
    par.workers = 8;
    const auto a = run_method(backend, questions, Method::raw, Scheme::full_answer, seq);
    const auto b = run_method(backend, questions, Method::raw, Scheme::full_answer, par);
    REQUIRE(a.predictions.size() == b.predictions.size());
    for (std::size_t i = 0; i < a.predictions.size(); ++i) {
        CHECK(a.predictions[i].question_id == b.predictions[i].question_id);
        CHECK(a.predictions[i].predicted_index == b.predictions[i].predicted_index);
        for (std::size_t j = 0; j < a.predictions[i].scored.size(); ++j)
            CHECK(a.predictions[i].scored[j].raw == b.predictions[i].scored[j].raw);
    }
}

TEST_CASE("run_method: error policy") {
    std::vector<Question> questions{
        question_with({"x", "y"}, 0, "q/ok"),
        question_with({"miss", "also miss"}, 0, "q/broken"),
    };
    FakeBackend backend;
    for (const auto& t : candidate_targets(questions[0], Scheme::full_answer))
        backend.traces[" " + t.text] = {-1.0};
    // q/broken has no traces -> TraceMissError

    RunOptions abort_opts;
    CHECK_THROWS_AS(
        run_method(backend, questions, Method::raw, Scheme::full_answer, abort_opts),
        TraceMissError);

    RunOptions skip_opts;
    skip_opts.error_policy = ErrorPolicy::skip_errors;
    const auto run = run_method(backend, questions, Method::raw, Scheme::full_answer, skip_opts);
    REQUIRE(run.predictions.size() == 1);
    CHECK(run.predictions[0].question_id == "q/ok");
    REQUIRE(run.errored.size() == 1);
    CHECK(run.errored[0].locator == "q/broken");
}

TEST_CASE("run_method: exemplar sampling is seed-deterministic and disjoint") {
    std::vector<Question> questions;
    for (int i = 0; i < 12; ++i)
        questions.push_back(question_with({"aa", "bb", "cc"}, 0, "q/" + std::to_string(i)));
    ConstantBackend backend(-1.0);
    RunOptions options;
    options.n_shots = 2;
    options.seed = 99;
    const auto a = run_method(backend, questions, Method::raw, Scheme::full_answer, options);
    const auto b = run_method(backend, questions, Method::raw, Scheme::full_answer, options);
    REQUIRE(a.predictions.size() == b.predictions.size());
    for (std::size_t i = 0; i < a.predictions.size(); ++i)
        CHECK(a.predictions[i].scored[0].raw == b.predictions[i].scored[0].raw);

    RunOptions too_few;
    too_few.n_shots = 12;
    CHECK_THROWS_AS(run_method(backend, questions, Method::raw, Scheme::full_answer, too_few),
                    ConfigError);
}

TEST_CASE("property: choice permutation permutes likelihood predictions") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> lp(-6.0, -0.01);
    std::uniform_int_distribution<int> klen(2, 5);
    std::uniform_int_distribution<int> tlen(1, 6);
    for (int iter = 0; iter < 100; ++iter) {
        const int k = klen(rng);
        std::vector<std::string> choices;
        std::vector<std::vector<double>> traces;
        for (int i = 0; i < k; ++i) {
            choices.push_back("choice-" + std::to_string(iter) + "-" + std::to_string(i));
            std::vector<double> t;
            const int n = tlen(rng);
            for (int j = 0; j < n; ++j) t.push_back(lp(rng));
            traces.push_back(t);
        }
        const auto q = question_with(choices, 0);
        const auto prompt = build_prompt(q, Scheme::full_answer, 0, {});
        const auto backend = fake_for(q, Scheme::full_answer, traces);

        std::vector<int> perm(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
        std::shuffle(perm.begin(), perm.end(), rng);

        std::vector<std::string> perm_choices(static_cast<std::size_t>(k));
        std::vector<std::vector<double>> perm_traces(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            perm_choices[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
                choices[static_cast<std::size_t>(i)];
            perm_traces[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
                traces[static_cast<std::size_t>(i)];
        }
        const auto pq = question_with(perm_choices, perm[0]);
        const auto pprompt = build_prompt(pq, Scheme::full_answer, 0, {});
        const auto pbackend = fake_for(pq, Scheme::full_answer, perm_traces);

        for (auto scorer : {&score_raw, &score_tnorm, &score_bnorm}) {
            const auto base = scorer(backend, prompt, q, TokenizerKind::whitespace);
            const auto moved = scorer(pbackend, pprompt, pq, TokenizerKind::whitespace);
            REQUIRE(base.predicted_index.has_value());
            CHECK(moved.predicted_index ==
                  perm[static_cast<std::size_t>(*base.predicted_index)]);
            for (const auto& sc : base.scored) {
                CHECK(sc.raw <= 0.0);
                CHECK(sc.perplexity >= 1.0);
            }
        }
    }
}

TEST_CASE("predictions JSONL round-trip") {
    std::vector<Question> questions{question_with({"aa", "bbb cc"}, 1, "q/rt")};
    ConstantBackend backend(-0.75);
    RunOptions options;
    auto run = run_method(backend, questions, Method::b_norm, Scheme::full_answer, options);

    Prediction none;
    none.question_id = "q/none";
    none.method = Method::exact_match;
    run.predictions.push_back(none);

    std::stringstream buf;
    write_predictions(buf, run.predictions);
    const auto again = read_predictions(buf);
    REQUIRE(again.size() == run.predictions.size());
    for (std::size_t i = 0; i < again.size(); ++i) {
        CHECK(again[i].question_id == run.predictions[i].question_id);
        CHECK(again[i].method == run.predictions[i].method);
        CHECK(again[i].predicted_index == run.predictions[i].predicted_index);
        CHECK(again[i].is_correct == run.predictions[i].is_correct);
        REQUIRE(again[i].scored.size() == run.predictions[i].scored.size());
        for (std::size_t j = 0; j < again[i].scored.size(); ++j) {
            CHECK(again[i].scored[j].raw == run.predictions[i].scored[j].raw);
            CHECK(again[i].scored[j].b_norm == run.predictions[i].scored[j].b_norm);
        }
    }
}
