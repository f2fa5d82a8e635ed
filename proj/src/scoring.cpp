#include "mcqeval/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <thread>

#include "nlohmann/json.hpp"

#include "mcqeval/errors.hpp"
#include "mcqeval/text.hpp"

namespace mcqeval {

const char* method_name(Method m) {
    switch (m) {
        case Method::oc: return "oc";
        case Method::raw: return "raw";
        case Method::t_norm: return "t_norm";
        case Method::b_norm: return "b_norm";
        case Method::exact_match: return "exact_match";
    }
    return "unknown";
}

std::optional<Method> method_from_name(std::string_view name) {
    if (name == "oc") return Method::oc;
    if (name == "raw") return Method::raw;
    if (name == "t_norm") return Method::t_norm;
    if (name == "b_norm") return Method::b_norm;
    if (name == "exact_match") return Method::exact_match;
    return std::nullopt;
}

Scheme required_scheme(Method m) {
    return (m == Method::oc || m == Method::exact_match) ? Scheme::label_only
                                                         : Scheme::full_answer;
}

namespace {

void require_scheme(const PromptInstance& prompt, Method m) {
    if (prompt.scheme != required_scheme(m))
        throw ConfigError(std::string("method ") + method_name(m) + " requires scheme " +
                          scheme_name(required_scheme(m)) + ", got " +
                          scheme_name(prompt.scheme));
}

} // namespace

std::vector<ScoredChoice> score_candidates(const Backend& backend, const PromptInstance& prompt,
                                           TokenizerKind tokenizer) {
    const TokenizedSequence prompt_seq = tokenize(prompt.prompt_text, tokenizer);
    std::vector<ScoredChoice> out;
    out.reserve(prompt.candidates.size());
    for (const auto& cand : prompt.candidates) {
        // The separator space belongs to the continuation sequence but not to
        // the candidate's character count.
        const TokenizedSequence cont_seq = tokenize(" " + cand.text, tokenizer);
        LogProbTrace trace = backend.continuation_logprobs(prompt_seq, cont_seq);
        trace.validate("candidate " + std::to_string(cand.choice_index));
        if (trace.per_token.empty())
            throw ValidationError("candidate " + std::to_string(cand.choice_index) +
                                  ": empty trace");
        ScoredChoice sc;
        sc.choice_index = cand.choice_index;
        sc.raw = trace.sum();
        sc.token_count = static_cast<int>(trace.per_token.size());
        sc.char_count = cand.char_length;
        sc.t_norm = sc.raw / sc.token_count;
        sc.b_norm = sc.raw / sc.char_count;
        sc.perplexity = std::exp(-sc.raw / sc.token_count);
        out.push_back(sc);
    }
    return out;
}

namespace {

template <typename Better>
int select_index(const std::vector<ScoredChoice>& scored, double ScoredChoice::*field,
                 Better better) {
    int best = 0;
    for (std::size_t i = 1; i < scored.size(); ++i) {
        if (better(scored[i].*field, scored[static_cast<std::size_t>(best)].*field))
            best = static_cast<int>(i);
    }
    return scored[static_cast<std::size_t>(best)].choice_index;
}

Prediction likelihood_prediction(const Backend& backend, const PromptInstance& prompt,
                                 const Question& question, TokenizerKind tokenizer, Method m) {
    require_scheme(prompt, m);
    Prediction p;
    p.question_id = question.id;
    p.method = m;
    p.scored = score_candidates(backend, prompt, tokenizer);
    if (p.scored.empty()) throw ConfigError("question " + question.id + " has no candidates");
    int idx = 0;
    switch (m) {
        case Method::oc:
            idx = select_index(p.scored, &ScoredChoice::perplexity, std::less<double>{});
            break;
        case Method::raw:
            idx = select_index(p.scored, &ScoredChoice::raw, std::greater<double>{});
            break;
        case Method::t_norm:
            idx = select_index(p.scored, &ScoredChoice::t_norm, std::greater<double>{});
            break;
        case Method::b_norm:
            idx = select_index(p.scored, &ScoredChoice::b_norm, std::greater<double>{});
            break;
        case Method::exact_match:
            throw ConfigError("exact_match is not a likelihood method");
    }
    p.predicted_index = idx;
    p.is_correct = (idx == question.correct_index);
    return p;
}

} // namespace

Prediction score_oc(const Backend& backend, const PromptInstance& prompt,
                    const Question& question, TokenizerKind tokenizer) {
    return likelihood_prediction(backend, prompt, question, tokenizer, Method::oc);
}

Prediction score_raw(const Backend& backend, const PromptInstance& prompt,
                     const Question& question, TokenizerKind tokenizer) {
    return likelihood_prediction(backend, prompt, question, tokenizer, Method::raw);
}

Prediction score_tnorm(const Backend& backend, const PromptInstance& prompt,
                       const Question& question, TokenizerKind tokenizer) {
    return likelihood_prediction(backend, prompt, question, tokenizer, Method::t_norm);
}

Prediction score_bnorm(const Backend& backend, const PromptInstance& prompt,
                       const Question& question, TokenizerKind tokenizer) {
    return likelihood_prediction(backend, prompt, question, tokenizer, Method::b_norm);
}

std::string normalize_generated(std::string_view text) {
    std::string s = trim(text);
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s.size() >= 2 && s.front() == '(' && s.back() == ')') s = s.substr(1, s.size() - 2);
    return trim(s);
}

Prediction score_exact_match(const Backend& backend, const PromptInstance& prompt,
                             const Question& question, TokenizerKind tokenizer) {
    require_scheme(prompt, Method::exact_match);
    const TokenizedSequence prompt_seq = tokenize(prompt.prompt_text, tokenizer);
    const std::string generated = generate_greedy(backend, prompt_seq, 32, {"\n"});
    const std::string normalized = normalize_generated(generated);

    Prediction p;
    p.question_id = question.id;
    p.method = Method::exact_match;
    for (std::size_t i = 0; i < question.choices.size(); ++i) {
        const std::string letter(1, choice_letter(static_cast<int>(i)));
        if (normalized == letter || normalized == question.choices[i]) {
            p.predicted_index = static_cast<int>(i);
            break;
        }
    }
    p.is_correct = p.predicted_index && *p.predicted_index == question.correct_index;
    return p;
}

namespace {

std::vector<Question> sample_exemplars(const std::vector<Question>& questions, std::size_t target,
                                       int n_shots, std::uint64_t seed) {
    std::vector<Question> out;
    if (n_shots == 0) return out;
    std::seed_seq seq{seed, static_cast<std::uint64_t>(target)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, questions.size() - 1);
    std::vector<std::size_t> chosen;
    while (chosen.size() < static_cast<std::size_t>(n_shots)) {
        const std::size_t i = pick(rng);
        if (i == target) continue;
        if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
        chosen.push_back(i);
    }
    for (std::size_t i : chosen) out.push_back(questions[i]);
    return out;
}

Prediction score_one(const Backend& backend, const std::vector<Question>& questions,
                     std::size_t index, Method method, Scheme scheme,
                     const RunOptions& options) {
    const Question& q = questions[index];
    const auto exemplars = sample_exemplars(questions, index, options.n_shots, options.seed);
    const PromptInstance prompt = build_prompt(q, scheme, options.n_shots, exemplars);
    switch (method) {
        case Method::oc: return score_oc(backend, prompt, q, options.tokenizer);
        case Method::raw: return score_raw(backend, prompt, q, options.tokenizer);
        case Method::t_norm: return score_tnorm(backend, prompt, q, options.tokenizer);
        case Method::b_norm: return score_bnorm(backend, prompt, q, options.tokenizer);
        case Method::exact_match:
            return score_exact_match(backend, prompt, q, options.tokenizer);
    }
    throw std::logic_error("unreachable method");
}

bool is_backend_error(const std::exception_ptr& eptr) {
    try {
        std::rethrow_exception(eptr);
    } catch (const TransportError&) {
        return true;
    } catch (const TraceMissError&) {
        return true;
    } catch (const ValidationError&) {
        return true;
    } catch (...) {
        return false;
    }
}

std::string error_message(const std::exception_ptr& eptr) {
    try {
        std::rethrow_exception(eptr);
    } catch (const std::exception& e) {
        return e.what();
    } catch (...) {
        return "unknown error";
    }
}

} // namespace

MethodRun run_method(const Backend& backend, const std::vector<Question>& questions,
                     Method method, Scheme scheme, const RunOptions& options) {
    if (scheme != required_scheme(method))
        throw ConfigError(std::string("method ") + method_name(method) +
                          " is incompatible with scheme " + scheme_name(scheme));
    if (options.n_shots < 0) throw ConfigError("n_shots must be >= 0");
    if (options.n_shots > 0 &&
        questions.size() < static_cast<std::size_t>(options.n_shots) + 1)
        throw ConfigError("not enough questions to sample " + std::to_string(options.n_shots) +
                          " exemplars");
    if (options.workers < 1) throw ConfigError("workers must be >= 1");

    const std::size_t n = questions.size();
    std::vector<std::optional<Prediction>> slots(n);
    std::vector<std::exception_ptr> failures(n);

    const auto work = [&](std::size_t i) {
        try {
            slots[i] = score_one(backend, questions, i, method, scheme, options);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    };

    if (options.workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> stop{false};
        const std::size_t pool = std::min<std::size_t>(static_cast<std::size_t>(options.workers), n);
        std::vector<std::thread> threads;
        threads.reserve(pool);
        for (std::size_t t = 0; t < pool; ++t) {
            threads.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= n || stop.load()) return;
                    work(i);
                    if (failures[i] && options.error_policy == ErrorPolicy::abort_run)
                        stop.store(true);
                }
            });
        }
        for (auto& t : threads) t.join();
    }

    MethodRun run;
    run.predictions.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (failures[i]) {
            if (options.error_policy == ErrorPolicy::skip_errors && is_backend_error(failures[i])) {
                run.errored.push_back({questions[i].id, error_message(failures[i])});
                continue;
            }
            std::rethrow_exception(failures[i]);
        }
        if (slots[i]) run.predictions.push_back(std::move(*slots[i]));
    }
    return run;
}

namespace {

nlohmann::json scored_to_json(const ScoredChoice& sc) {
    return nlohmann::json{
        {"choice_index", sc.choice_index}, {"raw", sc.raw},
        {"token_count", sc.token_count},   {"char_count", sc.char_count},
        {"t_norm", sc.t_norm},             {"b_norm", sc.b_norm},
        {"perplexity", sc.perplexity},
    };
}

ScoredChoice scored_from_json(const nlohmann::json& j) {
    ScoredChoice sc;
    sc.choice_index = j.at("choice_index").get<int>();
    sc.raw = j.at("raw").get<double>();
    sc.token_count = j.at("token_count").get<int>();
    sc.char_count = j.at("char_count").get<int>();
    sc.t_norm = j.at("t_norm").get<double>();
    sc.b_norm = j.at("b_norm").get<double>();
    sc.perplexity = j.at("perplexity").get<double>();
    return sc;
}

} // namespace

void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions) {
    for (const auto& p : predictions) {
        nlohmann::json scored = nlohmann::json::array();
        for (const auto& sc : p.scored) scored.push_back(scored_to_json(sc));
        nlohmann::json j{
            {"question_id", p.question_id},
            {"method", method_name(p.method)},
            {"predicted_index",
             p.predicted_index ? nlohmann::json(*p.predicted_index) : nlohmann::json(nullptr)},
            {"is_correct", p.is_correct},
            {"scored", scored},
        };
        out << j.dump() << "\n";
    }
}

std::vector<Prediction> read_predictions(std::istream& in) {
    std::vector<Prediction> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ValidationError("predictions line " + std::to_string(lineno) +
                                  ": invalid JSON");
        try {
            Prediction p;
            p.question_id = j.at("question_id").get<std::string>();
            const auto m = method_from_name(j.at("method").get<std::string>());
            if (!m)
                throw ValidationError("predictions line " + std::to_string(lineno) +
                                      ": unknown method");
            p.method = *m;
            if (!j.at("predicted_index").is_null())
                p.predicted_index = j.at("predicted_index").get<int>();
            p.is_correct = j.at("is_correct").get<bool>();
            for (const auto& sj : j.at("scored")) p.scored.push_back(scored_from_json(sj));
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("predictions line " + std::to_string(lineno) + ": " +
                                  e.what());
        }
    }
    return out;
}

} // namespace mcqeval
