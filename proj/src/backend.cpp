#include "mcqeval/backend.hpp"

#include <cmath>
#include <fstream>

#include "mcqeval/errors.hpp"
#include "mcqeval/text.hpp"

namespace mcqeval {

std::optional<double> NextTokenDistribution::logprob(const std::string& token) const {
    auto it = entries.find(token);
    if (it == entries.end()) return std::nullopt;
    return it->second;
}

void NextTokenDistribution::validate(const std::string& where) const {
    double mass = 0.0;
    for (const auto& [token, lp] : entries) {
        if (!std::isfinite(lp))
            throw ValidationError(where + ": non-finite log-probability for token '" + token +
                                  "'");
        if (lp > 0.0)
            throw ValidationError(where + ": positive log-probability " + format_double(lp) +
                                  " for token '" + token + "'");
        mass += std::exp(lp);
    }
    if (complete) {
        if (mass < 1.0 - 1e-6 || mass > 1.0 + 1e-6)
            throw ValidationError(where + ": complete distribution mass " +
                                  format_double(mass) + " outside [1-1e-6, 1+1e-6]");
    } else if (mass > 1.0 + 1e-6) {
        throw ValidationError(where + ": incomplete distribution mass " + format_double(mass) +
                              " exceeds 1");
    }
}

double LogProbTrace::sum() const {
    double s = 0.0;
    for (double v : per_token) s += v;
    return s;
}

void LogProbTrace::validate(const std::string& where) const {
    for (std::size_t i = 0; i < per_token.size(); ++i) {
        if (!std::isfinite(per_token[i]))
            throw ValidationError(where + ": non-finite log-probability at index " +
                                  std::to_string(i));
        if (per_token[i] > 0.0)
            throw ValidationError(where + ": positive log-probability " +
                                  format_double(per_token[i]) + " at index " +
                                  std::to_string(i));
    }
}

LogProbTrace teacher_forced_trace(const Backend& backend, const TokenizedSequence& prompt,
                                  const TokenizedSequence& continuation) {
    if (continuation.empty())
        throw std::invalid_argument("continuation_logprobs: empty continuation");
    LogProbTrace trace;
    trace.per_token.reserve(continuation.size());
    TokenizedSequence context = prompt;
    for (const auto& token : continuation.tokens) {
        const auto dist = backend.next_token_logprobs(context);
        trace.per_token.push_back(dist.logprob(token).value_or(kUnknownTokenFloor));
        context.append(token);
    }
    return trace;
}

NextTokenDistribution next_token_logprobs(const Backend& backend,
                                          const TokenizedSequence& prompt) {
    if (prompt.empty()) throw std::invalid_argument("next_token_logprobs: empty prompt");
    return backend.next_token_logprobs(prompt);
}

std::string generate_greedy(const Backend& backend, const TokenizedSequence& prompt,
                            int max_tokens, const std::set<std::string>& stop) {
    if (max_tokens < 1) throw std::invalid_argument("generate_greedy: max_tokens < 1");
    TokenizedSequence context = prompt;
    std::string generated;
    for (int emitted = 0; emitted < max_tokens; ++emitted) {
        const auto dist = backend.next_token_logprobs(context);
        if (dist.entries.empty())
            throw ValidationError("generate_greedy: empty next-token distribution");
        // std::map iterates tokens in lexicographic order, so keeping the
        // first strict maximum realizes the smallest-token tie-break.
        const std::string* best_token = nullptr;
        double best_lp = 0.0;
        for (const auto& [token, lp] : dist.entries) {
            if (best_token == nullptr || lp > best_lp) {
                best_token = &token;
                best_lp = lp;
            }
        }
        if (stop.count(*best_token)) break;
        generated += *best_token;
        context.append(*best_token);
    }
    return generated;
}

void TableModelSpec::validate() const {
    if (vocabulary.empty()) throw ValidationError("table spec: empty vocabulary");
    std::set<std::string> seen;
    for (const auto& t : vocabulary) {
        if (t.empty()) throw ValidationError("table spec: empty vocabulary token");
        if (!seen.insert(t).second)
            throw ValidationError("table spec: duplicate vocabulary token '" + t + "'");
    }
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (rules[i].suffix.empty())
            throw ValidationError("table spec: rules[" + std::to_string(i) + "] empty suffix");
        rules[i].distribution.validate("table spec: rules[" + std::to_string(i) + "]");
    }
}

TableModelSpec TableModelSpec::from_json(const nlohmann::json& j) {
    TableModelSpec spec;
    try {
        spec.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
        if (j.contains("rules")) {
            for (const auto& r : j.at("rules")) {
                TableRule rule;
                rule.suffix = r.at("suffix").get<std::string>();
                for (const auto& [token, lp] : r.at("distribution").items())
                    rule.distribution.entries[token] = lp.get<double>();
                if (r.contains("complete")) rule.distribution.complete = r.at("complete").get<bool>();
                spec.rules.push_back(std::move(rule));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("table spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

nlohmann::json TableModelSpec::to_json() const {
    nlohmann::json rules_json = nlohmann::json::array();
    for (const auto& r : rules) {
        nlohmann::json dist = nlohmann::json::object();
        for (const auto& [token, lp] : r.distribution.entries) dist[token] = lp;
        nlohmann::json rule{{"suffix", r.suffix}, {"distribution", dist}};
        if (!r.distribution.complete) rule["complete"] = false;
        rules_json.push_back(std::move(rule));
    }
    return nlohmann::json{{"vocabulary", vocabulary}, {"rules", rules_json}};
}

TableModelSpec TableModelSpec::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open table spec: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError("table spec: invalid JSON in " + path.string());
    return from_json(j);
}

TableModel::TableModel(TableModelSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    uniform_logprob_ = -std::log(static_cast<double>(spec_.vocabulary.size()));
    vocab_.insert(spec_.vocabulary.begin(), spec_.vocabulary.end());
}

NextTokenDistribution TableModel::next_token_logprobs(const TokenizedSequence& prompt) const {
    const std::string context = prompt.text();
    for (const auto& rule : spec_.rules) {
        if (ends_with(context, rule.suffix)) return rule.distribution;
    }
    NextTokenDistribution uniform;
    for (const auto& t : spec_.vocabulary) uniform.entries[t] = uniform_logprob_;
    return uniform;
}

LogProbTrace TableModel::continuation_logprobs(const TokenizedSequence& prompt,
                                               const TokenizedSequence& continuation) const {
    return teacher_forced_trace(*this, prompt, continuation);
}

std::string trace_key(const std::string& prompt_text, const std::string& tokenizer_tag) {
    std::string keyed = prompt_text;
    keyed.push_back('\x1f');
    keyed += tokenizer_tag;
    return sha256_hex(keyed);
}

TraceBackend::TraceBackend(const std::filesystem::path& path, std::string tokenizer_tag)
    : tokenizer_tag_(std::move(tokenizer_tag)) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trace file: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(lineno);
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ValidationError(where + ": invalid JSON");
        try {
            const auto key = j.at("key").get<std::string>();
            const auto tokens = j.at("tokens").get<std::vector<std::string>>();
            const auto logprobs = j.at("logprobs").get<std::vector<double>>();
            if (tokens.size() != logprobs.size())
                throw ValidationError(where + ": tokens/logprobs length mismatch");
            NextTokenDistribution dist;
            if (j.contains("complete")) dist.complete = j.at("complete").get<bool>();
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (!dist.entries.emplace(tokens[i], logprobs[i]).second)
                    throw ValidationError(where + ": duplicate token '" + tokens[i] + "'");
            }
            dist.validate(where);
            records_[key] = std::move(dist);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
}

NextTokenDistribution TraceBackend::next_token_logprobs(const TokenizedSequence& prompt) const {
    const std::string key = trace_key(prompt.text(), tokenizer_tag_);
    auto it = records_.find(key);
    if (it == records_.end())
        throw TraceMissError("trace miss for prompt hash " + key);
    return it->second;
}

LogProbTrace TraceBackend::continuation_logprobs(const TokenizedSequence& prompt,
                                                 const TokenizedSequence& continuation) const {
    return teacher_forced_trace(*this, prompt, continuation);
}

nlohmann::json trace_record(const std::string& key, const NextTokenDistribution& dist) {
    std::vector<std::string> tokens;
    std::vector<double> logprobs;
    tokens.reserve(dist.entries.size());
    for (const auto& [token, lp] : dist.entries) {
        tokens.push_back(token);
        logprobs.push_back(lp);
    }
    nlohmann::json j{{"key", key}, {"tokens", tokens}, {"logprobs", logprobs}};
    if (!dist.complete) j["complete"] = false;
    return j;
}

ConstantBackend::ConstantBackend(double logprob) : logprob_(logprob) {
    if (!(logprob <= 0.0) || !std::isfinite(logprob))
        throw std::invalid_argument("ConstantBackend: log-probability must be finite and <= 0");
}

NextTokenDistribution ConstantBackend::next_token_logprobs(const TokenizedSequence&) const {
    throw std::logic_error("ConstantBackend supports only the continuation surface");
}

LogProbTrace ConstantBackend::continuation_logprobs(const TokenizedSequence&,
                                                    const TokenizedSequence& continuation) const {
    if (continuation.empty())
        throw std::invalid_argument("continuation_logprobs: empty continuation");
    LogProbTrace trace;
    trace.per_token.assign(continuation.size(), logprob_);
    return trace;
}

} // namespace mcqeval
