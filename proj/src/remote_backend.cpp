#include "mcqeval/remote_backend.hpp"

#include <cmath>
#include <mutex>

#include "httplib.h"
#include "nlohmann/json.hpp"

#include "mcqeval/errors.hpp"
#include "mcqeval/text.hpp"

namespace mcqeval {

struct RemoteBackend::Impl {
    std::string base_url;
    std::string tokenizer_tag;
    mutable httplib::Client client;
    mutable std::mutex mutex; // serialize wire calls; evaluation workers may share us

    Impl(std::string url, std::string tag)
        : base_url(std::move(url)), tokenizer_tag(std::move(tag)), client(base_url) {
        client.set_connection_timeout(10);
        client.set_read_timeout(60);
    }

    nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
        std::lock_guard lock(mutex);
        auto res = client.Post(path, body.dump(), "application/json");
        if (!res)
            throw TransportError("remote backend unreachable at " + base_url + path + ": " +
                                 httplib::to_string(res.error()));
        if (res->status < 200 || res->status >= 300)
            throw TransportError("remote backend " + path + " returned status " +
                                 std::to_string(res->status));
        nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded())
            throw ValidationError("remote response " + path + ": body is not valid JSON");
        return j;
    }
};

namespace {

std::vector<std::string> require_string_array(const nlohmann::json& j, const char* field,
                                              const std::string& where) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_array())
        throw ValidationError(where + ": missing array field '" + std::string(field) + "'");
    std::vector<std::string> out;
    out.reserve(it->size());
    for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& v = (*it)[i];
        if (!v.is_string())
            throw ValidationError(where + ": " + field + "[" + std::to_string(i) +
                                  "] is not a string");
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::vector<double> require_number_array(const nlohmann::json& j, const char* field,
                                         const std::string& where) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_array())
        throw ValidationError(where + ": missing array field '" + std::string(field) + "'");
    std::vector<double> out;
    out.reserve(it->size());
    for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& v = (*it)[i];
        if (!v.is_number())
            throw ValidationError(where + ": " + field + "[" + std::to_string(i) +
                                  "] is not a number");
        out.push_back(v.get<double>());
    }
    return out;
}

void check_logprobs(const std::vector<double>& logprobs, const std::string& where) {
    for (std::size_t i = 0; i < logprobs.size(); ++i) {
        if (!std::isfinite(logprobs[i]))
            throw ValidationError(where + ": logprobs[" + std::to_string(i) +
                                  "] is not finite");
        if (logprobs[i] > 0.0)
            throw ValidationError(where + ": logprobs[" + std::to_string(i) +
                                  "] positive log-probability " + format_double(logprobs[i]));
    }
}

} // namespace

RemoteBackend::RemoteBackend(std::string base_url, std::string tokenizer_tag)
    : impl_(std::make_unique<Impl>(std::move(base_url), std::move(tokenizer_tag))) {}

RemoteBackend::~RemoteBackend() = default;

NextTokenDistribution RemoteBackend::next_token_logprobs(const TokenizedSequence& prompt) const {
    const std::string where = "remote response /v1/next_token";
    const nlohmann::json body{{"prompt", prompt.text()}, {"tokenizer", impl_->tokenizer_tag}};
    const auto j = impl_->post("/v1/next_token", body);

    const auto tokens = require_string_array(j, "tokens", where);
    const auto logprobs = require_number_array(j, "logprobs", where);
    if (tokens.size() != logprobs.size())
        throw ValidationError(where + ": tokens (" + std::to_string(tokens.size()) +
                              ") and logprobs (" + std::to_string(logprobs.size()) +
                              ") are not parallel");
    check_logprobs(logprobs, where);

    NextTokenDistribution dist;
    if (j.contains("complete")) {
        if (!j["complete"].is_boolean())
            throw ValidationError(where + ": complete is not a boolean");
        dist.complete = j["complete"].get<bool>();
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!dist.entries.emplace(tokens[i], logprobs[i]).second)
            throw ValidationError(where + ": tokens[" + std::to_string(i) + "] duplicate '" +
                                  tokens[i] + "'");
    }
    dist.validate(where);
    return dist;
}

LogProbTrace RemoteBackend::continuation_logprobs(const TokenizedSequence& prompt,
                                                  const TokenizedSequence& continuation) const {
    if (continuation.empty())
        throw std::invalid_argument("continuation_logprobs: empty continuation");
    const std::string where = "remote response /v1/continuation";
    const std::string continuation_text = continuation.text();
    const nlohmann::json body{{"prompt", prompt.text()},
                              {"continuation", continuation_text},
                              {"tokenizer", impl_->tokenizer_tag}};
    const auto j = impl_->post("/v1/continuation", body);

    const auto tokens = require_string_array(j, "tokens", where);
    const auto logprobs = require_number_array(j, "logprobs", where);
    const auto byte_lengths = require_number_array(j, "byte_lengths", where);
    if (tokens.size() != logprobs.size() || tokens.size() != byte_lengths.size())
        throw ValidationError(where + ": tokens/logprobs/byte_lengths are not parallel arrays");
    if (tokens.empty()) throw ValidationError(where + ": empty token array for continuation");
    check_logprobs(logprobs, where);

    std::string reassembled;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto expected = static_cast<double>(tokens[i].size());
        if (byte_lengths[i] < 1.0)
            throw ValidationError(where + ": byte_lengths[" + std::to_string(i) + "] < 1");
        if (byte_lengths[i] != expected)
            throw ValidationError(where + ": byte_lengths[" + std::to_string(i) + "] = " +
                                  format_double(byte_lengths[i]) + " but token has " +
                                  format_double(expected) + " bytes");
        reassembled += tokens[i];
    }
    if (reassembled != continuation_text)
        throw ValidationError(where + ": tokens do not reassemble the continuation string");

    LogProbTrace trace;
    trace.per_token = logprobs;
    trace.validate(where);
    return trace;
}

} // namespace mcqeval
