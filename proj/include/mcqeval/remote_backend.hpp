#pragma once

#include <memory>
#include <string>

#include "mcqeval/backend.hpp"

namespace mcqeval {

/// HTTP client for a log-probability server. The server owns tokenization;
/// traces come back with the server's token strings so normalization lengths
/// stay auditable. Wire protocol (JSON over HTTP, UTF-8):
///
///   POST /v1/next_token   {"prompt": s, "tokenizer": s}
///     -> {"tokens": [s], "logprobs": [n], "complete": bool (default true)}
///   POST /v1/continuation {"prompt": s, "continuation": s, "tokenizer": s}
///     -> {"tokens": [s], "logprobs": [n], "byte_lengths": [int]}
///
/// Responses are validated against the distribution/trace invariants before
/// use; violations raise ValidationError naming the offending field path.
/// Unreachable host or non-2xx status raises TransportError.
class RemoteBackend : public Backend {
public:
    RemoteBackend(std::string base_url, std::string tokenizer_tag);
    ~RemoteBackend() override;

    NextTokenDistribution next_token_logprobs(const TokenizedSequence& prompt) const override;
    LogProbTrace continuation_logprobs(const TokenizedSequence& prompt,
                                       const TokenizedSequence& continuation) const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace mcqeval
