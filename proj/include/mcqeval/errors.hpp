#pragma once

#include <stdexcept>
#include <string>

namespace mcqeval {

// Bad configuration or usage; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Remote backend unreachable or non-2xx; maps to exit code 3.
struct TransportError : std::runtime_error {
    explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

// A response or file violated a structural invariant. The message names the
// offending field path.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Trace backend had no record for a prompt; names the prompt hash.
struct TraceMissError : std::runtime_error {
    explicit TraceMissError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace mcqeval
