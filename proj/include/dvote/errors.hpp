#pragma once

#include <stdexcept>
#include <string>

namespace dvote {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad operation arguments (out-of-range t, k > K, empty vote list, ...).
struct DomainError : Error {
    using Error::Error;
};

// Invalid run configuration; maps to CLI exit code 1.
struct ConfigError : Error {
    using Error::Error;
};

// Task ingestion problems (malformed line, duplicate id); CLI exit code 2.
struct TaskError : Error {
    using Error::Error;
};

// Denoiser failures; CLI exit code 3.
struct DenoiserError : Error {
    using Error::Error;
    virtual bool retryable() const { return false; }
};

// Transport-level remote failure (connection refused, timeout). Retryable.
struct TransportError : DenoiserError {
    using DenoiserError::DenoiserError;
    bool retryable() const override { return true; }
};

// Malformed remote response (non-200, wrong arity, non-finite logits).
struct ProtocolError : DenoiserError {
    using DenoiserError::DenoiserError;
};

}  // namespace dvote
