#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace cid {

/// Base for every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (empty prompt, closed session, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Network-level failure talking to a backend. `retryable` is false for
/// client errors such as HTTP 400/401.
class TransportError : public Error {
public:
    TransportError(std::string endpoint, const std::string& what, bool retryable = true)
        : Error(what + " [endpoint: " + endpoint + "]"),
          endpoint_(std::move(endpoint)),
          retryable_(retryable) {}

    const std::string& endpoint() const noexcept { return endpoint_; }
    bool retryable() const noexcept { return retryable_; }

private:
    std::string endpoint_;
    bool retryable_;
};

/// HTTP 429 or equivalent. Always retryable.
class RateLimitError : public TransportError {
public:
    RateLimitError(std::string endpoint, const std::string& what)
        : TransportError(std::move(endpoint), what, true) {}
};

/// The backend answered, but not with something we can use.
class MalformedReplyError : public Error {
public:
    using Error::Error;
};

class ReplayDivergenceError : public Error {
public:
    ReplayDivergenceError(std::string session_id, std::size_t index, const std::string& what)
        : Error(what), session_id_(std::move(session_id)), index_(index) {}

    const std::string& session_id() const noexcept { return session_id_; }
    /// Zero-based index of the first prompt that did not match the recording.
    std::size_t index() const noexcept { return index_; }

private:
    std::string session_id_;
    std::size_t index_;
};

class ExplanationParseError : public Error {
public:
    ExplanationParseError(const std::string& what, std::string raw)
        : Error(what), raw_(std::move(raw)) {}

    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class NoCandidateError : public Error {
public:
    using Error::Error;
};

class EmbeddingError : public Error {
public:
    using Error::Error;
};

class FeatureExtractionSkipped : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class StoreError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace cid
