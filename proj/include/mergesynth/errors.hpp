#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mergesynth {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Conflict markers out of order or unterminated. `line()` is 1-based.
class MalformedMarkers : public Error {
public:
    MalformedMarkers(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct IndexOutOfVocabulary : Error {
    using Error::Error;
};

struct UnmappableTarget : Error {
    using Error::Error;
};

struct NonFiniteGradient : Error {
    using Error::Error;
};

struct RepositoryUnreadable : Error {
    using Error::Error;
};

struct EmptyCorpus : Error {
    using Error::Error;
};

/// Persisted data (dataset, vocabulary, checkpoint) failed validation.
struct DataError : Error {
    using Error::Error;
};

}  // namespace mergesynth
