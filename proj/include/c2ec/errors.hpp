// Copyright the c2ec authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace c2ec {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Hamming accounting requested on strings of different length.
struct LengthMismatchError : Error {
    using Error::Error;
};

// Substring indices outside [0, len] or a > b.
struct IndexOutOfRangeError : Error {
    using Error::Error;
};

// Prompt template with zero or multiple {INPUT} slots.
struct TemplateError : Error {
    using Error::Error;
};

// Context contains ids outside the backend vocabulary, or text cannot be
// encoded by a backend that has no UNK fallback.
struct UnknownTokenError : Error {
    using Error::Error;
};

// Remote backend unreachable or returned a non-200 response.
struct BackendUnavailableError : Error {
    using Error::Error;
};

// Malformed input data. Carries a 1-based line number when known (0 = n/a).
struct ParseError : Error {
    std::size_t line = 0;
    explicit ParseError(const std::string& msg, std::size_t line_no = 0)
        : Error(line_no ? msg + " (line " + std::to_string(line_no) + ")" : msg),
          line(line_no) {}
};

// Prediction file and corpus disagree on the number of sentences.
struct LineCountMismatchError : Error {
    using Error::Error;
};

// Beam search discarded every hypothesis (max_extra_deletes too small).
struct NoHypothesisError : Error {
    using Error::Error;
};

// Bad configuration file or field value.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace c2ec
