#pragma once

#include <stdexcept>
#include <string>

namespace nlpvq {

enum class Errc {
    invalid_argument,
    dimension_mismatch,
    format,
    io,
    degenerate,
    training_failed,
    hash_mismatch,
    truncated,
};

// Every failure in the library is reported as an nlpvq::Error carrying a
// category so callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace nlpvq
