// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace modalsr {

enum class ErrorKind {
    InvalidConfig,
    InvalidArgument,
    InvalidScene,
    NumericalFailure,
    RankDeficiency,
    Format,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library. The kind is stable and is what the
/// CLI prints as the machine-parsable prefix of its error line.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace modalsr
