// SPDX-License-Identifier: Apache-2.0
#include "modalsr/error.hpp"

namespace modalsr {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidScene: return "invalid-scene";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::RankDeficiency: return "rank-deficiency";
    case ErrorKind::Format: return "format-error";
    case ErrorKind::Io: return "io-error";
    }
    return "error";
}

} // namespace modalsr
