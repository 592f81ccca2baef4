/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/error.hpp"

namespace hmcda {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::InsufficientMembers: return "InsufficientMembers";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::InvalidWeight: return "InvalidWeight";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::NonContiguousWindows: return "NonContiguousWindows";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace hmcda
