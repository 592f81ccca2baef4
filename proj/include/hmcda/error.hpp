/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hmcda {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFinite,
  EmptyEnsemble,
  InsufficientMembers,
  UnsupportedKind,
  InvalidWeight,
  NotPositiveDefinite,
  Diverged,
  NonContiguousWindows,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` discriminates the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, ErrorCode code, std::string_view what) {
  if (!condition) fail(code, std::string(what));
}

}  // namespace hmcda
