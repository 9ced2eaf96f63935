// Copyright 2026 The grd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GRD_ERROR_HPP_
#define GRD_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace grd {

enum class ErrorKind {
  kFormat,       // malformed file header or layout
  kUnsupported,  // valid container, unsupported encoding
  kTooShort,     // signal shorter than one frame
  kParse,        // text parse failure (carries a line number)
  kDuplicate,    // repeated identifier
  kLength,       // truncated payload
  kDimension,    // mismatched vector/matrix shapes
  kInvalidArgument,
  kIo,
  kInternal,
};

constexpr std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kTooShort: return "too short";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kDuplicate: return "duplicate";
    case ErrorKind::kLength: return "length error";
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kInternal: return "internal error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Text parse failure; line numbers are 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::kParse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void Require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) Fail(kind, what);
}

}  // namespace grd

#endif  // GRD_ERROR_HPP_
