/* Copyright 2026 The jsaloc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef JSALOC_ERROR_H_
#define JSALOC_ERROR_H_

#include <stdexcept>
#include <string>

namespace jsaloc {

// Error categories surfaced by the library. The CLI maps them to exit codes:
// numeric aborts exit with 2, everything else with 1.
enum class ErrorKind {
  kDimension,
  kNumeric,
  kConfig,
  kDegenerateInput,
  kContract,
  kGeneration,
  kIo,
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension:
      return "dimension error";
    case ErrorKind::kNumeric:
      return "numeric error";
    case ErrorKind::kConfig:
      return "configuration error";
    case ErrorKind::kDegenerateInput:
      return "degenerate input";
    case ErrorKind::kContract:
      return "contract violation";
    case ErrorKind::kGeneration:
      return "generation error";
    case ErrorKind::kIo:
      return "i/o error";
  }
  return "error";
}

}  // namespace jsaloc

#endif  // JSALOC_ERROR_H_
