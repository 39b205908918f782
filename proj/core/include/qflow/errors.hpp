// Copyright 2026 The qflow Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QFLOW_ERRORS_HPP_
#define QFLOW_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <vector>

namespace qflow {

enum class ErrorKind {
  kSchema,
  kValidation,
  kOverflow,
  kDtype,
  kNotStreamlinable,
  kPatternNotFound,
  kDomain,
  kMissingAnnotation,
  kUnmappableOp,
  kPlanIncomplete,
  kSizingUnstable,
  kDeadlockedResult,
  kEmptyInput,
  kUnsupportedScale,
};

const char* to_string(ErrorKind kind);

// Base of every error raised by the library. `subject()` names the node,
// tensor, edge, or pass the error is about (may be empty).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string subject, const std::string& message)
      : std::runtime_error(message), kind_(kind), subject_(std::move(subject)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorKind kind_;
  std::string subject_;
};

#define QFLOW_DEFINE_ERROR(Name, Kind)                              \
  class Name : public Error {                                       \
   public:                                                          \
    Name(std::string subject, const std::string& message)           \
        : Error(ErrorKind::Kind, std::move(subject), message) {}    \
  };

QFLOW_DEFINE_ERROR(SchemaError, kSchema)
QFLOW_DEFINE_ERROR(OverflowError, kOverflow)
QFLOW_DEFINE_ERROR(DtypeError, kDtype)
QFLOW_DEFINE_ERROR(NotStreamlinable, kNotStreamlinable)
QFLOW_DEFINE_ERROR(PatternNotFound, kPatternNotFound)
QFLOW_DEFINE_ERROR(DomainError, kDomain)
QFLOW_DEFINE_ERROR(MissingAnnotation, kMissingAnnotation)
QFLOW_DEFINE_ERROR(UnmappableOp, kUnmappableOp)
QFLOW_DEFINE_ERROR(PlanIncomplete, kPlanIncomplete)
QFLOW_DEFINE_ERROR(SizingUnstable, kSizingUnstable)
QFLOW_DEFINE_ERROR(DeadlockedResult, kDeadlockedResult)
QFLOW_DEFINE_ERROR(EmptyInput, kEmptyInput)
QFLOW_DEFINE_ERROR(UnsupportedScale, kUnsupportedScale)

#undef QFLOW_DEFINE_ERROR

struct Diagnostic {
  std::string subject;  // node or tensor name
  std::string rule;     // stable rule id, e.g. "stride>=1", "dag"
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Diagnostic> diagnostics);

  const std::vector<Diagnostic>& diagnostics() const noexcept {
    return diagnostics_;
  }

 private:
  std::vector<Diagnostic> diagnostics_;
};

// Raised by passes::run_pipeline; wraps the failing pass's error.
class PipelineError : public Error {
 public:
  PipelineError(std::size_t pass_index, std::string pass_name, const Error& cause);

  std::size_t pass_index() const noexcept { return pass_index_; }
  const std::string& pass_name() const noexcept { return pass_name_; }
  ErrorKind cause_kind() const noexcept { return cause_kind_; }

 private:
  std::size_t pass_index_;
  std::string pass_name_;
  ErrorKind cause_kind_;
};

}  // namespace qflow

#endif  // QFLOW_ERRORS_HPP_
