/* Copyright 2026 The Maestro Authors. All Rights Reserved.

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

#ifndef MAESTRO_ERROR_HPP_
#define MAESTRO_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace maestro {

enum class ErrorCode {
  kCycleDetected,
  kDuplicateSection,
  kNoCriticalSection,
  kMultipleCriticalSections,
  kUnknownSection,
  kInvalidGraph,
  kEdgeNotFound,
  kInvalidDims,
  kBothActivated,
  kInvalidConfig,
  kInvalidArgument,
  kNoFeasibleConfig,
  kCannotAvoidStall,
  kFanoutViolation,
  kNegativeTime,
  kEmptyBatch,
  kFanoutMismatch,
  kInconsistentSchedule,
  kDependencyDeadlock,
  kIncompatibleShapes,
  kChannelClosed,
  kSlotExhausted,
  kFragmentTimeout,
  kProtocolError,
  kParseError,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Single exception type for the library; the code carries the failure class
// and the message names the section/edge/field involved.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace maestro

#endif  // MAESTRO_ERROR_HPP_
