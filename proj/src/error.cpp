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

#include "maestro/error.hpp"

namespace maestro {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kDuplicateSection: return "DuplicateSection";
    case ErrorCode::kNoCriticalSection: return "NoCriticalSection";
    case ErrorCode::kMultipleCriticalSections: return "MultipleCriticalSections";
    case ErrorCode::kUnknownSection: return "UnknownSection";
    case ErrorCode::kInvalidGraph: return "InvalidGraph";
    case ErrorCode::kEdgeNotFound: return "EdgeNotFound";
    case ErrorCode::kInvalidDims: return "InvalidDims";
    case ErrorCode::kBothActivated: return "BothActivated";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNoFeasibleConfig: return "NoFeasibleConfig";
    case ErrorCode::kCannotAvoidStall: return "CannotAvoidStall";
    case ErrorCode::kFanoutViolation: return "FanoutViolation";
    case ErrorCode::kNegativeTime: return "NegativeTime";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kFanoutMismatch: return "FanoutMismatch";
    case ErrorCode::kInconsistentSchedule: return "InconsistentSchedule";
    case ErrorCode::kDependencyDeadlock: return "DependencyDeadlock";
    case ErrorCode::kIncompatibleShapes: return "IncompatibleShapes";
    case ErrorCode::kChannelClosed: return "ChannelClosed";
    case ErrorCode::kSlotExhausted: return "SlotExhausted";
    case ErrorCode::kFragmentTimeout: return "FragmentTimeout";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace maestro
