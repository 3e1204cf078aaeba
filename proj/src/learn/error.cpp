// Copyright 2026 The LEARN Authors.
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

#include "learn/error.hpp"

namespace learn {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kUnsortedInput: return "UnsortedInput";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kBadVersion: return "BadVersion";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kMissingItem: return "MissingItem";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kAllMaskedRow: return "AllMaskedRow";
    case ErrorCode::kSeqTooLong: return "SeqTooLong";
    case ErrorCode::kBadHyperparams: return "BadHyperparams";
    case ErrorCode::kCountExceedsLen: return "CountExceedsLen";
    case ErrorCode::kBatchTooSmall: return "BatchTooSmall";
    case ErrorCode::kEmptyIndex: return "EmptyIndex";
    case ErrorCode::kEmptyTargets: return "EmptyTargets";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kRuntime: return "RuntimeError";
  }
  return "Unknown";
}

}  // namespace learn
