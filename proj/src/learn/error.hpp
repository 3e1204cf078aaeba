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

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace learn {

enum class ErrorCode : std::uint8_t {
  kIo,
  kParse,
  kDuplicateId,
  kUnsortedInput,
  kTooShort,
  kEmptyInput,
  kBadMagic,
  kBadVersion,
  kDimMismatch,
  kMissingItem,
  kShapeMismatch,
  kAllMaskedRow,
  kSeqTooLong,
  kBadHyperparams,
  kCountExceedsLen,
  kBatchTooSmall,
  kEmptyIndex,
  kEmptyTargets,
  kInvalidArgument,
  kConfig,
  kRuntime,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Every failure in the library surfaces as an Error. `subject` carries the
// offending id, line number or row index when the error names one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::uint64_t> subject = std::nullopt)
      : std::runtime_error(message), code_(code), subject_(subject) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::uint64_t> subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::optional<std::uint64_t> subject_;
};

}  // namespace learn
