// Copyright 2026 The dressed-rayleigh Authors
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

#include <stdexcept>
#include <string>
#include <string_view>

namespace dressed_rayleigh {

/// Failure categories. The CLI prints the category verbatim as the first
/// token of its single-line error report.
enum class ErrorKind {
  kInvalidArgument,
  kResonance,        // large-detuning operation called with zero detuning
  kTruncation,       // photon-number cutoff too small for the requested state
  kIntegration,
  kNumericRange,
  kFit,
  kConfigParse,
  kConfigValidation,
  kMissingArtifact,
  kIo,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown when the adaptive integrator cannot make progress.
class IntegrationError : public Error {
 public:
  IntegrationError(double time_reached, const std::string& message)
      : Error(ErrorKind::kIntegration, message), time_reached_(time_reached) {}

  double time_reached() const noexcept { return time_reached_; }

 private:
  double time_reached_;
};

}  // namespace dressed_rayleigh
