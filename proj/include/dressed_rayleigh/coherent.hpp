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

#include "dressed_rayleigh/jc_core.hpp"

#include <complex>
#include <map>
#include <utility>

namespace dressed_rayleigh {

/// Coherent-state drive |g,alpha> of the selected mode.
struct CoherentScenario {
  SystemParams params;
  std::complex<double> alpha;
  int n_max = 0;

  /// rabi^2 |alpha|^2 / detuning^2.
  double small_parameter() const;
  /// Throws kResonance at zero detuning, kTruncation when n_max is below
  /// |a|^2 + 6|a| + 10, kInvalidArgument when small_parameter() > 0.5.
  void validate() const;
};

inline constexpr double kCoherentHardLimit = 0.5;

using LevelPairKey = std::pair<DressedLevel, DressedLevel>;

/// rho_{(a,n-1),(b,n)} for n = 1..n_max (sector 0 is the ground state), from
/// the untruncated expansion of |g,alpha><g,alpha|:
///   exp(-|a|^2) f_a f_b alpha^{n-1} conj(alpha)^n / sqrt((n-1)! n!)
/// with f_+ = sin t, f_- = cos t and f_g = 1. Keys are (row, column).
std::map<LevelPairKey, std::complex<double>> offdiag_initial(const CoherentScenario& sc);

/// The same elements at time t, each multiplied by its exact exponential.
std::map<LevelPairKey, std::complex<double>> offdiag_evolved(const CoherentScenario& sc, double t);

/// <sigma(t)> summed over all four transition families and every sector.
std::complex<double> dipole_exact_sum(const CoherentScenario& sc, double t);

struct FlaggedDipole {
  std::complex<double> value;
  bool in_regime = true;
};

/// Overall sign of the quasistationary dipole relative to alpha e^{-i w_sm t}:
/// -1 below resonance, +1 above.
double dipole_sign(const SystemParams& params);

/// Large-|alpha| form with sqrt(n) replaced by |alpha|:
/// (rabi |a| / |detuning|) exp(|a|^2 (exp(-k t) - 1)), k = gamma0 rabi^2 / detuning^2,
/// times dipole_sign, the phase of alpha and exp(-i w_sm t).
/// Flagged out of regime for |alpha|^2 < 9.
FlaggedDipole dipole_large_alpha(const CoherentScenario& sc, double t);

/// Short-time form (rabi |a| / |detuning|) exp(-|a|^2 k t), same phase convention.
/// Flagged out of regime for k t > 0.1.
FlaggedDipole dipole_quasistationary(const CoherentScenario& sc, double t);

}  // namespace dressed_rayleigh
