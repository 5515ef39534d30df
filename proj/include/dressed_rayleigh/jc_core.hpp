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

#include <compare>
#include <complex>
#include <span>
#include <string>
#include <vector>

namespace dressed_rayleigh {

/// Physical parameters of the atom + selected-mode system in units with hbar = 1.
struct SystemParams {
  double omega_sm = 1.0;   ///< selected-mode angular frequency
  double omega_tls = 1.0;  ///< atomic transition angular frequency
  double rabi = 0.0;       ///< single-photon coupling
  double gamma0 = 1.0;     ///< free-space relaxation rate

  /// omega_sm - omega_tls.
  double detuning() const noexcept { return omega_sm - omega_tls; }

  /// Throws kInvalidArgument if any field is out of range or non-finite.
  void validate() const;

  bool operator==(const SystemParams&) const = default;
};

enum class Branch { kGround, kPlus, kMinus };

/// A dressed eigenstate: the ground state |g,0> or |+,n>, |-,n> with n >= 1.
/// `kPlus` is always the upper level of the n-th doublet.
struct DressedLevel {
  Branch branch = Branch::kGround;
  int n = 0;

  static DressedLevel ground() { return {Branch::kGround, 0}; }
  static DressedLevel plus(int n);
  static DressedLevel minus(int n);

  /// Dense index: ground -> 0, (+,n) -> 2n-1, (-,n) -> 2n.
  int index() const noexcept { return branch == Branch::kGround ? 0 : (branch == Branch::kPlus ? 2 * n - 1 : 2 * n); }
  static DressedLevel from_index(int index);

  auto operator<=>(const DressedLevel& other) const noexcept { return index() <=> other.index(); }
  bool operator==(const DressedLevel& other) const noexcept { return index() == other.index(); }
};

std::string to_string(const DressedLevel& level);

/// Mixing angle phi_n = atan(2 rabi sqrt(n) / |detuning|) / 2, in [0, pi/4].
/// At resonance the limit pi/4 is returned (0 when the coupling also vanishes).
double mixing_angle(const SystemParams& params, int n);

struct FrequencyPair {
  double plus;   ///< upper level of the doublet
  double minus;  ///< lower level of the doublet
};

/// Exact doublet eigenfrequencies
/// (n-1) omega_sm + (omega_sm + omega_tls)/2 +- sqrt(rabi^2 n + (detuning/2)^2).
FrequencyPair eigenfrequency_pair(const SystemParams& params, int n);

/// Second-order expansion of the doublet for rabi sqrt(n) << |detuning|.
struct LargeDetuningFrequencies {
  double plus = 0.0;
  double minus = 0.0;
  double small_parameter = 0.0;  ///< rabi sqrt(n) / |detuning|
  bool reliable = true;          ///< small_parameter <= kLargeDetuningThreshold
  Branch photon_like = Branch::kMinus;
};

inline constexpr double kLargeDetuningThreshold = 0.1;

/// Throws kResonance when the detuning is zero.
LargeDetuningFrequencies large_detuning_frequencies(const SystemParams& params, int n);

/// Cascade rate gamma_n = gamma0 rabi^2 n / detuning^2 out of the photon-like
/// level of sector n. Throws kResonance when the detuning is zero.
double decay_rate_n(const SystemParams& params, int n);

/// Dressed eigenstructure truncated at `n_max` photons.
///
/// The doublet states are written as
///   |+,n> =  cos(t_n) |e,n-1> + sin(t_n) |g,n>
///   |-,n> = -sin(t_n) |e,n-1> + cos(t_n) |g,n>
/// with the rotation angle t_n. Below resonance (omega_sm < omega_tls) t_n is
/// the mixing angle phi_n; above resonance t_n = pi/2 - phi_n so that |+,n>
/// stays the upper level. All transition amplitudes and rates are expressed
/// through t_n, and reduce to the usual phi_n forms in the detuning regime
/// omega_sm < omega_tls.
class DressedBasis {
 public:
  DressedBasis(const SystemParams& params, int n_max);

  const SystemParams& params() const noexcept { return params_; }
  int n_max() const noexcept { return n_max_; }
  int dimension() const noexcept { return 2 * n_max_ + 1; }

  /// Mixing angle phi_n, n in [1, n_max].
  double phi(int n) const { return phi_.at(n - 1); }
  std::span<const double> phis() const noexcept { return phi_; }

  /// Rotation angle t_n of the doublet states; t_0 = 0 so that the ground
  /// state plays the role of |-,0>.
  double rotation_angle(int n) const { return n == 0 ? 0.0 : theta_.at(n - 1); }
  double sin_t(int n) const;
  double cos_t(int n) const;

  double omega_plus(int n) const { return omega_plus_.at(n - 1); }
  double omega_minus(int n) const { return omega_minus_.at(n - 1); }
  std::span<const double> omega_plus() const noexcept { return omega_plus_; }
  std::span<const double> omega_minus() const noexcept { return omega_minus_; }

  /// Eigenfrequency of any level; the ground state sits at zero.
  double omega(const DressedLevel& level) const;

  /// The branch whose states are predominantly |g,n> (the cascade branch).
  Branch photon_like_branch() const noexcept;

  /// Loss rate of a level under the dressed-basis relaxation:
  /// gamma0 cos^2 t_n for (+,n), gamma0 sin^2 t_n for (-,n), 0 for ground.
  double loss_rate(const DressedLevel& level) const;

  void check_level(const DressedLevel& level) const;

 private:
  SystemParams params_;
  int n_max_;
  std::vector<double> phi_;
  std::vector<double> theta_;
  std::vector<double> omega_plus_;
  std::vector<double> omega_minus_;
};

/// Nonzero matrix element <to| sigma |from> of the atomic lowering operator.
struct Coupling {
  DressedLevel from;
  DressedLevel to;
  double amplitude;
};

/// All nonzero elements of sigma = |g><e| (x) 1 in the dressed basis, ordered
/// by upper sector: the n = 1 pair into the ground state first, then four
/// entries per sector n = 2..n_max.
std::vector<Coupling> sigma_coupling_table(const DressedBasis& basis);

/// Truncation suggestions: n0 + 8 for Fock data, ceil(|a|^2 + 6|a| + 10) for
/// coherent data (Poisson tail mass below 1e-9).
int suggested_n_max_fock(int n0);
int suggested_n_max_coherent(std::complex<double> alpha);

}  // namespace dressed_rayleigh
