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

#include "dressed_rayleigh/coherent.hpp"

#include "dressed_rayleigh/errors.hpp"

#include <array>
#include <cmath>

namespace dressed_rayleigh {
namespace {

using Complex = std::complex<double>;

/// exp(-|a|^2) alpha^{n-1} conj(alpha)^n / sqrt((n-1)! n!), n >= 1.
Complex poisson_pair_weight(Complex alpha, int n) {
  const double a = std::abs(alpha);
  if (a == 0.0) return {};
  const double log_mag = -a * a + (2.0 * n - 1.0) * std::log(a) - 0.5 * (std::lgamma(double(n)) + std::lgamma(n + 1.0));
  const Complex w = std::polar(std::exp(log_mag), -std::arg(alpha));
  if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) {
    throw Error(ErrorKind::kNumericRange, "coherent weight out of range at n = " + std::to_string(n));
  }
  return w;
}

/// Expansion coefficient of |g,n> on a level: sin t (+), cos t (-), 1 (ground).
double g_overlap(const DressedBasis& basis, const DressedLevel& level) {
  switch (level.branch) {
    case Branch::kGround: return 1.0;
    case Branch::kPlus: return basis.sin_t(level.n);
    case Branch::kMinus: return basis.cos_t(level.n);
  }
  return 0.0;
}

double level_loss(const DressedBasis& basis, const DressedLevel& level) {
  const double g0 = basis.params().gamma0;
  switch (level.branch) {
    case Branch::kGround: return 0.0;
    case Branch::kPlus: return g0 * std::pow(basis.cos_t(level.n), 2);
    case Branch::kMinus: return g0 * std::pow(basis.sin_t(level.n), 2);
  }
  return 0.0;
}

std::vector<DressedLevel> sector_levels(int n) {
  if (n == 0) return {DressedLevel::ground()};
  return {DressedLevel::plus(n), DressedLevel::minus(n)};
}

}  // namespace

double CoherentScenario::small_parameter() const {
  const double r = params.rabi / params.detuning();
  return r * r * std::norm(alpha);
}

void CoherentScenario::validate() const {
  params.validate();
  if (params.detuning() == 0.0) throw Error(ErrorKind::kResonance, "coherent scenario requires nonzero detuning");
  const double a = std::abs(alpha);
  if (n_max < a * a + 6.0 * a + 10.0) {
    throw Error(ErrorKind::kTruncation, "coherent scenario: n_max = " + std::to_string(n_max) +
                                            " below |alpha|^2 + 6|alpha| + 10");
  }
  if (small_parameter() > kCoherentHardLimit) {
    throw Error(ErrorKind::kInvalidArgument, "coherent scenario: rabi^2 |alpha|^2 / detuning^2 = " +
                                                 std::to_string(small_parameter()) + " exceeds 0.5");
  }
}

std::map<LevelPairKey, Complex> offdiag_initial(const CoherentScenario& sc) {
  sc.validate();
  const DressedBasis basis(sc.params, sc.n_max);
  std::map<LevelPairKey, Complex> out;
  for (int n = 1; n <= sc.n_max; ++n) {
    const Complex w = poisson_pair_weight(sc.alpha, n);
    for (const auto& lower : sector_levels(n - 1)) {
      for (const auto& upper : sector_levels(n)) {
        out[{lower, upper}] = g_overlap(basis, lower) * g_overlap(basis, upper) * w;
      }
    }
  }
  return out;
}

std::map<LevelPairKey, Complex> offdiag_evolved(const CoherentScenario& sc, double t) {
  if (!(t >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "offdiag_evolved: t must be >= 0");
  auto out = offdiag_initial(sc);
  const DressedBasis basis(sc.params, sc.n_max);
  for (auto& [key, value] : out) {
    const auto& [row, col] = key;
    const Complex rate(-0.5 * (level_loss(basis, row) + level_loss(basis, col)),
                       -(basis.omega(row) - basis.omega(col)));
    value *= std::exp(rate * t);
  }
  return out;
}

Complex dipole_exact_sum(const CoherentScenario& sc, double t) {
  sc.validate();
  if (!(t >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "dipole_exact_sum: t must be >= 0");
  const DressedBasis basis(sc.params, sc.n_max);
  const double g0 = sc.params.gamma0;
  // <sigma> = sum over transitions (b,n) -> (a,n-1) of amplitude * rho_{(b,n),(a,n-1)}(t);
  // each element oscillates at omega_b - omega_a and decays at the mean loss.
  const auto term = [&](double amplitude_times_overlaps, double w_upper, double w_lower, double loss_upper,
                        double loss_lower) {
    const Complex rate(-0.5 * (loss_upper + loss_lower), -(w_upper - w_lower));
    return amplitude_times_overlaps * std::exp(rate * t);
  };

  Complex sum{};
  {
    const Complex w = std::conj(poisson_pair_weight(sc.alpha, 1));
    const double c1 = basis.cos_t(1), s1 = basis.sin_t(1);
    sum += w * (term(c1 * s1, basis.omega_plus(1), 0.0, g0 * c1 * c1, 0.0) -
                term(s1 * c1, basis.omega_minus(1), 0.0, g0 * s1 * s1, 0.0));
  }
  for (int n = 2; n <= sc.n_max; ++n) {
    const Complex w = std::conj(poisson_pair_weight(sc.alpha, n));
    if (w == Complex{}) continue;
    const double cn = basis.cos_t(n), sn = basis.sin_t(n);
    const double cm = basis.cos_t(n - 1), sm = basis.sin_t(n - 1);
    const double wpn = basis.omega_plus(n), wmn = basis.omega_minus(n);
    const double wpm = basis.omega_plus(n - 1), wmm = basis.omega_minus(n - 1);
    const double lpn = g0 * cn * cn, lmn = g0 * sn * sn, lpm = g0 * cm * cm, lmm = g0 * sm * sm;
    sum += w * (term(cn * sm * sm * sn, wpn, wpm, lpn, lpm)     // (+,n) -> (+,n-1)
                - term(sn * sm * sm * cn, wmn, wpm, lmn, lpm)   // (-,n) -> (+,n-1)
                + term(cn * cm * cm * sn, wpn, wmm, lpn, lmm)   // (+,n) -> (-,n-1)
                - term(sn * cm * cm * cn, wmn, wmm, lmn, lmm));  // (-,n) -> (-,n-1)
  }
  return sum;
}

double dipole_sign(const SystemParams& params) { return params.detuning() < 0.0 ? -1.0 : 1.0; }

namespace {

Complex quasistationary_phase(const CoherentScenario& sc, double t) {
  const double phase = std::abs(sc.alpha) > 0.0 ? std::arg(sc.alpha) : 0.0;
  return dipole_sign(sc.params) * std::polar(1.0, phase - sc.params.omega_sm * t);
}

double amplitude_scale(const CoherentScenario& sc) {
  return sc.params.rabi * std::abs(sc.alpha) / std::abs(sc.params.detuning());
}

double slow_rate(const SystemParams& params) {
  const double r = params.rabi / params.detuning();
  return params.gamma0 * r * r;
}

}  // namespace

FlaggedDipole dipole_large_alpha(const CoherentScenario& sc, double t) {
  sc.validate();
  const double a2 = std::norm(sc.alpha);
  const double envelope = std::exp(a2 * std::expm1(-slow_rate(sc.params) * t));
  return {amplitude_scale(sc) * envelope * quasistationary_phase(sc, t), a2 >= 9.0};
}

FlaggedDipole dipole_quasistationary(const CoherentScenario& sc, double t) {
  sc.validate();
  const double k = slow_rate(sc.params);
  const double envelope = std::exp(-std::norm(sc.alpha) * k * t);
  return {amplitude_scale(sc) * envelope * quasistationary_phase(sc, t), k * t <= 0.1};
}

}  // namespace dressed_rayleigh
