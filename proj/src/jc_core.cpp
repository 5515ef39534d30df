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

#include "dressed_rayleigh/jc_core.hpp"

#include "dressed_rayleigh/errors.hpp"

#include <cmath>
#include <numbers>

namespace dressed_rayleigh {
namespace {

void require_sector(int n, const char* op) {
  if (n < 1) {
    throw Error(ErrorKind::kInvalidArgument, std::string(op) + ": sector index must be >= 1, got " + std::to_string(n));
  }
}

void require_detuned(const SystemParams& params, const char* op) {
  if (params.detuning() == 0.0) {
    throw Error(ErrorKind::kResonance, std::string(op) + ": large-detuning expansion undefined at zero detuning");
  }
}

}  // namespace

void SystemParams::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(omega_sm) || !finite(omega_tls) || !finite(rabi) || !finite(gamma0)) {
    throw Error(ErrorKind::kInvalidArgument, "system parameters must be finite");
  }
  if (omega_sm <= 0.0) throw Error(ErrorKind::kInvalidArgument, "omega_sm must be positive");
  if (omega_tls <= 0.0) throw Error(ErrorKind::kInvalidArgument, "omega_tls must be positive");
  if (rabi < 0.0) throw Error(ErrorKind::kInvalidArgument, "rabi must be non-negative");
  if (gamma0 < 0.0) throw Error(ErrorKind::kInvalidArgument, "gamma0 must be non-negative");
}

DressedLevel DressedLevel::plus(int n) {
  require_sector(n, "DressedLevel::plus");
  return {Branch::kPlus, n};
}

DressedLevel DressedLevel::minus(int n) {
  require_sector(n, "DressedLevel::minus");
  return {Branch::kMinus, n};
}

DressedLevel DressedLevel::from_index(int index) {
  if (index < 0) throw Error(ErrorKind::kInvalidArgument, "negative level index");
  if (index == 0) return ground();
  const int n = (index + 1) / 2;
  return index % 2 == 1 ? plus(n) : minus(n);
}

std::string to_string(const DressedLevel& level) {
  switch (level.branch) {
    case Branch::kGround: return "(g,0)";
    case Branch::kPlus: return "(+," + std::to_string(level.n) + ")";
    case Branch::kMinus: return "(-," + std::to_string(level.n) + ")";
  }
  return "(?)";
}

double mixing_angle(const SystemParams& params, int n) {
  require_sector(n, "mixing_angle");
  return 0.5 * std::atan2(2.0 * params.rabi * std::sqrt(double(n)), std::abs(params.detuning()));
}

FrequencyPair eigenfrequency_pair(const SystemParams& params, int n) {
  require_sector(n, "eigenfrequency_pair");
  const double center = (n - 1) * params.omega_sm + 0.5 * (params.omega_sm + params.omega_tls);
  const double half_split = std::hypot(params.rabi * std::sqrt(double(n)), 0.5 * params.detuning());
  return {center + half_split, center - half_split};
}

LargeDetuningFrequencies large_detuning_frequencies(const SystemParams& params, int n) {
  require_sector(n, "large_detuning_frequencies");
  require_detuned(params, "large_detuning_frequencies");
  const double delta = params.detuning();
  // Signed dispersive shift; below resonance it pushes the photon-like level down.
  const double shift = params.rabi * params.rabi * n / delta;
  const double photon_like = n * params.omega_sm + shift;
  const double atom_like = (n - 1) * params.omega_sm + params.omega_tls - shift;

  LargeDetuningFrequencies out;
  out.small_parameter = params.rabi * std::sqrt(double(n)) / std::abs(delta);
  out.reliable = out.small_parameter <= kLargeDetuningThreshold;
  if (delta < 0.0) {
    out.plus = atom_like;
    out.minus = photon_like;
    out.photon_like = Branch::kMinus;
  } else {
    out.plus = photon_like;
    out.minus = atom_like;
    out.photon_like = Branch::kPlus;
  }
  return out;
}

double decay_rate_n(const SystemParams& params, int n) {
  if (n < 0) throw Error(ErrorKind::kInvalidArgument, "decay_rate_n: n must be >= 0");
  require_detuned(params, "decay_rate_n");
  const double ratio = params.rabi / params.detuning();
  return params.gamma0 * ratio * ratio * n;
}

DressedBasis::DressedBasis(const SystemParams& params, int n_max) : params_(params), n_max_(n_max) {
  params_.validate();
  if (n_max < 1) throw Error(ErrorKind::kInvalidArgument, "n_max must be >= 1");
  const double delta = params_.detuning();
  phi_.reserve(n_max);
  theta_.reserve(n_max);
  omega_plus_.reserve(n_max);
  omega_minus_.reserve(n_max);
  for (int n = 1; n <= n_max; ++n) {
    phi_.push_back(mixing_angle(params_, n));
    double theta;
    if (params_.rabi == 0.0) {
      theta = delta > 0.0 ? 0.5 * std::numbers::pi : 0.0;
    } else {
      theta = 0.5 * std::atan2(2.0 * params_.rabi * std::sqrt(double(n)), -delta);
    }
    theta_.push_back(theta);
    const auto pair = eigenfrequency_pair(params_, n);
    omega_plus_.push_back(pair.plus);
    omega_minus_.push_back(pair.minus);
  }
}

double DressedBasis::sin_t(int n) const { return n == 0 ? 0.0 : std::sin(theta_.at(n - 1)); }

double DressedBasis::cos_t(int n) const { return n == 0 ? 1.0 : std::cos(theta_.at(n - 1)); }

double DressedBasis::omega(const DressedLevel& level) const {
  check_level(level);
  switch (level.branch) {
    case Branch::kGround: return 0.0;
    case Branch::kPlus: return omega_plus_[level.n - 1];
    case Branch::kMinus: return omega_minus_[level.n - 1];
  }
  return 0.0;
}

Branch DressedBasis::photon_like_branch() const noexcept {
  return params_.detuning() > 0.0 ? Branch::kPlus : Branch::kMinus;
}

double DressedBasis::loss_rate(const DressedLevel& level) const {
  check_level(level);
  switch (level.branch) {
    case Branch::kGround: return 0.0;
    case Branch::kPlus: {
      const double c = cos_t(level.n);
      return params_.gamma0 * c * c;
    }
    case Branch::kMinus: {
      const double s = sin_t(level.n);
      return params_.gamma0 * s * s;
    }
  }
  return 0.0;
}

void DressedBasis::check_level(const DressedLevel& level) const {
  const bool ok = level.branch == Branch::kGround ? level.n == 0 : (level.n >= 1 && level.n <= n_max_);
  if (!ok) {
    throw Error(ErrorKind::kInvalidArgument, "level " + to_string(level) + " outside basis with n_max = " +
                                                 std::to_string(n_max_));
  }
}

std::vector<Coupling> sigma_coupling_table(const DressedBasis& basis) {
  std::vector<Coupling> table;
  table.reserve(4 * basis.n_max());
  // sigma |+,n> = cos t_n |g,n-1>,  sigma |-,n> = -sin t_n |g,n-1>,
  // |g,n-1> = sin t_{n-1} |+,n-1> + cos t_{n-1} |-,n-1>  (|g,0> for n = 1).
  table.push_back({DressedLevel::plus(1), DressedLevel::ground(), basis.cos_t(1)});
  table.push_back({DressedLevel::minus(1), DressedLevel::ground(), -basis.sin_t(1)});
  for (int n = 2; n <= basis.n_max(); ++n) {
    const double cn = basis.cos_t(n), sn = basis.sin_t(n);
    const double cm = basis.cos_t(n - 1), sm = basis.sin_t(n - 1);
    table.push_back({DressedLevel::plus(n), DressedLevel::plus(n - 1), cn * sm});
    table.push_back({DressedLevel::minus(n), DressedLevel::plus(n - 1), -sn * sm});
    table.push_back({DressedLevel::plus(n), DressedLevel::minus(n - 1), cn * cm});
    table.push_back({DressedLevel::minus(n), DressedLevel::minus(n - 1), -sn * cm});
  }
  return table;
}

int suggested_n_max_fock(int n0) {
  if (n0 < 1) throw Error(ErrorKind::kInvalidArgument, "n0 must be >= 1");
  return n0 + 8;
}

int suggested_n_max_coherent(std::complex<double> alpha) {
  const double a = std::abs(alpha);
  return static_cast<int>(std::ceil(a * a + 6.0 * a + 10.0));
}

}  // namespace dressed_rayleigh
