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
#include "dressed_rayleigh/ode.hpp"

#include <span>
#include <vector>

namespace dressed_rayleigh {

/// Occupation probabilities p_n (n = 0..n0) of the photon-like dressed levels.
struct CascadeState {
  int n0 = 1;
  std::vector<double> p;
  double t = 0.0;
  /// False when the equal-rate Poisson form is used outside gamma_eff t << n0.
  bool poisson_valid = true;

  double sum() const;
  double mean() const;
};

/// Poisson validity threshold on gamma_eff t / n0.
inline constexpr double kPoissonValidityLimit = 0.1;

/// Integrates the cascade dp_n/dt = -g_n p_n + g_{n+1} p_{n+1} from p_{n0}(0) = 1.
/// `rates[n]` is the decay rate out of level n (rates[0] is ignored).
std::vector<CascadeState> solve_cascade_ode(std::span<const double> rates, int n0, std::span<const double> t_grid,
                                            const Tolerances& tol = {});

/// Same with the physical rates g_n = decay_rate_n(params, n).
std::vector<CascadeState> solve_cascade_ode(const SystemParams& params, int n0, std::span<const double> t_grid,
                                            const Tolerances& tol = {});

/// Equal-rate closed form p_{n0-k} = (g t)^k / k! exp(-g t), k < n0; the
/// remaining Poisson mass is assigned to p_0.
CascadeState poisson_solution(double gamma_eff, int n0, double t);

/// gamma_eff = decay_rate_n(params, n0).
double effective_rate(const SystemParams& params, int n0);

/// (rabi^2 / detuning^2) exp(-gamma_1 t).
double population_single_photon(const SystemParams& params, double t);

/// (rabi^2 n0 / detuning^2) exp(-gamma_{n0} t).
double population_placzek(const SystemParams& params, int n0, double t);

enum class CascadeMethod { kPoisson, kOde };

/// sum_{k=1}^{n0} (rabi^2 k / detuning^2) p_k(t).
double population_cascade(const SystemParams& params, int n0, double t, CascadeMethod method = CascadeMethod::kPoisson);

}  // namespace dressed_rayleigh
