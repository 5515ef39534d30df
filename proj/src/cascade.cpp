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

#include "dressed_rayleigh/cascade.hpp"

#include "dressed_rayleigh/errors.hpp"

#include <cmath>
#include <numeric>

namespace dressed_rayleigh {
namespace {

void require_n0(int n0) {
  if (n0 < 1) throw Error(ErrorKind::kInvalidArgument, "n0 must be >= 1");
}

void require_detuned(const SystemParams& params, const char* op) {
  if (params.detuning() == 0.0) {
    throw Error(ErrorKind::kResonance, std::string(op) + " requires nonzero detuning");
  }
}

double coupling_ratio_sq(const SystemParams& params) {
  const double r = params.rabi / params.detuning();
  return r * r;
}

}  // namespace

double CascadeState::sum() const { return std::accumulate(p.begin(), p.end(), 0.0); }

double CascadeState::mean() const {
  double m = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) m += n * p[n];
  return m;
}

std::vector<CascadeState> solve_cascade_ode(std::span<const double> rates, int n0, std::span<const double> t_grid,
                                            const Tolerances& tol) {
  require_n0(n0);
  check_tolerances(tol);
  check_time_grid(t_grid, "t_grid");
  if (rates.size() < static_cast<std::size_t>(n0) + 1) {
    throw Error(ErrorKind::kInvalidArgument, "solve_cascade_ode: need rates for n = 0..n0");
  }
  for (int n = 1; n <= n0; ++n) {
    if (!(rates[n] >= 0.0) || !std::isfinite(rates[n])) {
      throw Error(ErrorKind::kInvalidArgument, "solve_cascade_ode: rates must be finite and non-negative");
    }
  }
  std::vector<double> g(rates.begin(), rates.begin() + n0 + 1);
  g[0] = 0.0;
  const auto rhs = [&](const std::vector<double>& p, std::vector<double>& dpdt) {
    for (int n = 0; n <= n0; ++n) {
      dpdt[n] = -g[n] * p[n] + (n < n0 ? g[n + 1] * p[n + 1] : 0.0);
    }
  };
  std::vector<double> p0(n0 + 1, 0.0);
  p0[n0] = 1.0;
  std::vector<CascadeState> out;
  out.reserve(t_grid.size());
  integrate_autonomous(rhs, std::move(p0), t_grid, tol, [&](std::size_t, double t, const std::vector<double>& p) {
    out.push_back({n0, p, t, true});
  });
  return out;
}

std::vector<CascadeState> solve_cascade_ode(const SystemParams& params, int n0, std::span<const double> t_grid,
                                            const Tolerances& tol) {
  require_n0(n0);
  require_detuned(params, "solve_cascade_ode");
  std::vector<double> rates(n0 + 1);
  for (int n = 0; n <= n0; ++n) rates[n] = decay_rate_n(params, n);
  return solve_cascade_ode(rates, n0, t_grid, tol);
}

CascadeState poisson_solution(double gamma_eff, int n0, double t) {
  require_n0(n0);
  if (!(t >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "poisson_solution: t must be >= 0");
  if (!(gamma_eff >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "poisson_solution: gamma_eff must be >= 0");
  CascadeState state;
  state.n0 = n0;
  state.t = t;
  state.p.assign(n0 + 1, 0.0);
  const double mu = gamma_eff * t;
  if (mu == 0.0) {
    state.p[n0] = 1.0;
    return state;
  }
  const double log_mu = std::log(mu);
  double assigned = 0.0;
  for (int k = 0; k < n0; ++k) {
    const double pk = std::exp(k * log_mu - mu - std::lgamma(k + 1.0));
    state.p[n0 - k] = pk;
    assigned += pk;
  }
  state.p[0] = std::max(0.0, 1.0 - assigned);
  state.poisson_valid = mu / n0 <= kPoissonValidityLimit;
  return state;
}

double effective_rate(const SystemParams& params, int n0) {
  require_n0(n0);
  return decay_rate_n(params, n0);
}

double population_single_photon(const SystemParams& params, double t) { return population_placzek(params, 1, t); }

double population_placzek(const SystemParams& params, int n0, double t) {
  require_n0(n0);
  require_detuned(params, "population_placzek");
  const double weight = coupling_ratio_sq(params) * n0;
  return weight * std::exp(-params.gamma0 * weight * t);
}

double population_cascade(const SystemParams& params, int n0, double t, CascadeMethod method) {
  require_n0(n0);
  require_detuned(params, "population_cascade");
  if (!(t >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "population_cascade: t must be >= 0");
  CascadeState state;
  if (method == CascadeMethod::kPoisson) {
    state = poisson_solution(effective_rate(params, n0), n0, t);
  } else {
    const double grid[] = {0.0, t};
    state = t == 0.0 ? poisson_solution(0.0, n0, 0.0) : solve_cascade_ode(params, n0, grid).back();
  }
  const double ratio = coupling_ratio_sq(params);
  double sum = 0.0;
  for (int k = 1; k <= n0; ++k) sum += ratio * k * state.p[k];
  return sum;
}

}  // namespace dressed_rayleigh
