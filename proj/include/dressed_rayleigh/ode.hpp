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

#include <functional>
#include <span>
#include <vector>

namespace dressed_rayleigh {

/// Error control for the adaptive population integrator.
struct Tolerances {
  double rel = 1e-10;
  double abs = 1e-12;

  bool operator==(const Tolerances&) const = default;
};

/// Right-hand side of a real linear ODE system dx/dt = f(x).
using LinearRhs = std::function<void(const std::vector<double>& x, std::vector<double>& dxdt)>;

/// Called once per requested output time with the state at that time.
using StateVisitor = std::function<void(std::size_t index, double t, const std::vector<double>& x)>;

/// Integrates an autonomous system with an embedded Dormand-Prince 5(4) pair
/// and dense output, visiting the state at every point of `times`.
/// `times` must be non-decreasing and start at the initial time of `x0`.
/// Throws IntegrationError when the step size collapses.
void integrate_autonomous(const LinearRhs& rhs, std::vector<double> x0, std::span<const double> times,
                          const Tolerances& tol, const StateVisitor& visit);

/// Validates tolerances in (0, 1e-2]; throws kInvalidArgument otherwise.
void check_tolerances(const Tolerances& tol);

/// Validates a time grid: non-empty, starting at zero, strictly increasing.
void check_time_grid(std::span<const double> times, const char* what);

}  // namespace dressed_rayleigh
