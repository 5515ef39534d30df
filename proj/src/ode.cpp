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

#include "dressed_rayleigh/errors.hpp"
#include "dressed_rayleigh/ode.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace dressed_rayleigh {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kResonance: return "resonance";
    case ErrorKind::kTruncation: return "truncation";
    case ErrorKind::kIntegration: return "integration";
    case ErrorKind::kNumericRange: return "numeric_range";
    case ErrorKind::kFit: return "fit";
    case ErrorKind::kConfigParse: return "config_parse";
    case ErrorKind::kConfigValidation: return "config_validation";
    case ErrorKind::kMissingArtifact: return "missing_artifact";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

void check_tolerances(const Tolerances& tol) {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0 && v <= 1e-2; };
  if (!ok(tol.rel) || !ok(tol.abs)) {
    throw Error(ErrorKind::kInvalidArgument, "tolerances must lie in (0, 1e-2]");
  }
}

void check_time_grid(std::span<const double> times, const char* what) {
  if (times.empty()) {
    throw Error(ErrorKind::kInvalidArgument, std::string(what) + " is empty");
  }
  if (times.front() != 0.0) {
    throw Error(ErrorKind::kInvalidArgument, std::string(what) + " must start at 0");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1]) || !std::isfinite(times[i])) {
      throw Error(ErrorKind::kInvalidArgument, std::string(what) + " must be strictly increasing");
    }
  }
}

void integrate_autonomous(const LinearRhs& rhs, std::vector<double> x0, std::span<const double> times,
                          const Tolerances& tol, const StateVisitor& visit) {
  namespace odeint = boost::numeric::odeint;
  using State = std::vector<double>;
  if (times.empty()) return;
  if (times.size() == 1) {
    visit(0, times.front(), x0);
    return;
  }

  double last_time = times.front();
  auto system = [&](const State& x, State& dxdt, double t) {
    last_time = t;
    rhs(x, dxdt);
  };
  std::size_t index = 0;
  auto observer = [&](const State& x, double t) { visit(index++, t, x); };

  const double span = times.back() - times.front();
  const double dt0 = std::min(span, 1e-3 * std::max(span, 1.0));
  auto stepper = odeint::make_dense_output(tol.abs, tol.rel, odeint::runge_kutta_dopri5<State>());
  try {
    odeint::integrate_times(stepper, system, x0, times.begin(), times.end(), dt0, observer,
                            odeint::max_step_checker(1000000));
  } catch (const odeint::odeint_error& e) {
    throw IntegrationError(last_time, std::string("integration stalled at t = ") + std::to_string(last_time) +
                                          ": " + e.what());
  }
  for (double v : x0) {
    if (!std::isfinite(v)) {
      throw IntegrationError(last_time, "integration produced a non-finite state");
    }
  }
}

}  // namespace dressed_rayleigh
