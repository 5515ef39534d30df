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

#include "dressed_rayleigh/lindblad.hpp"

#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace dressed_rayleigh {

/// Two-time correlator <sigma^dagger(t + tau) sigma(t)> sampled on a lag grid.
struct CorrelationSeries {
  double t_anchor = 0.0;
  std::vector<double> tau;
  std::vector<Complex> values;
};

/// Restricts which sigma transitions take part in a regression computation,
/// by the sector of the upper level. The default keeps all of them.
struct TransitionWindow {
  int min_upper_sector = 1;
  int max_upper_sector = 1 << 30;
};

/// Quantum-regression correlator: evolves sigma rho(t) under `gen` and traces
/// against sigma^dagger at every lag.
CorrelationSeries correlator_regression(const GeneratorTables& gen, const LadderDensityMatrix& rho_t, double t_anchor,
                                        std::span<const double> tau_grid, const Tolerances& tol = {},
                                        const TransitionWindow& window = {});

namespace scenario {
struct SinglePhoton {};
struct Placzek {
  int n0;
};
struct Cascade {
  int n0;
};
}  // namespace scenario

using AnalyticScenario = std::variant<scenario::SinglePhoton, scenario::Placzek, scenario::Cascade>;

/// Closed-form large-detuning correlators:
///   single photon  x^2 exp(-g_1 t) exp((i w_sm - g_1/2) tau)
///   Placzek        x^2 n0 exp(-g_n0 t) exp((i w_sm - g_n0/2) tau)
///   cascade        P(t) exp((i w_sm - g_eff) tau), P the cascade population
/// with x = rabi / detuning. Throws kResonance at zero detuning.
Complex correlator_analytic(const SystemParams& params, const AnalyticScenario& which, double t, double tau);

/// Predicted emission half-width of each scenario.
double analytic_linewidth(const SystemParams& params, const AnalyticScenario& which);

struct LorentzianFit {
  double center = 0.0;
  double hwhm = 0.0;
  double peak = 0.0;
  /// RMS of (data - model) / peak over the fitted points.
  double residual = 0.0;
  int iterations = 0;
};

struct SpectrumSeries {
  std::vector<double> omega;
  std::vector<double> intensity;
  std::optional<LorentzianFit> fit;
  /// Overall scale applied to Re int corr(tau) exp(-i w tau) d tau.
  double mode_weight = 1.0;
  /// The correlator had not decayed below 1e-3 of its initial modulus.
  bool truncated = false;
  /// Parameters of the exponential tail used beyond the last lag.
  double tail_rate = 0.0;
  double tail_frequency = 0.0;
  /// Number of bins where a negative quadrature value was clamped to zero.
  int clamped_bins = 0;
};

/// Emission spectrum mode_weight * Re int_0^inf corr(tau) exp(-i w tau) d tau.
/// The lag integral treats corr as piecewise linear between samples and
/// integrates each segment exactly; the tail past the last lag follows the
/// exponential fitted to the last tenth of the series. Work is split over up
/// to `threads` workers (0 = DRESSED_RAYLEIGH_THREADS or hardware default).
SpectrumSeries spectrum_from_correlator(const CorrelationSeries& corr, std::span<const double> omega_grid,
                                        double mode_weight = 1.0, unsigned threads = 0);

/// Three-parameter Lorentzian A k^2 / ((w - w0)^2 + k^2) by Levenberg-Marquardt.
/// Throws kFit when there is no interior maximum or the solver fails.
LorentzianFit lorentzian_fit(const SpectrumSeries& spec);
LorentzianFit lorentzian_fit(std::span<const double> omega, std::span<const double> intensity);

/// First time at which the period-averaged signal changes by less than
/// `threshold` relative, per unit 1/gamma0, between consecutive windows of
/// length `window`. Returns nullopt if the signal never settles.
std::optional<double> stationary_anchor(std::span<const double> t, std::span<const double> values, double window,
                                        double gamma0, double threshold = 1e-3);

/// Worker count from DRESSED_RAYLEIGH_THREADS, else hardware concurrency.
unsigned default_thread_count();

}  // namespace dressed_rayleigh
