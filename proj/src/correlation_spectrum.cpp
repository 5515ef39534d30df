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

#include "dressed_rayleigh/correlation_spectrum.hpp"

#include "dressed_rayleigh/cascade.hpp"
#include "dressed_rayleigh/errors.hpp"

#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <thread>

namespace dressed_rayleigh {
namespace {

std::vector<Coupling> windowed_couplings(const DressedBasis& basis, const TransitionWindow& window) {
  std::vector<Coupling> out;
  for (const auto& c : sigma_coupling_table(basis)) {
    if (c.from.n >= window.min_upper_sector && c.from.n <= window.max_upper_sector) out.push_back(c);
  }
  return out;
}

/// Exact integrals over one segment of length h of exp(z u) and u exp(z u).
std::pair<Complex, Complex> segment_moments(Complex z, double h) {
  const Complex zh = z * h;
  if (std::abs(zh) < 0.25) {
    // Taylor series; 14 terms reach double precision for |zh| < 0.25.
    Complex term = 1.0, e0 = 0.0, e1 = 0.0;
    for (int k = 0; k < 14; ++k) {
      e0 += term / double(k + 1);
      e1 += term / double(k + 2);
      term *= zh / double(k + 1);
    }
    return {h * e0, h * h * e1};
  }
  const Complex ezh = std::exp(zh);
  const Complex e0 = (ezh - 1.0) / z;
  const Complex e1 = (h * ezh - e0) / z;
  return {e0, e1};
}

struct TailModel {
  double rate = 0.0;
  double frequency = 0.0;
  bool usable = false;
};

TailModel fit_tail(const CorrelationSeries& corr) {
  TailModel tail;
  const std::size_t n = corr.tau.size();
  if (n < 4) return tail;
  const std::size_t first = n - std::max<std::size_t>(3, n / 10);
  double s_t = 0, s_tt = 0, s_l = 0, s_tl = 0, s_p = 0, s_tp = 0;
  double phase = std::arg(corr.values[first]);
  double prev = phase;
  std::size_t count = 0;
  for (std::size_t i = first; i < n; ++i) {
    const double mag = std::abs(corr.values[i]);
    if (!(mag > 0.0)) return tail;
    if (i > first) {
      const double a = std::arg(corr.values[i]);
      phase += std::remainder(a - prev, 2.0 * std::numbers::pi);
      prev = a;
    }
    const double t = corr.tau[i];
    const double l = std::log(mag);
    s_t += t;
    s_tt += t * t;
    s_l += l;
    s_tl += t * l;
    s_p += phase;
    s_tp += t * phase;
    ++count;
  }
  const double denom = count * s_tt - s_t * s_t;
  if (!(denom > 0.0)) return tail;
  tail.rate = -(count * s_tl - s_t * s_l) / denom;
  tail.frequency = (count * s_tp - s_t * s_p) / denom;
  tail.usable = tail.rate > 0.0 && std::isfinite(tail.rate) && std::isfinite(tail.frequency);
  return tail;
}

}  // namespace

unsigned default_thread_count() {
  if (const char* env = std::getenv("DRESSED_RAYLEIGH_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

CorrelationSeries correlator_regression(const GeneratorTables& gen, const LadderDensityMatrix& rho_t, double t_anchor,
                                        std::span<const double> tau_grid, const Tolerances& tol,
                                        const TransitionWindow& window) {
  const auto couplings = windowed_couplings(rho_t.basis(), window);
  const int dim = rho_t.basis().dimension();

  // Rows of rho(t) for forming sigma rho(t).
  std::vector<std::vector<std::pair<int, Complex>>> rows(dim);
  for (int i = 0; i < dim; ++i) {
    if (rho_t.populations()[i] != 0.0) rows[i].emplace_back(i, rho_t.populations()[i]);
  }
  for (const auto& [key, value] : rho_t.coherences()) {
    rows[key.first].emplace_back(key.second, value);
    rows[key.second].emplace_back(key.first, std::conj(value));
  }
  LadderOperator conditional(rho_t.basis_ptr());
  for (const auto& c : couplings) {
    if (c.amplitude == 0.0) continue;
    for (const auto& [col, value] : rows[c.from.index()]) conditional.add(c.to.index(), col, c.amplitude * value);
  }

  CorrelationSeries out;
  out.t_anchor = t_anchor;
  out.tau.assign(tau_grid.begin(), tau_grid.end());
  out.values.resize(tau_grid.size());
  evolve_visit(gen, conditional, tau_grid, tol, [&](std::size_t i, const LadderOperator& op) {
    Complex sum{};
    for (const auto& c : couplings) sum += c.amplitude * op.element(c.to.index(), c.from.index());
    out.values[i] = sum;
  });
  return out;
}

Complex correlator_analytic(const SystemParams& params, const AnalyticScenario& which, double t, double tau) {
  if (params.detuning() == 0.0) throw Error(ErrorKind::kResonance, "correlator_analytic requires nonzero detuning");
  const Complex carrier(0.0, params.omega_sm);
  return std::visit(
      [&](const auto& s) -> Complex {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, scenario::SinglePhoton>) {
          const double g1 = decay_rate_n(params, 1);
          return population_single_photon(params, t) * std::exp((carrier - 0.5 * g1) * tau);
        } else if constexpr (std::is_same_v<T, scenario::Placzek>) {
          const double g = decay_rate_n(params, s.n0);
          return population_placzek(params, s.n0, t) * std::exp((carrier - 0.5 * g) * tau);
        } else {
          const double g = effective_rate(params, s.n0);
          return population_cascade(params, s.n0, t) * std::exp((carrier - g) * tau);
        }
      },
      which);
}

double analytic_linewidth(const SystemParams& params, const AnalyticScenario& which) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, scenario::SinglePhoton>) {
          return 0.5 * decay_rate_n(params, 1);
        } else if constexpr (std::is_same_v<T, scenario::Placzek>) {
          return 0.5 * decay_rate_n(params, s.n0);
        } else {
          return effective_rate(params, s.n0);
        }
      },
      which);
}

SpectrumSeries spectrum_from_correlator(const CorrelationSeries& corr, std::span<const double> omega_grid,
                                        double mode_weight, unsigned threads) {
  if (corr.tau.empty() || corr.values.size() != corr.tau.size()) {
    throw Error(ErrorKind::kInvalidArgument, "spectrum_from_correlator: empty or inconsistent correlator");
  }
  if (omega_grid.empty()) throw Error(ErrorKind::kInvalidArgument, "spectrum_from_correlator: empty omega grid");
  for (std::size_t i = 1; i < omega_grid.size(); ++i) {
    if (!(omega_grid[i] > omega_grid[i - 1])) {
      throw Error(ErrorKind::kInvalidArgument, "spectrum_from_correlator: omega grid must be strictly increasing");
    }
  }
  for (std::size_t i = 1; i < corr.tau.size(); ++i) {
    if (!(corr.tau[i] > corr.tau[i - 1])) {
      throw Error(ErrorKind::kInvalidArgument, "spectrum_from_correlator: lag grid must be strictly increasing");
    }
  }
  if (!(mode_weight > 0.0)) throw Error(ErrorKind::kInvalidArgument, "mode_weight must be positive");

  SpectrumSeries spec;
  spec.mode_weight = mode_weight;
  spec.omega.assign(omega_grid.begin(), omega_grid.end());
  spec.intensity.assign(omega_grid.size(), 0.0);

  const double c0 = std::abs(corr.values.front());
  const double c_end = std::abs(corr.values.back());
  spec.truncated = c_end > 1e-3 * c0;
  TailModel tail;
  if (c_end > 1e-12 * c0) {
    tail = fit_tail(corr);
    if (!tail.usable) spec.truncated = true;
  }
  spec.tail_rate = tail.rate;
  spec.tail_frequency = tail.frequency;

  const std::size_t n_tau = corr.tau.size();
  const double h0 = n_tau > 1 ? corr.tau[1] - corr.tau[0] : 0.0;
  bool uniform = n_tau > 1;
  for (std::size_t j = 1; uniform && j + 1 < n_tau; ++j) {
    uniform = std::abs(corr.tau[j + 1] - corr.tau[j] - h0) <= 1e-9 * h0;
  }
  const auto evaluate = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const double w = omega_grid[k];
      const Complex z(0.0, -w);
      Complex integral{};
      if (uniform) {
        const auto [e0, e1] = segment_moments(z, h0);
        const Complex step = std::polar(1.0, -w * h0);
        Complex phase{};
        for (std::size_t j = 0; j + 1 < n_tau; ++j) {
          // Exact phase every 64 steps bounds the recurrence drift.
          phase = j % 64 == 0 ? std::polar(1.0, -w * corr.tau[j]) : phase * step;
          const Complex slope = (corr.values[j + 1] - corr.values[j]) / h0;
          integral += phase * (corr.values[j] * e0 + slope * e1);
        }
      } else {
        for (std::size_t j = 0; j + 1 < n_tau; ++j) {
          const double h = corr.tau[j + 1] - corr.tau[j];
          const auto [e0, e1] = segment_moments(z, h);
          const Complex slope = (corr.values[j + 1] - corr.values[j]) / h;
          integral += std::polar(1.0, -w * corr.tau[j]) * (corr.values[j] * e0 + slope * e1);
        }
      }
      if (tail.usable) {
        const double te = corr.tau.back();
        integral += corr.values.back() * std::polar(1.0, -w * te) / Complex(tail.rate, w - tail.frequency);
      }
      spec.intensity[k] = mode_weight * integral.real();
    }
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads == 0 ? default_thread_count() : threads, omega_grid.size()));
  if (workers == 1) {
    evaluate(0, omega_grid.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (omega_grid.size() + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk, end = std::min(omega_grid.size(), begin + chunk);
      if (begin < end) pool.emplace_back(evaluate, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  for (double& v : spec.intensity) {
    if (v < 0.0) {
      v = 0.0;
      ++spec.clamped_bins;
    }
  }
  return spec;
}

namespace {

/// Residuals (model - data) / scale in a reparametrization centred on the
/// initial guess: w0 = w_i + u k_i, k = k_i exp(v), A = A_i a.
struct LorentzFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  std::span<const double> omega;
  std::span<const double> data;
  double w_init, k_init, a_init;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(omega.size()); }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    const double w0 = w_init + x[0] * k_init, k = k_init * std::exp(x[1]), amp = a_init * x[2];
    for (int i = 0; i < values(); ++i) {
      const double d = omega[i] - w0;
      f[i] = (amp * k * k / (d * d + k * k) - data[i]) / a_init;
    }
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const {
    const double w0 = w_init + x[0] * k_init, k = k_init * std::exp(x[1]), amp = a_init * x[2];
    for (int i = 0; i < values(); ++i) {
      const double d = omega[i] - w0;
      const double den = d * d + k * k;
      const double shape = k * k / den;
      // d/dw0, d/dk, d/dA of A k^2 / (d^2 + k^2)
      const double dw0 = amp * k * k * 2.0 * d / (den * den);
      const double dk = amp * 2.0 * k * d * d / (den * den);
      jac(i, 0) = dw0 * k_init / a_init;
      jac(i, 1) = dk * k / a_init;
      jac(i, 2) = shape;
    }
    return 0;
  }
};

}  // namespace

LorentzianFit lorentzian_fit(std::span<const double> omega, std::span<const double> intensity) {
  const std::size_t n = omega.size();
  if (n != intensity.size() || n < 4) {
    throw Error(ErrorKind::kFit, "lorentzian_fit: need at least 4 matching samples");
  }
  const auto peak_it = std::max_element(intensity.begin(), intensity.end());
  const std::size_t ip = static_cast<std::size_t>(peak_it - intensity.begin());
  const double peak = *peak_it;
  if (ip == 0 || ip + 1 == n || !(peak > intensity.front()) || !(peak > intensity.back()) || !(peak > 0.0)) {
    throw Error(ErrorKind::kFit, "lorentzian_fit: spectrum has no interior maximum");
  }
  const double half = 0.5 * peak;
  auto crossing = [&](int step) -> std::optional<double> {
    for (long i = static_cast<long>(ip); i + step >= 0 && i + step < static_cast<long>(n); i += step) {
      const double a = intensity[i], b = intensity[i + step];
      if (b <= half) {
        const double frac = (a - half) / (a - b);
        return omega[i] + frac * (omega[i + step] - omega[i]);
      }
    }
    return std::nullopt;
  };
  const auto left = crossing(-1), right = crossing(+1);
  double k_init;
  if (left && right) {
    k_init = 0.5 * (*right - *left);
  } else if (left) {
    k_init = omega[ip] - *left;
  } else if (right) {
    k_init = *right - omega[ip];
  } else {
    k_init = 0.25 * (omega.back() - omega.front());
  }
  if (!(k_init > 0.0)) k_init = omega[ip + 1] - omega[ip];

  LorentzFunctor functor{omega, intensity, omega[ip], k_init, peak};
  Eigen::LevenbergMarquardt<LorentzFunctor> lm(functor);
  lm.parameters.maxfev = 2000;
  lm.parameters.ftol = 1e-15;
  lm.parameters.xtol = 1e-15;
  Eigen::VectorXd x(3);
  x << 0.0, 0.0, 1.0;
  const auto status = lm.minimize(x);
  using Status = Eigen::LevenbergMarquardtSpace::Status;
  if (status == Status::ImproperInputParameters || status == Status::TooManyFunctionEvaluation) {
    throw Error(ErrorKind::kFit, "lorentzian_fit: solver did not converge (status " + std::to_string(int(status)) +
                                     ", " + std::to_string(lm.nfev) + " evaluations)");
  }
  LorentzianFit fit;
  fit.center = functor.w_init + x[0] * k_init;
  fit.hwhm = k_init * std::exp(x[1]);
  fit.peak = peak * x[2];
  fit.iterations = static_cast<int>(lm.iter);
  if (!std::isfinite(fit.center) || !std::isfinite(fit.hwhm) || !std::isfinite(fit.peak) || fit.peak <= 0.0) {
    throw Error(ErrorKind::kFit, "lorentzian_fit: non-finite or non-positive parameters");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = omega[i] - fit.center;
    const double model = fit.peak * fit.hwhm * fit.hwhm / (d * d + fit.hwhm * fit.hwhm);
    const double r = (intensity[i] - model) / fit.peak;
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

LorentzianFit lorentzian_fit(const SpectrumSeries& spec) { return lorentzian_fit(spec.omega, spec.intensity); }

std::optional<double> stationary_anchor(std::span<const double> t, std::span<const double> values, double window,
                                        double gamma0, double threshold) {
  if (t.size() != values.size() || t.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "stationary_anchor: mismatched series");
  }
  if (!(window > 0.0)) throw Error(ErrorKind::kInvalidArgument, "stationary_anchor: window must be positive");
  const double scale = gamma0 > 0.0 ? 1.0 / (gamma0 * window) : 1.0;
  std::optional<double> prev_mean;
  std::size_t i = 0;
  for (double start = t.front(); start + window <= t.back() + 1e-12 * window; start += window) {
    const double end = start + window;
    double sum = 0.0;
    std::size_t count = 0;
    for (; i < t.size() && t[i] < end; ++i) {
      if (t[i] >= start) {
        sum += values[i];
        ++count;
      }
    }
    if (count == 0) continue;
    const double mean = sum / count;
    if (prev_mean) {
      if (*prev_mean == 0.0 && mean == 0.0) return end;
      const double rel = std::abs(mean - *prev_mean) / std::abs(*prev_mean) * scale;
      if (rel < threshold) return end;
    }
    prev_mean = mean;
  }
  return std::nullopt;
}

}  // namespace dressed_rayleigh
