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
#include "dressed_rayleigh/correlation_spectrum.hpp"
#include "dressed_rayleigh/errors.hpp"
#include "dressed_rayleigh/lindblad.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>

namespace dr = dressed_rayleigh;
using dr::DressedLevel;
using test_support::rel;
using Complex = std::complex<double>;

namespace {

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> out(points);
  for (int i = 0; i < points; ++i) out[i] = lo + (hi - lo) * i / (points - 1);
  return out;
}

dr::CoherentScenario scenario(const dr::SystemParams& p, Complex alpha) {
  return {p, alpha, dr::suggested_n_max_coherent(alpha)};
}

dr::ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const dr::Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return dr::ErrorKind::kIo;
}

/// <sigma> rebuilt from the evolved elements and the sigma table, one
/// transition at a time. `keep` selects which families enter.
Complex dipole_from_elements(const dr::CoherentScenario& sc, double t, const auto& keep) {
  const auto rho = dr::offdiag_evolved(sc, t);
  const dr::DressedBasis basis(sc.params, sc.n_max);
  Complex sum{};
  for (const auto& c : dr::sigma_coupling_table(basis)) {
    if (keep(c)) sum += c.amplitude * std::conj(rho.at({c.to, c.from}));
  }
  return sum;
}

}  // namespace

TEST_CASE("scenario validation") {
  const dr::SystemParams p{1.0, 3.0, 0.1, 1.0};
  CHECK(scenario(p, {2.0, 0.0}).small_parameter() == rel(0.01, 1e-14));
  CHECK_NOTHROW(scenario(p, {2.0, 0.0}).validate());
  CHECK(kind_of([&] { dr::CoherentScenario{{1.0, 1.0, 0.1, 1.0}, 1.0, 20}.validate(); }) == dr::ErrorKind::kResonance);
  CHECK(kind_of([&] { dr::CoherentScenario{p, 2.0, 25}.validate(); }) == dr::ErrorKind::kTruncation);
  CHECK_NOTHROW(dr::CoherentScenario{p, 2.0, 26}.validate());
  // rabi / |detuning| = 0.2 with |alpha| = 4 gives 0.64.
  const dr::SystemParams strong{1.0, 3.0, 0.4, 1.0};
  CHECK(kind_of([&] { scenario(strong, 4.0).validate(); }) == dr::ErrorKind::kInvalidArgument);
  CHECK(kind_of([&] { dr::offdiag_initial(scenario(strong, 4.0)); }) == dr::ErrorKind::kInvalidArgument);
  CHECK(kind_of([&] { dr::dipole_exact_sum(scenario(p, 1.0), -1.0); }) == dr::ErrorKind::kInvalidArgument);
}

TEST_CASE("initial off-diagonal elements") {
  const dr::SystemParams p{1.0, 3.0, 0.1, 1.0};
  for (const auto& [key, value] : dr::offdiag_initial(scenario(p, 0.0))) CHECK(value == Complex{});

  const Complex alpha(2.5, -1.0);
  const auto sc = scenario(p, alpha);
  const auto elements = dr::offdiag_initial(sc);
  CHECK(elements.size() == 2u + 4u * (sc.n_max - 1));

  int peak = 0;
  double best = 0.0;
  for (int n = 1; n <= sc.n_max; ++n) {
    const double m = std::abs(elements.at({n == 1 ? DressedLevel::ground() : DressedLevel::minus(n - 1), DressedLevel::minus(n)}));
    if (m > best) best = m, peak = n;
  }
  CHECK(std::abs(peak - std::norm(alpha)) <= 1.5);

  auto basis = std::make_shared<const dr::DressedBasis>(p, sc.n_max);
  const auto rho = dr::coherent_initial_state(basis, alpha);
  double worst = 0.0;
  for (const auto& [key, value] : elements) {
    worst = std::max(worst, std::abs(value - rho.element(key.first, key.second) / rho.renormalization()));
  }
  CHECK(worst <= 1e-14);
}

TEST_CASE("large amplitudes stay finite") {
  const dr::SystemParams p{1.0, 3.0, 0.01, 1.0};
  const auto sc = scenario(p, {10.0, 3.0});
  double total = 0.0;
  for (const auto& [key, value] : dr::offdiag_initial(sc)) {
    CHECK(std::isfinite(std::abs(value)));
    total += std::abs(value);
  }
  CHECK(total > 0.0);
  CHECK(std::isfinite(std::abs(dr::dipole_exact_sum(sc, 50.0))));
}

TEST_CASE("evolved off-diagonal elements") {
  const dr::SystemParams p{1.0, 2.5, 0.12, 0.8};
  const auto sc = scenario(p, {1.5, 0.0});
  const auto start = dr::offdiag_initial(sc);
  CHECK(dr::offdiag_evolved(sc, 0.0) == start);

  // Modulus ratios do not depend on the phase of alpha.
  const auto rotated = scenario(p, {0.0, 1.5});
  const auto a = dr::offdiag_evolved(sc, 3.7), b = dr::offdiag_evolved(rotated, 3.7);
  const auto b0 = dr::offdiag_initial(rotated);
  for (const auto& [key, value] : a) {
    CHECK(std::abs(value) / std::abs(start.at(key)) == rel(std::abs(b.at(key)) / std::abs(b0.at(key)), 1e-12));
  }

  auto basis = std::make_shared<const dr::DressedBasis>(p, sc.n_max);
  const auto gen = dr::build_generator(basis);
  const auto rho0 = dr::coherent_initial_state(basis, sc.alpha);
  const std::vector<double> t{0.0, 0.5, 4.0, 30.0};
  const auto states = dr::evolve(gen, rho0, t);
  for (std::size_t i = 0; i < t.size(); ++i) {
    double worst = 0.0;
    for (const auto& [key, value] : dr::offdiag_evolved(sc, t[i])) {
      worst = std::max(worst, std::abs(value - states[i].element(key.first, key.second) / rho0.renormalization()));
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("exact dipole sum") {
  const dr::SystemParams p{1.0, 3.0, 0.1, 1.0};
  CHECK(dr::dipole_exact_sum(scenario(p, 0.0), 2.0) == Complex{});
  CHECK(std::abs(dr::dipole_exact_sum(scenario({1.0, 3.0, 0.0, 1.0}, 2.0), 2.0)) == 0.0);

  const auto sc = scenario(p, {1.5, 0.5});
  auto basis = std::make_shared<const dr::DressedBasis>(p, sc.n_max);
  const auto gen = dr::build_generator(basis);
  const auto rho0 = dr::coherent_initial_state(basis, sc.alpha);
  const std::vector<double> t{0.0, 0.3, 2.0, 9.0, 40.0};
  const auto states = dr::evolve(gen, rho0, t);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const Complex exact = dr::dipole_exact_sum(sc, t[i]);
    CHECK(std::abs(dr::observable_dipole(states[i]) / rho0.renormalization() - exact) <= 1e-8 * std::abs(exact));
    const Complex rebuilt = dipole_from_elements(sc, t[i], [](const dr::Coupling&) { return true; });
    CHECK(std::abs(rebuilt - exact) <= 1e-12 * std::abs(exact));
  }
}

TEST_CASE("discarded families are negligible after the transient") {
  const dr::SystemParams p{1.0, 3.0, 0.04, 1.0};
  const auto sc = scenario(p, 4.0);
  const double t = 20.0 / p.gamma0;
  const Complex full = dr::dipole_exact_sum(sc, t);
  const Complex retained = dipole_from_elements(sc, t, [](const dr::Coupling& c) {
    return c.from.branch == dr::Branch::kMinus && c.to.branch != dr::Branch::kPlus;
  });
  CHECK(std::abs(full - retained) < std::exp(-0.5 * p.gamma0 * t) / sc.small_parameter() * std::abs(retained));
}

TEST_CASE("large-amplitude dipole") {
  const dr::SystemParams p{1.0, 3.0, 0.04, 1.0};  // rabi / |detuning| = 0.02
  const auto sc = scenario(p, 5.0);
  const double amp = 0.02 * 5.0;
  CHECK(std::abs(dr::dipole_large_alpha(sc, 0.0).value) == rel(amp, 1e-14));
  CHECK(std::abs(dr::dipole_large_alpha(sc, 1e9).value) == rel(amp * std::exp(-25.0), 1e-12));
  CHECK(dr::dipole_large_alpha(sc, 0.0).in_regime);
  CHECK_FALSE(dr::dipole_large_alpha(scenario(p, 2.9), 0.0).in_regime);

  // Against the exact sum once the fast families have died out, up to k |a|^2 t = 1.
  const double k = p.gamma0 * 0.02 * 0.02;
  for (double t : linspace(10.0 / p.gamma0, 1.0 / (k * 25.0), 41)) {
    CHECK(std::abs(dr::dipole_large_alpha(sc, t).value) == rel(std::abs(dr::dipole_exact_sum(sc, t)), 0.05));
  }
}

TEST_CASE("quasistationary dipole") {
  const dr::SystemParams p{1.0, 3.0, 0.04, 1.0};
  const auto sc = scenario(p, {3.0, 4.0});
  const double k = p.gamma0 * 0.02 * 0.02;
  CHECK(dr::dipole_quasistationary(sc, 0.09 / k).in_regime);
  CHECK_FALSE(dr::dipole_quasistationary(sc, 0.11 / k).in_regime);

  for (double t : {0.0, 1.0, 17.0, 200.0}) {
    const Complex a = dr::dipole_quasistationary(sc, t).value, b = dr::dipole_quasistationary(sc, t + 0.25).value;
    CHECK(std::arg(b / a) == rel(-0.25 * p.omega_sm, 1e-12));
    const double kt = k * t;
    const double gap = std::abs(std::abs(dr::dipole_large_alpha(sc, t).value) / std::abs(a) - 1.0);
    CHECK(gap <= kt * 25.0 / 2.0 + 1e-15);
  }
  // The retained term oscillates in phase with alpha exp(-i w_sm t) up to dipole_sign.
  const double t = 30.0;
  const Complex exact = dr::dipole_exact_sum(sc, t);
  const Complex model = dr::dipole_quasistationary(sc, t).value;
  CHECK(std::abs(std::arg(exact / model)) <= 0.05);
}

TEST_CASE("spectrum of the quasistationary dipole") {
  const dr::SystemParams p{1.0, 3.0, 0.04, 1.0};
  const auto sc = scenario(p, 4.0);
  const double width = 16.0 * p.gamma0 * 0.02 * 0.02;
  dr::CorrelationSeries signal;
  signal.tau = linspace(0.0, 12.0 / width, 12001);
  const Complex d0 = dr::dipole_quasistationary(sc, 0.0).value;
  for (double tau : signal.tau) signal.values.push_back(std::conj(dr::dipole_quasistationary(sc, tau).value) * d0);
  const auto omega = linspace(p.omega_sm - 10.0 * width, p.omega_sm + 10.0 * width, 401);
  const auto fit = dr::lorentzian_fit(dr::spectrum_from_correlator(signal, omega));
  CHECK(fit.hwhm == rel(width, 1e-3));
  CHECK(std::abs(fit.center - p.omega_sm) <= 1e-3 * width);
}

TEST_CASE("dipole modulus is steady inside the window") {
  const dr::SystemParams p{1.0, 3.0, 0.004, 1.0};  // rabi / |detuning| = 0.002
  const auto sc = scenario(p, 4.0);
  double lo = INFINITY, hi = 0.0;
  for (double t : linspace(30.0, 30.0 + 10.0 / p.omega_sm, 201)) {
    const double m = std::abs(dr::dipole_exact_sum(sc, t));
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  CHECK(hi / lo - 1.0 <= 1e-3);
  CHECK(hi == rel(0.002 * 4.0, 0.05));
}

TEST_CASE("fock data carries no mean dipole") {
  const dr::SystemParams p{1.0, 3.0, 0.04, 1.0};
  auto basis = std::make_shared<const dr::DressedBasis>(p, 12);
  const auto gen = dr::build_generator(basis);
  const std::vector<double> t{0.0, 1.0, 30.0};
  for (const auto& rho : dr::evolve(gen, dr::fock_initial_state(basis, 4), t)) {
    CHECK(dr::observable_dipole(rho) == Complex{});
  }
}
