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

#include "dense_oracle.hpp"

#include "dressed_rayleigh/errors.hpp"
#include "dressed_rayleigh/lindblad.hpp"
#include "dressed_rayleigh/scenario.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <memory>
#include <random>

namespace dr = dressed_rayleigh;
using test_support::rel;
using dr::DressedLevel;

namespace {

std::shared_ptr<const dr::DressedBasis> make_basis(const dr::SystemParams& p, int n_max) {
  return std::make_shared<const dr::DressedBasis>(p, n_max);
}

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> out(points);
  for (int i = 0; i < points; ++i) out[i] = lo + (hi - lo) * i / (points - 1);
  return out;
}

oracle::CMatrix to_dense(const dr::LadderDensityMatrix& rho) {
  const int d = rho.basis().dimension();
  oracle::CMatrix m(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) m(r, c) = rho.element(r, c);
  }
  return m;
}

double sup_distance(const dr::LadderDensityMatrix& rho, const oracle::CMatrix& dense) {
  return (to_dense(rho) - dense).cwiseAbs().maxCoeff();
}

/// Untruncated |g,alpha> amplitudes exp(-|a|^2/2) a^n / sqrt(n!), by direct recursion.
std::vector<std::complex<double>> coherent_amplitudes(std::complex<double> alpha, int n_max) {
  std::vector<std::complex<double>> c(n_max + 1);
  c[0] = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n <= n_max; ++n) c[n] = c[n - 1] * alpha / std::sqrt(static_cast<double>(n));
  return c;
}

}  // namespace

TEST_CASE("generator at zero coupling is bare atomic decay") {
  auto basis = make_basis({1.0, 1.5, 0.0, 0.7}, 5);
  const auto gen = dr::build_generator(basis);
  for (int n = 1; n <= 5; ++n) {
    CHECK(gen.loss()[DressedLevel::plus(n).index()] == rel(0.7, 1e-15));
    CHECK(gen.loss()[DressedLevel::minus(n).index()] == 0.0);
  }
}

TEST_CASE("generator structure") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const dr::SystemParams p{u(rng), u(rng), 0.2 * u(rng), u(rng)};
    auto basis = make_basis(p, 9);
    const auto gen = dr::build_generator(basis);
    for (const auto& t : gen.transitions()) {
      CHECK(t.rate >= 0.0);
      CHECK(DressedLevel::from_index(t.to).n == DressedLevel::from_index(t.from).n - 1);
    }
    // Gains out of each level add up to its loss.
    for (int n = 1; n <= 9; ++n) {
      for (const auto level : {DressedLevel::plus(n), DressedLevel::minus(n)}) {
        double out = 0.0;
        for (const auto& t : gen.transitions()) {
          if (t.from == level.index()) out += t.rate;
        }
        CHECK(out == rel(gen.loss()[level.index()], 1e-14));
      }
      CHECK(gen.loss()[DressedLevel::plus(n).index()] ==
            rel(p.gamma0 * std::pow(basis->cos_t(n), 2), 1e-13));
    }
    CHECK(gen.rate_matrix().colwise().sum().cwiseAbs().maxCoeff() <= 1e-14);
    for (const auto& [pair, rate] : gen.offdiag_rates()) CHECK(rate.real() <= 0.0);
  }
}

TEST_CASE("block evolution matches the dense superoperator") {
  const dr::SystemParams p{1.0, 2.0, 0.1, 0.8};  // rabi / |detuning| = 0.1
  for (const auto& [n_max, n0] : {std::pair{5, 5}, std::pair{8, 6}}) {
    auto basis = make_basis(p, n_max);
    const auto gen = dr::build_generator(basis);
    const auto lad = oracle::build_ladder(p, n_max);
    const auto liouville = oracle::liouvillian(lad, p.gamma0);
    const auto rho0 = dr::fock_initial_state(basis, n0);
    const std::vector<double> t{0.0, 0.3, 1.1, 4.0, 12.5};
    const auto states = dr::evolve(gen, rho0, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(sup_distance(states[i], oracle::evolve_dense(lad, liouville, to_dense(rho0), t[i])) <= 1e-7);
    }
  }
}

TEST_CASE("fock initial state") {
  auto decoupled = make_basis({1.0, 1.5, 0.0, 1.0}, 6);
  const auto bare = dr::fock_initial_state(decoupled, 4);
  CHECK(bare.pop(DressedLevel::minus(4)) == 1.0);
  CHECK(bare.trace() == 1.0);
  CHECK(bare.element(DressedLevel::plus(4), DressedLevel::minus(4)) == std::complex<double>{});

  const dr::SystemParams p{1.0, 2.0, 0.1, 1.0};
  auto basis = make_basis(p, 6);
  const auto rho = dr::fock_initial_state(basis, 3);
  CHECK(rho.trace() == rel(1.0, 1e-15));
  // Rotation of |g,3><g,3| by the numerically obtained eigenvectors.
  const auto lad = oracle::build_ladder(p, 6);
  Eigen::VectorXd g3 = Eigen::VectorXd::Zero(lad.dim);
  g3(6) = 1.0;
  const Eigen::VectorXd dressed = lad.eigenvectors.transpose() * g3;
  CHECK(sup_distance(rho, (dressed * dressed.transpose()).cast<std::complex<double>>()) <= 1e-12);

  CHECK_THROWS_AS(dr::fock_initial_state(basis, 7), dr::Error);
  CHECK_THROWS_AS(dr::fock_initial_state(basis, 0), dr::Error);
}

TEST_CASE("coherent initial state") {
  auto basis = make_basis({1.0, 2.0, 0.05, 1.0}, 30);
  const auto vacuum = dr::coherent_initial_state(basis, {0.0, 0.0});
  CHECK(vacuum.pop(DressedLevel::ground()) == rel(1.0, 1e-15));
  CHECK(vacuum.trace() == rel(1.0, 1e-15));
  CHECK(std::abs(dr::observable_photon_number(vacuum)) <= 1e-15);

  const std::complex<double> alpha(2.0, 0.0);
  const auto rho = dr::coherent_initial_state(basis, alpha);
  CHECK(rho.trace() == rel(1.0, 1e-14));
  CHECK(rho.renormalization() >= 1.0);
  CHECK(rho.renormalization() - 1.0 <= 1e-9);
  // Adjacent-sector elements against the untruncated amplitudes.
  const auto c = coherent_amplitudes(alpha, 30);
  const auto f = [&](const DressedLevel& l) {
    return l.branch == dr::Branch::kGround ? 1.0 : (l.branch == dr::Branch::kPlus ? basis->sin_t(l.n) : basis->cos_t(l.n));
  };
  double worst = 0.0;
  for (int n = 1; n <= 30; ++n) {
    const std::vector<DressedLevel> lower =
        n == 1 ? std::vector{DressedLevel::ground()} : std::vector{DressedLevel::plus(n - 1), DressedLevel::minus(n - 1)};
    for (const auto& a : lower) {
      for (const auto& b : {DressedLevel::plus(n), DressedLevel::minus(n)}) {
        const auto expected = f(a) * f(b) * c[n - 1] * std::conj(c[n]);
        worst = std::max(worst, std::abs(rho.element(a, b) / rho.renormalization() - expected));
      }
    }
  }
  CHECK(worst <= 1e-14);

  auto small = make_basis({1.0, 2.0, 0.05, 1.0}, 15);
  CHECK_THROWS_AS(dr::coherent_initial_state(small, {2.0, 0.0}), dr::Error);  // needs n_max >= 26
}

TEST_CASE("observables on simple states") {
  auto basis = make_basis({1.0, 2.0, 0.1, 1.0}, 10);
  dr::LadderDensityMatrix ground(basis);
  ground.set_pop(DressedLevel::ground(), 1.0);
  CHECK(dr::observable_atom_excitation(ground) == 0.0);
  CHECK(dr::observable_photon_number(ground) == 0.0);
  CHECK(dr::observable_dipole(ground) == std::complex<double>{});

  auto resonant = make_basis({1.0, 1.0, 0.1, 1.0}, 2);
  dr::LadderDensityMatrix plus1(resonant);
  plus1.set_pop(DressedLevel::plus(1), 1.0);
  CHECK(dr::observable_atom_excitation(plus1) == rel(0.5, 1e-15));

  for (int n0 = 1; n0 <= 10; ++n0) {
    const auto rho = dr::fock_initial_state(basis, n0);
    CHECK(std::abs(dr::observable_atom_excitation(rho)) <= 1e-16);
    CHECK(dr::observable_photon_number(rho) == rel(n0, 1e-14));
    CHECK(dr::observable_dipole(rho) == std::complex<double>{});
  }

  auto wide = make_basis({1.0, 2.0, 0.1, 1.0}, dr::suggested_n_max_coherent({1.5, 0.0}));
  const auto coh = dr::coherent_initial_state(wide, {1.5, 0.0});
  CHECK(dr::observable_photon_number(coh) == rel(2.25, 1e-6));
  // Bare-basis value <g,alpha| sigma |g,alpha> = 0.
  CHECK(std::abs(dr::observable_dipole(coh)) <= 1e-15);
  CHECK(std::abs(dr::observable_atom_excitation(coh)) <= 1e-15);
}

TEST_CASE("evolution without relaxation") {
  const dr::SystemParams p{1.0, 2.0, 0.1, 0.0};
  auto basis = make_basis(p, 30);
  const auto gen = dr::build_generator(basis);
  const auto rho0 = dr::coherent_initial_state(basis, {1.2, -0.4});
  const std::vector<double> t{0.0, 0.5, 7.0};
  const auto states = dr::evolve(gen, rho0, t);
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t k = 0; k < rho0.populations().size(); ++k) {
      CHECK(states[i].populations()[k] == rel(rho0.populations()[k], 1e-12));
    }
    for (const auto& [key, value] : rho0.coherences()) {
      const auto a = DressedLevel::from_index(key.first), b = DressedLevel::from_index(key.second);
      const auto expected = value * std::exp(std::complex<double>(0.0, -(basis->omega(a) - basis->omega(b)) * t[i]));
      CHECK(std::abs(states[i].coherences().at(key) - expected) <= 1e-14);
    }
  }
}

TEST_CASE("single doublet decay") {
  const dr::SystemParams p{1.0, 2.0, 0.1, 1.0};
  auto basis = make_basis(p, 1);
  const auto gen = dr::build_generator(basis);
  const auto rho0 = dr::fock_initial_state(basis, 1);
  const auto t = linspace(0.0, 100.0, 11);
  const auto states = dr::evolve(gen, rho0, t);
  const double s2 = std::pow(basis->sin_t(1), 2);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(states[i].pop(DressedLevel::minus(1)) / rho0.pop(DressedLevel::minus(1)) ==
          rel(std::exp(-p.gamma0 * s2 * t[i]), 1e-9));
  }
}

TEST_CASE("trace and positivity over random evolutions") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const dr::SystemParams p{u(rng), u(rng), 0.1 * u(rng), u(rng)};
    auto basis = make_basis(p, 24);
    const auto gen = dr::build_generator(basis);
    const auto rho0 = trial % 2 ? dr::fock_initial_state(basis, 1 + trial) : dr::coherent_initial_state(basis, {1.0, 0.5});
    for (const auto& rho : dr::evolve(gen, rho0, linspace(0.0, 30.0, 61))) {
      CHECK(std::abs(rho.trace() - 1.0) <= 1e-9);
      for (double v : rho.populations()) CHECK(v >= -1e-9);
      for (const auto& [key, value] : rho.coherences()) CHECK(rho.element(key.second, key.first) == std::conj(value));
    }
  }
}

TEST_CASE("rabi transient of a single photon") {
  // detuning = 4 rabi, gamma0 << rabi; window [0, 3 / gamma0].
  const dr::SystemParams p{10.0, 14.0, 1.0, 0.05};
  auto basis = make_basis(p, 3);
  const auto gen = dr::build_generator(basis);
  const auto t = linspace(0.0, 3.0 / p.gamma0, 6001);
  std::vector<double> p_exc;
  for (const auto& rho : dr::evolve(gen, dr::fock_initial_state(basis, 1), t)) {
    p_exc.push_back(dr::observable_atom_excitation(rho));
  }
  const double expected = 2.0 * std::sqrt(1.0 + 4.0);
  const auto rt = dr::analyze_rabi_transient(t, p_exc, expected);
  CHECK(std::abs(rt.peak_frequency - expected) <= rt.bin);
  REQUIRE(rt.envelope_rate.has_value());
  // The oscillating coherence decays at exactly gamma0 / 2; the estimator resolves it to 1e-3.
  CHECK(*rt.envelope_rate == rel(0.5 * p.gamma0, 1e-3));
}

TEST_CASE("plateau after the transient") {
  const int n0 = 4;
  const dr::SystemParams p{1.0, 3.0, 0.05 * 2.0 / 2.0, 1.0};  // rabi sqrt(n0) / |detuning| = 0.05
  auto basis = make_basis(p, n0);
  const auto gen = dr::build_generator(basis);
  const double plateau = p.rabi * p.rabi * n0 / (p.detuning() * p.detuning());
  const auto t = linspace(0.0, 40.0, 81);
  const auto states = dr::evolve(gen, dr::fock_initial_state(basis, n0), t);
  for (std::size_t i = 40; i < t.size(); ++i) {
    CHECK(std::abs(dr::observable_atom_excitation(states[i]) - plateau) <= 0.05 * plateau);
  }
}

TEST_CASE("evolve argument checks") {
  auto basis = make_basis({1.0, 2.0, 0.1, 1.0}, 4);
  const auto gen = dr::build_generator(basis);
  const auto rho0 = dr::fock_initial_state(basis, 2);
  const std::vector<double> late{0.5, 1.0}, backwards{0.0, 2.0, 1.0};
  CHECK_THROWS_AS(dr::evolve(gen, rho0, late), dr::Error);
  CHECK_THROWS_AS(dr::evolve(gen, rho0, backwards), dr::Error);
  auto other = make_basis({1.0, 2.5, 0.1, 1.0}, 4);
  const std::vector<double> ok{0.0, 1.0};
  CHECK_THROWS_AS(dr::evolve(gen, dr::fock_initial_state(other, 2), ok), dr::Error);
}
