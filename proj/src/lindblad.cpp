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

#include "dressed_rayleigh/lindblad.hpp"

#include "dressed_rayleigh/errors.hpp"

#include <cmath>

namespace dressed_rayleigh {
namespace {

IndexPair canonical(int row, int col) { return row < col ? IndexPair{row, col} : IndexPair{col, row}; }

/// Coherence pairs the implementation tracks: (+,n)/(-,n), every pair between
/// sectors n-1 and n, and the ground pairs; both orderings.
std::vector<IndexPair> tracked_pairs(const DressedBasis& basis) {
  std::vector<IndexPair> pairs;
  const auto add = [&](const DressedLevel& a, const DressedLevel& b) {
    pairs.emplace_back(a.index(), b.index());
    pairs.emplace_back(b.index(), a.index());
  };
  for (int n = 1; n <= basis.n_max(); ++n) {
    add(DressedLevel::plus(n), DressedLevel::minus(n));
    if (n == 1) {
      add(DressedLevel::ground(), DressedLevel::plus(1));
      add(DressedLevel::ground(), DressedLevel::minus(1));
    } else {
      for (auto lower : {DressedLevel::plus(n - 1), DressedLevel::minus(n - 1)}) {
        for (auto upper : {DressedLevel::plus(n), DressedLevel::minus(n)}) add(lower, upper);
      }
    }
  }
  return pairs;
}

void check_same_basis(const DressedBasis& a, const DressedBasis& b) {
  if (&a != &b && (a.n_max() != b.n_max() || !(a.params() == b.params()))) {
    throw Error(ErrorKind::kInvalidArgument, "state and generator are defined on different bases");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// LadderDensityMatrix

LadderDensityMatrix::LadderDensityMatrix(BasisPtr basis) : basis_(std::move(basis)) {
  if (!basis_) throw Error(ErrorKind::kInvalidArgument, "null basis");
  pops_.assign(basis_->dimension(), 0.0);
}

void LadderDensityMatrix::set_pop(const DressedLevel& level, double value) {
  basis_->check_level(level);
  pops_[level.index()] = value;
}

Complex LadderDensityMatrix::element(int row, int col) const {
  if (row == col) return pops_.at(row);
  const auto it = coherences_.find(canonical(row, col));
  if (it == coherences_.end()) return {};
  return row < col ? it->second : std::conj(it->second);
}

Complex LadderDensityMatrix::element(const DressedLevel& row, const DressedLevel& col) const {
  return element(row.index(), col.index());
}

void LadderDensityMatrix::set_element(const DressedLevel& row, const DressedLevel& col, Complex value) {
  basis_->check_level(row);
  basis_->check_level(col);
  if (row == col) {
    if (value.imag() != 0.0) throw Error(ErrorKind::kInvalidArgument, "populations must be real");
    pops_[row.index()] = value.real();
    return;
  }
  const int r = row.index(), c = col.index();
  coherences_[canonical(r, c)] = r < c ? value : std::conj(value);
}

bool LadderDensityMatrix::tracks(const DressedLevel& row, const DressedLevel& col) const {
  return row == col || coherences_.contains(canonical(row.index(), col.index()));
}

double LadderDensityMatrix::trace() const {
  double sum = 0.0;
  for (double p : pops_) sum += p;
  return sum;
}

// ---------------------------------------------------------------------------
// LadderOperator

LadderOperator::LadderOperator(BasisPtr basis) : basis_(std::move(basis)) {
  if (!basis_) throw Error(ErrorKind::kInvalidArgument, "null basis");
  diag_.assign(basis_->dimension(), Complex{});
}

Complex LadderOperator::element(int row, int col) const {
  if (row == col) return diag_.at(row);
  const auto it = offdiag_.find({row, col});
  return it == offdiag_.end() ? Complex{} : it->second;
}

void LadderOperator::add(int row, int col, Complex value) {
  if (row == col) {
    diag_.at(row) += value;
  } else {
    offdiag_[{row, col}] += value;
  }
}

// ---------------------------------------------------------------------------
// Generator

GeneratorTables build_generator(BasisPtr basis, const GeneratorOptions& options) {
  if (!basis) throw Error(ErrorKind::kInvalidArgument, "null basis");
  GeneratorTables gen;
  gen.basis_ = basis;
  const int dim = basis->dimension();
  const double gamma0 = basis->params().gamma0;
  gen.loss_.assign(dim, 0.0);
  gen.omega_.resize(dim);
  for (int i = 0; i < dim; ++i) gen.omega_[i] = basis->omega(DressedLevel::from_index(i));

  for (const auto& c : sigma_coupling_table(*basis)) {
    if (c.from.n < options.lossless_below_sector) continue;
    const double rate = gamma0 * c.amplitude * c.amplitude;
    if (rate == 0.0) continue;
    gen.transitions_.push_back({c.from.index(), c.to.index(), rate});
    gen.loss_[c.from.index()] += rate;
  }
  for (const auto& [row, col] : tracked_pairs(*basis)) {
    gen.offdiag_rates_[{row, col}] = gen.coherence_rate(row, col);
  }
  return gen;
}

Complex GeneratorTables::coherence_rate(int row, int col) const {
  const int dim = basis_->dimension();
  if (row < 0 || col < 0 || row >= dim || col >= dim || row == col) {
    throw Error(ErrorKind::kInvalidArgument, "coherence_rate: invalid pair");
  }
  return {-0.5 * (loss_[row] + loss_[col]), -(omega_[row] - omega_[col])};
}

Eigen::MatrixXd GeneratorTables::rate_matrix() const {
  const int dim = basis_->dimension();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& t : transitions_) {
    m(t.to, t.from) += t.rate;
    m(t.from, t.from) -= t.rate;
  }
  return m;
}

void GeneratorTables::apply_rates(const std::vector<double>& p, std::vector<double>& dpdt) const {
  const std::size_t dim = loss_.size();
  for (std::size_t i = 0; i < dim; ++i) dpdt[i] = -loss_[i] * p[i];
  for (const auto& t : transitions_) dpdt[t.to] += t.rate * p[t.from];
}

// ---------------------------------------------------------------------------
// Initial states

LadderDensityMatrix fock_initial_state(BasisPtr basis, int n0) {
  if (!basis) throw Error(ErrorKind::kInvalidArgument, "null basis");
  if (n0 < 1 || n0 > basis->n_max()) {
    throw Error(ErrorKind::kTruncation, "fock_initial_state: n0 = " + std::to_string(n0) +
                                            " outside [1, n_max = " + std::to_string(basis->n_max()) + "]");
  }
  LadderDensityMatrix rho(basis);
  // |g,n0> = sin t |+,n0> + cos t |-,n0>
  const double s = basis->sin_t(n0), c = basis->cos_t(n0);
  rho.set_pop(DressedLevel::plus(n0), s * s);
  rho.set_pop(DressedLevel::minus(n0), c * c);
  rho.set_element(DressedLevel::plus(n0), DressedLevel::minus(n0), s * c);
  return rho;
}

LadderDensityMatrix coherent_initial_state(BasisPtr basis, Complex alpha) {
  if (!basis) throw Error(ErrorKind::kInvalidArgument, "null basis");
  const int n_max = basis->n_max();
  const double a = std::abs(alpha);
  if (a * a + 6.0 * a + 10.0 > n_max) {
    throw Error(ErrorKind::kTruncation, "coherent_initial_state: n_max = " + std::to_string(n_max) +
                                            " below |alpha|^2 + 6|alpha| + 10 = " +
                                            std::to_string(a * a + 6.0 * a + 10.0));
  }
  // Amplitudes of |g,alpha> on |g,n>, evaluated in the log domain.
  std::vector<Complex> c(n_max + 1);
  const double arg = std::arg(alpha);
  double norm = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    if (a == 0.0) {
      c[n] = n == 0 ? 1.0 : 0.0;
    } else {
      const double log_mag = -0.5 * a * a + n * std::log(a) - 0.5 * std::lgamma(n + 1.0);
      c[n] = std::polar(std::exp(log_mag), n * arg);
    }
    norm += std::norm(c[n]);
  }
  const double scale = 1.0 / norm;

  // Dressed components: psi_g0 = c0, psi_{+,n} = c_n sin t_n, psi_{-,n} = c_n cos t_n.
  std::vector<Complex> psi(basis->dimension());
  psi[0] = c[0];
  for (int n = 1; n <= n_max; ++n) {
    psi[DressedLevel::plus(n).index()] = c[n] * basis->sin_t(n);
    psi[DressedLevel::minus(n).index()] = c[n] * basis->cos_t(n);
  }

  LadderDensityMatrix rho(basis);
  auto pops = rho.populations();
  for (int i = 0; i < basis->dimension(); ++i) pops[i] = scale * std::norm(psi[i]);
  for (const auto& [row, col] : tracked_pairs(*basis)) {
    if (row < col) rho.coherences()[{row, col}] = scale * psi[row] * std::conj(psi[col]);
  }
  rho.set_renormalization(scale);
  return rho;
}

// ---------------------------------------------------------------------------
// Evolution

void evolve_visit(const GeneratorTables& gen, const LadderOperator& op0, std::span<const double> t_grid,
                  const Tolerances& tol, const std::function<void(std::size_t, const LadderOperator&)>& visit) {
  check_tolerances(tol);
  check_time_grid(t_grid, "t_grid");
  check_same_basis(gen.basis(), op0.basis());
  const std::size_t dim = gen.basis().dimension();

  // Real and imaginary parts of the diagonal obey the same real rate system.
  std::vector<double> x0(2 * dim);
  for (std::size_t i = 0; i < dim; ++i) {
    x0[i] = op0.diagonal()[i].real();
    x0[dim + i] = op0.diagonal()[i].imag();
  }
  std::vector<std::pair<IndexPair, Complex>> rates;
  rates.reserve(op0.off_diagonal().size());
  for (const auto& [key, value] : op0.off_diagonal()) {
    const auto it = gen.offdiag_rates().find(key);
    rates.emplace_back(key, it != gen.offdiag_rates().end() ? it->second : gen.coherence_rate(key.first, key.second));
  }

  std::vector<double> half(dim), dhalf(dim);
  const auto rhs = [&](const std::vector<double>& x, std::vector<double>& dxdt) {
    for (int part = 0; part < 2; ++part) {
      std::copy_n(x.begin() + part * dim, dim, half.begin());
      gen.apply_rates(half, dhalf);
      std::copy_n(dhalf.begin(), dim, dxdt.begin() + part * dim);
    }
  };

  LadderOperator current = op0;
  integrate_autonomous(rhs, std::move(x0), t_grid, tol,
                       [&](std::size_t index, double t, const std::vector<double>& x) {
                         auto diag = current.diagonal();
                         for (std::size_t i = 0; i < dim; ++i) diag[i] = {x[i], x[dim + i]};
                         std::size_t k = 0;
                         for (auto& [key, value] : current.off_diagonal()) {
                           value = op0.off_diagonal().at(key) * std::exp(rates[k++].second * t);
                         }
                         visit(index, current);
                       });
}

std::vector<LadderOperator> evolve(const GeneratorTables& gen, const LadderOperator& op0,
                                   std::span<const double> t_grid, const Tolerances& tol) {
  std::vector<LadderOperator> out;
  out.reserve(t_grid.size());
  evolve_visit(gen, op0, t_grid, tol, [&](std::size_t, const LadderOperator& op) { out.push_back(op); });
  return out;
}

std::vector<LadderDensityMatrix> evolve(const GeneratorTables& gen, const LadderDensityMatrix& rho0,
                                        std::span<const double> t_grid, const Tolerances& tol) {
  check_tolerances(tol);
  check_time_grid(t_grid, "t_grid");
  check_same_basis(gen.basis(), rho0.basis());
  const std::size_t dim = gen.basis().dimension();

  std::vector<std::pair<IndexPair, Complex>> rates;
  rates.reserve(rho0.coherences().size());
  for (const auto& [key, value] : rho0.coherences()) {
    const auto it = gen.offdiag_rates().find(key);
    rates.emplace_back(key, it != gen.offdiag_rates().end() ? it->second : gen.coherence_rate(key.first, key.second));
  }

  std::vector<LadderDensityMatrix> out;
  out.reserve(t_grid.size());
  std::vector<double> p0(rho0.populations().begin(), rho0.populations().end());
  integrate_autonomous([&](const std::vector<double>& p, std::vector<double>& dpdt) { gen.apply_rates(p, dpdt); },
                       std::move(p0), t_grid, tol, [&](std::size_t, double t, const std::vector<double>& p) {
                         LadderDensityMatrix rho = rho0;
                         std::copy_n(p.begin(), dim, rho.populations().begin());
                         std::size_t k = 0;
                         for (auto& [key, value] : rho.coherences()) {
                           value *= std::exp(rates[k++].second * t);
                         }
                         out.push_back(std::move(rho));
                       });
  return out;
}

// ---------------------------------------------------------------------------
// Observables

double observable_atom_excitation(const LadderDensityMatrix& rho) {
  const auto& basis = rho.basis();
  double sum = 0.0;
  // |e,n-1> = cos t |+,n> - sin t |-,n>
  for (int n = 1; n <= basis.n_max(); ++n) {
    const double s = basis.sin_t(n), c = basis.cos_t(n);
    const auto plus = DressedLevel::plus(n), minus = DressedLevel::minus(n);
    sum += c * c * rho.pop(plus) + s * s * rho.pop(minus) - 2.0 * s * c * rho.element(plus, minus).real();
  }
  return sum;
}

double observable_photon_number(const LadderDensityMatrix& rho) {
  // a^dagger a = n on sector n minus the excited-atom projector.
  double sum = 0.0;
  for (int n = 1; n <= rho.basis().n_max(); ++n) {
    sum += n * (rho.pop(DressedLevel::plus(n)) + rho.pop(DressedLevel::minus(n)));
  }
  return sum - observable_atom_excitation(rho);
}

Complex observable_dipole(const LadderDensityMatrix& rho) {
  Complex sum{};
  for (const auto& c : sigma_coupling_table(rho.basis())) {
    sum += c.amplitude * rho.element(c.from, c.to);
  }
  return sum;
}

LadderOperator apply_sigma(const LadderDensityMatrix& rho) {
  const int dim = rho.basis().dimension();
  // Nonzero entries of each row of rho.
  std::vector<std::vector<std::pair<int, Complex>>> rows(dim);
  for (int i = 0; i < dim; ++i) {
    if (rho.populations()[i] != 0.0) rows[i].emplace_back(i, rho.populations()[i]);
  }
  for (const auto& [key, value] : rho.coherences()) {
    rows[key.first].emplace_back(key.second, value);
    rows[key.second].emplace_back(key.first, std::conj(value));
  }
  LadderOperator out(rho.basis_ptr());
  for (const auto& c : sigma_coupling_table(rho.basis())) {
    if (c.amplitude == 0.0) continue;
    for (const auto& [col, value] : rows[c.from.index()]) {
      out.add(c.to.index(), col, c.amplitude * value);
    }
  }
  return out;
}

Complex trace_sigma_dagger(const LadderOperator& op) {
  Complex sum{};
  for (const auto& c : sigma_coupling_table(op.basis())) {
    sum += c.amplitude * op.element(c.to.index(), c.from.index());
  }
  return sum;
}

}  // namespace dressed_rayleigh
