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

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dressed_rayleigh {

using Complex = std::complex<double>;
using BasisPtr = std::shared_ptr<const DressedBasis>;
/// (row, column) pair of dense level indices.
using IndexPair = std::pair<int, int>;

/// Hermitian density matrix over the dressed basis. Populations are stored
/// densely; coherences are stored once per unordered pair (row < column) and
/// the transposed element is served as the complex conjugate, so Hermiticity
/// holds by construction.
class LadderDensityMatrix {
 public:
  explicit LadderDensityMatrix(BasisPtr basis);

  const DressedBasis& basis() const noexcept { return *basis_; }
  const BasisPtr& basis_ptr() const noexcept { return basis_; }

  double pop(const DressedLevel& level) const { return pops_.at(level.index()); }
  void set_pop(const DressedLevel& level, double value);
  std::span<const double> populations() const noexcept { return pops_; }
  std::span<double> populations() noexcept { return pops_; }

  /// <row| rho |col>. Diagonal requests return the population.
  Complex element(const DressedLevel& row, const DressedLevel& col) const;
  Complex element(int row, int col) const;
  void set_element(const DressedLevel& row, const DressedLevel& col, Complex value);
  bool tracks(const DressedLevel& row, const DressedLevel& col) const;

  /// Stored coherences keyed by (row, col) with row < col.
  const std::map<IndexPair, Complex>& coherences() const noexcept { return coherences_; }
  std::map<IndexPair, Complex>& coherences() noexcept { return coherences_; }

  double trace() const;

  /// Factor by which a truncated initial state was rescaled to unit trace.
  double renormalization() const noexcept { return renormalization_; }
  void set_renormalization(double factor) noexcept { renormalization_ = factor; }

 private:
  BasisPtr basis_;
  std::vector<double> pops_;
  std::map<IndexPair, Complex> coherences_;
  double renormalization_ = 1.0;
};

/// General (not necessarily Hermitian) operator on the dressed ladder, used
/// for conditional states such as sigma rho in two-time averages.
class LadderOperator {
 public:
  explicit LadderOperator(BasisPtr basis);

  const DressedBasis& basis() const noexcept { return *basis_; }
  const BasisPtr& basis_ptr() const noexcept { return basis_; }

  Complex element(int row, int col) const;
  void add(int row, int col, Complex value);

  std::span<const Complex> diagonal() const noexcept { return diag_; }
  std::span<Complex> diagonal() noexcept { return diag_; }
  const std::map<IndexPair, Complex>& off_diagonal() const noexcept { return offdiag_; }
  std::map<IndexPair, Complex>& off_diagonal() noexcept { return offdiag_; }

 private:
  BasisPtr basis_;
  std::vector<Complex> diag_;
  std::map<IndexPair, Complex> offdiag_;
};

/// One "down" transition of the population rate system.
struct RateTransition {
  int from;
  int to;
  double rate;
};

struct GeneratorOptions {
  /// Levels in sectors below this index get no outgoing transitions; used to
  /// retain a single emission step. 0 keeps the full cascade.
  int lossless_below_sector = 0;
};

/// Tables of the dressed-basis Lindblad generator. Populations obey a closed
/// linear rate system; each coherence rho_ab evolves on its own as
/// exp(lambda_ab t) with lambda_ab = -i (omega_a - omega_b) - (G_a + G_b)/2.
class GeneratorTables {
 public:
  const DressedBasis& basis() const noexcept { return *basis_; }
  const BasisPtr& basis_ptr() const noexcept { return basis_; }

  std::span<const RateTransition> transitions() const noexcept { return transitions_; }
  /// Total loss rate of each level (dense index).
  std::span<const double> loss() const noexcept { return loss_; }

  /// Dense population generator M with dp/dt = M p.
  Eigen::MatrixXd rate_matrix() const;

  /// Rates of the tracked coherence families: same-sector, adjacent-sector
  /// and ground pairs, for both orderings.
  const std::map<IndexPair, Complex>& offdiag_rates() const noexcept { return offdiag_rates_; }

  /// lambda_ab for an arbitrary pair a != b.
  Complex coherence_rate(int row, int col) const;

  /// dp/dt for the population block.
  void apply_rates(const std::vector<double>& p, std::vector<double>& dpdt) const;

 private:
  friend GeneratorTables build_generator(BasisPtr basis, const GeneratorOptions& options);

  BasisPtr basis_;
  std::vector<RateTransition> transitions_;
  std::vector<double> loss_;
  std::vector<double> omega_;
  std::map<IndexPair, Complex> offdiag_rates_;
};

GeneratorTables build_generator(BasisPtr basis, const GeneratorOptions& options = {});

/// |g,n0><g,n0| expressed in the dressed basis.
LadderDensityMatrix fock_initial_state(BasisPtr basis, int n0);

/// |g,alpha><g,alpha| restricted to the tracked coherence families, truncated
/// at n_max and rescaled to unit trace. Requires |a|^2 + 6|a| + 10 <= n_max.
LadderDensityMatrix coherent_initial_state(BasisPtr basis, Complex alpha);

/// Evolves populations with the adaptive integrator and every stored
/// coherence with its exact exponential. `t_grid` must start at 0.
std::vector<LadderDensityMatrix> evolve(const GeneratorTables& gen, const LadderDensityMatrix& rho0,
                                        std::span<const double> t_grid, const Tolerances& tol = {});

std::vector<LadderOperator> evolve(const GeneratorTables& gen, const LadderOperator& op0,
                                   std::span<const double> t_grid, const Tolerances& tol = {});

/// Streaming variant: the visitor sees each state once and may discard it.
void evolve_visit(const GeneratorTables& gen, const LadderOperator& op0, std::span<const double> t_grid,
                  const Tolerances& tol, const std::function<void(std::size_t, const LadderOperator&)>& visit);

/// <sigma^dagger sigma>, the excited-state probability of the atom.
double observable_atom_excitation(const LadderDensityMatrix& rho);

/// <a^dagger a>.
double observable_photon_number(const LadderDensityMatrix& rho);

/// <sigma> = Tr(sigma rho).
Complex observable_dipole(const LadderDensityMatrix& rho);

/// sigma rho as a ladder operator.
LadderOperator apply_sigma(const LadderDensityMatrix& rho);

/// Tr(sigma^dagger X).
Complex trace_sigma_dagger(const LadderOperator& op);

}  // namespace dressed_rayleigh
