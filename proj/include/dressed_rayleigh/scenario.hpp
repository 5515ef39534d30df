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

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dressed_rayleigh {

enum class ScenarioKind { kSinglePhoton, kPlaczek, kCascade, kCoherent };

/// Config spelling: single_photon, placzek, cascade, coherent.
std::string_view scenario_name(ScenarioKind kind);

struct RunConfig {
  SystemParams params;
  ScenarioKind scenario = ScenarioKind::kSinglePhoton;
  /// Initial Fock number; 1 for the single-photon scenario, unused for coherent.
  int n0 = 1;
  std::complex<double> alpha{};
  int n_max = 0;
  double t_max = 0.0;
  int t_points = 0;
  /// Correlator anchor time; empty selects it from the trajectory.
  std::optional<double> t_anchor;
  double tau_max = 0.0;
  int tau_points = 0;
  double omega_lo = 0.0;
  double omega_hi = 0.0;
  int omega_points = 0;
  Tolerances tol;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;

  /// Throws kConfigValidation naming the offending field.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

/// Parses the flat `key = value` format. `#` starts a comment anywhere on a
/// line. Unknown or repeated keys are errors; missing optional keys receive
/// scenario-derived defaults (see README). Throws kConfigParse with a
/// line/column position or kConfigValidation naming the field.
RunConfig parse_config(std::string_view text);

/// Reads and parses a config file; kIo when it cannot be read.
RunConfig load_config(const std::filesystem::path& path);

/// Writes every key explicitly so that parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& cfg);

/// Artifact file names inside output_dir.
inline constexpr std::string_view kTrajectoryFile = "trajectory.csv";
inline constexpr std::string_view kCorrelatorFile = "correlator.csv";
inline constexpr std::string_view kSpectrumFile = "spectrum.csv";
inline constexpr std::string_view kReportFile = "report.json";
inline constexpr std::string_view kLadderFile = "ladder.csv";

/// Replaces `path` with `contents` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// `%.17g` rendering shared by every artifact.
std::string format_number(double value);

struct RunResult {
  std::vector<std::filesystem::path> artifacts;
  double t_anchor = 0.0;
  /// "config", "stationary" or "transient".
  std::string anchor_source;
};

/// Evolves the configured scenario, computes the anchored correlator and its
/// spectrum and writes the four artifacts into output_dir.
RunResult run_scenario(const RunConfig& cfg);

struct RabiTransient {
  double expected_frequency = 0.0;
  double peak_frequency = 0.0;
  /// DFT bin width 2 pi / (N dt).
  double bin = 0.0;
  /// Decay rate of the oscillation envelope; empty with fewer than three
  /// complete oscillation periods in the series.
  std::optional<double> envelope_rate;
  int periods = 0;
};

/// Spectral peak of a uniformly sampled series after removing its linear
/// trend, and the decay rate of the oscillation amplitude from per-period
/// least-squares fits at `expected_frequency`.
RabiTransient analyze_rabi_transient(std::span<const double> t, std::span<const double> values,
                                     double expected_frequency);

/// Generalized Rabi frequency 2 sqrt(rabi^2 n + (detuning/2)^2).
double rabi_frequency(const SystemParams& params, int n);

struct ComparisonRow {
  std::string quantity;
  double analytic = 0.0;
  double numeric = 0.0;
  /// |numeric - analytic| / |analytic| (absolute difference when analytic is 0).
  double rel_dev = 0.0;
  /// The pass rule, e.g. "rel<=0.05", "abs<=1e-12" or "sup_rel<=0.02".
  std::string criterion;
  bool pass = false;
};

/// Rebuilds the analytic-vs-numeric table from the artifacts of a previous
/// run. Throws kMissingArtifact when an artifact is absent or empty.
std::vector<ComparisonRow> compare_report(const RunConfig& cfg);

/// CSV rendering: quantity,analytic,numeric,rel_dev,threshold,pass.
std::string format_comparison(std::span<const ComparisonRow> rows);

/// n,phi_n,omega_plus,omega_minus,gamma_n for n = 1..n_max.
std::string ladder_csv(const SystemParams& params, int n_max);

}  // namespace dressed_rayleigh
