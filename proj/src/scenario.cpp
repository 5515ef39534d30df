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

#include "dressed_rayleigh/scenario.hpp"

#include "dressed_rayleigh/cascade.hpp"
#include "dressed_rayleigh/coherent.hpp"
#include "dressed_rayleigh/correlation_spectrum.hpp"
#include "dressed_rayleigh/errors.hpp"
#include "dressed_rayleigh/lindblad.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace dressed_rayleigh {
namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Comparison thresholds.
constexpr double kPlateauTolerance = 0.05;
constexpr double kSinglePhotonTolerance = 0.02;
constexpr double kCascadeSupTolerance = 1e-8;
constexpr double kHwhmTolerance = 0.10;
constexpr double kNarrowLineBound = 0.05;
constexpr double kDipoleAmplitudeTolerance = 0.05;
constexpr double kDipoleLinewidthTolerance = 0.10;
constexpr double kFockDipoleBound = 1e-12;
constexpr double kTraceDriftBound = 1e-9;
constexpr double kPositivityBound = 1e-9;
constexpr double kColumnSumBound = 1e-14;

// Default grids.
constexpr int kDefaultOmegaPoints = 801;
constexpr int kMinGridPoints = 2001;
constexpr int kMaxTrajectoryPoints = 200001;
constexpr int kMaxLagPoints = 400001;
constexpr double kDefaultWindowHalfWidths = 10.0;
constexpr double kDefaultLagDecays = 10.0;
constexpr double kSamplesPerRabiPeriod = 32.0;
constexpr double kLagStepPerCarrier = 0.2;
constexpr double kTransientDecays = 20.0;
constexpr double kRabiWindow = 3.0;
constexpr double kDipoleWindowStart = 10.0;
constexpr double kDipoleWindowEnd = 0.1;
constexpr std::string_view kDefaultOutputDir = "dressed_rayleigh_out";

[[noreturn]] void invalid_field(std::string_view field, std::string_view what) {
  throw Error(ErrorKind::kConfigValidation, fmt::format("field '{}': {}", field, what));
}

double coupling_ratio_sq(const SystemParams& p) {
  const double r = p.rabi / p.detuning();
  return r * r;
}

/// Sector used for Rabi and coupling-ratio quantities.
int reference_sector(const RunConfig& cfg) {
  if (cfg.scenario == ScenarioKind::kCoherent) return std::max(1, static_cast<int>(std::lround(std::norm(cfg.alpha))));
  return cfg.n0;
}

/// Analytic half width of the emission line and the natural trajectory horizon.
struct ScenarioScales {
  double hwhm = 0.0;
  double horizon = 0.0;
};

ScenarioScales scenario_scales(const RunConfig& cfg) {
  const SystemParams& p = cfg.params;
  const double k = p.gamma0 * coupling_ratio_sq(p);
  switch (cfg.scenario) {
    case ScenarioKind::kSinglePhoton: return {0.5 * k, 5.0 / k};
    case ScenarioKind::kPlaczek: return {0.5 * k * cfg.n0, 5.0 / (k * cfg.n0)};
    case ScenarioKind::kCascade: {
      const double g = k * cfg.n0;
      return {g, std::min(4.0, 0.1 * cfg.n0) / g};
    }
    case ScenarioKind::kCoherent: {
      const double a2 = std::max(1.0, std::norm(cfg.alpha));
      return {k * a2, kDipoleWindowEnd / (k * a2)};
    }
  }
  return {};
}

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> out(points);
  for (int i = 0; i < points; ++i) out[i] = lo + (hi - lo) * i / (points - 1);
  out.back() = hi;
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct RawValue {
  std::string text;
  int line = 0;
  int column = 0;
};

[[noreturn]] void parse_failure(const RawValue& v, std::string_view what) {
  throw Error(ErrorKind::kConfigParse, fmt::format("line {}, column {}: {}", v.line, v.column, what));
}

double to_double(const RawValue& v, std::string_view key) {
  double out = 0.0;
  const char* first = v.text.data();
  const char* last = first + v.text.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) parse_failure(v, fmt::format("'{}' expects a number, got '{}'", key, v.text));
  return out;
}

template <typename Int>
Int to_integer(const RawValue& v, std::string_view key) {
  Int out = 0;
  const char* first = v.text.data();
  const char* last = first + v.text.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) parse_failure(v, fmt::format("'{}' expects an integer, got '{}'", key, v.text));
  return out;
}

const std::vector<std::string_view>& known_keys() {
  static const std::vector<std::string_view> keys = {
      "omega_sm", "omega_tls",  "rabi",     "gamma0",   "scenario",  "n0",         "alpha_re",
      "alpha_im", "n_max",      "t_max",    "t_points", "t_anchor",  "tau_max",    "tau_points",
      "omega_lo", "omega_hi",   "omega_points", "rel_tol", "abs_tol", "output_dir", "seed"};
  return keys;
}

std::map<std::string, RawValue> tokenize(std::string_view text) {
  std::map<std::string, RawValue> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      parse_failure({"", line_no, static_cast<int>(first) + 1}, "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || !std::all_of(key.begin(), key.end(), [](char c) {
          return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
        })) {
      parse_failure({"", line_no, static_cast<int>(first) + 1}, fmt::format("invalid key '{}'", key));
    }
    if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end()) {
      parse_failure({"", line_no, static_cast<int>(first) + 1}, fmt::format("unknown key '{}'", key));
    }
    const std::string_view rest = line.substr(eq + 1);
    const auto vstart = rest.find_first_not_of(" \t\r");
    const int vcol = static_cast<int>(eq + 1 + (vstart == std::string_view::npos ? rest.size() : vstart)) + 1;
    RawValue value{trim(rest), line_no, vcol};
    if (value.text.empty()) parse_failure(value, fmt::format("missing value for '{}'", key));
    if (out.count(key)) parse_failure({"", line_no, static_cast<int>(first) + 1}, fmt::format("duplicate key '{}'", key));
    out.emplace(key, std::move(value));
  }
  return out;
}

ScenarioKind to_scenario(const RawValue& v) {
  for (auto kind : {ScenarioKind::kSinglePhoton, ScenarioKind::kPlaczek, ScenarioKind::kCascade,
                    ScenarioKind::kCoherent}) {
    if (v.text == scenario_name(kind)) return kind;
  }
  parse_failure(v, fmt::format("unknown scenario '{}' (single_photon, placzek, cascade, coherent)", v.text));
}

bool is_fock(ScenarioKind kind) { return kind != ScenarioKind::kCoherent; }

}  // namespace

std::string_view scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kSinglePhoton: return "single_photon";
    case ScenarioKind::kPlaczek: return "placzek";
    case ScenarioKind::kCascade: return "cascade";
    case ScenarioKind::kCoherent: return "coherent";
  }
  return "unknown";
}

std::string format_number(double value) { return fmt::format("{:.17g}", value); }

void RunConfig::validate() const {
  const auto finite_positive = [](std::string_view field, double v) {
    if (!std::isfinite(v) || !(v > 0.0)) invalid_field(field, "must be finite and > 0");
  };
  finite_positive("omega_sm", params.omega_sm);
  finite_positive("omega_tls", params.omega_tls);
  if (!std::isfinite(params.rabi) || params.rabi < 0.0) invalid_field("rabi", "must be finite and >= 0");
  if (!std::isfinite(params.gamma0) || params.gamma0 < 0.0) invalid_field("gamma0", "must be finite and >= 0");
  if (params.detuning() == 0.0) invalid_field("omega_tls", "equals omega_sm; scenarios require nonzero detuning");
  if (n0 < 1) invalid_field("n0", "must be >= 1");
  if (scenario == ScenarioKind::kSinglePhoton && n0 != 1) invalid_field("n0", "must be 1 for single_photon");
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) invalid_field("alpha_re", "must be finite");
  if (is_fock(scenario)) {
    if (alpha != std::complex<double>{}) invalid_field("alpha_re", "applies to the coherent scenario only");
    if (n_max < n0) invalid_field("n_max", "must be >= n0");
  } else {
    if (n0 != 1) invalid_field("n0", "does not apply to the coherent scenario");
    const double a = std::abs(alpha);
    if (n_max < a * a + 6.0 * a + 10.0) invalid_field("n_max", "must be >= |alpha|^2 + 6|alpha| + 10");
    if (coupling_ratio_sq(params) * a * a > kCoherentHardLimit) {
      invalid_field("alpha_re", "rabi^2 |alpha|^2 / detuning^2 exceeds 0.5");
    }
  }
  finite_positive("t_max", t_max);
  if (t_points < 2) invalid_field("t_points", "must be >= 2");
  if (t_anchor && (!std::isfinite(*t_anchor) || *t_anchor < 0.0 || *t_anchor > t_max)) {
    invalid_field("t_anchor", "must lie in [0, t_max]");
  }
  finite_positive("tau_max", tau_max);
  if (tau_points < 2) invalid_field("tau_points", "must be >= 2");
  if (!std::isfinite(omega_lo) || !std::isfinite(omega_hi) || !(omega_lo < params.omega_sm) ||
      !(params.omega_sm < omega_hi)) {
    invalid_field("omega_lo", "window [omega_lo, omega_hi] must contain omega_sm");
  }
  if (omega_points < 2) invalid_field("omega_points", "must be >= 2");
  if (!(tol.rel > 0.0 && tol.rel <= 1e-2)) invalid_field("rel_tol", "must lie in (0, 1e-2]");
  if (!(tol.abs > 0.0 && tol.abs <= 1e-2)) invalid_field("abs_tol", "must lie in (0, 1e-2]");
  if (output_dir.empty()) invalid_field("output_dir", "must not be empty");
}

RunConfig parse_config(std::string_view text) {
  auto raw = tokenize(text);
  std::vector<std::string> missing;
  for (std::string_view key : {"omega_sm", "omega_tls", "rabi", "gamma0", "scenario"}) {
    if (!raw.count(std::string(key))) missing.emplace_back(key);
  }
  if (raw.count("scenario")) {
    const auto kind = to_scenario(raw.at("scenario"));
    if ((kind == ScenarioKind::kPlaczek || kind == ScenarioKind::kCascade) && !raw.count("n0")) missing.push_back("n0");
    if (kind == ScenarioKind::kCoherent && !raw.count("alpha_re")) missing.push_back("alpha_re");
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorKind::kConfigValidation, "missing required keys: " + list);
  }

  const auto num = [&](const char* key) { return to_double(raw.at(key), key); };
  const auto has = [&](const char* key) { return raw.count(key) > 0; };

  RunConfig cfg;
  cfg.params = {num("omega_sm"), num("omega_tls"), num("rabi"), num("gamma0")};
  cfg.scenario = to_scenario(raw.at("scenario"));
  if (has("n0")) cfg.n0 = to_integer<int>(raw.at("n0"), "n0");
  if (has("alpha_re") || has("alpha_im")) {
    if (is_fock(cfg.scenario)) invalid_field(has("alpha_re") ? "alpha_re" : "alpha_im", "applies to the coherent scenario only");
    cfg.alpha = {num("alpha_re"), has("alpha_im") ? num("alpha_im") : 0.0};
  }
  if (cfg.scenario == ScenarioKind::kCoherent && has("n0")) invalid_field("n0", "does not apply to the coherent scenario");
  if (cfg.params.detuning() == 0.0) invalid_field("omega_tls", "equals omega_sm; scenarios require nonzero detuning");
  if (!is_fock(cfg.scenario) && coupling_ratio_sq(cfg.params) * std::norm(cfg.alpha) > kCoherentHardLimit) {
    invalid_field("alpha_re", "rabi^2 |alpha|^2 / detuning^2 exceeds 0.5");
  }

  cfg.n_max = has("n_max") ? to_integer<int>(raw.at("n_max"), "n_max")
                           : (is_fock(cfg.scenario) ? suggested_n_max_fock(cfg.n0) : suggested_n_max_coherent(cfg.alpha));

  const ScenarioScales scales = scenario_scales(cfg);
  const auto derived = [&](const char* key, double value, const char* needs, bool positive = true) {
    if (has(key)) return num(key);
    if (!std::isfinite(value) || (positive && !(value > 0.0))) {
      invalid_field(key, fmt::format("no default when {}; set it explicitly", needs));
    }
    return value;
  };
  const char* rate_note = "the analytic decay rate vanishes";
  cfg.t_max = derived("t_max", scales.horizon, rate_note);
  if (has("t_points")) {
    cfg.t_points = to_integer<int>(raw.at("t_points"), "t_points");
  } else {
    const double period = 2.0 * std::numbers::pi / rabi_frequency(cfg.params, reference_sector(cfg));
    const double wanted = std::ceil(cfg.t_max * kSamplesPerRabiPeriod / period) + 1.0;
    cfg.t_points = static_cast<int>(std::clamp<double>(wanted, kMinGridPoints, kMaxTrajectoryPoints));
  }
  if (has("t_anchor") && raw.at("t_anchor").text != "auto") cfg.t_anchor = num("t_anchor");
  cfg.tau_max = derived("tau_max", kDefaultLagDecays / scales.hwhm, rate_note);
  if (has("tau_points")) {
    cfg.tau_points = to_integer<int>(raw.at("tau_points"), "tau_points");
  } else {
    const double wanted = std::ceil(cfg.tau_max * cfg.params.omega_sm / kLagStepPerCarrier) + 1.0;
    cfg.tau_points = static_cast<int>(std::clamp<double>(wanted, kMinGridPoints, kMaxLagPoints));
  }
  const double half_window = scales.hwhm > 0.0 ? kDefaultWindowHalfWidths * scales.hwhm : std::nan("");
  cfg.omega_lo = derived("omega_lo", cfg.params.omega_sm - half_window, rate_note, false);
  cfg.omega_hi = derived("omega_hi", cfg.params.omega_sm + half_window, rate_note, false);
  cfg.omega_points = has("omega_points") ? to_integer<int>(raw.at("omega_points"), "omega_points") : kDefaultOmegaPoints;
  if (has("rel_tol")) cfg.tol.rel = num("rel_tol");
  if (has("abs_tol")) cfg.tol.abs = num("abs_tol");
  cfg.output_dir = has("output_dir") ? fs::path(raw.at("output_dir").text) : fs::path(kDefaultOutputDir);
  if (has("seed")) cfg.seed = to_integer<std::uint64_t>(raw.at("seed"), "seed");
  cfg.validate();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  const auto put = [&](std::string_view key, const std::string& value) { out += fmt::format("{} = {}\n", key, value); };
  put("scenario", std::string(scenario_name(cfg.scenario)));
  put("omega_sm", format_number(cfg.params.omega_sm));
  put("omega_tls", format_number(cfg.params.omega_tls));
  put("rabi", format_number(cfg.params.rabi));
  put("gamma0", format_number(cfg.params.gamma0));
  if (cfg.scenario == ScenarioKind::kPlaczek || cfg.scenario == ScenarioKind::kCascade) put("n0", std::to_string(cfg.n0));
  if (cfg.scenario == ScenarioKind::kCoherent) {
    put("alpha_re", format_number(cfg.alpha.real()));
    put("alpha_im", format_number(cfg.alpha.imag()));
  }
  put("n_max", std::to_string(cfg.n_max));
  put("t_max", format_number(cfg.t_max));
  put("t_points", std::to_string(cfg.t_points));
  put("t_anchor", cfg.t_anchor ? format_number(*cfg.t_anchor) : std::string("auto"));
  put("tau_max", format_number(cfg.tau_max));
  put("tau_points", std::to_string(cfg.tau_points));
  put("omega_lo", format_number(cfg.omega_lo));
  put("omega_hi", format_number(cfg.omega_hi));
  put("omega_points", std::to_string(cfg.omega_points));
  put("rel_tol", format_number(cfg.tol.rel));
  put("abs_tol", format_number(cfg.tol.abs));
  put("output_dir", cfg.output_dir.string());
  put("seed", std::to_string(cfg.seed));
  return out;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += fmt::format(".tmp.{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw Error(ErrorKind::kIo, "write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw Error(ErrorKind::kIo, "cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

double rabi_frequency(const SystemParams& params, int n) {
  return 2.0 * std::hypot(params.rabi * std::sqrt(static_cast<double>(n)), 0.5 * params.detuning());
}

RabiTransient analyze_rabi_transient(std::span<const double> t, std::span<const double> values,
                                     double expected_frequency) {
  const std::size_t n = t.size();
  if (n != values.size() || n < 4) throw Error(ErrorKind::kInvalidArgument, "analyze_rabi_transient: need >= 4 samples");
  if (!(expected_frequency > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "analyze_rabi_transient: expected frequency must be positive");
  }
  const double span = t.back() - t.front();
  const double dt = span / (n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(t[i] - (t.front() + i * dt)) > 1e-9 * span) {
      throw Error(ErrorKind::kInvalidArgument, "analyze_rabi_transient: samples must be uniform");
    }
  }

  // Linear detrend, then the largest DFT magnitude above zero frequency.
  const double tm = t.front() + 0.5 * span;
  double sv = 0.0, stv = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sv += values[i];
    stv += (t[i] - tm) * values[i];
    stt += (t[i] - tm) * (t[i] - tm);
  }
  const double mean = sv / n, slope = stv / stt;
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = values[i] - mean - slope * (t[i] - tm);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> bins;
  fft.fwd(bins, centered);

  RabiTransient out;
  out.expected_frequency = expected_frequency;
  out.bin = 2.0 * std::numbers::pi / (n * dt);
  std::size_t best = 1;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    if (std::abs(bins[k]) > std::abs(bins[best])) best = k;
  }
  out.peak_frequency = best * out.bin;

  // Per-period fits of c0 + c1 u + c2 u^2 + a cos(w u P) + b sin(w u P), u = (t - t_c) / P.
  const double period = 2.0 * std::numbers::pi / expected_frequency;
  std::vector<double> centers, log_amp;
  std::size_t i = 0;
  for (double start = t.front(); start + period <= t.back() + 1e-12 * period; start += period) {
    const double end = start + period, tc = start + 0.5 * period;
    std::vector<std::size_t> idx;
    for (; i < n && t[i] < end; ++i) {
      if (t[i] >= start) idx.push_back(i);
    }
    if (idx.size() < 8) continue;
    Eigen::MatrixXd a(idx.size(), 5);
    Eigen::VectorXd b(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const double u = (t[idx[r]] - tc) / period;
      const double phase = expected_frequency * period * u;
      a.row(r) << 1.0, u, u * u, std::cos(phase), std::sin(phase);
      b(r) = values[idx[r]];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    const double amp = std::hypot(c(3), c(4));
    if (amp > 0.0 && std::isfinite(amp)) {
      centers.push_back(tc);
      log_amp.push_back(std::log(amp));
    }
  }
  out.periods = static_cast<int>(centers.size());
  if (centers.size() >= 3) {
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      mx += centers[k];
      my += log_amp[k];
    }
    mx /= centers.size();
    my /= centers.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      sxy += (centers[k] - mx) * (log_amp[k] - my);
      sxx += (centers[k] - mx) * (centers[k] - mx);
    }
    out.envelope_rate = -sxy / sxx;
  }
  return out;
}

namespace {

struct DipoleFit {
  double amplitude = kNaN;
  double rate = kNaN;
  double lo = 0.0;
  double hi = 0.0;
  /// Largest |(|<sigma>| - reference)| / reference over the window.
  double worst_deviation = kNaN;
  double worst_value = kNaN;
  int samples = 0;
};

/// Least squares ln|d| = ln A - rate t over the quasistationary window.
DipoleFit fit_dipole(const RunConfig& cfg, std::span<const double> t, std::span<const double> re,
                     std::span<const double> im) {
  DipoleFit fit;
  const double k = cfg.params.gamma0 * coupling_ratio_sq(cfg.params);
  const double a2 = std::norm(cfg.alpha);
  fit.lo = cfg.params.gamma0 > 0.0 ? kDipoleWindowStart / cfg.params.gamma0 : 0.0;
  fit.hi = std::min(cfg.t_max, k * a2 > 0.0 ? kDipoleWindowEnd / (k * a2) : cfg.t_max);
  const double reference = cfg.params.rabi * std::sqrt(a2) / std::abs(cfg.params.detuning());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  double worst = -1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < fit.lo || t[i] > fit.hi) continue;
    const double mod = std::hypot(re[i], im[i]);
    if (!(mod > 0.0)) continue;
    const double y = std::log(mod);
    sx += t[i];
    sy += y;
    sxx += t[i] * t[i];
    sxy += t[i] * y;
    ++fit.samples;
    const double dev = std::abs(mod - reference) / reference;
    if (dev > worst) {
      worst = dev;
      fit.worst_value = mod;
    }
  }
  if (worst >= 0.0) fit.worst_deviation = worst;
  if (fit.samples >= 2) {
    const double m = fit.samples;
    const double denom = m * sxx - sx * sx;
    if (denom > 0.0) {
      const double slope = (m * sxy - sx * sy) / denom;
      fit.rate = -slope;
      fit.amplitude = std::exp((sy - slope * sx) / m);
    }
  }
  return fit;
}

void append_csv_row(std::string& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    out += format_number(v);
    first = false;
  }
  out += '\n';
}

std::size_t first_index_at_or_after(std::span<const double> t, double value) {
  const auto it = std::lower_bound(t.begin(), t.end(), value - 1e-12 * std::max(1.0, std::abs(value)));
  return it == t.end() ? t.size() - 1 : static_cast<std::size_t>(it - t.begin());
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double relative(double numeric, double analytic) {
  return analytic != 0.0 ? std::abs(numeric - analytic) / std::abs(analytic) : std::abs(numeric - analytic);
}

}  // namespace

RunResult run_scenario(const RunConfig& cfg) {
  cfg.validate();
  const SystemParams& p = cfg.params;
  auto basis = std::make_shared<const DressedBasis>(p, cfg.n_max);
  GeneratorOptions options;
  TransitionWindow window;
  if (cfg.scenario == ScenarioKind::kPlaczek) {
    options.lossless_below_sector = cfg.n0;
    window = {cfg.n0, cfg.n0};
  }
  const GeneratorTables gen = build_generator(basis, options);
  const LadderDensityMatrix rho0 =
      is_fock(cfg.scenario) ? fock_initial_state(basis, cfg.n0) : coherent_initial_state(basis, cfg.alpha);

  const std::vector<double> t = linspace(0.0, cfg.t_max, cfg.t_points);
  const std::vector<LadderDensityMatrix> states = evolve(gen, rho0, t, cfg.tol);

  std::vector<double> p_exc(t.size()), n_ph(t.size()), d_re(t.size()), d_im(t.size());
  double trace_drift = 0.0, min_pop = std::numeric_limits<double>::infinity(), top_sector = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& rho = states[i];
    p_exc[i] = observable_atom_excitation(rho);
    n_ph[i] = observable_photon_number(rho);
    const Complex d = observable_dipole(rho);
    d_re[i] = d.real();
    d_im[i] = d.imag();
    trace_drift = std::max(trace_drift, std::abs(rho.trace() - rho0.trace()));
    for (double v : rho.populations()) min_pop = std::min(min_pop, v);
    top_sector = std::max(top_sector, rho.pop(DressedLevel::plus(cfg.n_max)) + rho.pop(DressedLevel::minus(cfg.n_max)));
  }
  const Eigen::MatrixXd rates = gen.rate_matrix();
  const double column_sum = rates.colwise().sum().cwiseAbs().maxCoeff();

  // Correlator anchor.
  RunResult result;
  std::size_t anchor = 0;
  if (cfg.t_anchor) {
    anchor = first_index_at_or_after(t, *cfg.t_anchor);
    result.anchor_source = "config";
  } else {
    const double dt = t[1] - t[0];
    const double period = 2.0 * std::numbers::pi / rabi_frequency(p, reference_sector(cfg));
    const auto found = stationary_anchor(t, p_exc, std::max(period, 8.0 * dt), p.gamma0);
    if (found) {
      anchor = first_index_at_or_after(t, *found);
      result.anchor_source = "stationary";
    } else {
      anchor = first_index_at_or_after(t, p.gamma0 > 0.0 ? std::min(cfg.t_max, kTransientDecays / p.gamma0) : 0.0);
      result.anchor_source = "transient";
    }
  }
  result.t_anchor = t[anchor];

  const std::vector<double> tau = linspace(0.0, cfg.tau_max, cfg.tau_points);
  const CorrelationSeries corr = correlator_regression(gen, states[anchor], result.t_anchor, tau, cfg.tol, window);
  const std::vector<double> omega = linspace(cfg.omega_lo, cfg.omega_hi, cfg.omega_points);
  SpectrumSeries spec = spectrum_from_correlator(corr, omega, 1.0, default_thread_count());
  std::string fit_error;
  try {
    spec.fit = lorentzian_fit(spec);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kFit) throw;
    fit_error = e.what();
  }

  // Artifacts.
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create '" + cfg.output_dir.string() + "': " + ec.message());

  std::string traj = "t,p_excited,n_photons,re_dipole,im_dipole\n";
  for (std::size_t i = 0; i < t.size(); ++i) append_csv_row(traj, {t[i], p_exc[i], n_ph[i], d_re[i], d_im[i]});
  std::string corr_csv = "tau,re_corr,im_corr\n";
  for (std::size_t i = 0; i < tau.size(); ++i) append_csv_row(corr_csv, {tau[i], corr.values[i].real(), corr.values[i].imag()});
  std::string spec_csv = "omega,intensity\n";
  for (std::size_t i = 0; i < omega.size(); ++i) append_csv_row(spec_csv, {omega[i], spec.intensity[i]});

  // Report.
  const int n_ref = reference_sector(cfg);
  const double ratio_sq = coupling_ratio_sq(p);
  const ScenarioScales scales = scenario_scales(cfg);
  Json report;
  report["scenario"] = std::string(scenario_name(cfg.scenario));
  report["config"] = serialize_config(cfg);
  report["dimensionless"] = {
      {"coupling_ratio", p.rabi * std::sqrt(static_cast<double>(n_ref)) / std::abs(p.detuning())},
      {"coupling_ratio_single_photon", p.rabi / std::abs(p.detuning())},
      {"gamma_eff_over_gamma0", ratio_sq * n_ref},
  };
  const LargeDetuningFrequencies ld = large_detuning_frequencies(p, n_ref);
  Json regime = {{"large_detuning_reliable", ld.reliable}, {"small_parameter", ld.small_parameter}};
  if (cfg.scenario == ScenarioKind::kCascade) {
    const double mu_end = p.gamma0 * ratio_sq * cfg.n0 * cfg.t_max;
    regime["poisson_valid"] = mu_end / cfg.n0 <= kPoissonValidityLimit;
  }
  Json analytic = {{"rabi_frequency", rabi_frequency(p, n_ref)},
                   {"center", p.omega_sm},
                   {"hwhm", number_or_null(scales.hwhm)},
                   {"center_tolerance", p.rabi * p.rabi * n_ref / std::abs(p.detuning())}};
  Json numeric = {{"correlator_tau0_real", corr.values.front().real()},
                  {"correlator_tau0_imag", corr.values.front().imag()}};
  Json deviation = Json::object();
  if (cfg.scenario == ScenarioKind::kCoherent) {
    const CoherentScenario sc{p, cfg.alpha, cfg.n_max};
    const double horizon = std::min(cfg.t_max, scales.horizon);
    regime["coherent_small_parameter"] = sc.small_parameter();
    regime["large_alpha"] = dipole_large_alpha(sc, 0.0).in_regime;
    regime["quasistationary"] = dipole_quasistationary(sc, horizon).in_regime;
    const DipoleFit fit = fit_dipole(cfg, t, d_re, d_im);
    const double amp = p.rabi * std::abs(cfg.alpha) / std::abs(p.detuning());
    const double width = p.gamma0 * ratio_sq * std::norm(cfg.alpha);
    analytic["dipole_amplitude"] = amp;
    analytic["dipole_linewidth"] = width;
    numeric["dipole_amplitude"] = number_or_null(fit.amplitude);
    numeric["dipole_linewidth"] = number_or_null(fit.rate);
    numeric["dipole_window"] = {fit.lo, fit.hi};
    numeric["dipole_window_samples"] = fit.samples;
    deviation["dipole_amplitude"] = number_or_null(relative(fit.amplitude, amp));
    deviation["dipole_linewidth"] = number_or_null(relative(fit.rate, width));
    deviation["dipole_window_worst"] = number_or_null(fit.worst_deviation);
  } else {
    AnalyticScenario which = scenario::SinglePhoton{};
    if (cfg.scenario == ScenarioKind::kPlaczek) which = scenario::Placzek{cfg.n0};
    if (cfg.scenario == ScenarioKind::kCascade) which = scenario::Cascade{cfg.n0};
    const Complex c0 = correlator_analytic(p, which, result.t_anchor, 0.0);
    analytic["correlator_tau0"] = c0.real();
    deviation["correlator_tau0"] = relative(corr.values.front().real(), c0.real());
    if (cfg.scenario == ScenarioKind::kCascade) analytic["plateau"] = ratio_sq * cfg.n0;
    double max_dipole = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) max_dipole = std::max(max_dipole, std::hypot(d_re[i], d_im[i]));
    numeric["max_abs_dipole"] = max_dipole;
  }
  if (spec.fit) {
    report["fit"] = {{"center", spec.fit->center},
                     {"hwhm", spec.fit->hwhm},
                     {"peak", spec.fit->peak},
                     {"residual", spec.fit->residual},
                     {"iterations", spec.fit->iterations}};
    deviation["center_abs"] = std::abs(spec.fit->center - p.omega_sm);
    deviation["hwhm"] = number_or_null(relative(spec.fit->hwhm, scales.hwhm));
  } else {
    report["fit"] = nullptr;
    report["fit_error"] = fit_error;
  }
  report["regime"] = regime;
  report["analytic"] = analytic;
  report["numeric"] = numeric;
  report["relative_deviation"] = deviation;
  report["anchor"] = {{"t", result.t_anchor}, {"source", result.anchor_source}};
  report["diagnostics"] = {
      {"n_max", cfg.n_max},
      {"renormalization", rho0.renormalization()},
      {"top_sector_population_max", top_sector},
      {"trace_drift_max", trace_drift},
      {"population_min", min_pop},
      {"rate_matrix_column_sum_max", column_sum},
      {"hermitian_by_construction", true},
      {"spectrum_truncated", spec.truncated},
      {"spectrum_tail_rate", spec.tail_rate},
      {"spectrum_tail_frequency", spec.tail_frequency},
      {"spectrum_clamped_bins", spec.clamped_bins},
      {"spectrum_mode_weight", spec.mode_weight},
      {"threads", default_thread_count()},
  };

  const fs::path dir = cfg.output_dir;
  for (const auto& [name, body] : {std::pair{kTrajectoryFile, std::string_view(traj)},
                                   std::pair{kCorrelatorFile, std::string_view(corr_csv)},
                                   std::pair{kSpectrumFile, std::string_view(spec_csv)}}) {
    write_file_atomic(dir / name, body);
    result.artifacts.push_back(dir / name);
  }
  write_file_atomic(dir / kReportFile, report.dump(2) + "\n");
  result.artifacts.push_back(dir / kReportFile);
  return result;
}

namespace {

struct Table {
  std::vector<std::vector<double>> columns;
};

std::string read_artifact(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingArtifact, "missing artifact '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (text.empty()) throw Error(ErrorKind::kMissingArtifact, "empty artifact '" + path.string() + "'");
  return text;
}

Table read_csv(const fs::path& path, std::string_view header) {
  const std::string text = read_artifact(path);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != header) {
    throw Error(ErrorKind::kMissingArtifact, fmt::format("'{}' has header '{}', expected '{}'", path.string(), line, header));
  }
  const std::size_t width = std::count(header.begin(), header.end(), ',') + 1;
  Table table;
  table.columns.resize(width);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t start = 0;
    for (std::size_t c = 0; c < width; ++c) {
      const auto comma = line.find(',', start);
      const std::string_view cell =
          std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || (c + 1 < width) == (comma == std::string::npos)) {
        throw Error(ErrorKind::kMissingArtifact, fmt::format("'{}' line {} is malformed", path.string(), line_no));
      }
      table.columns[c].push_back(v);
      start = comma + 1;
    }
  }
  if (table.columns.front().empty()) throw Error(ErrorKind::kMissingArtifact, "'" + path.string() + "' has no rows");
  return table;
}

ComparisonRow relative_row(std::string quantity, double analytic, double numeric, double tolerance) {
  const double dev = relative(numeric, analytic);
  return {std::move(quantity), analytic, numeric, dev, fmt::format("rel<={}", tolerance),
          std::isfinite(dev) && dev <= tolerance};
}

ComparisonRow absolute_row(std::string quantity, double analytic, double numeric, double bound) {
  const double dev = std::abs(numeric - analytic);
  return {std::move(quantity), analytic, numeric, relative(numeric, analytic), fmt::format("abs<={}", bound),
          std::isfinite(dev) && dev <= bound};
}

}  // namespace

std::vector<ComparisonRow> compare_report(const RunConfig& cfg) {
  cfg.validate();
  const fs::path dir = cfg.output_dir;
  const Table traj = read_csv(dir / kTrajectoryFile, "t,p_excited,n_photons,re_dipole,im_dipole");
  read_csv(dir / kCorrelatorFile, "tau,re_corr,im_corr");
  const Table spec = read_csv(dir / kSpectrumFile, "omega,intensity");
  Json report;
  try {
    report = Json::parse(read_artifact(dir / kReportFile));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kMissingArtifact, std::string("report is not valid JSON: ") + e.what());
  }

  const SystemParams& p = cfg.params;
  const auto& t = traj.columns[0];
  const auto& p_exc = traj.columns[1];
  const auto& n_ph = traj.columns[2];
  const auto& d_re = traj.columns[3];
  const auto& d_im = traj.columns[4];
  const double ratio_sq = coupling_ratio_sq(p);
  const ScenarioScales scales = scenario_scales(cfg);
  std::vector<ComparisonRow> rows;

  if (is_fock(cfg.scenario)) {
    // Rabi oscillation over the first 3 / gamma0.
    const double t_end = p.gamma0 > 0.0 ? std::min(cfg.t_max, kRabiWindow / p.gamma0) : cfg.t_max;
    const std::size_t count = std::upper_bound(t.begin(), t.end(), t_end * (1.0 + 1e-12)) - t.begin();
    const double expected = rabi_frequency(p, cfg.n0);
    if (count >= 4) {
      const auto rt = analyze_rabi_transient(std::span(t).first(count), std::span(p_exc).first(count), expected);
      rows.push_back(absolute_row("rabi_frequency", expected, rt.peak_frequency, rt.bin));
    } else {
      rows.push_back({"rabi_frequency", expected, kNaN, kNaN, "insufficient samples", false});
    }

    double max_dipole = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) max_dipole = std::max(max_dipole, std::hypot(d_re[i], d_im[i]));
    rows.push_back(absolute_row("fock_dipole_max", 0.0, max_dipole, kFockDipoleBound));
  }

  if (cfg.scenario == ScenarioKind::kSinglePhoton) {
    // Sector-one population p_excited + n_photons against exp(-gamma_1 t), sup norm over gamma_1 t <= 5.
    const double g1 = p.gamma0 * ratio_sq;
    double worst = 0.0, scale = 0.0, at_a = kNaN, at_n = kNaN;
    for (std::size_t i = 0; i < t.size() && g1 * t[i] <= 5.0 * (1.0 + 1e-12); ++i) {
      const double f = std::exp(-g1 * t[i]);
      const double v = p_exc[i] + n_ph[i];
      scale = std::max(scale, std::abs(f));
      if (std::abs(v - f) >= worst) {
        worst = std::abs(v - f);
        at_a = f;
        at_n = v;
      }
    }
    const double dev = scale > 0.0 ? worst / scale : kNaN;
    rows.push_back({"single_photon_decay", at_a, at_n, dev, fmt::format("sup_rel<={}", kSinglePhotonTolerance),
                    std::isfinite(dev) && dev <= kSinglePhotonTolerance});
  }

  if (cfg.scenario == ScenarioKind::kCascade) {
    const double g = p.gamma0 * ratio_sq * cfg.n0;
    // Closed form against the equal-rate ODE.
    std::vector<double> grid;
    const std::size_t stride = std::max<std::size_t>(1, t.size() / 200);
    for (std::size_t i = 0; i < t.size(); i += stride) grid.push_back(t[i]);
    if (grid.back() != t.back()) grid.push_back(t.back());
    const std::vector<double> equal_rates(cfg.n0 + 1, g);
    const auto ode = solve_cascade_ode(equal_rates, cfg.n0, grid, cfg.tol);
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const CascadeState closed = poisson_solution(g, cfg.n0, grid[i]);
      for (int k = 0; k <= cfg.n0; ++k) sup = std::max(sup, std::abs(closed.p[k] - ode[i].p[k]));
    }
    const CascadeState end = poisson_solution(g, cfg.n0, grid.back());
    rows.push_back({"cascade_distribution", end.mean(), ode.back().mean(), sup,
                    fmt::format("sup_abs<={}", kCascadeSupTolerance), sup <= kCascadeSupTolerance});

    // Plateau over gamma_eff t in [0.5, 4].
    const double plateau = ratio_sq * cfg.n0;
    double worst = -1.0, worst_value = kNaN;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double x = g * t[i];
      if (x < 0.5 || x > 4.0) continue;
      const double dev = std::abs(p_exc[i] - plateau) / plateau;
      if (dev > worst) {
        worst = dev;
        worst_value = p_exc[i];
      }
    }
    if (worst >= 0.0) {
      rows.push_back({"plateau_population", plateau, worst_value, worst, fmt::format("rel<={}", kPlateauTolerance),
                      worst <= kPlateauTolerance});
    } else {
      rows.push_back({"plateau_population", plateau, kNaN, kNaN, "no samples with gamma_eff t in [0.5, 4]", false});
    }
  }

  if (is_fock(cfg.scenario)) {
    const double bin = (cfg.omega_hi - cfg.omega_lo) / (cfg.omega_points - 1);
    const double shift = p.rabi * p.rabi * cfg.n0 / std::abs(p.detuning());
    std::optional<LorentzianFit> fit;
    try {
      fit = lorentzian_fit(spec.columns[0], spec.columns[1]);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kFit) throw;
    }
    const double center = fit ? fit->center : kNaN;
    const double hwhm = fit ? fit->hwhm : kNaN;
    rows.push_back(absolute_row("spectrum_center", p.omega_sm, center, shift + bin));
    rows.push_back(relative_row("spectrum_hwhm", scales.hwhm, hwhm, kHwhmTolerance));
    if (cfg.scenario == ScenarioKind::kCascade) {
      const double ratio = p.gamma0 > 0.0 ? hwhm / p.gamma0 : kNaN;
      rows.push_back({"hwhm_over_gamma0", ratio_sq * cfg.n0, ratio, relative(ratio, ratio_sq * cfg.n0),
                      fmt::format("value<={}", kNarrowLineBound), std::isfinite(ratio) && ratio <= kNarrowLineBound});
    }
  }

  if (cfg.scenario == ScenarioKind::kCoherent) {
    const DipoleFit fit = fit_dipole(cfg, t, d_re, d_im);
    const double amp = p.rabi * std::abs(cfg.alpha) / std::abs(p.detuning());
    const double width = p.gamma0 * ratio_sq * std::norm(cfg.alpha);
    rows.push_back(relative_row("dipole_amplitude", amp, fit.amplitude, kDipoleAmplitudeTolerance));
    rows.push_back(relative_row("dipole_linewidth", width, fit.rate, kDipoleLinewidthTolerance));
    rows.push_back({"dipole_window_modulus", amp, fit.worst_value, fit.worst_deviation,
                    fmt::format("rel<={}", kDipoleAmplitudeTolerance),
                    std::isfinite(fit.worst_deviation) && fit.worst_deviation <= kDipoleAmplitudeTolerance});
  }

  const auto diag = [&](const char* key) {
    const auto& d = report.at("diagnostics");
    if (!d.contains(key) || !d.at(key).is_number()) {
      throw Error(ErrorKind::kMissingArtifact, fmt::format("report lacks diagnostics.{}", key));
    }
    return d.at(key).get<double>();
  };
  try {
    rows.push_back(absolute_row("trace_drift", 0.0, diag("trace_drift_max"), kTraceDriftBound));
    const double min_pop = diag("population_min");
    rows.push_back({"population_min", 0.0, min_pop, std::max(0.0, -min_pop), fmt::format("value>=-{}", kPositivityBound),
                    min_pop >= -kPositivityBound});
    rows.push_back(absolute_row("rate_matrix_column_sum", 0.0, diag("rate_matrix_column_sum_max"), kColumnSumBound));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kMissingArtifact, std::string("report is incomplete: ") + e.what());
  }
  return rows;
}

std::string format_comparison(std::span<const ComparisonRow> rows) {
  std::string out = "quantity,analytic,numeric,rel_dev,threshold,pass\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", r.quantity, format_number(r.analytic), format_number(r.numeric),
                       format_number(r.rel_dev), r.criterion, r.pass ? "pass" : "fail");
  }
  return out;
}

std::string ladder_csv(const SystemParams& params, int n_max) {
  params.validate();
  if (params.detuning() == 0.0) throw Error(ErrorKind::kResonance, "ladder requires nonzero detuning");
  const DressedBasis basis(params, n_max);
  std::string out = "n,phi_n,omega_plus,omega_minus,gamma_n\n";
  for (int n = 1; n <= n_max; ++n) {
    out += fmt::format("{},{},{},{},{}\n", n, format_number(basis.phi(n)), format_number(basis.omega_plus(n)),
                       format_number(basis.omega_minus(n)), format_number(decay_rate_n(params, n)));
  }
  return out;
}

}  // namespace dressed_rayleigh
