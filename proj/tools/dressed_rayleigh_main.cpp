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

// dressed-rayleigh: run, compare and inspect dressed-state scattering scenarios.
//
// Exit status: 0 on success (compare: every row passed), 1 when compare finds
// a failing row, 2 on any error. Errors print one line
//   error: <category>: <message>
// to stderr.

#include "dressed_rayleigh/errors.hpp"
#include "dressed_rayleigh/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>

namespace dr = dressed_rayleigh;

namespace {

constexpr int kExitFailedRows = 1;
constexpr int kExitError = 2;

void print_error(std::string_view category, std::string message) {
  std::replace(message.begin(), message.end(), '\n', ' ');
  std::cerr << "error: " << category << ": " << message << '\n';
}

int run(const std::string& config_path) {
  const dr::RunConfig cfg = dr::load_config(config_path);
  const dr::RunResult result = dr::run_scenario(cfg);
  for (const auto& path : result.artifacts) std::cout << path.string() << '\n';
  return 0;
}

int compare(const std::string& config_path) {
  const dr::RunConfig cfg = dr::load_config(config_path);
  const auto rows = dr::compare_report(cfg);
  std::cout << dr::format_comparison(rows);
  const bool all_pass = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
  return all_pass ? 0 : kExitFailedRows;
}

int ladder(const std::string& config_path) {
  const dr::RunConfig cfg = dr::load_config(config_path);
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = cfg.output_dir / dr::kLadderFile;
  dr::write_file_atomic(path, dr::ladder_csv(cfg.params, cfg.n_max));
  std::cout << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dressed-state Rayleigh scattering scenarios"};
  app.require_subcommand(1);
  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "evolve a scenario and write trajectory, correlator, spectrum and report");
  auto* compare_cmd = app.add_subcommand("compare", "tabulate analytic against numeric results of a previous run");
  auto* ladder_cmd = app.add_subcommand("ladder", "write the dressed basis table");
  for (auto* cmd : {run_cmd, compare_cmd, ladder_cmd}) {
    cmd->add_option("--config", config_path, "path to the key = value config file")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return kExitError;
  }

  try {
    if (*run_cmd) return run(config_path);
    if (*compare_cmd) return compare(config_path);
    return ladder(config_path);
  } catch (const dr::Error& e) {
    print_error(dr::error_kind_name(e.kind()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    print_error("io", e.what());
  } catch (const std::bad_alloc&) {
    print_error("resource", "out of memory");
  } catch (const std::exception& e) {
    print_error("internal", e.what());
  }
  return kExitError;
}
