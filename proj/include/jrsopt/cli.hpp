// Copyright 2026 the jrsopt authors
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

#ifndef JRSOPT_CLI_HPP
#define JRSOPT_CLI_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "jrsopt/pipeline.hpp"
#include "jrsopt/surrogate.hpp"

namespace jrsopt::cli {

/// How many benchmark instances to draw and at which fleet sizes.
struct BenchmarkPlan {
  std::vector<int> ev_counts{6, 10};
  int instances_per_count = 15;
  int scenarios = 2;
};

/// Fully resolved run configuration: config file, then JRSOPT_* environment
/// variables, then command-line flags (later layers win). Every command
/// derives its inputs from this plus its own flags, and the manifest hash
/// is computed over the canonical JSON form of this struct, so equal
/// effective configurations produce byte-identical manifests.
struct RunConfig {
  // -- shared inputs ------------------------------------------------------
  std::string transport_file;
  std::string grid_file;
  /// Optional override pairs (station node -> bus id). When non-empty it
  /// replaces the station placement shipped inside the grid file, which is
  /// how one grid file serves several road networks.
  std::vector<std::pair<int, int>> station_bus_map;
  int timesteps = 12;
  int scenarios = 2;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int workers = 1;

  // -- scenario sampling ---------------------------------------------------
  std::string solar_file;       // historical irradiance table (optional)
  int solar_synth_days = 64;    // used when solar_file is empty
  double panel_max_kw = 400.0;
  std::string load_shape_file;  // optional; default shape otherwise
  double loss_fraction = 0.05;
  double p_move_kw = 2.0;
  scen::EvParams ev;
  scen::CostParams costs;
  scen::ScheduleTemplate schedule_template;
  scen::CongestionConfig congestion;

  // -- dataset / training --------------------------------------------------
  pipe::DatasetConfig dataset;
  surr::TrainConfig train;

  // -- solving -------------------------------------------------------------
  mip::SolverParams solver;
  pipe::RetryConfig retry;

  // -- benchmarking --------------------------------------------------------
  BenchmarkPlan benchmark;

  /// Directory the config file lived in; relative paths resolve against it.
  std::string base_dir = ".";

  /// Throws std::runtime_error naming the offending field on bad values.
  void validate() const;
};

/// Parses a JSON config file. Unknown keys and wrong types are reported
/// with their full field path. Applies JRSOPT_* environment overrides.
RunConfig load_run_config(const std::string& path);

/// Canonical JSON rendering of the effective configuration (sorted keys,
/// tab indent, no volatile fields). Input to the manifest hash.
std::string canonical_config_json(const RunConfig& cfg);

/// Loads networks and scenario generators behind a config. Throws with the
/// offending path on I/O errors.
pipe::InstancePool build_pool(const RunConfig& cfg);

/// Entry point behind main(). Returns the process exit code; never throws.
int run_cli(int argc, const char* const* argv);

}  // namespace jrsopt::cli

#endif  // JRSOPT_CLI_HPP
