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

#include "jrsopt/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "jrsopt/grid.hpp"
#include "jrsopt/mipcore.hpp"
#include "jrsopt/rng.hpp"
#include "jrsopt/topology.hpp"

#ifndef JRSOPT_VERSION
#define JRSOPT_VERSION "0.0.0"
#endif

namespace jrsopt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config reading: every error names the full field path of the offender.
// ---------------------------------------------------------------------------

[[noreturn]] void fail_at(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

std::string type_name(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return "null";
    case json::value_t::object: return "object";
    case json::value_t::array: return "array";
    case json::value_t::string: return "string";
    case json::value_t::boolean: return "boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
    case json::value_t::number_float: return "number";
    default: return "binary";
  }
}

/// Wraps one JSON object; typed getters mark keys as consumed and finish()
/// rejects anything left over, so typos surface instead of being ignored.
class ObjReader {
 public:
  ObjReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail_at(path_, "expected an object, got " + type_name(j_));
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string child_path(const char* key) const { return path_ + "." + key; }

  void str(const char* key, std::string& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_string())
      fail_at(child_path(key), "expected a string, got " + type_name(v));
    out = v.get<std::string>();
  }

  void num(const char* key, double& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number())
      fail_at(child_path(key), "expected a number, got " + type_name(v));
    out = v.get<double>();
  }

  void integer(const char* key, int& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer())
      fail_at(child_path(key), "expected an integer, got " + type_name(v));
    out = v.get<int>();
  }

  void u64(const char* key, std::uint64_t& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!(v.is_number_integer() && v.get<std::int64_t>() >= 0) &&
        !v.is_number_unsigned())
      fail_at(child_path(key), "expected a non-negative integer, got " +
                                   (v.is_number() ? "negative number" : type_name(v)));
    out = v.get<std::uint64_t>();
  }

  void boolean(const char* key, bool& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_boolean())
      fail_at(child_path(key), "expected a boolean, got " + type_name(v));
    out = v.get<bool>();
  }

  void int_list(const char* key, std::vector<int>& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_array())
      fail_at(child_path(key), "expected an array, got " + type_name(v));
    out.clear();
    for (size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer())
        fail_at(child_path(key) + "[" + std::to_string(i) + "]",
                "expected an integer, got " + type_name(v[i]));
      out.push_back(v[i].get<int>());
    }
  }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        fail_at(path_ + "." + it.key(), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_solver_params(ObjReader& parent, const char* key,
                        mip::SolverParams& out) {
  if (!parent.has(key)) return;
  ObjReader r(parent.raw(key), parent.child_path(key));
  r.num("gap", out.mip_gap);
  r.num("time_limit_s", out.time_limit_s);
  r.integer("threads", out.threads);
  r.integer("seed", out.seed);
  r.finish();
  if (out.mip_gap < 0.0) fail_at(r.child_path("gap"), "must be >= 0");
  if (out.time_limit_s <= 0.0) fail_at(r.child_path("time_limit_s"), "must be > 0");
  if (out.threads < 1) fail_at(r.child_path("threads"), "must be >= 1");
}

void read_window_list(ObjReader& parent, const char* key,
                      std::vector<std::pair<int, int>>& out) {
  if (!parent.has(key)) return;
  const json& v = parent.raw(key);
  const std::string path = parent.child_path(key);
  if (!v.is_array()) fail_at(path, "expected an array of [begin, end) hour pairs");
  out.clear();
  for (size_t i = 0; i < v.size(); ++i) {
    const std::string at = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != 2 || !v[i][0].is_number_integer() ||
        !v[i][1].is_number_integer())
      fail_at(at, "expected an integer pair [begin, end)");
    out.emplace_back(v[i][0].get<int>(), v[i][1].get<int>());
  }
}

void read_station_bus_map(ObjReader& parent, const char* key,
                          std::vector<std::pair<int, int>>& out) {
  if (!parent.has(key)) return;
  const json& v = parent.raw(key);
  const std::string path = parent.child_path(key);
  if (!v.is_object()) fail_at(path, "expected an object of {\"node\": bus}");
  out.clear();
  for (auto it = v.begin(); it != v.end(); ++it) {
    int node = 0;
    try {
      size_t used = 0;
      node = std::stoi(it.key(), &used);
      if (used != it.key().size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      fail_at(path + "." + it.key(), "key must be a transport node id");
    }
    if (!it.value().is_number_integer())
      fail_at(path + "." + it.key(), "expected an integer bus id");
    out.emplace_back(node, it.value().get<int>());
  }
  std::sort(out.begin(), out.end());
}

struct SeedFlags {
  bool dataset_seed_explicit = false;
  bool train_seed_explicit = false;
};

SeedFlags g_seed_flags;  // set by load_run_config, consumed by finalize below

void read_run_config(const json& j, RunConfig& cfg) {
  ObjReader top(j, "config");
  top.str("transport_file", cfg.transport_file);
  top.str("grid_file", cfg.grid_file);
  read_station_bus_map(top, "station_bus_map", cfg.station_bus_map);
  top.integer("timesteps", cfg.timesteps);
  top.integer("scenarios", cfg.scenarios);
  top.u64("seed", cfg.seed);
  top.str("out_dir", cfg.out_dir);
  top.integer("workers", cfg.workers);
  top.str("load_shape_file", cfg.load_shape_file);
  top.num("loss_fraction", cfg.loss_fraction);
  top.num("p_move_kw", cfg.p_move_kw);

  if (top.has("solar")) {
    ObjReader r(top.raw("solar"), top.child_path("solar"));
    r.str("history_file", cfg.solar_file);
    r.integer("synth_days", cfg.solar_synth_days);
    r.num("panel_max_kw", cfg.panel_max_kw);
    r.finish();
  }
  if (top.has("ev")) {
    ObjReader r(top.raw("ev"), top.child_path("ev"));
    r.num("e_min_kwh", cfg.ev.e_min_kwh);
    r.num("e_max_kwh", cfg.ev.e_max_kwh);
    r.num("e_init_kwh", cfg.ev.e_init_kwh);
    r.num("p_max_kw", cfg.ev.p_max_kw);
    r.finish();
  }
  if (top.has("costs")) {
    ObjReader r(top.raw("costs"), top.child_path("costs"));
    r.num("travel_per_arc", cfg.costs.travel_per_arc);
    r.num("charge_per_kwh", cfg.costs.charge_per_kwh);
    r.num("discharge_per_kwh", cfg.costs.discharge_per_kwh);
    r.finish();
  }
  if (top.has("schedule")) {
    ObjReader r(top.raw("schedule"), top.child_path("schedule"));
    r.integer("window_a_begin_h", cfg.schedule_template.window_a_begin_h);
    r.integer("window_a_end_h", cfg.schedule_template.window_a_end_h);
    r.integer("window_b_begin_h", cfg.schedule_template.window_b_begin_h);
    r.integer("window_b_end_h", cfg.schedule_template.window_b_end_h);
    r.integer("max_resample", cfg.schedule_template.max_resample);
    r.finish();
  }
  if (top.has("congestion")) {
    ObjReader r(top.raw("congestion"), top.child_path("congestion"));
    read_window_list(r, "windows_h", cfg.congestion.windows_h);
    r.num("random_prob", cfg.congestion.random_prob);
    r.finish();
  }
  if (top.has("dataset")) {
    ObjReader r(top.raw("dataset"), top.child_path("dataset"));
    if (r.has("blocks")) {
      const json& blocks = r.raw("blocks");
      const std::string bp = r.child_path("blocks");
      if (!blocks.is_array()) fail_at(bp, "expected an array");
      cfg.dataset.blocks.clear();
      for (size_t i = 0; i < blocks.size(); ++i) {
        ObjReader b(blocks[i], bp + "[" + std::to_string(i) + "]");
        pipe::FleetBlock block;
        b.integer("ev_count", block.ev_count);
        b.integer("samples", block.samples);
        b.finish();
        cfg.dataset.blocks.push_back(block);
      }
    }
    r.integer("e_max", cfg.dataset.e_max);
    if (r.has("seed")) g_seed_flags.dataset_seed_explicit = true;
    r.u64("seed", cfg.dataset.seed);
    read_solver_params(r, "labelling", cfg.dataset.labelling);
    r.finish();
  }
  if (top.has("train")) {
    ObjReader r(top.raw("train"), top.child_path("train"));
    r.int_list("conv_channels", cfg.train.conv_channels);
    r.int_list("kernels", cfg.train.kernels);
    r.num("learning_rate", cfg.train.learning_rate);
    r.num("weight_decay", cfg.train.weight_decay);
    r.integer("epochs", cfg.train.epochs);
    r.integer("batch_size", cfg.train.batch_size);
    r.num("validation_fraction", cfg.train.validation_fraction);
    if (r.has("seed")) g_seed_flags.train_seed_explicit = true;
    r.u64("seed", cfg.train.seed);
    r.boolean("class_weighting", cfg.train.class_weighting);
    r.finish();
  }
  read_solver_params(top, "solver", cfg.solver);
  if (top.has("retry")) {
    ObjReader r(top.raw("retry"), top.child_path("retry"));
    r.integer("max_retries", cfg.retry.max_retries);
    r.finish();
  }
  if (top.has("benchmark")) {
    ObjReader r(top.raw("benchmark"), top.child_path("benchmark"));
    r.int_list("ev_counts", cfg.benchmark.ev_counts);
    r.integer("instances_per_count", cfg.benchmark.instances_per_count);
    r.integer("scenarios", cfg.benchmark.scenarios);
    r.finish();
  }
  top.finish();
}

void apply_env_overrides(RunConfig& cfg) {
  auto env = [](const char* name) -> const char* { return std::getenv(name); };
  if (const char* v = env("JRSOPT_TRANSPORT_FILE")) cfg.transport_file = v;
  if (const char* v = env("JRSOPT_GRID_FILE")) cfg.grid_file = v;
  if (const char* v = env("JRSOPT_OUT_DIR")) cfg.out_dir = v;
  if (const char* v = env("JRSOPT_SOLAR_FILE")) cfg.solar_file = v;
  if (const char* v = env("JRSOPT_LOAD_SHAPE_FILE")) cfg.load_shape_file = v;
  if (const char* v = env("JRSOPT_SEED")) {
    try {
      size_t used = 0;
      cfg.seed = std::stoull(v, &used);
      if (used != std::string(v).size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail_at("JRSOPT_SEED", std::string("not an unsigned integer: '") + v + "'");
    }
  }
}

/// Unset per-stage seeds follow the root seed, so one --seed flag moves the
/// whole run while explicit config values stay pinned.
void finalize_seeds(RunConfig& cfg) {
  if (!g_seed_flags.dataset_seed_explicit) cfg.dataset.seed = cfg.seed;
  if (!g_seed_flags.train_seed_explicit) cfg.train.seed = cfg.seed;
}

std::string resolve_path(const RunConfig& cfg, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_absolute()) return p;
  return (fs::path(cfg.base_dir) / path).lexically_normal().string();
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

json config_to_json(const RunConfig& cfg) {
  json j;
  j["transport_file"] = cfg.transport_file;
  j["grid_file"] = cfg.grid_file;
  json map = json::object();
  for (const auto& [node, bus] : cfg.station_bus_map)
    map[std::to_string(node)] = bus;
  j["station_bus_map"] = std::move(map);
  j["timesteps"] = cfg.timesteps;
  j["scenarios"] = cfg.scenarios;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["workers"] = cfg.workers;
  j["solar"] = {{"history_file", cfg.solar_file},
                {"synth_days", cfg.solar_synth_days},
                {"panel_max_kw", cfg.panel_max_kw}};
  j["load_shape_file"] = cfg.load_shape_file;
  j["loss_fraction"] = cfg.loss_fraction;
  j["p_move_kw"] = cfg.p_move_kw;
  j["ev"] = {{"e_min_kwh", cfg.ev.e_min_kwh},
             {"e_max_kwh", cfg.ev.e_max_kwh},
             {"e_init_kwh", cfg.ev.e_init_kwh},
             {"p_max_kw", cfg.ev.p_max_kw}};
  j["costs"] = {{"travel_per_arc", cfg.costs.travel_per_arc},
                {"charge_per_kwh", cfg.costs.charge_per_kwh},
                {"discharge_per_kwh", cfg.costs.discharge_per_kwh}};
  j["schedule"] = {{"window_a_begin_h", cfg.schedule_template.window_a_begin_h},
                   {"window_a_end_h", cfg.schedule_template.window_a_end_h},
                   {"window_b_begin_h", cfg.schedule_template.window_b_begin_h},
                   {"window_b_end_h", cfg.schedule_template.window_b_end_h},
                   {"max_resample", cfg.schedule_template.max_resample}};
  json windows = json::array();
  for (const auto& [b, e] : cfg.congestion.windows_h) windows.push_back({b, e});
  j["congestion"] = {{"windows_h", std::move(windows)},
                     {"random_prob", cfg.congestion.random_prob}};
  json blocks = json::array();
  for (const auto& b : cfg.dataset.blocks)
    blocks.push_back({{"ev_count", b.ev_count}, {"samples", b.samples}});
  j["dataset"] = {{"blocks", std::move(blocks)},
                  {"e_max", cfg.dataset.e_max},
                  {"seed", cfg.dataset.seed},
                  {"labelling",
                   {{"gap", cfg.dataset.labelling.mip_gap},
                    {"time_limit_s", cfg.dataset.labelling.time_limit_s},
                    {"threads", cfg.dataset.labelling.threads},
                    {"seed", cfg.dataset.labelling.seed}}}};
  j["train"] = {{"conv_channels", cfg.train.conv_channels},
                {"kernels", cfg.train.kernels},
                {"learning_rate", cfg.train.learning_rate},
                {"weight_decay", cfg.train.weight_decay},
                {"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"validation_fraction", cfg.train.validation_fraction},
                {"seed", cfg.train.seed},
                {"class_weighting", cfg.train.class_weighting}};
  j["solver"] = {{"gap", cfg.solver.mip_gap},
                 {"time_limit_s", cfg.solver.time_limit_s},
                 {"threads", cfg.solver.threads},
                 {"seed", cfg.solver.seed}};
  j["retry"] = {{"max_retries", cfg.retry.max_retries}};
  j["benchmark"] = {{"ev_counts", cfg.benchmark.ev_counts},
                    {"instances_per_count", cfg.benchmark.instances_per_count},
                    {"scenarios", cfg.benchmark.scenarios}};
  return j;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    std::vector<std::string> artifacts) {
  std::sort(artifacts.begin(), artifacts.end());
  const std::string canonical = canonical_config_json(cfg);
  json j;
  j["schema"] = "jrsopt-manifest-1";
  j["command"] = command;
  j["config_hash"] = "fnv1a:" + hex64(fnv1a(canonical));
  j["config"] = config_to_json(cfg);
  j["artifacts"] = artifacts;
  j["seeds"] = {{"root", cfg.seed},
                {"dataset", cfg.dataset.seed},
                {"train", cfg.train.seed},
                {"solver", cfg.solver.seed}};
  j["versions"] = {{"toolkit", JRSOPT_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"instance_schema", "jrsopt-instance-1"},
                   {"solution_schema", "jrsopt-solution-1"},
                   {"benchmark_schema", "jrsopt-benchmark-1"},
                   {"dataset_format", "JRSSURD1"},
                   {"model_format", "JRSSURM1"}};
  const fs::path out = fs::path(resolve_path(cfg, cfg.out_dir)) /
                       (command + ".manifest.json");
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write manifest " + out.string());
  f << j.dump(1, '\t') << "\n";
}

fs::path ensure_out_dir(const RunConfig& cfg) {
  fs::path dir = resolve_path(cfg, cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

std::uint64_t bench_seed(std::uint64_t plan_seed, int ev_count, int index) {
  return Rng(plan_seed)
      .fork("bench")
      .fork(std::to_string(ev_count) + ":" + std::to_string(index))
      .next();
}

std::string instance_file_name(int ev_count, int index) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "ev%02d_%03d.json", ev_count, index);
  return buf;
}

int cmd_gen_data(const RunConfig& cfg) {
  cfg.dataset.validate();
  auto pool = build_pool(cfg);
  const fs::path out = ensure_out_dir(cfg);
  fs::create_directories(out / "instances");

  std::vector<std::string> artifacts;
  int written = 0;
  for (const auto& block : cfg.dataset.blocks) {
    for (int i = 0; i < block.samples; ++i) {
      const std::uint64_t seed = pipe::sample_seed(cfg.dataset.seed, block.ev_count, i);
      auto inst = pipe::draw_instance(pool, block.ev_count, 1, seed);
      const std::string name = instance_file_name(block.ev_count, i);
      scen::save_instance(inst, (out / "instances" / name).string());
      artifacts.push_back("instances/" + name);
      ++written;
    }
  }
  write_manifest(cfg, "gen-data", std::move(artifacts));
  std::cout << "wrote " << written << " instance files to "
            << (out / "instances").string() << "\n";
  return 0;
}

int cmd_label(const RunConfig& cfg) {
  cfg.dataset.validate();
  auto pool = build_pool(cfg);
  const fs::path out = ensure_out_dir(cfg);

  mip::SubprocessHighsBackend backend;
  auto result = pipe::generate_labelled_dataset(pool, cfg.dataset, backend);

  surr::save_dataset(result.dataset, (out / "dataset.bin").string());

  {
    std::ofstream log(out / "label_log.csv");
    if (!log) throw std::runtime_error("cannot write label_log.csv");
    log << "ev_count,seed,status,solve_seconds,kept\n";
    log.precision(12);
    for (const auto& a : result.log)
      log << a.ev_count << "," << a.seed << "," << mip::to_string(a.status)
          << "," << a.solve_seconds << "," << (a.kept ? 1 : 0) << "\n";
  }

  // Per-fleet-size mean labelling cost, the input to training-budget
  // comparisons between one padded model and per-size models.
  json times = json::array();
  for (const auto& block : cfg.dataset.blocks) {
    double total = 0.0;
    int kept = 0;
    for (const auto& a : result.log)
      if (a.ev_count == block.ev_count && a.kept) {
        total += a.solve_seconds;
        ++kept;
      }
    times.push_back({{"ev_count", block.ev_count},
                     {"samples_kept", kept},
                     {"mean_seconds", kept > 0 ? total / kept : 0.0}});
  }
  {
    std::ofstream f(out / "label_times.json");
    f << times.dump(1, '\t') << "\n";
  }

  write_manifest(cfg, "label",
                 {"dataset.bin", "label_log.csv", "label_times.json"});
  std::cout << "labelled " << result.dataset.samples.size() << " samples ("
            << result.dropped << " dropped) -> "
            << (out / "dataset.bin").string() << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_flag) {
  const fs::path out = ensure_out_dir(cfg);
  const std::string data_path =
      data_flag.empty() ? (out / "dataset.bin").string() : resolve_path(cfg, data_flag);
  auto dataset = surr::load_dataset(data_path);

  auto result = surr::train(dataset, cfg.train);
  surr::save_model(result.model, (out / "model.bin").string());

  surr::Dataset validation;
  validation.e_max = dataset.e_max;
  validation.d_ev = dataset.d_ev;
  validation.timesteps = dataset.timesteps;
  validation.channels = dataset.channels;
  for (int idx : result.validation_indices)
    validation.samples.push_back(dataset.samples[static_cast<size_t>(idx)]);
  surr::save_dataset(validation, (out / "validation.bin").string());

  {
    std::ofstream hist(out / "train_history.csv");
    if (!hist) throw std::runtime_error("cannot write train_history.csv");
    hist << "epoch,train_loss,val_loss\n";
    hist.precision(12);
    for (const auto& e : result.history)
      hist << e.epoch << "," << e.train_loss << "," << e.val_loss << "\n";
  }

  write_manifest(cfg, "train",
                 {"model.bin", "validation.bin", "train_history.csv"});
  const auto& last = result.history.back();
  std::cout << "trained " << dataset.samples.size() - validation.samples.size()
            << " samples, held out " << validation.samples.size()
            << "; final train loss " << last.train_loss << ", val loss "
            << last.val_loss << "\n";
  return 0;
}

int cmd_calibrate(const RunConfig& cfg, const std::string& model_flag,
                  const std::string& data_flag) {
  const fs::path out = ensure_out_dir(cfg);
  const std::string model_path =
      model_flag.empty() ? (out / "model.bin").string() : resolve_path(cfg, model_flag);
  const std::string data_path = data_flag.empty()
                                    ? (out / "validation.bin").string()
                                    : resolve_path(cfg, data_flag);

  auto model = surr::load_model(model_path);
  auto validation = surr::load_dataset(data_path);
  model.thresholds = surr::calibrate_thresholds(model, validation);
  surr::save_model(model, model_path);

  {
    std::ofstream f(out / "thresholds.json");
    json j = {{"p0", model.thresholds.p0}, {"p1", model.thresholds.p1}};
    f << j.dump(1, '\t') << "\n";
  }

  write_manifest(cfg, "calibrate", {"model.bin", "thresholds.json"});
  std::cout << "calibrated on " << validation.samples.size()
            << " samples: p0 = " << model.thresholds.p0
            << ", p1 = " << model.thresholds.p1 << "\n";
  return 0;
}

scen::ProblemInstance instance_for_solve(const RunConfig& cfg,
                                         const std::string& instance_flag,
                                         int evs) {
  if (!instance_flag.empty())
    return scen::load_instance(resolve_path(cfg, instance_flag));
  auto pool = build_pool(cfg);
  const std::uint64_t seed = Rng(cfg.seed).fork("solve").next();
  return pipe::draw_instance(pool, evs, cfg.scenarios, seed);
}

int cmd_solve(const RunConfig& cfg, const std::string& instance_flag, int evs) {
  const fs::path out = ensure_out_dir(cfg);
  auto inst = instance_for_solve(cfg, instance_flag, evs);

  auto built = mip::build_model(inst);
  mip::SubprocessHighsBackend backend;
  auto sol = backend.solve(built.model, cfg.solver);

  std::cout << "status " << mip::to_string(sol.status);
  if (mip::has_values(sol.status)) {
    auto report = mip::check_feasible(inst, sol);
    std::cout << ", objective " << sol.objective << ", gap " << sol.mip_gap
              << ", solve seconds " << sol.solve_seconds << "\n"
              << "feasibility audit: " << (report.ok ? "ok" : "VIOLATED")
              << " (max violation " << report.max_violation << ")\n";
    mip::save_solution(sol, built.index, (out / "solution.json").string());
    write_manifest(cfg, "solve", {"solution.json"});
    return report.ok ? 0 : 1;
  }
  std::cout << ": " << sol.message << "\n";
  write_manifest(cfg, "solve", {});
  return 1;
}

int cmd_solve_assisted(const RunConfig& cfg, const std::string& instance_flag,
                       int evs, const std::string& model_flag) {
  const fs::path out = ensure_out_dir(cfg);
  const std::string model_path =
      model_flag.empty() ? (out / "model.bin").string() : resolve_path(cfg, model_flag);
  auto model = surr::load_model(model_path);
  auto inst = instance_for_solve(cfg, instance_flag, evs);

  mip::SubprocessHighsBackend backend;
  auto [sol, stats] = pipe::infer_and_solve(inst, model, model.thresholds,
                                            backend, cfg.solver, cfg.retry);

  std::cout << "status " << mip::to_string(sol.status) << ", assisted path "
            << (stats.assisted_feasible ? "succeeded" : "failed")
            << (stats.used_fallback ? " (fell back to the full model)" : "")
            << "\n"
            << "solver calls " << stats.solver_calls << ", retries "
            << stats.retries << ", fixed binaries " << stats.fixed_count
            << ", final bars p0 = " << stats.final_thresholds.p0
            << ", p1 = " << stats.final_thresholds.p1 << "\n";
  if (mip::has_values(sol.status)) {
    auto report = mip::check_feasible(inst, sol);
    std::cout << "objective " << sol.objective << ", wall seconds "
              << stats.wall_seconds << "\n"
              << "feasibility audit: " << (report.ok ? "ok" : "VIOLATED")
              << " (max violation " << report.max_violation << ")\n";
    mip::VariableIndex vx(inst, inst.scenarios.scenario_count());
    mip::save_solution(sol, vx, (out / "solution_assisted.json").string());
    write_manifest(cfg, "solve-assisted", {"solution_assisted.json"});
    return report.ok ? 0 : 1;
  }
  std::cout << "no incumbent: " << sol.message << "\n";
  write_manifest(cfg, "solve-assisted", {});
  return 1;
}

int cmd_benchmark(const RunConfig& cfg, const std::string& model_flag) {
  const fs::path out = ensure_out_dir(cfg);
  const std::string model_path =
      model_flag.empty() ? (out / "model.bin").string() : resolve_path(cfg, model_flag);
  auto model = surr::load_model(model_path);

  if (cfg.benchmark.ev_counts.empty())
    fail_at("config.benchmark.ev_counts", "must not be empty");
  if (cfg.benchmark.instances_per_count < 1)
    fail_at("config.benchmark.instances_per_count", "must be >= 1");
  if (cfg.benchmark.scenarios < 1)
    fail_at("config.benchmark.scenarios", "must be >= 1");

  auto pool = build_pool(cfg);
  std::vector<scen::ProblemInstance> tests;
  for (int c : cfg.benchmark.ev_counts)
    for (int i = 0; i < cfg.benchmark.instances_per_count; ++i)
      tests.push_back(pipe::draw_instance(pool, c, cfg.benchmark.scenarios,
                                          bench_seed(cfg.seed, c, i)));

  mip::SubprocessHighsBackend backend;
  auto report = pipe::benchmark(tests, model, model.thresholds, backend, cfg.solver);

  const fs::path val_path = out / "validation.bin";
  if (fs::exists(val_path)) {
    try {
      report.metrics =
          pipe::evaluate_predictions(model, surr::load_dataset(val_path.string()));
    } catch (const std::exception& e) {
      std::cout << "note: prediction metrics unavailable (" << e.what() << ")\n";
    }
  }

  pipe::save_benchmark_csv(report, (out / "benchmark.csv").string());
  pipe::save_benchmark_summary(report, (out / "benchmark.json").string());
  write_manifest(cfg, "benchmark", {"benchmark.csv", "benchmark.json"});

  std::cout << "benchmarked " << report.rows.size() << " instances\n"
            << "mean time reduction " << report.r_mean << "%\n"
            << "mean objective drift " << report.l_mean
            << "% (over assisted-feasible rows)\n"
            << "assisted-path feasibility " << report.feas << "%\n";
  if (report.metrics.acc0 > 0.0 || report.metrics.acc1 > 0.0)
    std::cout << "held-out accuracy: zeros " << report.metrics.acc0
              << "%, ones " << report.metrics.acc1 << "%, mAP "
              << report.metrics.map << "%\n";
  return 0;
}

// --- inspect ---------------------------------------------------------------

int inspect_dataset(const std::string& path) {
  auto ds = surr::load_dataset(path);
  long long real_bits = 0, one_bits = 0;
  double label_seconds = 0.0;
  std::map<int, int> by_e;
  for (const auto& s : ds.samples) {
    real_bits += static_cast<long long>(s.e) * ds.d_ev;
    one_bits += static_cast<long long>(
        s.labels.head(static_cast<Eigen::Index>(s.e) * ds.d_ev).sum());
    label_seconds += s.solve_seconds;
    by_e[s.e]++;
  }
  std::cout << "labelled dataset: " << ds.samples.size() << " samples\n"
            << "e_max " << ds.e_max << ", d_ev " << ds.d_ev << ", timesteps "
            << ds.timesteps << ", channels " << ds.channels << "\n";
  for (const auto& [e, n] : by_e)
    std::cout << "  fleet size " << e << ": " << n << " samples\n";
  if (real_bits > 0)
    std::cout << "class balance: " << 100.0 * one_bits / real_bits
              << "% ones over " << real_bits << " real bits\n";
  std::cout << "total labelling seconds " << label_seconds << "\n";
  return 0;
}

int inspect_model(const std::string& path) {
  auto m = surr::load_model(path);
  std::cout << "surrogate model: " << m.channels << " channels x "
            << m.timesteps << " timesteps -> " << m.output_len()
            << " outputs (e_max " << m.e_max << ", d_ev " << m.d_ev << ")\n";
  for (const auto& l : m.conv)
    std::cout << "  conv " << l.c_in << " -> " << l.c_out << ", kernel "
              << l.kernel << "\n";
  std::cout << "  dense head, " << m.params.size() << " parameters total\n"
            << "thresholds p0 = " << m.thresholds.p0
            << ", p1 = " << m.thresholds.p1 << "\n";
  return 0;
}

int inspect_json(const std::string& path) {
  std::ifstream in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": not a recognized artifact");
  }
  const std::string schema = j.value("schema", "");
  if (schema == "jrsopt-instance-1") {
    std::cout << "problem instance: " << j["transport"]["nodes"].size()
              << " transport nodes, " << j["transport"]["arcs"].size()
              << " arcs, " << j["grid"]["buses"].size() << " buses\n"
              << "timesteps " << j["timesteps"].get<int>() << ", scenarios "
              << j["scenarios"]["probability"].size() << ", EVs "
              << j["fleet"]["evs"].size() << ", stops "
              << j["schedule"].size() << "\n";
  } else if (schema == "jrsopt-solution-1") {
    std::cout << "solution: status " << j.value("status", "?") << ", objective "
              << j.value("objective", 0.0) << ", gap " << j.value("mip_gap", 0.0)
              << ", solve seconds " << j.value("solve_seconds", 0.0) << ", "
              << j["x"].size() << " values\n";
  } else if (schema == "jrsopt-benchmark-1") {
    std::cout << "benchmark report: " << j["rows"].size() << " rows\n"
              << "mean time reduction " << j.value("r_mean", 0.0)
              << "%, mean drift " << j.value("l_mean", 0.0)
              << "%, feasibility " << j.value("feas", 0.0) << "%\n";
  } else if (schema == "jrsopt-manifest-1") {
    std::cout << "run manifest: command " << j.value("command", "?")
              << ", config hash " << j.value("config_hash", "?") << "\n"
              << "artifacts: " << j["artifacts"].size() << "\n";
    if (j.contains("versions"))
      std::cout << "toolkit version " << j["versions"].value("toolkit", "?")
                << "\n";
  } else {
    throw std::runtime_error(path + ": unknown artifact schema '" + schema + "'");
  }
  return 0;
}

int cmd_inspect(const RunConfig& cfg, const std::string& target) {
  const std::string path = resolve_path(cfg, target);
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open " + path);
  char magic[8] = {};
  probe.read(magic, 8);
  const std::string head(magic, static_cast<size_t>(probe.gcount()));
  probe.close();

  int rc;
  if (head == "JRSSURD1") rc = inspect_dataset(path);
  else if (head == "JRSSURM1") rc = inspect_model(path);
  else rc = inspect_json(path);

  ensure_out_dir(cfg);
  write_manifest(cfg, "inspect", {});
  return rc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public surface
// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  if (timesteps < 2) fail_at("config.timesteps", "must be >= 2");
  if (scenarios < 1) fail_at("config.scenarios", "must be >= 1");
  if (workers < 1) fail_at("config.workers", "must be >= 1");
  if (panel_max_kw <= 0.0) fail_at("config.solar.panel_max_kw", "must be > 0");
  if (solar_synth_days < 2) fail_at("config.solar.synth_days", "must be >= 2");
  if (loss_fraction < 0.0 || loss_fraction >= 1.0)
    fail_at("config.loss_fraction", "must be in [0, 1)");
  if (out_dir.empty()) fail_at("config.out_dir", "must not be empty");
}

RunConfig load_run_config(const std::string& path) {
  g_seed_flags = SeedFlags{};
  RunConfig cfg;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": invalid JSON (" + e.what() + ")");
  }
  read_run_config(j, cfg);
  cfg.base_dir = fs::path(path).parent_path().string();
  if (cfg.base_dir.empty()) cfg.base_dir = ".";
  apply_env_overrides(cfg);
  finalize_seeds(cfg);
  cfg.validate();
  return cfg;
}

std::string canonical_config_json(const RunConfig& cfg) {
  return config_to_json(cfg).dump(1, '\t');
}

pipe::InstancePool build_pool(const RunConfig& cfg) {
  auto require = [&](const std::string& p, const char* field) -> std::string {
    if (p.empty())
      fail_at(std::string("config.") + field, "required for this command");
    std::string full = resolve_path(cfg, p);
    if (!fs::exists(full))
      fail_at(std::string("config.") + field, "file not found: " + full);
    return full;
  };

  pipe::InstancePool pool;
  pool.tn = topo::load_transport_network(require(cfg.transport_file, "transport_file"));
  pool.gm = grid::load_grid(require(cfg.grid_file, "grid_file"));
  if (!cfg.station_bus_map.empty()) {
    pool.gm.stations.bus_of_station.clear();
    for (const auto& [node, bus] : cfg.station_bus_map)
      pool.gm.stations.bus_of_station[node] = bus;
  }
  pool.ev = cfg.ev;
  pool.loss_fraction = cfg.loss_fraction;
  pool.p_move_kw = cfg.p_move_kw;
  pool.costs = cfg.costs;

  if (!cfg.solar_file.empty()) {
    auto history = scen::load_solar_history_csv(resolve_path(cfg, cfg.solar_file));
    pool.solar = scen::fit_solar_model(history, cfg.panel_max_kw);
  } else {
    auto history = scen::synth_solar_history(cfg.solar_synth_days, cfg.timesteps,
                                             cfg.panel_max_kw,
                                             Rng(cfg.seed).fork("solar-history").next());
    pool.solar = scen::fit_solar_model(history, cfg.panel_max_kw);
  }

  pool.load_shape = cfg.load_shape_file.empty()
                        ? scen::default_load_shape()
                        : scen::load_shape_file(resolve_path(cfg, cfg.load_shape_file));
  pool.schedule_template = cfg.schedule_template;
  pool.congestion = cfg.congestion;
  pool.timesteps = cfg.timesteps;
  return pool;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"EV fleet routing and charging optimizer with a learned "
               "variable-fixing accelerator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path = "jrsopt.json";
  std::string out_flag, instance_flag, model_flag, data_flag, inspect_target;
  std::uint64_t seed_flag = 0;
  int workers_flag = 0, evs_flag = 2;
  double gap_flag = -1.0, timeout_flag = -1.0;

  app.add_option("--config", config_path, "run configuration file (JSON)");
  app.add_option("--workers", workers_flag, "pipeline parallelism (reserved)");
  app.add_option("--seed", seed_flag, "override the root seed");
  app.add_option("--out", out_flag, "override the output directory");
  app.add_option("--gap", gap_flag, "override the MIP gap for this run");
  app.add_option("--timeout", timeout_flag, "override the time limit (seconds)");

  auto* gen = app.add_subcommand("gen-data",
                                 "write the dataset plan's instances to disk");
  auto* label = app.add_subcommand(
      "label", "solve the dataset plan's instances into a labelled dataset");
  auto* train = app.add_subcommand("train", "fit the classifier on a dataset");
  train->add_option("--data", data_flag, "dataset file (default out/dataset.bin)");
  auto* calibrate = app.add_subcommand(
      "calibrate", "set fixing thresholds from held-out predictions");
  calibrate->add_option("--model", model_flag, "model file (default out/model.bin)");
  calibrate->add_option("--data", data_flag,
                        "validation dataset (default out/validation.bin)");
  auto* solve = app.add_subcommand("solve", "solve one instance exactly");
  solve->add_option("--instance", instance_flag, "instance file; drawn when absent");
  solve->add_option("--evs", evs_flag, "fleet size when drawing (default 2)");
  auto* assisted = app.add_subcommand(
      "solve-assisted", "solve one instance with predicted variable fixing");
  assisted->add_option("--instance", instance_flag, "instance file; drawn when absent");
  assisted->add_option("--evs", evs_flag, "fleet size when drawing (default 2)");
  assisted->add_option("--model", model_flag, "model file (default out/model.bin)");
  auto* bench = app.add_subcommand(
      "benchmark", "compare plain and assisted solves on drawn test instances");
  bench->add_option("--model", model_flag, "model file (default out/model.bin)");
  auto* inspect = app.add_subcommand("inspect", "summarize a saved artifact");
  inspect->add_option("path", inspect_target, "artifact file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg;
    const bool config_given = app.count("--config") > 0;
    if (config_given || fs::exists(config_path)) {
      cfg = load_run_config(config_path);
    } else {
      g_seed_flags = SeedFlags{};
      apply_env_overrides(cfg);
    }
    if (app.count("--seed")) cfg.seed = seed_flag;
    if (app.count("--out")) cfg.out_dir = out_flag;
    if (app.count("--workers")) cfg.workers = workers_flag;
    if (app.count("--gap") && gap_flag >= 0.0) {
      cfg.solver.mip_gap = gap_flag;
      cfg.dataset.labelling.mip_gap = gap_flag;
    }
    if (app.count("--timeout") && timeout_flag > 0.0) {
      cfg.solver.time_limit_s = timeout_flag;
      cfg.dataset.labelling.time_limit_s = timeout_flag;
    }
    finalize_seeds(cfg);
    cfg.validate();

    if (gen->parsed()) return cmd_gen_data(cfg);
    if (label->parsed()) return cmd_label(cfg);
    if (train->parsed()) return cmd_train(cfg, data_flag);
    if (calibrate->parsed()) return cmd_calibrate(cfg, model_flag, data_flag);
    if (solve->parsed()) return cmd_solve(cfg, instance_flag, evs_flag);
    if (assisted->parsed())
      return cmd_solve_assisted(cfg, instance_flag, evs_flag, model_flag);
    if (bench->parsed()) return cmd_benchmark(cfg, model_flag);
    if (inspect->parsed()) return cmd_inspect(cfg, inspect_target);
    std::cerr << "error: no command\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace jrsopt::cli
