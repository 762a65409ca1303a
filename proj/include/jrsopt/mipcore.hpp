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

#ifndef JRSOPT_MIPCORE_HPP
#define JRSOPT_MIPCORE_HPP

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "jrsopt/scenariogen.hpp"

namespace jrsopt::mip {

/// Bijection between the flat solver index space and the model's variable
/// tuples. Binaries come first, scenario-major then EV-major with a fixed
/// per-EV stride, so one EV's block has the same shape for every fleet size;
/// continuous variables follow in a fixed block order.
class VariableIndex {
 public:
  VariableIndex(const scen::ProblemInstance& inst, int scenario_count);

  // Binary variables. Routing spans all arcs and timespans; charge and
  // discharge flags exist per station for t in {1..|T|-1} only (they are
  // gated by the arc of the preceding timespan).
  int routing(int sc, int k, int arc, int s) const;
  int charge_flag(int sc, int k, int station, int t) const;
  int discharge_flag(int sc, int k, int station, int t) const;

  // Continuous variables.
  int pg(int sc, int u, int t) const;
  int qg(int sc, int u, int t) const;
  int pv(int sc, int p, int t) const;
  int pc(int sc, int k, int station, int t) const;  // t in {1..|T|-1}
  int pd(int sc, int k, int station, int t) const;  // t in {1..|T|-1}
  int pm(int sc, int k, int t) const;               // t in {1..|T|-1}
  int energy(int sc, int k, int t) const;
  int pf(int sc, int l, int t) const;
  int qf(int sc, int l, int t) const;
  int voltage(int sc, int b, int t) const;

  int total() const { return total_; }
  int binary_count() const { return binaries_; }
  int ev_stride() const { return d_ev_; }  // binaries per (scenario, EV)
  int scenario_count() const { return sc_; }
  int timesteps() const { return T_; }
  int timespans() const { return S_; }
  int arc_count() const { return A_; }
  int station_count() const { return CS_; }
  int ev_count() const { return K_; }

  enum class Kind {
    routing, charge_flag, discharge_flag, pg, qg, pv, pc, pd, pm, energy,
    pf, qf, voltage
  };
  struct VarInfo {
    Kind kind;
    int sc = -1, k = -1, arc = -1, s = -1, station = -1, t = -1;
    int unit = -1;  // generator / pv / line / bus index, per kind
    std::string name;
  };
  /// Inverse of the flat index; identity under re-encoding.
  VarInfo describe(int flat) const;

 private:
  int sc_, K_, A_, S_, T_, CS_, G_, P_, L_, B_;
  int d_ev_, binaries_, total_;
  int base_pg_, base_qg_, base_pv_, base_pc_, base_pd_, base_pm_, base_e_,
      base_pf_, base_qf_, base_v_;
};

struct LinearConstraint {
  std::vector<int> idx;
  std::vector<double> coef;
  char sense = '=';  // '=', '<' (<=), '>' (>=)
  double rhs = 0.0;
  std::string name;
};

struct MipModel {
  int var_count = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> objective;
  std::vector<std::uint8_t> is_integer;
  std::vector<LinearConstraint> constraints;
  int scenario = -1;  // -1 stochastic, otherwise the single modelled scenario

  // Undo log for fix/unfix round trips.
  struct BoundPatch {
    int idx;
    double lower, upper;
  };
  std::vector<BoundPatch> fixings;
};

struct SolverParams {
  double mip_gap = 0.001;       // labelling default
  double time_limit_s = 7200.0; // labelling default
  int threads = 1;
  int seed = 0;
};

enum class SolveStatus {
  optimal,
  gap_feasible,
  time_limit_feasible,
  infeasible,
  timeout_no_solution,
  backend_error
};

const char* to_string(SolveStatus s);
bool has_values(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::backend_error;
  Eigen::VectorXd values;
  double objective = 0.0;
  double mip_gap = 0.0;
  double solve_seconds = 0.0;
  int scenario = -1;  // copied from the model that produced it
  std::string message;
};

/// Binary flat index -> {0, 1}.
using PartialAssignment = std::map<int, int>;

/// Exact MILP engine contract: bounds + integrality + linear rows in, status
/// + values + runtime out. One backend handle per concurrent solve.
class MilpBackend {
 public:
  virtual ~MilpBackend() = default;
  virtual Solution solve(const MipModel& model, const SolverParams& params) = 0;
  virtual std::string name() const = 0;
};

/// Result of solving each pattern of a batch of bound-fixed continuous
/// relaxations of one model (used by exhaustive-verification tooling).
struct LpResult {
  bool feasible = false;
  double objective = 0.0;
};

/// Backend over a persistent helper process driving the HiGHS MILP engine.
/// Construction spawns the helper; destruction shuts it down.
class SubprocessHighsBackend : public MilpBackend {
 public:
  SubprocessHighsBackend();
  ~SubprocessHighsBackend() override;
  SubprocessHighsBackend(const SubprocessHighsBackend&) = delete;
  SubprocessHighsBackend& operator=(const SubprocessHighsBackend&) = delete;

  Solution solve(const MipModel& model, const SolverParams& params) override;
  std::string name() const override { return "highs-subprocess"; }

  /// Solves the continuous relaxation of `model` once per pattern, with the
  /// pattern's binaries bound-fixed. Integrality is dropped.
  std::vector<LpResult> solve_lp_batch(const MipModel& model,
                                       const std::vector<PartialAssignment>& patterns);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Builds the full model over all scenarios (scenario = -1, probability
/// weighted) or a single-scenario deterministic variant (weight 1).
struct BuildResult {
  MipModel model;
  VariableIndex index;
};
BuildResult build_model(const scen::ProblemInstance& inst, int scenario = -1);

// Constraint families, attached by build_model in this order. Exposed for
// targeted tests.
void add_routing_constraints(MipModel& model, const VariableIndex& vx,
                             const scen::ProblemInstance& inst);
void add_ev_energy_constraints(MipModel& model, const VariableIndex& vx,
                               const scen::ProblemInstance& inst);
void add_generation_constraints(MipModel& model, const VariableIndex& vx,
                                const scen::ProblemInstance& inst);
void add_network_constraints(MipModel& model, const VariableIndex& vx,
                             const scen::ProblemInstance& inst);

/// Clamps each assigned binary's bounds onto its value. A fixing that
/// contradicts existing bounds (for instance a 1 onto an arc the congestion
/// state rules out) leaves an empty bound interval for the solver to report
/// infeasible, rather than silently widening anything.
void fix_binaries(MipModel& model, const PartialAssignment& assignment);
void unfix_binaries(MipModel& model);

struct FeasibilityReport {
  bool ok = false;
  double tol = 0.0;
  double max_violation = 0.0;
  std::map<std::string, double> family_violation;  // max relative, per family
  std::vector<std::string> notes;                  // worst offender per family
};

/// Re-evaluates every constraint family directly from the instance data by
/// substituting the solution values. Independent of build_model: violations
/// here mean the model builder and the problem statement disagree.
FeasibilityReport check_feasible(const scen::ProblemInstance& inst,
                                 const Solution& solution, double tol = 1e-6);

/// Recomputes the objective from the instance and solution values alone.
double objective_value(const scen::ProblemInstance& inst, const Solution& solution);

/// Audit round trip keyed by variable names.
void save_solution(const Solution& solution, const VariableIndex& vx,
                   const std::string& path);
Solution load_solution(const std::string& path);

}  // namespace jrsopt::mip

#endif  // JRSOPT_MIPCORE_HPP
