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

#include <stdexcept>

#include "jrsopt/mipcore.hpp"

namespace jrsopt::mip {

namespace {

void bounds(int v, int lo, int hi, const char* what) {
  if (v < lo || v > hi)
    throw std::out_of_range(std::string(what) + " index " + std::to_string(v) +
                            " outside [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
}

}  // namespace

VariableIndex::VariableIndex(const scen::ProblemInstance& inst, int scenario_count)
    : sc_(scenario_count),
      K_(inst.fleet.size()),
      A_(static_cast<int>(inst.tsn.arcs.size())),
      S_(inst.tsn.timespans),
      T_(inst.timesteps),
      CS_(static_cast<int>(inst.tn.stations.size())),
      G_(static_cast<int>(inst.generators.size())),
      P_(static_cast<int>(inst.pv_units.size())),
      L_(static_cast<int>(inst.dn.lines.size())),
      B_(static_cast<int>(inst.dn.buses.size())) {
  if (sc_ < 1) throw std::invalid_argument("need at least one scenario");
  d_ev_ = A_ * S_ + 2 * CS_ * (T_ - 1);
  binaries_ = sc_ * K_ * d_ev_;
  int at = binaries_;
  base_pg_ = at;
  at += sc_ * G_ * T_;
  base_qg_ = at;
  at += sc_ * G_ * T_;
  base_pv_ = at;
  at += sc_ * P_ * T_;
  base_pc_ = at;
  at += sc_ * K_ * CS_ * (T_ - 1);
  base_pd_ = at;
  at += sc_ * K_ * CS_ * (T_ - 1);
  base_pm_ = at;
  at += sc_ * K_ * (T_ - 1);
  base_e_ = at;
  at += sc_ * K_ * T_;
  base_pf_ = at;
  at += sc_ * L_ * T_;
  base_qf_ = at;
  at += sc_ * L_ * T_;
  base_v_ = at;
  at += sc_ * B_ * T_;
  total_ = at;
}

int VariableIndex::routing(int sc, int k, int arc, int s) const {
  bounds(sc, 0, sc_ - 1, "scenario");
  bounds(k, 0, K_ - 1, "ev");
  bounds(arc, 0, A_ - 1, "arc");
  bounds(s, 0, S_ - 1, "timespan");
  return (sc * K_ + k) * d_ev_ + arc * S_ + s;
}

int VariableIndex::charge_flag(int sc, int k, int station, int t) const {
  bounds(sc, 0, sc_ - 1, "scenario");
  bounds(k, 0, K_ - 1, "ev");
  bounds(station, 0, CS_ - 1, "station");
  bounds(t, 1, T_ - 1, "timestep");
  return (sc * K_ + k) * d_ev_ + A_ * S_ + station * (T_ - 1) + (t - 1);
}

int VariableIndex::discharge_flag(int sc, int k, int station, int t) const {
  return charge_flag(sc, k, station, t) + CS_ * (T_ - 1);
}

int VariableIndex::pg(int sc, int u, int t) const {
  bounds(u, 0, G_ - 1, "generator");
  bounds(t, 0, T_ - 1, "timestep");
  return base_pg_ + (sc * G_ + u) * T_ + t;
}

int VariableIndex::qg(int sc, int u, int t) const {
  bounds(u, 0, G_ - 1, "generator");
  bounds(t, 0, T_ - 1, "timestep");
  return base_qg_ + (sc * G_ + u) * T_ + t;
}

int VariableIndex::pv(int sc, int p, int t) const {
  bounds(p, 0, P_ - 1, "pv unit");
  bounds(t, 0, T_ - 1, "timestep");
  return base_pv_ + (sc * P_ + p) * T_ + t;
}

int VariableIndex::pc(int sc, int k, int station, int t) const {
  bounds(k, 0, K_ - 1, "ev");
  bounds(station, 0, CS_ - 1, "station");
  bounds(t, 1, T_ - 1, "timestep");
  return base_pc_ + ((sc * K_ + k) * CS_ + station) * (T_ - 1) + (t - 1);
}

int VariableIndex::pd(int sc, int k, int station, int t) const {
  bounds(k, 0, K_ - 1, "ev");
  bounds(station, 0, CS_ - 1, "station");
  bounds(t, 1, T_ - 1, "timestep");
  return base_pd_ + ((sc * K_ + k) * CS_ + station) * (T_ - 1) + (t - 1);
}

int VariableIndex::pm(int sc, int k, int t) const {
  bounds(k, 0, K_ - 1, "ev");
  bounds(t, 1, T_ - 1, "timestep");
  return base_pm_ + (sc * K_ + k) * (T_ - 1) + (t - 1);
}

int VariableIndex::energy(int sc, int k, int t) const {
  bounds(k, 0, K_ - 1, "ev");
  bounds(t, 0, T_ - 1, "timestep");
  return base_e_ + (sc * K_ + k) * T_ + t;
}

int VariableIndex::pf(int sc, int l, int t) const {
  bounds(l, 0, L_ - 1, "line");
  bounds(t, 0, T_ - 1, "timestep");
  return base_pf_ + (sc * L_ + l) * T_ + t;
}

int VariableIndex::qf(int sc, int l, int t) const {
  bounds(l, 0, L_ - 1, "line");
  bounds(t, 0, T_ - 1, "timestep");
  return base_qf_ + (sc * L_ + l) * T_ + t;
}

int VariableIndex::voltage(int sc, int b, int t) const {
  bounds(b, 0, B_ - 1, "bus");
  bounds(t, 0, T_ - 1, "timestep");
  return base_v_ + (sc * B_ + b) * T_ + t;
}

VariableIndex::VarInfo VariableIndex::describe(int flat) const {
  bounds(flat, 0, total_ - 1, "flat");
  VarInfo info;
  auto tag = [](const char* sym, std::initializer_list<int> ids) {
    std::string s(sym);
    s += '(';
    bool first = true;
    for (int v : ids) {
      if (!first) s += ',';
      s += std::to_string(v);
      first = false;
    }
    s += ')';
    return s;
  };

  if (flat < binaries_) {
    int block = flat / d_ev_;
    info.sc = block / K_;
    info.k = block % K_;
    int local = flat % d_ev_;
    if (local < A_ * S_) {
      info.kind = Kind::routing;
      info.arc = local / S_;
      info.s = local % S_;
      info.name = tag("I", {info.sc, info.k, info.arc, info.s});
    } else {
      local -= A_ * S_;
      bool charge = local < CS_ * (T_ - 1);
      if (!charge) local -= CS_ * (T_ - 1);
      info.kind = charge ? Kind::charge_flag : Kind::discharge_flag;
      info.station = local / (T_ - 1);
      info.t = local % (T_ - 1) + 1;
      info.name =
          tag(charge ? "Ic" : "Id", {info.sc, info.k, info.station, info.t});
    }
    return info;
  }

  auto split3 = [&](int base, int dim, int& mid, int& t) {
    int local = flat - base;
    t = local % T_;
    int rest = local / T_;
    mid = rest % dim;
    return rest / dim;  // scenario
  };
  if (flat < base_qg_) {
    info.kind = Kind::pg;
    info.sc = split3(base_pg_, G_, info.unit, info.t);
    info.name = tag("Pg", {info.sc, info.unit, info.t});
  } else if (flat < base_pv_) {
    info.kind = Kind::qg;
    info.sc = split3(base_qg_, G_, info.unit, info.t);
    info.name = tag("Qg", {info.sc, info.unit, info.t});
  } else if (flat < base_pc_) {
    info.kind = Kind::pv;
    info.sc = split3(base_pv_, P_, info.unit, info.t);
    info.name = tag("Pv", {info.sc, info.unit, info.t});
  } else if (flat < base_pm_) {
    bool charge = flat < base_pd_;
    int local = flat - (charge ? base_pc_ : base_pd_);
    info.kind = charge ? Kind::pc : Kind::pd;
    info.t = local % (T_ - 1) + 1;
    int rest = local / (T_ - 1);
    info.station = rest % CS_;
    rest /= CS_;
    info.k = rest % K_;
    info.sc = rest / K_;
    info.name = tag(charge ? "Pc" : "Pd", {info.sc, info.k, info.station, info.t});
  } else if (flat < base_e_) {
    int local = flat - base_pm_;
    info.kind = Kind::pm;
    info.t = local % (T_ - 1) + 1;
    int rest = local / (T_ - 1);
    info.k = rest % K_;
    info.sc = rest / K_;
    info.name = tag("Pm", {info.sc, info.k, info.t});
  } else if (flat < base_pf_) {
    int local = flat - base_e_;
    info.kind = Kind::energy;
    info.t = local % T_;
    int rest = local / T_;
    info.k = rest % K_;
    info.sc = rest / K_;
    info.name = tag("E", {info.sc, info.k, info.t});
  } else if (flat < base_qf_) {
    info.kind = Kind::pf;
    info.sc = split3(base_pf_, L_, info.unit, info.t);
    info.name = tag("Pf", {info.sc, info.unit, info.t});
  } else if (flat < base_v_) {
    info.kind = Kind::qf;
    info.sc = split3(base_qf_, L_, info.unit, info.t);
    info.name = tag("Qf", {info.sc, info.unit, info.t});
  } else {
    info.kind = Kind::voltage;
    info.sc = split3(base_v_, B_, info.unit, info.t);
    info.name = tag("V", {info.sc, info.unit, info.t});
  }
  return info;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::gap_feasible: return "gap_feasible";
    case SolveStatus::time_limit_feasible: return "time_limit_feasible";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::timeout_no_solution: return "timeout_no_solution";
    case SolveStatus::backend_error: return "backend_error";
  }
  return "unknown";
}

bool has_values(SolveStatus s) {
  return s == SolveStatus::optimal || s == SolveStatus::gap_feasible ||
         s == SolveStatus::time_limit_feasible;
}

}  // namespace jrsopt::mip
