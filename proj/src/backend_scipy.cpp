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

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "jrsopt/bridge_script.hpp"
#include "jrsopt/mipcore.hpp"

namespace jrsopt::mip {

namespace {

using nlohmann::json;

constexpr double kInf = 1e30;

double clamp_inf(double v) {
  if (v > kInf) return kInf;
  if (v < -kInf) return -kInf;
  return v;
}

json encode_model(const MipModel& model) {
  json req;
  req["n"] = model.var_count;
  std::vector<double> lo(model.lower.size()), up(model.upper.size());
  for (size_t i = 0; i < model.lower.size(); ++i) lo[i] = clamp_inf(model.lower[i]);
  for (size_t i = 0; i < model.upper.size(); ++i) up[i] = clamp_inf(model.upper[i]);
  req["lower"] = lo;
  req["upper"] = up;
  req["objective"] = model.objective;
  req["integrality"] = std::vector<int>(model.is_integer.begin(),
                                        model.is_integer.end());

  std::vector<long> row_start{0};
  std::vector<int> col_idx;
  std::vector<double> coef;
  std::vector<double> row_lb, row_ub;
  row_start.reserve(model.constraints.size() + 1);
  for (const auto& row : model.constraints) {
    col_idx.insert(col_idx.end(), row.idx.begin(), row.idx.end());
    coef.insert(coef.end(), row.coef.begin(), row.coef.end());
    row_start.push_back(static_cast<long>(col_idx.size()));
    switch (row.sense) {
      case '=':
        row_lb.push_back(row.rhs);
        row_ub.push_back(row.rhs);
        break;
      case '<':
        row_lb.push_back(-kInf);
        row_ub.push_back(row.rhs);
        break;
      case '>':
        row_lb.push_back(row.rhs);
        row_ub.push_back(kInf);
        break;
      default:
        throw std::invalid_argument(std::string("unknown row sense '") +
                                    row.sense + "'");
    }
  }
  req["row_start"] = row_start;
  req["col_idx"] = col_idx;
  req["coef"] = coef;
  req["row_lb"] = row_lb;
  req["row_ub"] = row_ub;
  return req;
}

}  // namespace

struct SubprocessHighsBackend::Impl {
  pid_t pid = -1;
  FILE* to_child = nullptr;
  FILE* from_child = nullptr;
  std::string script_path;

  Impl() {
    // A dead helper must surface as an EOF error, not a broken-pipe kill.
    std::signal(SIGPIPE, SIG_IGN);

    const char* tmp = std::getenv("TMPDIR");
    std::string path = std::string(tmp && *tmp ? tmp : "/tmp") +
                       "/jrsopt_bridge_XXXXXX.py";
    std::vector<char> buf(path.begin(), path.end());
    buf.push_back('\0');
    int fd = mkstemps(buf.data(), 3);
    if (fd < 0) throw std::runtime_error("cannot create helper script file");
    script_path.assign(buf.data());
    size_t len = std::strlen(detail::kBridgeScript);
    if (write(fd, detail::kBridgeScript, len) != static_cast<ssize_t>(len)) {
      close(fd);
      throw std::runtime_error("cannot write helper script");
    }
    close(fd);

    int to_pipe[2], from_pipe[2];
    if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0)
      throw std::runtime_error("cannot create helper pipes");

    pid = fork();
    if (pid < 0) throw std::runtime_error("cannot fork helper process");
    if (pid == 0) {
      dup2(to_pipe[0], 0);
      dup2(from_pipe[1], 1);
      close(to_pipe[0]);
      close(to_pipe[1]);
      close(from_pipe[0]);
      close(from_pipe[1]);
      execlp("python3", "python3", "-u", script_path.c_str(),
             static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_pipe[0]);
    close(from_pipe[1]);
    to_child = fdopen(to_pipe[1], "w");
    from_child = fdopen(from_pipe[0], "r");
    if (!to_child || !from_child)
      throw std::runtime_error("cannot attach helper pipes");

    json pong = roundtrip({{"op", "ping"}});
    if (!pong.value("ok", false))
      throw std::runtime_error("MILP helper handshake failed");
  }

  ~Impl() {
    if (to_child) {
      json quit{{"op", "quit"}};
      std::string line = quit.dump();
      line.push_back('\n');
      fwrite(line.data(), 1, line.size(), to_child);
      fflush(to_child);
      fclose(to_child);
    }
    if (from_child) fclose(from_child);
    if (pid > 0) waitpid(pid, nullptr, 0);
    if (!script_path.empty()) unlink(script_path.c_str());
  }

  json roundtrip(const json& request) {
    std::string line = request.dump();
    line.push_back('\n');
    if (fwrite(line.data(), 1, line.size(), to_child) != line.size() ||
        fflush(to_child) != 0)
      throw std::runtime_error("MILP helper is gone (write failed); "
                               "python3 with numpy and scipy is required");

    char* reply = nullptr;
    size_t cap = 0;
    ssize_t got = getline(&reply, &cap, from_child);
    if (got < 0) {
      free(reply);
      throw std::runtime_error("MILP helper produced no reply; "
                               "python3 with numpy and scipy is required");
    }
    json resp = json::parse(std::string(reply, static_cast<size_t>(got)));
    free(reply);
    if (resp.contains("error"))
      throw std::runtime_error("MILP helper error: " +
                               resp["error"].get<std::string>());
    return resp;
  }
};

SubprocessHighsBackend::SubprocessHighsBackend() : impl_(new Impl) {}

SubprocessHighsBackend::~SubprocessHighsBackend() = default;

Solution SubprocessHighsBackend::solve(const MipModel& model,
                                       const SolverParams& params) {
  json req = encode_model(model);
  req["op"] = "solve";
  req["mip_gap"] = params.mip_gap;
  req["time_limit"] = clamp_inf(params.time_limit_s);
  // Recorded for the request log; the helper's engine accepts neither.
  req["threads"] = params.threads;
  req["seed"] = params.seed;

  json resp = impl_->roundtrip(req);

  Solution sol;
  sol.scenario = model.scenario;
  sol.solve_seconds = resp.value("seconds", 0.0);
  sol.message = resp.value("message", "");
  sol.mip_gap = resp.value("mip_gap", 0.0);
  bool has_x = resp.contains("x");
  if (has_x) {
    auto x = resp["x"].get<std::vector<double>>();
    if (static_cast<int>(x.size()) != model.var_count)
      throw std::runtime_error("MILP helper returned a wrong-sized solution");
    sol.values = Eigen::Map<const Eigen::VectorXd>(x.data(),
                                                   static_cast<Eigen::Index>(x.size()));
    sol.objective = resp.value("fun", 0.0);
  }

  switch (resp.value("status", -1)) {
    case 0:
      sol.status = has_x && sol.mip_gap <= 1e-9 ? SolveStatus::optimal
                 : has_x                        ? SolveStatus::gap_feasible
                                                : SolveStatus::backend_error;
      break;
    case 1:
      sol.status = has_x ? SolveStatus::time_limit_feasible
                         : SolveStatus::timeout_no_solution;
      break;
    case 2:
      sol.status = SolveStatus::infeasible;
      break;
    default:
      sol.status = SolveStatus::backend_error;
      break;
  }
  return sol;
}

std::vector<LpResult> SubprocessHighsBackend::solve_lp_batch(
    const MipModel& model, const std::vector<PartialAssignment>& patterns) {
  json req = encode_model(model);
  req["op"] = "lp_batch";
  json pats = json::array();
  for (const auto& pattern : patterns) {
    json p = json::array();
    for (const auto& [idx, val] : pattern) p.push_back(json::array({idx, val}));
    pats.push_back(std::move(p));
  }
  req["patterns"] = std::move(pats);

  json resp = impl_->roundtrip(req);
  std::vector<LpResult> out;
  for (const auto& r : resp["results"]) {
    LpResult lr;
    lr.feasible = r[0].get<bool>();
    lr.objective = r[1].get<double>();
    out.push_back(lr);
  }
  return out;
}

}  // namespace jrsopt::mip
