// Copyright 2026 the jrsopt authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <numeric>

#include "jrsopt/grid.hpp"

using namespace jrsopt::grid;

TEST_CASE("bundled 33-bus feeder loads and is radial") {
  auto gm = load_grid(std::string(JRSOPT_DATA_DIR) + "/ieee33.grid");
  CHECK(gm.dn.buses.size() == 33);
  CHECK(gm.dn.lines.size() == 32);
  CHECK(gm.dn.slack_bus == 1);
  CHECK(gm.dn.v_base_kv == doctest::Approx(12.66));
  CHECK(gm.dn.s_base_mva == doctest::Approx(10.0));
  CHECK(gm.dn.z_base_ohm() == doctest::Approx(12.66 * 12.66 / 10.0));
  CHECK(gm.dn.s_base_kw() == doctest::Approx(10000.0));

  auto diag = validate_radial(gm.dn);
  CHECK(diag.ok);
  CHECK(diag.problems.empty());

  // Standard totals for this load table.
  double tp = std::accumulate(gm.dn.nominal_p_kw.begin(), gm.dn.nominal_p_kw.end(), 0.0);
  double tq =
      std::accumulate(gm.dn.nominal_q_kvar.begin(), gm.dn.nominal_q_kvar.end(), 0.0);
  CHECK(tp == doctest::Approx(3715.0));
  CHECK(tq == doctest::Approx(2300.0));

  CHECK(gm.generators.size() == 3);
  CHECK(gm.pv_units.size() == 2);
  CHECK(gm.stations.bus_of_station.size() == 3);
  CHECK(gm.stations.covers({6, 8, 10}));
  CHECK(!gm.stations.covers({6, 8, 10, 99}));

  // First line of the table in per-unit.
  CHECK(gm.dn.r_pu(0) == doctest::Approx(0.0922 / gm.dn.z_base_ohm()));
  CHECK(gm.dn.x_pu(0) == doctest::Approx(0.0477 / gm.dn.z_base_ohm()));
}

TEST_CASE("index structures partition the line set") {
  auto gm = load_grid(std::string(JRSOPT_DATA_DIR) + "/ieee33.grid");
  const auto& dn = gm.dn;
  size_t down_total = 0;
  for (const auto& dl : dn.down_lines) down_total += dl.size();
  CHECK(down_total == dn.lines.size());

  int slack = dn.bus_order(dn.slack_bus);
  for (size_t b = 0; b < dn.buses.size(); ++b) {
    if (static_cast<int>(b) == slack)
      CHECK(dn.up_line[b] == -1);
    else
      CHECK(dn.up_line[b] >= 0);
  }
  // up_line really points at the line whose downstream end is b.
  for (size_t b = 0; b < dn.buses.size(); ++b) {
    if (dn.up_line[b] < 0) continue;
    CHECK(dn.lines[static_cast<size_t>(dn.up_line[b])].down_bus == dn.buses[b]);
  }
}

TEST_CASE("radial diagnostics name the offender") {
  DistributionNetwork dn;
  dn.buses = {1, 2};
  dn.slack_bus = 1;
  auto diag = validate_radial(dn);
  CHECK(!diag.ok);
  REQUIRE(!diag.problems.empty());
  CHECK(diag.problems[0].find("bus 2 unreachable") != std::string::npos);

  // 3 buses in a cycle hanging off nothing reachable.
  DistributionNetwork cyc;
  cyc.buses = {1, 2, 3, 4};
  cyc.slack_bus = 1;
  cyc.lines = {{2, 3, 0.1, 0.1, 10, 10},
               {3, 4, 0.1, 0.1, 10, 10},
               {4, 2, 0.1, 0.1, 10, 10}};
  auto d2 = validate_radial(cyc);
  CHECK(!d2.ok);
  bool named = false;
  for (const auto& p : d2.problems)
    if (p.find("cycle") != std::string::npos) named = true;
  CHECK(named);

  // Mesh: one bus fed twice.
  DistributionNetwork mesh;
  mesh.buses = {1, 2, 3};
  mesh.slack_bus = 1;
  mesh.lines = {{1, 2, 0.1, 0.1, 10, 10},
                {1, 3, 0.1, 0.1, 10, 10},
                {2, 3, 0.1, 0.1, 10, 10}};
  auto d3 = validate_radial(mesh);
  CHECK(!d3.ok);
  bool mesh_named = false;
  for (const auto& p : d3.problems)
    if (p.find("bus 3") != std::string::npos && p.find("upstream") != std::string::npos)
      mesh_named = true;
  CHECK(mesh_named);

  // Valid 2-bus feeder passes.
  DistributionNetwork ok2;
  ok2.buses = {1, 2};
  ok2.slack_bus = 1;
  ok2.lines = {{1, 2, 0.1, 0.1, 10, 10}};
  CHECK(validate_radial(ok2).ok);
}

TEST_CASE("loader rejects malformed files") {
  auto write_tmp = [](const std::string& body) {
    std::string path = "bad_grid_tmp.grid";
    std::ofstream out(path);
    out << body;
    return path;
  };
  CHECK_THROWS(load_grid("no_such_file.grid"));
  auto p1 = write_tmp("bus 1\nbus 2\nline 1 2 -0.1 0.1 10 10\n");
  CHECK_THROWS(load_grid(p1));
  auto p2 = write_tmp("bus 1\ngen 7 0 1 0 1 0.1\n");
  CHECK_THROWS(load_grid(p2));
  auto p3 = write_tmp("bus 1\nbus 2\nline 1 2 0.1 0.1 10 10\ngen 1 5 1 0 1 0.1\n");
  CHECK_THROWS(load_grid(p3));
  std::remove("bad_grid_tmp.grid");
}
