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

#include "jrsopt/topology.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace jrsopt::topo {

int TransportNetwork::node_order(int node_id) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == node_id) return static_cast<int>(i);
  return -1;
}

bool TransportNetwork::is_station(int node_id) const {
  return std::find(stations.begin(), stations.end(), node_id) != stations.end();
}

void TransportNetwork::validate() const {
  if (nodes.empty()) throw std::invalid_argument("transport network has no nodes");
  std::unordered_map<int, int> seen;
  for (int n : nodes) {
    if (++seen[n] > 1)
      throw std::invalid_argument("duplicate node id " + std::to_string(n));
  }
  auto known = [&](int n) { return seen.count(n) > 0; };
  for (const auto& a : arcs) {
    if (!known(a.source) || !known(a.target))
      throw std::invalid_argument("arc " + std::to_string(a.source) + "->" +
                                  std::to_string(a.target) +
                                  " references an unknown node");
    if (a.source == a.target)
      throw std::invalid_argument("self-loop arc at node " +
                                  std::to_string(a.source));
    if (a.duration < 1)
      throw std::invalid_argument("arc duration must be >= 1");
  }
  auto check_subset = [&](const std::vector<int>& subset, const char* what) {
    for (int n : subset)
      if (!known(n))
        throw std::invalid_argument(std::string(what) + " node " +
                                    std::to_string(n) + " is not in the network");
  };
  check_subset(stations, "station");
  check_subset(shift_pool_a, "pool_a");
  check_subset(shift_pool_b, "pool_b");
  for (const auto& [o, d] : od_pairs) {
    if (!known(o) || !known(d))
      throw std::invalid_argument("od pair references an unknown node");
  }
}

TransportNetwork load_transport_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open transport network file " + path);
  TransportNetwork tn;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    auto fail = [&](const std::string& msg) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + msg);
    };
    if (kw == "node") {
      int id;
      if (!(ls >> id)) fail("node needs an id");
      tn.nodes.push_back(id);
    } else if (kw == "arc") {
      PhysicalArc a;
      if (!(ls >> a.source >> a.target >> a.duration)) fail("arc needs src dst dur");
      tn.arcs.push_back(a);
    } else if (kw == "station") {
      int id;
      if (!(ls >> id)) fail("station needs a node id");
      tn.stations.push_back(id);
    } else if (kw == "odpair") {
      int o, d;
      if (!(ls >> o >> d)) fail("odpair needs two node ids");
      tn.od_pairs.emplace_back(o, d);
    } else if (kw == "pool_a" || kw == "pool_b") {
      int id;
      if (!(ls >> id)) fail(kw + " needs a node id");
      (kw == "pool_a" ? tn.shift_pool_a : tn.shift_pool_b).push_back(id);
    } else {
      fail("unknown record '" + kw + "'");
    }
  }
  tn.validate();
  return tn;
}

void save_transport_network(const TransportNetwork& tn, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (int n : tn.nodes) out << "node " << n << "\n";
  for (const auto& a : tn.arcs)
    out << "arc " << a.source << " " << a.target << " " << a.duration << "\n";
  for (int s : tn.stations) out << "station " << s << "\n";
  for (const auto& [o, d] : tn.od_pairs) out << "odpair " << o << " " << d << "\n";
  for (int n : tn.shift_pool_a) out << "pool_a " << n << "\n";
  for (int n : tn.shift_pool_b) out << "pool_b " << n << "\n";
}

int TimeSpaceNetwork::augmented_index(int physical_id) const {
  for (int i = 0; i < physical_count; ++i)
    if (nodes[i].physical_id == physical_id) return i;
  return -1;
}

const std::vector<int>& TimeSpaceNetwork::arcs_from(int augmented_node) const {
  return out_arcs.at(static_cast<size_t>(augmented_node));
}

TimeSpaceNetwork build_tsn(const TransportNetwork& tn, int timesteps,
                           int congestion_delay) {
  tn.validate();
  if (timesteps < 2) throw std::invalid_argument("need at least 2 timesteps");
  if (congestion_delay < 1)
    throw std::invalid_argument("congestion delay must be >= 1");

  TimeSpaceNetwork tsn;
  tsn.timesteps = timesteps;
  tsn.timespans = timesteps - 1;
  tsn.physical_count = static_cast<int>(tn.nodes.size());
  tsn.congestion_delay = congestion_delay;

  for (int n : tn.nodes) {
    AugmentedNode an;
    an.kind = NodeKind::physical;
    an.physical_id = n;
    an.label = "n" + std::to_string(n);
    tsn.nodes.push_back(an);
  }

  auto add_arc = [&](int src, int dst, bool stationary, bool entry, bool exit,
                     bool ca, bool nca) {
    TsnArc arc;
    arc.id = static_cast<int>(tsn.arcs.size());
    arc.source = src;
    arc.target = dst;
    arc.stationary = stationary;
    arc.vcn_entry = entry;
    arc.vcn_exit = exit;
    arc.in_ca = ca;
    arc.in_nca = nca;
    tsn.arcs.push_back(arc);
    return arc.id;
  };

  // Staying put is always possible.
  tsn.stationary_arc.resize(tn.nodes.size());
  for (size_t i = 0; i < tn.nodes.size(); ++i)
    tsn.stationary_arc[i] =
        add_arc(static_cast<int>(i), static_cast<int>(i), true, false, false,
                true, true);

  // Per-arc expansion in a canonical order so ids are reproducible.
  std::vector<int> order(tn.arcs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    int sa = tn.node_order(tn.arcs[a].source), sb = tn.node_order(tn.arcs[b].source);
    if (sa != sb) return sa < sb;
    int ta = tn.node_order(tn.arcs[a].target), tb = tn.node_order(tn.arcs[b].target);
    if (ta != tb) return ta < tb;
    return a < b;
  });

  for (int ai : order) {
    const PhysicalArc& pa = tn.arcs[ai];
    int u = tn.node_order(pa.source);
    int v = tn.node_order(pa.target);
    int d = pa.duration;
    std::string tag = std::to_string(pa.source) + ">" + std::to_string(pa.target);

    // Free-flow chain u -> w_1 -> ... -> w_{d-1} -> v. The first hop commits
    // the vehicle to the trip, so it is free-flow only; the rest of the chain
    // is shared with the congested detour, which merges back after its extra
    // delay.
    std::vector<int> waypoints;  // chain node indices, size d-1
    for (int k = 1; k < d; ++k) {
      AugmentedNode an;
      an.kind = NodeKind::chain;
      an.origin_arc = ai;
      an.label = "c" + tag + "." + std::to_string(k);
      waypoints.push_back(static_cast<int>(tsn.nodes.size()));
      tsn.nodes.push_back(an);
    }
    int prev = u;
    for (int k = 0; k < d; ++k) {
      int next = (k + 1 < d) ? waypoints[static_cast<size_t>(k)] : v;
      bool first = (k == 0);
      add_arc(prev, next, false, false, false, /*ca=*/!first, /*nca=*/true);
      prev = next;
    }

    // Congested detour: u -> x_1 -> ... -> x_delay -> (w_1 | v), entry arc
    // usable only while the arc is congested.
    int dprev = u;
    for (int k = 0; k < congestion_delay; ++k) {
      AugmentedNode an;
      an.kind = NodeKind::vcn;
      an.origin_arc = ai;
      an.label = congestion_delay == 1
                     ? "v" + tag
                     : "v" + tag + "." + std::to_string(k + 1);
      int x = static_cast<int>(tsn.nodes.size());
      tsn.nodes.push_back(an);
      add_arc(dprev, x, false, /*entry=*/k == 0, /*exit=*/k > 0, /*ca=*/true,
              /*nca=*/k > 0);
      dprev = x;
    }
    int rejoin = waypoints.empty() ? v : waypoints.front();
    add_arc(dprev, rejoin, false, false, /*exit=*/true, true, true);
  }

  tsn.out_arcs.assign(tsn.nodes.size(), {});
  tsn.in_arcs.assign(tsn.nodes.size(), {});
  for (const auto& arc : tsn.arcs) {
    tsn.out_arcs[static_cast<size_t>(arc.source)].push_back(arc.id);
    tsn.in_arcs[static_cast<size_t>(arc.target)].push_back(arc.id);
    if (arc.in_ca) tsn.ca_arcs.push_back(arc.id);
    if (arc.in_nca) tsn.nca_arcs.push_back(arc.id);
    if (!arc.stationary) tsn.nsa_arcs.push_back(arc.id);
  }
  return tsn;
}

const std::vector<int>& available_arcs(const TimeSpaceNetwork& tsn, bool congested) {
  return congested ? tsn.ca_arcs : tsn.nca_arcs;
}

std::vector<std::pair<std::vector<int>, std::vector<int>>> flow_pairs(
    const TimeSpaceNetwork& tsn) {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
  out.reserve(tsn.nodes.size());
  for (size_t i = 0; i < tsn.nodes.size(); ++i)
    out.emplace_back(tsn.in_arcs[i], tsn.out_arcs[i]);
  return out;
}

int pessimistic_distance(const TransportNetwork& tn, int from_node, int to_node) {
  int n = static_cast<int>(tn.nodes.size());
  int src = tn.node_order(from_node), dst = tn.node_order(to_node);
  if (src < 0 || dst < 0) throw std::invalid_argument("unknown node in distance query");
  const int inf = std::numeric_limits<int>::max();
  std::vector<int> dist(static_cast<size_t>(n), inf);
  dist[static_cast<size_t>(src)] = 0;
  // Bellman-Ford; networks are small and arc weights tiny.
  for (int round = 0; round < n; ++round) {
    bool changed = false;
    for (const auto& a : tn.arcs) {
      int u = tn.node_order(a.source), v = tn.node_order(a.target);
      int w = a.duration + 1;  // every trip may hit one congestion detour
      if (dist[static_cast<size_t>(u)] != inf &&
          dist[static_cast<size_t>(u)] + w < dist[static_cast<size_t>(v)]) {
        dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + w;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return dist[static_cast<size_t>(dst)] == inf ? -1 : dist[static_cast<size_t>(dst)];
}

}  // namespace jrsopt::topo
