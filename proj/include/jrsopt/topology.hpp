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

#ifndef JRSOPT_TOPOLOGY_HPP
#define JRSOPT_TOPOLOGY_HPP

#include <string>
#include <utility>
#include <vector>

namespace jrsopt::topo {

/// One directed road segment between two physical nodes. `duration` is the
/// free-flow travel time in whole timespans (>= 1).
struct PhysicalArc {
  int source = 0;  // external node id
  int target = 0;
  int duration = 1;
};

/// Start/destination pair a vehicle day can be drawn from.
using OdPair = std::pair<int, int>;

/// The physical road network plus the node pools used when sampling job
/// schedules. Node ids are externally chosen integers (they need not be
/// contiguous); ordering of `nodes` fixes the internal dense ordering.
struct TransportNetwork {
  std::vector<int> nodes;
  std::vector<PhysicalArc> arcs;
  std::vector<int> stations;  // subset of nodes with a charging station

  // Schedule-sampling template (topology half: where trips may start,
  // end, and park). Time windows live in the sampling config.
  std::vector<OdPair> od_pairs;
  std::vector<int> shift_pool_a;
  std::vector<int> shift_pool_b;

  int node_order(int node_id) const;  // dense index, -1 if unknown
  bool is_station(int node_id) const;

  /// Throws std::invalid_argument when an invariant is broken (unknown arc
  /// endpoint, duration < 1, station outside the node set, ...).
  void validate() const;
};

/// Reads the documented plain-text schema: `node`, `arc <src> <dst> <dur>`,
/// `station`, `odpair`, `pool_a`, `pool_b` records, '#' comments.
TransportNetwork load_transport_network(const std::string& path);
void save_transport_network(const TransportNetwork& tn, const std::string& path);

enum class NodeKind { physical, chain, vcn };

struct AugmentedNode {
  NodeKind kind = NodeKind::physical;
  int physical_id = -1;   // external id when kind == physical
  int origin_arc = -1;    // index into TransportNetwork::arcs for virtual nodes
  std::string label;      // e.g. "n5", "c5>6.1", "v5>6"
};

struct TsnArc {
  int id = -1;
  int source = 0;  // augmented node indices
  int target = 0;
  bool stationary = false;
  bool vcn_entry = false;  // first arc of a congestion detour
  bool vcn_exit = false;   // leaves a virtual congestion node
  bool in_ca = false;      // available while congested
  bool in_nca = false;     // available in free flow
};

/// Congestion-aware expansion of a TransportNetwork. Immutable after
/// construction; the arc ordering is deterministic (stationary arcs in node
/// order, then per physical arc sorted by (source order, target order):
/// free-flow chain in position order, then the detour entry and exits), so
/// rebuilding from the same network reproduces identical arc ids.
struct TimeSpaceNetwork {
  int timesteps = 0;  // |T|
  int timespans = 0;  // |S| = |T| - 1
  int physical_count = 0;
  int congestion_delay = 1;  // extra timespans a congested trip takes

  std::vector<AugmentedNode> nodes;
  std::vector<TsnArc> arcs;

  std::vector<int> stationary_arc;      // per physical node order: arc id ii
  std::vector<std::vector<int>> out_arcs;  // per augmented node: A^{i+}
  std::vector<std::vector<int>> in_arcs;

  // Materialized arc-id sets, ascending.
  std::vector<int> ca_arcs;
  std::vector<int> nca_arcs;
  std::vector<int> nsa_arcs;  // all non-stationary arcs

  int augmented_index(int physical_id) const;  // -1 if unknown
  const std::vector<int>& arcs_from(int augmented_node) const;
};

/// Expands `tn` over `timesteps` states. Every physical arc of duration d
/// gets a free-flow chain of d arcs through d-1 chain nodes (first arc
/// free-flow only, later ones shared with the congested route) and a detour
/// of d + congestion_delay arcs through virtual congestion nodes whose entry
/// is usable only under congestion and whose exits are always usable.
TimeSpaceNetwork build_tsn(const TransportNetwork& tn, int timesteps,
                           int congestion_delay = 1);

/// Arc ids an EV may travel during one timespan: the congested set when
/// `congested`, the free-flow set otherwise.
const std::vector<int>& available_arcs(const TimeSpaceNetwork& tsn, bool congested);

/// One (arcs into node, arcs out of node) pair per augmented node, in node
/// order. Both sides partition the arc set.
std::vector<std::pair<std::vector<int>, std::vector<int>>> flow_pairs(
    const TimeSpaceNetwork& tsn);

/// Worst-case travel time in timespans from `from_node` to `to_node`
/// (every arc at duration + congestion_delay). Used to sanity-check sampled
/// schedules. Returns -1 when unreachable.
int pessimistic_distance(const TransportNetwork& tn, int from_node, int to_node);

}  // namespace jrsopt::topo

#endif  // JRSOPT_TOPOLOGY_HPP
