#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stack>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modforge/ecat_sim.hpp"

namespace modforge {

struct SlaveRecord {
  std::string module_identifier;
  int position = 0;
  int parent_position = 0;         // 0 = master
  std::optional<int> parent_port;  // {1,2,3}; none for the first slave
  std::stack<int> free_ports_stack;

  friend bool operator==(const SlaveRecord& a, const SlaveRecord& b) {
    return a.module_identifier == b.module_identifier && a.position == b.position &&
           a.parent_position == b.parent_position && a.parent_port == b.parent_port;
  }
};

/// Network topology: one node per ring position, edges keyed by the parent
/// ESC port that leads to the child.
struct TopologyGraph {
  struct Edge {
    int parent = 0;
    int port = 0;
    int child = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
  };

  std::vector<SlaveRecord> nodes;  // nodes[i].position == i + 1
  std::vector<Edge> edges;         // ordered by child position

  const SlaveRecord& node(int position) const { return nodes.at(position - 1); }
  /// Children of `position` keyed by the parent port.
  std::map<int, int> children(int position) const;
};

using OpenPortsFn = std::function<std::vector<int>(int)>;

/// Backward scan over the ring: each earlier slave is classified by its open
/// port count (end point, link, split, cross) and the first candidate that
/// balances the counter is the parent. Returns 0 for the first slave.
int find_parent_position(int slave_pos, const OpenPortsFn& open_ports_of);

/// Reconstructs parent position and parent port for every slave. Throws
/// Error{Topology} when the reads are inconsistent with a tree.
std::vector<SlaveRecord> recognize_topology(const SlaveRegisters& registers);

TopologyGraph build_chi(std::vector<SlaveRecord> records);

nlohmann::json chi_to_json(const TopologyGraph& chi);

}  // namespace modforge
