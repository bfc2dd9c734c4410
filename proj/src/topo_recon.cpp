#include "modforge/topo_recon.hpp"

#include <set>

#include "modforge/error.hpp"

namespace modforge {

int find_parent_position(int slave_pos, const OpenPortsFn& open_ports_of) {
  int parent_pos = 0;
  if (slave_pos > 1) {
    int candidate = slave_pos - 1;
    int topology_counter = 0;
    while (candidate > 0) {
      const auto num_open = static_cast<int>(open_ports_of(candidate).size());
      switch (num_open) {
        case 1: topology_counter -= 1; break;  // end point
        case 2: break;                         // link point
        case 3: topology_counter += 1; break;  // split point
        case 4: topology_counter += 2; break;  // cross point
        default: break;
      }
      if ((topology_counter >= 0 && num_open > 1) || candidate == 1) {
        parent_pos = candidate;
        candidate = 0;
      }
      --candidate;
    }
  }
  return parent_pos;
}

std::vector<SlaveRecord> recognize_topology(const SlaveRegisters& registers) {
  const int n = registers.slave_count();
  std::vector<SlaveRecord> slaves(static_cast<std::size_t>(n));
  const OpenPortsFn open_ports_of = [&](int pos) { return registers.open_ports(pos); };

  for (int i = 1; i <= n; ++i) {
    auto& s = slaves[i - 1];
    const int parent_pos = find_parent_position(i, open_ports_of);
    s.module_identifier = registers.module_identifier(i);
    s.position = i;
    s.parent_position = parent_pos;

    // Only downstream ports can host a child. Pushing them in descending
    // order makes pops hand them out in ascending order, the same order in
    // which the telegram visits the children.
    const auto open = registers.open_ports(i);
    for (auto it = open.rbegin(); it != open.rend(); ++it) {
      if (*it != 0) s.free_ports_stack.push(*it);
    }

    if (parent_pos != 0) {
      auto& parent = slaves[parent_pos - 1];
      if (parent.free_ports_stack.empty()) {
        throw Error(ErrorKind::Topology, "topo_recon", std::to_string(i),
                    "slave " + std::to_string(i) + " claims parent " + std::to_string(parent_pos) +
                        " which has no free downstream port; the ring is inconsistent with a tree");
      }
      s.parent_port = parent.free_ports_stack.top();
      parent.free_ports_stack.pop();
    }
  }

  for (const auto& s : slaves) {
    if (!s.free_ports_stack.empty()) {
      throw Error(ErrorKind::Topology, "topo_recon", std::to_string(s.position),
                  "slave " + std::to_string(s.position) + " reports open port " +
                      std::to_string(s.free_ports_stack.top()) + " with no child behind it");
    }
  }
  return slaves;
}

std::map<int, int> TopologyGraph::children(int position) const {
  std::map<int, int> out;
  for (const auto& e : edges) {
    if (e.parent == position) out[e.port] = e.child;
  }
  return out;
}

TopologyGraph build_chi(std::vector<SlaveRecord> records) {
  auto corrupt = [](int pos, const std::string& msg) {
    throw Error(ErrorKind::Topology, "topo_recon", std::to_string(pos), msg);
  };
  TopologyGraph chi;
  std::set<std::pair<int, int>> used;
  std::map<int, int> degree;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const int pos = static_cast<int>(i) + 1;
    if (r.position != pos) corrupt(r.position, "records are not ordered by ring position");
    if (pos == 1) {
      if (r.parent_position != 0 || r.parent_port) corrupt(pos, "the first slave must hang off the master");
      continue;
    }
    if (r.parent_position < 1 || r.parent_position >= pos) {
      corrupt(pos, "parent of slave " + std::to_string(pos) + " does not precede it on the ring");
    }
    if (!r.parent_port || *r.parent_port < 1 || *r.parent_port > 3) {
      corrupt(pos, "slave " + std::to_string(pos) + " has no valid parent port");
    }
    if (!used.emplace(r.parent_position, *r.parent_port).second) {
      corrupt(pos, "port " + std::to_string(*r.parent_port) + " of slave " + std::to_string(r.parent_position) +
                       " used twice");
    }
    if (++degree[r.parent_position] > 3) corrupt(r.parent_position, "more than three children on one ESC");
    chi.edges.push_back({r.parent_position, *r.parent_port, pos});
  }
  chi.nodes = std::move(records);
  return chi;
}

nlohmann::json chi_to_json(const TopologyGraph& chi) {
  nlohmann::json j{{"nodes", nlohmann::json::array()}, {"edges", nlohmann::json::array()}};
  for (const auto& n : chi.nodes) {
    j["nodes"].push_back({{"position", n.position},
                          {"module_identifier", n.module_identifier},
                          {"parent_position", n.parent_position},
                          {"parent_port", n.parent_port ? nlohmann::json(*n.parent_port) : nlohmann::json(nullptr)}});
  }
  for (const auto& e : chi.edges) j["edges"].push_back({{"parent", e.parent}, {"port", e.port}, {"child", e.child}});
  return j;
}

}  // namespace modforge
