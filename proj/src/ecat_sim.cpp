#include "modforge/ecat_sim.hpp"

#include <array>
#include <map>

#include "modforge/error.hpp"

namespace modforge {

namespace {

struct PortLink {
  std::size_t node;
  int port;
};

struct EscNode {
  std::string instance;
  std::string module_id;
  int esc = 0;
  std::array<std::optional<PortLink>, 4> ports;
  bool master_link = false;  // the master feeds this ESC through `entry`
  int entry = 0;
};

// Cycle: P0, EPU, P1, P2, P3.
constexpr int kEpu = -1;
constexpr std::array<int, 5> kCycle{0, kEpu, 1, 2, 3};

int cycle_index(int port) { return port == 0 ? 0 : port + 1; }

/// Port that takes the upstream role when a module is mounted upside down:
/// the highest ESC-0 port wired to anything downstream, or 1 for leaves.
int flip_port(const ModuleDescription& d) {
  int fp = 1;
  bool found = false;
  for (const auto& c : d.connectors) {
    if (c.kind == ConnectorKind::Output && c.esc_index == 0 && (!found || c.esc_port > fp)) {
      fp = c.esc_port;
      found = true;
    }
  }
  for (const auto& l : d.internal_links) {
    if (l.from.esc == 0 && (!found || l.from.port > fp)) {
      fp = l.from.port;
      found = true;
    }
  }
  return fp;
}

class Builder {
 public:
  Builder(const AssemblySpec& a, const ModuleDatabase& db) : assembly_(a), db_(db) {}

  EcatNetwork run() {
    validate_assembly(assembly_, db_);
    for (const auto& p : assembly_.placements) add_module(p);
    for (const auto& p : assembly_.placements) connect_to_parent(p);

    const auto root_it = first_node_.find(assembly_.root);
    if (root_it == first_node_.end()) {
      net_.warnings.push_back("root '" + assembly_.root + "' has no ESC; the ring is empty");
      return std::move(net_);
    }
    const std::size_t root = root_it->second;
    const int entry = physical_port(root, 0);
    nodes_[root].master_link = true;
    nodes_[root].entry = entry;
    visit(root, entry, std::nullopt);
    resolve_upstream();
    for (auto& s : net_.slaves) s.open_ports = open_ports_of(node_of_position_[s.position - 1]);
    return std::move(net_);
  }

 private:
  void add_module(const Placement& p) {
    const auto& d = db_.at(p.module_id);
    if (d.esc_count == 0) return;
    const std::size_t base = nodes_.size();
    first_node_[p.instance_id] = base;
    for (int e = 0; e < d.esc_count; ++e) {
      EscNode n;
      n.instance = p.instance_id;
      n.module_id = p.module_id;
      n.esc = e;
      nodes_.push_back(std::move(n));
    }
    if (p.flipped) flip_[base] = flip_port(d);
    for (const auto& l : d.internal_links) {
      link(base + l.from.esc, l.from.port, base + l.to.esc, l.to.port);
    }
  }

  void connect_to_parent(const Placement& p) {
    if (!p.parent_instance) return;
    const auto& d = db_.at(p.module_id);
    if (d.esc_count == 0) {
      net_.warnings.push_back("module '" + p.instance_id + "' (" + p.module_id +
                              ") has no ESC and is treated as an add-on, not a slave");
      return;
    }
    const auto* parent = assembly_.find(*p.parent_instance);
    const auto& pd = db_.at(parent->module_id);
    const auto* c = pd.connector(p.parent_connector);
    const auto pit = first_node_.find(*p.parent_instance);
    if (pit == first_node_.end()) {
      throw Error(ErrorKind::Assembly, "ecat_sim", p.instance_id,
                  "parent '" + *p.parent_instance + "' has no ESC to connect to");
    }
    link(pit->second + c->esc_index, c->esc_port, first_node_.at(p.instance_id), 0);
  }

  int physical_port(std::size_t node, int port) const {
    auto it = flip_.find(node);
    if (it == flip_.end()) return port;
    if (port == 0) return it->second;
    if (port == it->second) return 0;
    return port;
  }

  void link(std::size_t a, int pa, std::size_t b, int pb) {
    pa = physical_port(a, pa);
    pb = physical_port(b, pb);
    if (nodes_[a].ports[pa] || nodes_[b].ports[pb]) {
      throw Error(ErrorKind::Assembly, "ecat_sim", nodes_[b].instance, "ESC port wired twice");
    }
    nodes_[a].ports[pa] = PortLink{b, pb};
    nodes_[b].ports[pb] = PortLink{a, pa};
  }

  std::vector<int> open_ports_of(std::size_t node) const {
    std::vector<int> out;
    for (int p = 0; p < 4; ++p) {
      if (nodes_[node].ports[p] || (nodes_[node].master_link && nodes_[node].entry == p)) out.push_back(p);
    }
    return out;
  }

  void visit(std::size_t node, int entry, std::optional<PortLink> from) {
    nodes_[node].entry = entry;
    from_[node] = from;
    const int start = cycle_index(entry);
    for (int step = 1; step < 5; ++step) {
      const int element = kCycle[(start + step) % 5];
      if (element == kEpu) {
        EcatSlave s;
        s.position = static_cast<int>(net_.slaves.size()) + 1;
        s.module_identifier = nodes_[node].module_id;
        s.instance_id = nodes_[node].instance;
        s.esc_index_within_module = nodes_[node].esc;
        s.entry_port = entry;
        position_of_node_[node] = s.position;
        node_of_position_.push_back(node);
        net_.slaves.push_back(std::move(s));
        continue;
      }
      const auto& l = nodes_[node].ports[element];
      if (!l) continue;  // closed port: the telegram moves on
      visit(l->node, l->port, PortLink{node, element});
    }
  }

  void resolve_upstream() {
    for (auto& s : net_.slaves) {
      const auto& from = from_.at(node_of_position_[s.position - 1]);
      if (!from) continue;
      s.upstream_position = position_of_node_.at(from->node);
      s.upstream_port = from->port;
    }
  }

  const AssemblySpec& assembly_;
  const ModuleDatabase& db_;
  EcatNetwork net_;
  std::vector<EscNode> nodes_;
  std::map<std::string, std::size_t> first_node_;
  std::map<std::size_t, int> flip_;
  std::map<std::size_t, int> position_of_node_;
  std::vector<std::size_t> node_of_position_;
  std::map<std::size_t, std::optional<PortLink>> from_;
};

}  // namespace

const EcatSlave& EcatNetwork::at(int position) const {
  if (position < 1 || position > slave_count()) {
    throw Error(ErrorKind::Range, "ecat_sim", std::to_string(position),
                "ring position " + std::to_string(position) + " out of range [1, " + std::to_string(slave_count()) +
                    "]");
  }
  return slaves[position - 1];
}

std::vector<int> EcatNetwork::open_ports(int position) const { return at(position).open_ports; }

std::string EcatNetwork::module_identifier(int position) const { return at(position).module_identifier; }

std::optional<int> EcatNetwork::position_of(std::string_view instance, int esc) const {
  for (const auto& s : slaves) {
    if (s.instance_id == instance && s.esc_index_within_module == esc) return s.position;
  }
  return std::nullopt;
}

EcatNetwork build_network(const AssemblySpec& assembly, const ModuleDatabase& db) {
  return Builder(assembly, db).run();
}

std::vector<int> get_open_ports(const EcatNetwork& net, int position) { return net.open_ports(position); }

std::string get_module_identifier(const EcatNetwork& net, int position) { return net.module_identifier(position); }

}  // namespace modforge
