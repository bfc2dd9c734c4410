#pragma once

#include <optional>
#include <string>
#include <vector>

#include "modforge/assembly.hpp"
#include "modforge/module_db.hpp"

namespace modforge {

/// The two register reads topology recognition depends on, indexed by
/// 1-based ring position.
class SlaveRegisters {
 public:
  virtual ~SlaveRegisters() = default;
  virtual int slave_count() const = 0;
  /// Ascending list of open ports; throws Error{Range} for a bad position.
  virtual std::vector<int> open_ports(int position) const = 0;
  virtual std::string module_identifier(int position) const = 0;
};

struct EcatSlave {
  int position = 0;  // ring order, 1-based; the master is 0
  std::string module_identifier;
  std::string instance_id;
  int esc_index_within_module = 0;
  std::vector<int> open_ports;  // ascending
  int entry_port = 0;           // port the telegram first arrives on
  /// Physical wiring toward the master: neighbor position and its port. Not
  /// readable through the registers; kept for inspection.
  int upstream_position = 0;
  std::optional<int> upstream_port;
};

class EcatNetwork final : public SlaveRegisters {
 public:
  std::vector<EcatSlave> slaves;     // slaves[i].position == i + 1
  std::vector<std::string> warnings;  // e.g. ESC-less modules turned into add-ons

  int slave_count() const override { return static_cast<int>(slaves.size()); }
  std::vector<int> open_ports(int position) const override;
  std::string module_identifier(int position) const override;
  const EcatSlave& at(int position) const;

  /// Ring position of ESC `esc` of `instance`, if it is a slave.
  std::optional<int> position_of(std::string_view instance, int esc = 0) const;
};

/// Simulates the telegram traversal of the assembled ring. Within one ESC the
/// cyclic element order is P0, EPU, P1, P2, P3: the telegram enters on the
/// upstream link, is stamped at the EPU, descends into every other open port
/// in encounter order and leaves through the entry port.
EcatNetwork build_network(const AssemblySpec& assembly, const ModuleDatabase& db);

std::vector<int> get_open_ports(const EcatNetwork& net, int position);
std::string get_module_identifier(const EcatNetwork& net, int position);

}  // namespace modforge
