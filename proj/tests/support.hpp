#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "modforge/assembly.hpp"
#include "modforge/model_gen.hpp"
#include "modforge/module_db.hpp"

namespace modforge::fixtures {

const ModuleDatabase& catalog();

AssemblySpec data_assembly(const std::string& name);

/// Random valid tree of `min_modules`..`max_modules` placements drawn from the
/// catalog. Every module with an ESC may be a parent; ESC-less modules only
/// appear when `allow_escless` is set.
AssemblySpec random_assembly(std::mt19937_64& rng, int min_modules, int max_modules, bool allow_escless = false);

/// Expected ring contents derived by a depth-first walk of the assembly:
/// each ESC is stamped on arrival, then its ports 1, 2, 3 are followed in
/// order. Only valid for assemblies without flipped modules.
struct ExpectedSlave {
  std::string instance;
  int esc = 0;
  std::string module_id;
  int parent_position = 0;
  std::optional<int> parent_port;
};
std::vector<ExpectedSlave> expected_ring(const AssemblySpec& assembly, const ModuleDatabase& db);

/// Two-module torso hub build of the ring examples: B on A's port 2.
AssemblySpec two_slave_example(bool flip_a);

/// Uniform joint values strictly inside the limits of every moving joint.
std::map<std::string, double, std::less<>> random_q(const PhysicalGraph& phi, std::mt19937_64& rng,
                                                    double margin = 0.05);

PhysicalGraph model_of(const AssemblySpec& assembly, const ModuleDatabase& db = catalog());

}  // namespace modforge::fixtures
