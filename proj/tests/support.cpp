#include "support.hpp"

#include <functional>

#include "modforge/pipeline.hpp"

namespace modforge::fixtures {

const ModuleDatabase& catalog() {
  static const ModuleDatabase db = load_database(default_catalog_path());
  return db;
}

AssemblySpec data_assembly(const std::string& name) {
  return load_assembly(std::filesystem::path(MODFORGE_DATA_DIR) / "assemblies" / name);
}

AssemblySpec random_assembly(std::mt19937_64& rng, int min_modules, int max_modules, bool allow_escless) {
  const auto& db = catalog();
  std::vector<const ModuleDescription*> parents, all;
  for (const auto& [id, d] : db.entries()) {
    if (d.esc_count == 0 && !allow_escless) continue;
    all.push_back(&d);
    if (!d.output_connectors().empty() && d.esc_count > 0) parents.push_back(&d);
  }
  std::uniform_int_distribution<int> count_dist(min_modules, max_modules);
  const int target = count_dist(rng);

  AssemblySpec a;
  auto pick = [&](const std::vector<const ModuleDescription*>& from) {
    return from[std::uniform_int_distribution<std::size_t>(0, from.size() - 1)(rng)];
  };
  // Free output connectors: (placement index, connector name).
  std::vector<std::pair<std::size_t, std::string>> free;
  auto place = [&](const ModuleDescription* d, std::optional<std::size_t> parent, const std::string& connector) {
    Placement p;
    p.instance_id = "m" + std::to_string(a.placements.size());
    p.module_id = d->module_identifier;
    if (parent) {
      p.parent_instance = a.placements[*parent].instance_id;
      p.parent_connector = connector;
    }
    a.placements.push_back(p);
    if (d->esc_count > 0) {
      for (const auto* c : d->output_connectors()) free.emplace_back(a.placements.size() - 1, c->name);
    }
  };
  place(pick(parents), std::nullopt, "");
  a.root = a.placements.front().instance_id;
  while (static_cast<int>(a.placements.size()) < target && !free.empty()) {
    const std::size_t slot = std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng);
    const auto [parent, connector] = free[slot];
    free.erase(free.begin() + static_cast<std::ptrdiff_t>(slot));
    // Keep the tree growing: prefer parents until the budget is nearly spent.
    const bool leaf_ok = free.size() > 1 || static_cast<int>(a.placements.size()) + 1 >= target;
    place(leaf_ok ? pick(all) : pick(parents), parent, connector);
  }
  return a;
}

std::vector<ExpectedSlave> expected_ring(const AssemblySpec& assembly, const ModuleDatabase& db) {
  // child placements keyed by (parent instance, esc, port)
  std::map<std::tuple<std::string, int, int>, std::string> child_at;
  for (const auto& p : assembly.placements) {
    if (!p.parent_instance) continue;
    if (db.at(p.module_id).esc_count == 0) continue;
    const auto& pd = db.at(assembly.find(*p.parent_instance)->module_id);
    const auto* c = pd.connector(p.parent_connector);
    child_at[{*p.parent_instance, c->esc_index, c->esc_port}] = p.instance_id;
  }
  std::vector<ExpectedSlave> ring;
  std::function<void(const Placement&, int, int, std::optional<int>)> walk =
      [&](const Placement& p, int esc, int parent_pos, std::optional<int> parent_port) {
        const auto& d = db.at(p.module_id);
        ring.push_back({p.instance_id, esc, p.module_id, parent_pos, parent_port});
        const int here = static_cast<int>(ring.size());
        for (int port = 1; port <= 3; ++port) {
          bool internal = false;
          for (const auto& l : d.internal_links) {
            if (l.from == EscPort{esc, port}) {
              walk(p, l.to.esc, here, port);
              internal = true;
            }
          }
          if (internal) continue;
          auto it = child_at.find({p.instance_id, esc, port});
          if (it != child_at.end()) walk(*assembly.find(it->second), 0, here, port);
        }
      };
  const auto* root = assembly.find(assembly.root);
  if (db.at(root->module_id).esc_count > 0) walk(*root, 0, 0, std::nullopt);
  return ring;
}

AssemblySpec two_slave_example(bool flip_a) {
  AssemblySpec a;
  a.root = "A";
  a.placements.push_back({"A", "torso_hub", std::nullopt, "", flip_a});
  a.placements.push_back({"B", "drill_ee", "A", "right_arm", false});
  return a;
}

std::map<std::string, double, std::less<>> random_q(const PhysicalGraph& phi, std::mt19937_64& rng, double margin) {
  std::map<std::string, double, std::less<>> q;
  for (auto e : phi.moving_edges()) {
    const auto& l = *phi.edges[e].limits;
    std::uniform_real_distribution<double> d(l.lower + margin, l.upper - margin);
    q[phi.edges[e].name] = d(rng);
  }
  return q;
}

PhysicalGraph model_of(const AssemblySpec& assembly, const ModuleDatabase& db) {
  return discover(assembly, db).phi;
}

}  // namespace modforge::fixtures
