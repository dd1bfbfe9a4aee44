#include "fixtures.hpp"

#include <fstream>
#include <stdexcept>

namespace chronoqa::testing {

Tkg case_tkg() {
  Tkg tkg = load_tsv_file(data_path("fixtures/case_studies.tsv"));
  std::ifstream in(data_path("fixtures/aliases.tsv"));
  tkg.load_aliases(in);
  return tkg;
}

Tkg definitions_tkg() { return load_tsv_file(data_path("fixtures/definitions.tsv")); }

EntityId ent(const Tkg& tkg, const std::string& name) {
  auto id = tkg.find_entity(name);
  if (!id) throw std::runtime_error("fixture lacks entity " + name);
  return *id;
}

Fact fact(const Tkg& tkg, const std::string& head, const std::string& relation, const std::string& tail) {
  const Fact* found = nullptr;
  for (const auto& f : tkg.facts()) {
    if (tkg.entity_name(f.head) == head && tkg.relation_name(f.relation) == relation && tkg.entity_name(f.tail) == tail) {
      if (found) throw std::runtime_error("ambiguous fixture fact");
      found = &f;
    }
  }
  if (!found) throw std::runtime_error("fixture lacks fact " + head + " " + relation + " " + tail);
  return *found;
}

TemporalPath forward_path(const std::vector<Fact>& facts) {
  TemporalPath p;
  for (const auto& f : facts) p.steps.push_back({f, false});
  return p;
}

std::vector<std::string> names(const Tkg& tkg, const std::vector<PathStep>& steps, bool heads) {
  std::vector<std::string> out;
  for (const auto& s : steps) out.push_back(tkg.entity_name(heads ? s.fact.head : s.fact.tail));
  return out;
}

}  // namespace chronoqa::testing
