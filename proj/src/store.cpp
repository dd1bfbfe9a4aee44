#include "chronoqa/store.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <istream>
#include <tuple>

#include "chronoqa/error.hpp"

namespace chronoqa {

bool TimeWindow::admits(const Timestamp& ts) const {
  if (after && !(ts.start() > after->end())) return false;
  if (before && !(ts.start() < before->start())) return false;
  return true;
}

bool validate_path(const TemporalPath& path) {
  for (std::size_t i = 0; i + 1 < path.steps.size(); ++i) {
    const PathStep& cur = path.steps[i];
    const PathStep& next = path.steps[i + 1];
    if (cur.target() != next.source()) return false;
    if (cur.fact.ts.start() > next.fact.ts.start()) return false;
  }
  return true;
}

bool validate_trp(const TemporalReasoningPath& trp) {
  const TemporalPath* prev = nullptr;
  for (const TemporalPath& seg : trp.segments) {
    if (!validate_path(seg)) return false;
    if (seg.empty()) continue;
    if (prev && prev->steps.back().fact.ts.start() > seg.steps.front().fact.ts.start()) return false;
    prev = &seg;
  }
  return true;
}

std::uint32_t Interner::intern(std::string_view name) {
  auto [it, inserted] = ids_.try_emplace(std::string(name), static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.emplace_back(name);
  return it->second;
}

std::optional<std::uint32_t> Interner::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<EntityId> Tkg::find_entity(std::string_view name) const {
  if (auto id = entities_.find(name)) return EntityId{*id};
  return std::nullopt;
}

std::optional<RelationId> Tkg::find_relation(std::string_view name) const {
  if (auto id = relations_.find(name)) return RelationId{*id};
  return std::nullopt;
}

void Tkg::check_entity(EntityId entity) const {
  if (entity.value >= entities_.size()) {
    throw Error(Errc::UnknownEntity, "entity id " + std::to_string(entity.value) + " is not interned");
  }
}

std::span<const FactId> Tkg::incident(EntityId entity) const {
  check_entity(entity);
  return by_entity_[entity.value];
}

std::vector<PathStep> Tkg::neighbors(EntityId entity, Direction direction, const TimeWindow& window) const {
  std::vector<PathStep> out;
  for (FactId id : incident(entity)) {
    const Fact& f = facts_[id.value];
    if (!window.admits(f.ts)) continue;
    if (f.head == entity && direction != Direction::In) {
      out.push_back({f, false});
    } else if (f.tail == entity && direction != Direction::Out) {
      out.push_back({f, true});
    }
  }
  return out;
}

std::span<const std::string> Tkg::aliases(RelationId relation) const {
  auto it = aliases_.find(relation.value);
  if (it == aliases_.end()) return {};
  return it->second;
}

void Tkg::load_aliases(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    if (auto rel = find_relation(std::string_view(line).substr(0, tab))) {
      aliases_[rel->value].push_back(line.substr(tab + 1));
    }
  }
}

std::optional<FactId> Tkg::find_fact(std::string_view head, std::string_view relation, std::string_view tail,
                                     const Timestamp& ts) const {
  auto h = find_entity(head);
  auto r = find_relation(relation);
  auto t = find_entity(tail);
  if (!h || !r || !t) return std::nullopt;
  for (FactId id : by_entity_[h->value]) {
    const Fact& f = facts_[id.value];
    if (f.head == *h && f.relation == *r && f.tail == *t && f.ts == ts) return id;
  }
  return std::nullopt;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    fields.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return fields;
}

}  // namespace

Tkg load_tsv(std::istream& in) {
  Tkg tkg;
  struct Raw {
    std::uint32_t head, rel, tail;
    Timestamp ts;
  };
  std::vector<Raw> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw Error(Errc::ParseError, "expected 4 tab-separated fields, got " + std::to_string(fields.size()), line_no);
    }
    for (auto f : fields) {
      if (f.empty()) throw Error(Errc::ParseError, "empty field", line_no);
    }
    Timestamp ts;
    try {
      ts = parse_timestamp(fields[3]);
    } catch (const Error& e) {
      throw Error(Errc::ParseError, e.what(), line_no);
    }
    const auto head = tkg.entities_.intern(fields[0]);
    const auto rel = tkg.relations_.intern(fields[1]);
    const auto tail = tkg.entities_.intern(fields[2]);
    raw.push_back({head, rel, tail, ts});
  }

  const auto key = [&](const Raw& r) {
    return std::make_tuple(r.ts.start(), std::cref(tkg.entities_.name(r.head)), std::cref(tkg.relations_.name(r.rel)),
                           std::cref(tkg.entities_.name(r.tail)), r.ts.end());
  };
  std::sort(raw.begin(), raw.end(), [&](const Raw& a, const Raw& b) { return key(a) < key(b); });
  raw.erase(std::unique(raw.begin(), raw.end(),
                        [](const Raw& a, const Raw& b) {
                          return a.head == b.head && a.rel == b.rel && a.tail == b.tail && a.ts == b.ts;
                        }),
            raw.end());

  tkg.facts_.reserve(raw.size());
  tkg.by_entity_.assign(tkg.entities_.size(), {});
  for (const Raw& r : raw) {
    const FactId id{static_cast<std::uint32_t>(tkg.facts_.size())};
    tkg.facts_.push_back({id, EntityId{r.head}, RelationId{r.rel}, EntityId{r.tail}, r.ts});
    tkg.by_entity_[r.head].push_back(id);
    if (r.tail != r.head) tkg.by_entity_[r.tail].push_back(id);
    tkg.by_time_[r.ts.start_day()].push_back(id);
  }
  return tkg;
}

Tkg load_tsv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return load_tsv(in);
}

Subgraph Subgraph::full(const Tkg& tkg) {
  Subgraph g;
  g.tkg_ = &tkg;
  for (std::uint32_t e = 0; e < tkg.entity_count(); ++e) {
    g.topics_.push_back(EntityId{e});
    g.hops_.emplace(e, 0);
  }
  for (const Fact& f : tkg.facts()) g.facts_.push_back(f.id);
  return g;
}

std::vector<EntityId> Subgraph::entities() const {
  std::vector<EntityId> out;
  out.reserve(hops_.size());
  for (const auto& [e, _] : hops_) out.push_back(EntityId{e});
  std::sort(out.begin(), out.end());
  return out;
}

bool Subgraph::contains(FactId fact) const { return std::binary_search(facts_.begin(), facts_.end(), fact); }

std::optional<int> Subgraph::hop_distance(EntityId entity) const {
  auto it = hops_.find(entity.value);
  if (it == hops_.end()) return std::nullopt;
  return it->second;
}

std::vector<FactId> Subgraph::incident(EntityId entity) const {
  std::vector<FactId> out;
  if (!contains(entity)) return out;
  for (FactId id : tkg_->incident(entity)) {
    if (contains(id)) out.push_back(id);
  }
  return out;
}

std::vector<PathStep> Subgraph::neighbors(EntityId entity, Direction direction, const TimeWindow& window) const {
  if (!contains(entity)) {
    throw Error(Errc::UnknownEntity, "'" + (entity.value < tkg_->entity_count() ? tkg_->entity_name(entity) : std::string("?")) +
                                         "' is not in the subgraph");
  }
  auto steps = tkg_->neighbors(entity, direction, window);
  std::erase_if(steps, [&](const PathStep& s) { return !contains(s.fact.id); });
  return steps;
}

Subgraph build_subgraph(const Tkg& tkg, std::span<const EntityId> topics, int d_max) {
  if (topics.empty()) throw Error(Errc::EmptyTopics, "no topic entities");
  if (d_max < 1) throw Error(Errc::EmptyTopics, "d_max must be >= 1");
  for (EntityId t : topics) tkg.check_entity(t);

  Subgraph g;
  g.tkg_ = &tkg;
  std::deque<EntityId> queue;
  for (EntityId t : topics) {
    if (g.hops_.emplace(t.value, 0).second) {
      g.topics_.push_back(t);
      queue.push_back(t);
    }
  }
  while (!queue.empty()) {
    const EntityId v = queue.front();
    queue.pop_front();
    const int d = g.hops_.at(v.value);
    if (d == d_max) continue;
    for (FactId id : tkg.incident(v)) {
      const Fact& f = tkg.fact(id);
      const EntityId u = f.head == v ? f.tail : f.head;
      if (g.hops_.emplace(u.value, d + 1).second) queue.push_back(u);
    }
  }
  for (const auto& [e, d] : g.hops_) {
    if (d > d_max - 1) continue;
    for (FactId id : tkg.incident(EntityId{e})) {
      const Fact& f = tkg.fact(id);
      if (g.hops_.count(f.head.value) && g.hops_.count(f.tail.value)) g.facts_.push_back(id);
    }
  }
  std::sort(g.facts_.begin(), g.facts_.end());
  g.facts_.erase(std::unique(g.facts_.begin(), g.facts_.end()), g.facts_.end());
  return g;
}

}  // namespace chronoqa
