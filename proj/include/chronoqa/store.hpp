#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chronoqa/timestamp.hpp"

namespace chronoqa {

template <class Tag>
struct StrongId {
  std::uint32_t value = 0;
  auto operator<=>(const StrongId&) const = default;
};

using EntityId = StrongId<struct EntityTag>;
using RelationId = StrongId<struct RelationTag>;
// Facts are stored in canonical order, so FactId order is canonical-key order.
using FactId = StrongId<struct FactTag>;

struct Fact {
  FactId id;
  EntityId head;
  RelationId relation;
  EntityId tail;
  Timestamp ts;

  bool operator==(const Fact&) const = default;
};

enum class Direction { Out, In, Both };

// Exclusive window at instant resolution: start(ts) > end(after) and start(ts) < start(before).
struct TimeWindow {
  std::optional<Timestamp> after;
  std::optional<Timestamp> before;

  bool admits(const Timestamp& ts) const;
};

// One traversed fact. A reversed step walks the fact from tail to head.
struct PathStep {
  Fact fact;
  bool reversed = false;

  EntityId source() const { return reversed ? fact.tail : fact.head; }
  EntityId target() const { return reversed ? fact.head : fact.tail; }
  auto operator<=>(const PathStep& o) const {
    if (auto c = fact.id <=> o.fact.id; c != 0) return c;
    return reversed <=> o.reversed;
  }
  bool operator==(const PathStep& o) const { return fact.id == o.fact.id && reversed == o.reversed; }
};

struct TemporalPath {
  std::vector<PathStep> steps;

  std::size_t length() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
  // Canonical order: lexicographic over (fact id, reversed).
  auto operator<=>(const TemporalPath& o) const { return steps <=> o.steps; }
  bool operator==(const TemporalPath& o) const { return steps == o.steps; }
};

struct TemporalReasoningPath {
  std::vector<TemporalPath> segments;
};

// Connectivity and non-decreasing interval starts. Empty paths are valid.
bool validate_path(const TemporalPath& path);
// Each segment valid and start(last of i) <= start(first of i+1).
bool validate_trp(const TemporalReasoningPath& trp);

class Interner {
 public:
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

class Tkg {
 public:
  std::size_t entity_count() const { return entities_.size(); }
  std::size_t relation_count() const { return relations_.size(); }
  std::size_t fact_count() const { return facts_.size(); }

  const std::string& entity_name(EntityId id) const { return entities_.name(id.value); }
  const std::string& relation_name(RelationId id) const { return relations_.name(id.value); }
  std::optional<EntityId> find_entity(std::string_view name) const;
  std::optional<RelationId> find_relation(std::string_view name) const;

  std::span<const Fact> facts() const { return facts_; }
  const Fact& fact(FactId id) const { return facts_.at(id.value); }

  // Facts where the entity is head or tail, canonical order. Self-loops appear once.
  std::span<const FactId> incident(EntityId entity) const;
  // start day -> facts starting that day.
  const std::map<std::int64_t, std::vector<FactId>>& by_start_day() const { return by_time_; }

  // Throws Error{UnknownEntity}.
  std::vector<PathStep> neighbors(EntityId entity, Direction direction, const TimeWindow& window = {}) const;

  // Natural-language aliases for relation ids ("sign environmental treaty" for sign_treaty_env).
  std::span<const std::string> aliases(RelationId relation) const;
  // TSV lines `relation<TAB>alias`; unknown relations are ignored.
  void load_aliases(std::istream& in);

  // Looks up a fact by its strings; used to re-materialize stored evidence.
  std::optional<FactId> find_fact(std::string_view head, std::string_view relation, std::string_view tail,
                                  const Timestamp& ts) const;

  void check_entity(EntityId entity) const;

 private:
  friend Tkg load_tsv(std::istream& in);

  Interner entities_;
  Interner relations_;
  std::vector<Fact> facts_;
  std::vector<std::vector<FactId>> by_entity_;
  std::map<std::int64_t, std::vector<FactId>> by_time_;
  std::unordered_map<std::uint32_t, std::vector<std::string>> aliases_;
};

// `head<TAB>relation<TAB>tail<TAB>timestamp` per line; `#` lines are comments;
// LF or CRLF. Throws Error{ParseError} with the 1-based line number.
Tkg load_tsv(std::istream& in);
Tkg load_tsv_file(const std::string& path);

class Subgraph {
 public:
  // Whole graph view; every entity is at hop 0.
  static Subgraph full(const Tkg& tkg);

  const Tkg& tkg() const { return *tkg_; }
  std::span<const EntityId> topics() const { return topics_; }
  std::span<const FactId> facts() const { return facts_; }
  std::size_t entity_count() const { return hops_.size(); }
  std::vector<EntityId> entities() const;

  bool contains(EntityId entity) const { return hops_.count(entity.value) > 0; }
  bool contains(FactId fact) const;
  std::optional<int> hop_distance(EntityId entity) const;

  // Incident member facts, canonical order.
  std::vector<FactId> incident(EntityId entity) const;
  // Tkg::neighbors restricted to member facts. Throws UnknownEntity for non-members.
  std::vector<PathStep> neighbors(EntityId entity, Direction direction, const TimeWindow& window = {}) const;

 private:
  friend Subgraph build_subgraph(const Tkg& tkg, std::span<const EntityId> topics, int d_max);

  const Tkg* tkg_ = nullptr;
  std::vector<EntityId> topics_;
  std::unordered_map<std::uint32_t, int> hops_;
  std::vector<FactId> facts_;  // sorted
};

// Undirected BFS from all topics. Keeps facts whose endpoints are both within
// d_max hops with at least one within d_max - 1. Throws EmptyTopics when topics
// is empty or d_max < 1, UnknownEntity for ids outside the store.
Subgraph build_subgraph(const Tkg& tkg, std::span<const EntityId> topics, int d_max);

}  // namespace chronoqa

template <class Tag>
struct std::hash<chronoqa::StrongId<Tag>> {
  std::size_t operator()(const chronoqa::StrongId<Tag>& id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
