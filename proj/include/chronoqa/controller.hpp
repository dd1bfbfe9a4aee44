#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chronoqa/embedding.hpp"
#include "chronoqa/memory.hpp"
#include "chronoqa/reasoner.hpp"
#include "chronoqa/retrieval.hpp"
#include "chronoqa/store.hpp"
#include "chronoqa/toolkits.hpp"

namespace chronoqa {

struct EngineConfig {
  RetrievalConfig retrieval;
  double link_threshold = 0.35;
  bool use_memory = true;
  bool use_tree = true;
  int max_node_attempts = 3;  // RetrieveAgain/Refine rounds per node

  void validate() const;
};

struct Grounding {
  std::string question;
  std::vector<std::string> mentions;
  std::vector<EntityLink> links;
  std::vector<EntityId> topics;
  TemporalType type = TemporalType::Equal;
  Subgraph subgraph;
  QuestionTree tree;
  bool plan_reused = false;
};

struct CallOutcome {
  ToolkitResult result;
  std::string error;  // nonempty when the call failed
  std::vector<ScoredPath> candidates;
  std::vector<std::size_t> selected;
};

struct NodeRecord {
  int node_id = 0;
  int attempt = 0;
  std::string subquestion;
  Indicator indicator;  // with bound time variables substituted
  std::vector<EntityId> seeds;
  bool memory_hit = false;
  std::optional<std::uint64_t> memory_record;
  std::vector<CallOutcome> calls;
  std::optional<WinningAnswer> vote;
  std::optional<Verdict> verdict;
  std::string error;
};

struct NodeState {
  NodeStatus status = NodeStatus::Pending;
  std::vector<std::string> answer;
  std::optional<Timestamp> time;
  std::optional<std::size_t> count;
  std::vector<TemporalPath> proof;
  bool required = true;
};

struct Trajectory {
  std::vector<NodeRecord> records;           // one per attempt, execution order
  std::map<int, NodeState> nodes;             // final state per node
  std::map<std::string, Timestamp> bindings;  // time variable -> value
  TemporalReasoningPath chain;
  std::vector<int> chain_nodes;  // node id of each chain segment
  std::optional<Verdict> global;
  Answer answer;
  bool sufficient = false;
  int branch_budget_used = 0;
};

struct RunStats {
  std::size_t reasoner_calls = 0;
  std::size_t toolkit_executions = 0;
  std::size_t memory_hits = 0;
  std::size_t memory_writes = 0;
  double grounding_ms = 0.0;
  double nodes_ms = 0.0;
  double synthesis_ms = 0.0;
  double total_ms = 0.0;
};

struct RunResult {
  Grounding grounding;
  Trajectory trajectory;
  RunStats stats;
  std::vector<Exchange> exchanges;
  bool memory_enabled = false;

  bool memory_hit() const { return stats.memory_hits > 0; }
};

// Orchestrates one question: grounding, subquestion execution with memory
// reuse, refine/decompose under depth and branch budgets, synthesis and
// memory write-back. The engine is immutable after construction and may
// answer several questions concurrently; the pool serializes writers.
class Engine {
 public:
  Engine(const Tkg& tkg, const Embedder& embedder, Backend* backend, SharedExperiencePool* pool, EngineConfig cfg);

  const EngineConfig& config() const { return cfg_; }
  const Tkg& tkg() const { return *tkg_; }

  // Throws errors tagged with the phase they occurred in.
  RunResult answer_question(std::string_view question) const;

  // Throws NoTopicEntities when no mention links to an entity.
  Grounding ground(std::string_view question, Reasoner& reasoner, RunStats& stats) const;

 private:
  struct Run;

  void run_node(Run& run, int node_id) const;
  bool attempt_node(Run& run, int node_id, const RetrievalConfig& rcfg) const;
  bool try_reuse(Run& run, int node_id, NodeRecord& rec) const;
  bool decompose_node(Run& run, int node_id) const;
  void synthesize(Run& run) const;
  void write_back(Run& run, ExperienceRecord rec, bool augment) const;

  const Tkg* tkg_;
  const Embedder* embedder_;
  Backend* backend_;
  SharedExperiencePool* pool_;
  EngineConfig cfg_;
  EntityLinker linker_;
};

// Entity the step contributes as an answer: the endpoint away from the
// seeds, or the variable slot of the indicator when no seed is touched.
EntityId answer_entity(const PathStep& step, std::span<const EntityId> seeds, const Indicator& ind);

// JSON for a stored step / path and the inverse (nullopt when a fact is
// missing from the store).
nlohmann::json step_to_json(const Tkg& tkg, const PathStep& step);
std::optional<TemporalPath> path_from_json(const Tkg& tkg, const nlohmann::json& j);

}  // namespace chronoqa
