#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronoqa/embedding.hpp"
#include "chronoqa/indicator.hpp"
#include "chronoqa/memory.hpp"
#include "chronoqa/retrieval.hpp"
#include "chronoqa/store.hpp"
#include "chronoqa/toolkits.hpp"

namespace chronoqa {

enum class Role {
  Ner,
  TypeSelect,
  Decompose,
  SeedSelect,
  ToolkitSelect,
  PathSelect,
  DebateVote,
  Sufficiency,
  AnswerGeneration,
  Refine,
};

std::string_view role_name(Role role);
std::optional<Role> parse_role(std::string_view text);

struct Request {
  Role role = Role::Ner;
  std::string prompt;
  nlohmann::json fields = nlohmann::json::object();  // structured inputs the prompt was rendered from
  bool repair = false;                               // second attempt after an unparseable reply
};

class Backend {
 public:
  virtual ~Backend() = default;
  // nullopt means "no opinion"; the caller then uses its deterministic fallback.
  virtual std::optional<std::string> complete(const Request& request) = 0;
  virtual std::string_view name() const = 0;
};

// Rules file: {"schema_version": 1, "rules": [{"role", "match": {field: [substrings]}, "response"}]}.
// A rule fires when every listed substring occurs (case-insensitively) in the
// named request field. First match wins; no match returns nullopt.
class ScriptedBackend final : public Backend {
 public:
  struct Rule {
    Role role;
    std::vector<std::pair<std::string, std::vector<std::string>>> match;
    std::string response;
  };

  ScriptedBackend() = default;
  explicit ScriptedBackend(std::vector<Rule> rules) : rules_(std::move(rules)) {}
  static ScriptedBackend from_json(const nlohmann::json& doc);
  static ScriptedBackend from_file(const std::string& path);

  std::optional<std::string> complete(const Request& request) override;
  std::string_view name() const override { return "scripted"; }
  const std::vector<Rule>& rules() const { return rules_; }

 private:
  std::vector<Rule> rules_;
};

struct HttpBackendConfig {
  std::string endpoint;  // http(s)://host[:port]/path
  std::string model;
  std::string api_key_env = "CHRONOQA_API_KEY";
  double explore_temperature = 0.4;
  double answer_temperature = 0.0;
  int max_tokens = 256;
  int max_in_flight = 4;
  double timeout_seconds = 60.0;
};

// Chat-completion request body for a role.
nlohmann::json chat_request_body(const HttpBackendConfig& cfg, const Request& request);

struct Endpoint {
  std::string origin;  // scheme://host:port
  std::string path;
};
// Throws Error{InvalidConfig}.
Endpoint parse_endpoint(std::string_view url);

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg);
  // Throws Timeout, Transport, UnparseableResponse.
  std::optional<std::string> complete(const Request& request) override;
  std::string_view name() const override { return "http"; }
  const HttpBackendConfig& config() const { return cfg_; }

 private:
  HttpBackendConfig cfg_;
  Endpoint endpoint_;
  std::counting_semaphore<1024> slots_;
};

// Embedder backed by `POST {"input": [texts]} -> {"embeddings": [[...]]}`.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(std::string endpoint, int dim, double timeout_seconds = 30.0);
  int dim() const override { return dim_; }
  Vector embed(std::string_view text) const override;
  std::vector<Vector> embed_batch(std::span<const std::string> texts) const override;

 private:
  Endpoint endpoint_;
  int dim_;
  double timeout_;
};

enum class NodeStatus { Pending, Solved, Failed };
std::string_view status_name(NodeStatus s);

struct TreeNode {
  int id = 0;
  std::string subquestion;
  Indicator indicator;
  int parent = -1;  // -1: child of the question root
  std::vector<int> children;
  std::vector<int> depends_on;  // earlier nodes whose time variables this node reads
  int depth = 1;
  int d_pred = 1;
  NodeStatus status = NodeStatus::Pending;
};

struct QuestionTree {
  std::string question;
  TemporalType type = TemporalType::Equal;
  std::vector<TreeNode> nodes;
  std::vector<std::string> time_vars;
  // Ordering constraints between variables of different subquestions.
  std::vector<Constraint> order;
  std::string source;  // decomposition text the tree was parsed from

  const TreeNode& node(int id) const { return nodes.at(static_cast<std::size_t>(id)); }
  TreeNode& node(int id) { return nodes.at(static_cast<std::size_t>(id)); }
};

// Four blocks: Subquestions / Indicators / Constraints / Time_vars, one item
// per line (numbering, bullets and quotes are stripped). Throws SchemaError for
// missing blocks or mismatched counts, ConstraintError for undeclared or
// cyclic time variables.
QuestionTree parse_decomposition(std::string_view text, TemporalType type, std::string_view question = {});
std::string render_decomposition(const QuestionTree& tree);

// Acyclic dependencies, declared variables, and a consistent time-variable
// order. Throws ConstraintError.
void validate_tree(const QuestionTree& tree, int d_max);

// Time variables in an order compatible with before/after/between
// constraints; ties by first declaration.
std::vector<std::string> time_var_order(const QuestionTree& tree);

enum class Action { Accept, Decompose, Refine, RetrieveAgain };
std::string_view action_name(Action a);
enum class Scope { Local, Global };

struct SufficiencyInput {
  Scope scope = Scope::Local;
  std::string question;
  Indicator indicator;
  std::vector<std::string> answer;
  std::vector<TemporalPath> paths;
  bool had_candidates = false;
  std::vector<NodeStatus> statuses;  // Global: required nodes
};

struct Verdict {
  bool sufficient = false;
  Action action = Action::RetrieveAgain;
  std::string note;
};

struct VoteCandidate {
  std::string toolkit;
  int priority = 1;
  std::vector<std::string> entities;
  std::optional<Timestamp> time;
  std::size_t result_size = 0;
  std::size_t expected_size = 0;  // 0: no expectation
  bool valid = false;
};

struct WinningAnswer {
  std::size_t index = 0;
  std::string toolkit;
  std::vector<std::string> entities;
  std::optional<Timestamp> time;
  double score = 0.0;
  std::string reason;
};

struct Answer {
  std::vector<std::string> entities;
  std::optional<Timestamp> time;
  std::string rationale;
};

struct Exchange {
  Role role;
  bool fallback = false;
  bool repaired = false;
  std::string response;
};

// Typed front end over a Backend: renders prompts, parses replies, repairs
// once, and falls back to deterministic rules when the backend has no reply.
class Reasoner {
 public:
  Reasoner(Backend* backend, const Tkg& tkg);

  std::size_t calls() const { return calls_; }
  const std::vector<Exchange>& log() const { return log_; }

  std::vector<std::string> extract_mentions(std::string_view question);
  TemporalType classify_type(std::string_view question, const Retrieved& memory);
  QuestionTree decompose(std::string_view question, TemporalType type, const std::vector<std::string>& topics,
                         const Retrieved& memory, int d_max);
  // Throws NoValidSeed.
  std::vector<EntityId> select_seeds(const Subgraph& g, const Indicator& ind, std::string_view subquestion,
                                     const std::vector<EntityId>& allowed, const Retrieved& memory);
  // Throws SchemaError, UnknownToolkit.
  std::vector<ToolkitCall> select_toolkits(const Indicator& ind, std::string_view subquestion,
                                           const std::vector<EntityId>& seeds, const Retrieved& memory);
  std::vector<std::size_t> select_paths(const std::vector<ScoredPath>& candidates, std::string_view subquestion,
                                        const Indicator& ind, std::size_t w_max);
  WinningAnswer debate_vote(std::string_view subquestion, TemporalType type,
                            const std::vector<VoteCandidate>& candidates);
  Verdict check_sufficiency(const SufficiencyInput& in);
  Answer generate_answer(std::string_view question, TemporalType type, const Answer& draft,
                         const std::vector<PathStep>& evidence);
  std::string refine(std::string_view subquestion, const Indicator& ind);

 private:
  template <class T>
  T ask(Role role, nlohmann::json fields, const std::function<T(const std::string&)>& parse,
        const std::function<T()>& fallback);

  Backend* backend_;
  const Tkg* tkg_;
  std::size_t calls_ = 0;
  std::vector<Exchange> log_;
};

// Deterministic fallbacks, exposed for tests.
std::vector<std::string> heuristic_mentions(std::string_view question);
TemporalType heuristic_type(std::string_view question);
QuestionTree heuristic_tree(std::string_view question, TemporalType type, const std::vector<std::string>& topics);
std::vector<ToolkitCall> heuristic_toolkits(const Tkg& tkg, const Indicator& ind, const std::string& seed);
std::size_t heuristic_vote(TemporalType type, const std::vector<VoteCandidate>& candidates);
Verdict heuristic_sufficiency(const SufficiencyInput& in);

// Prompt text for a role, rendered from request fields. Exemplars come
// before warnings.
std::string render_prompt(Role role, const nlohmann::json& fields);

// JSON object from a reply: a ```json fence, else the outermost braces.
// Throws Error{SchemaError}.
nlohmann::json extract_json(std::string_view reply);

}  // namespace chronoqa
