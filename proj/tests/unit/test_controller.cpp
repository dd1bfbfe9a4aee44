#include <gtest/gtest.h>

#include <algorithm>

#include "chronoqa/controller.hpp"
#include "chronoqa/error.hpp"
#include "chronoqa/trace.hpp"
#include "fixtures.hpp"

using namespace chronoqa;
using namespace chronoqa::testing;

namespace {

// Fixed reply per role; nullopt for the rest.
class RoleBackend final : public Backend {
 public:
  explicit RoleBackend(std::map<Role, std::string> replies) : replies_(std::move(replies)) {}
  std::optional<std::string> complete(const Request& r) override {
    const auto it = replies_.find(r.role);
    if (it == replies_.end()) return std::nullopt;
    return it->second;
  }
  std::string_view name() const override { return "role"; }

 private:
  std::map<Role, std::string> replies_;
};

struct Harness {
  Tkg tkg = case_tkg();
  HashingEmbedder embedder;
  ScriptedBackend backend = ScriptedBackend::from_file(data_path("scripts/case_studies.rules.json"));
  SharedExperiencePool pool{ExperiencePool(embedder)};

  Engine engine(EngineConfig cfg = {}, Backend* b = nullptr) {
    return Engine(tkg, embedder, b ? b : &backend, &pool, cfg);
  }
  std::size_t pool_size() {
    return pool.read([](const ExperiencePool& p) { return p.size(); });
  }
};

std::vector<std::string> topic_names(const Tkg& tkg, const Grounding& g) {
  std::vector<std::string> out;
  for (auto e : g.topics) out.push_back(tkg.entity_name(e));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Ground, AfterFirstQuestion) {
  Harness h;
  const auto e = h.engine();
  Reasoner r(&h.backend, h.tkg);
  RunStats stats;
  const auto g = e.ground(case_questions[0], r, stats);
  EXPECT_EQ(topic_names(h.tkg, g), (std::vector<std::string>{"China", "Olympics 2008"}));
  EXPECT_EQ(g.type, TemporalType::AfterNFirst);
  EXPECT_EQ(g.tree.nodes.size(), 2u);
  EXPECT_FALSE(g.plan_reused);
}

TEST(Ground, BetweenQuestion) {
  Harness h;
  const auto e = h.engine();
  Reasoner r(&h.backend, h.tkg);
  RunStats stats;
  const auto g = e.ground(case_questions[3], r, stats);
  EXPECT_EQ(topic_names(h.tkg, g).size(), 3u);
  EXPECT_EQ(g.type, TemporalType::Between);
  EXPECT_EQ(g.tree.nodes.size(), 3u);
}

TEST(Ground, NoTopicsLeavesPoolUntouched) {
  Harness h;
  const auto e = h.engine();
  try {
    e.answer_question("Which unicorn sang opera on Mars?");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::NoTopicEntities);
    EXPECT_EQ(err.phase(), "grounding");
  }
  EXPECT_EQ(h.pool_size(), 0u);
}

TEST(Engine, CaseAnswers) {
  Harness h;
  EngineConfig cfg;
  cfg.use_memory = false;
  const auto e = h.engine(cfg);
  const std::vector<std::vector<std::string>> gold{{"Japan"}, {"Barack Obama"}, {"4"}, {"NVIDIA", "OpenAI"}};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto run = e.answer_question(case_questions[i]);
    auto got = run.trajectory.answer.entities;
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, gold[i]) << case_questions[i];
    EXPECT_TRUE(run.trajectory.sufficient);
    EXPECT_TRUE(validate_trp(run.trajectory.chain));
    EXPECT_FALSE(run.memory_enabled);
  }
  EXPECT_EQ(h.pool_size(), 0u);
}

TEST(Engine, AfterFirstBindsOpeningDate) {
  Harness h;
  const auto run = h.engine().answer_question(case_questions[0]);
  ASSERT_TRUE(run.trajectory.bindings.count("t1"));
  EXPECT_EQ(to_string(run.trajectory.bindings.at("t1")), "2008-08-08");
  ASSERT_TRUE(run.trajectory.answer.time);
  EXPECT_EQ(to_string(*run.trajectory.answer.time), "2009-02-10");
}

TEST(Engine, RepeatReusesMemory) {
  Harness h;
  const auto e = h.engine();
  const auto first = e.answer_question(case_questions[1]);
  EXPECT_GT(h.pool_size(), 0u);
  const auto second = e.answer_question(case_questions[1]);
  EXPECT_EQ(second.trajectory.answer.entities, first.trajectory.answer.entities);
  EXPECT_TRUE(second.memory_hit());
  EXPECT_TRUE(second.grounding.plan_reused);
  EXPECT_LT(second.stats.reasoner_calls, first.stats.reasoner_calls);
  EXPECT_EQ(second.stats.toolkit_executions, 0u);
}

TEST(Engine, NoTreeGivesSingleNode) {
  Harness h;
  EngineConfig cfg;
  cfg.use_tree = false;
  cfg.use_memory = false;
  const auto run = h.engine(cfg).answer_question(case_questions[2]);
  EXPECT_EQ(run.grounding.tree.nodes.size(), 1u);
  EXPECT_EQ(run.trajectory.answer.entities, std::vector<std::string>{"4"});
}

TEST(Engine, DecomposeWithoutBudgetFailsTheNode) {
  Harness h;
  RoleBackend b({{Role::Sufficiency, R"({"sufficient": false, "action": "decompose"})"}});
  EngineConfig cfg;
  cfg.use_tree = false;
  cfg.use_memory = false;
  cfg.retrieval.d_max = 1;
  const auto run = h.engine(cfg, &b).answer_question(case_questions[1]);
  ASSERT_FALSE(run.trajectory.records.empty());
  const auto& last = run.trajectory.records.back();
  EXPECT_NE(last.error.find("BudgetExhausted"), std::string::npos) << last.error;
  EXPECT_EQ(run.trajectory.nodes.at(0).status, NodeStatus::Failed);
  EXPECT_FALSE(run.trajectory.sufficient);
}

TEST(Engine, InsufficientRunWritesOnlyWarnings) {
  Harness h;
  RoleBackend b({{Role::Sufficiency, R"({"sufficient": false, "action": "retrieveagain"})"}});
  EngineConfig cfg;
  cfg.use_tree = false;
  cfg.max_node_attempts = 1;
  const auto run = h.engine(cfg, &b).answer_question(case_questions[1]);
  EXPECT_FALSE(run.trajectory.sufficient);
  h.pool.read([](const ExperiencePool& p) {
    for (const auto& [id, r] : p.records()) EXPECT_EQ(r.outcome, Outcome::Incorrect) << id;
    return 0;
  });
}

TEST(Engine, ConfigValidation) {
  EngineConfig cfg;
  cfg.link_threshold = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.max_node_attempts = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.retrieval.lambda_sem = 0.7;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Controller, AnswerEntityAndStepJson) {
  const Tkg tkg = case_tkg();
  const Fact f = fact(tkg, "Japan", "sign_treaty_env", "China");
  const std::vector<EntityId> seeds{ent(tkg, "China")};
  EXPECT_EQ(answer_entity(PathStep{f, false}, seeds, parse_edge("?y --[r]--> China (t2)")), ent(tkg, "Japan"));
  const auto j = step_to_json(tkg, PathStep{f, false});
  nlohmann::json p = nlohmann::json::array({j});
  const auto back = path_from_json(tkg, p);
  ASSERT_TRUE(back);
  ASSERT_EQ(back->steps.size(), 1u);
  EXPECT_EQ(back->steps[0].fact, f);
}

TEST(Trace, CarriesFlagsAndTree) {
  Harness h;
  EngineConfig cfg;
  cfg.retrieval.dense_stream = false;
  const auto e = h.engine(cfg);
  const auto run = e.answer_question(case_questions[0]);
  const auto j = trace_to_json(run, h.tkg, e.config());
  EXPECT_EQ(j["schema_version"], kTraceSchemaVersion);
  EXPECT_EQ(j["flags"]["tree"], true);
  EXPECT_EQ(j["flags"]["memory"], true);
  EXPECT_EQ(j["tree"]["nodes"].size(), 2u);
  EXPECT_EQ(j["answer"]["entities"], nlohmann::json::array({"Japan"}));
  for (const auto& node : j["nodes"])
    for (const auto& att : node["attempts"])
      for (const auto& call : att["toolkit_calls"])
        for (const auto& c : call["candidates"]) EXPECT_EQ(c["source"], nlohmann::json::array({"graph"}));
}
