#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "chronoqa/config.hpp"
#include "chronoqa/error.hpp"

using namespace chronoqa;
using nlohmann::json;

namespace {

Errc code_of(const json& j) {
  try {
    config_from_json(j);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Io;  // sentinel: accepted
}

}  // namespace

TEST(Config, DefaultsMatchDocumentedValues) {
  const auto c = config_from_json(json::object());
  const auto& r = c.engine.retrieval;
  EXPECT_EQ(r.w1, 80);
  EXPECT_EQ(r.beam, 64);
  EXPECT_EQ(r.w_max, 3);
  EXPECT_EQ(r.d_max, 3);
  EXPECT_EQ(r.b_max, 4);
  EXPECT_EQ(r.w_exp, 10);
  EXPECT_DOUBLE_EQ(r.lambda_sem, 0.6);
  EXPECT_DOUBLE_EQ(r.sigma_days, 365.0);
  EXPECT_EQ(c.memory.capacity, 200u);
  EXPECT_EQ(c.backend.kind, "scripted");
  EXPECT_EQ(c.embedder.dim, 256);
}

TEST(Config, OverridesAndRoundTrip) {
  const auto c = config_from_json(json::parse(R"({
      "retrieval": {"beam": 0, "d_max": 2, "lambda_sem": 0.5, "lambda_prox": 0.5, "dense_stream": false},
      "memory": {"enabled": false, "capacity": 50}})"));
  EXPECT_EQ(c.engine.retrieval.beam, 0);
  EXPECT_EQ(c.engine.retrieval.d_max, 2);
  EXPECT_FALSE(c.engine.retrieval.dense_stream);
  EXPECT_FALSE(c.engine.use_memory);
  EXPECT_EQ(c.memory.capacity, 50u);
  const auto again = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(again), config_to_json(c));
}

TEST(Config, Rejections) {
  EXPECT_EQ(code_of(json::parse(R"({"retrieval": {"bean": 3}})")), Errc::InvalidConfig);
  EXPECT_EQ(code_of(json::parse(R"({"extras": {}})")), Errc::InvalidConfig);
  EXPECT_EQ(code_of(json::parse(R"({"retrieval": {"lambda_sem": 0.9}})")), Errc::InvalidConfig);
  EXPECT_EQ(code_of(json::parse(R"({"retrieval": {"d_max": "three"}})")), Errc::InvalidConfig);
  EXPECT_EQ(code_of(json::parse(R"({"retrieval": {"sigma_days": 0}})")), Errc::InvalidConfig);
  EXPECT_EQ(code_of(json::parse(R"({"memory": {"decay": 1.5}})")), Errc::InvalidConfig);
  EXPECT_EQ(code_of(json::parse(R"({"memory": {"capacity": 0}})")), Errc::InvalidConfig);
  EXPECT_EQ(code_of(json::parse(R"({"backend": {"kind": "oracle"}})")), Errc::InvalidConfig);
  EXPECT_EQ(code_of(json::parse(R"({"backend": {"kind": "http"}})")), Errc::InvalidConfig);
  EXPECT_EQ(code_of(json::parse(R"({"embedder": {"kind": "http"}})")), Errc::InvalidConfig);
  EXPECT_EQ(code_of(json::array()), Errc::InvalidConfig);
}

TEST(Config, RelativePathsResolveAgainstFile) {
  const auto dir = std::filesystem::temp_directory_path() / "chronoqa_config_test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "cfg.json";
  std::ofstream(file) << R"({"paths": {"tkg": "facts.tsv", "memory": "/abs/pool.jsonl"}})";
  const auto c = load_config_file(file.string());
  EXPECT_EQ(c.paths.tkg, (dir / "facts.tsv").string());
  EXPECT_EQ(c.paths.memory, "/abs/pool.jsonl");
  std::filesystem::remove_all(dir);

  try {
    load_config_file("/nonexistent/cfg.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Io);
  }
}
