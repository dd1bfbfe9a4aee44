// Eigen must come before httplib: <resolv.h> defines a `_res` macro.
#include "chronoqa/error.hpp"
#include "chronoqa/reasoner.hpp"

#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>

using namespace chronoqa;

namespace {

// Local server with canned handlers, bound to an ephemeral port.
class LocalServer {
 public:
  LocalServer() {
    svr_.Post("/chat", [this](const httplib::Request& req, httplib::Response& res) {
      last_body = nlohmann::json::parse(req.body);
      last_auth = req.get_header_value("Authorization");
      const nlohmann::json reply = {{"choices", {{{"message", {{"content", "afterNfirst"}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    svr_.Post("/fail", [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("boom", "text/plain");
    });
    svr_.Post("/text", [](const httplib::Request&, httplib::Response& res) { res.set_content("not json", "text/plain"); });
    svr_.Post("/shape", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices": []})", "application/json");
    });
    svr_.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < body["input"].size(); ++i) rows.push_back({3.0, 4.0});
      res.set_content(nlohmann::json{{"embeddings", rows}}.dump(), "application/json");
    });
    port_ = svr_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }
  ~LocalServer() {
    svr_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  nlohmann::json last_body;
  std::string last_auth;

 private:
  httplib::Server svr_;
  int port_ = 0;
  std::thread thread_;
};

HttpBackendConfig config_for(const std::string& url) {
  HttpBackendConfig cfg;
  cfg.endpoint = url;
  cfg.model = "test-model";
  cfg.api_key_env = "CHRONOQA_TEST_KEY_UNSET";
  cfg.timeout_seconds = 5.0;
  return cfg;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Io;  // sentinel: no error
}

}  // namespace

TEST(HttpBackend, RequestBody) {
  HttpBackendConfig cfg;
  cfg.model = "m";
  const auto body = chat_request_body(cfg, Request{Role::AnswerGeneration, "prompt", {}, false});
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["messages"].back()["content"], "prompt");
  EXPECT_EQ(body["max_tokens"], 256);
  EXPECT_EQ(chat_request_body(cfg, Request{Role::Decompose, "p", {}, false})["temperature"], 0.4);
}

TEST(HttpBackend, ParseEndpoint) {
  const auto ep = parse_endpoint("http://localhost:8080/v1/chat/completions");
  EXPECT_EQ(ep.origin, "http://localhost:8080");
  EXPECT_EQ(ep.path, "/v1/chat/completions");
  EXPECT_EQ(parse_endpoint("http://host").path, "/");
  EXPECT_EQ(code_of([] { parse_endpoint("localhost:8080/v1"); }), Errc::InvalidConfig);
  EXPECT_EQ(code_of([] { parse_endpoint("ftp://x/y"); }), Errc::InvalidConfig);
  EXPECT_EQ(code_of([] { parse_endpoint("http:///path"); }), Errc::InvalidConfig);
}

TEST(HttpBackend, ConfigChecks) {
  auto cfg = config_for("http://127.0.0.1:1/x");
  cfg.max_in_flight = 0;
  EXPECT_EQ(code_of([&] { HttpBackend b(cfg); }), Errc::InvalidConfig);
  cfg = config_for("http://127.0.0.1:1/x");
  cfg.timeout_seconds = 0;
  EXPECT_EQ(code_of([&] { HttpBackend b(cfg); }), Errc::InvalidConfig);
}

TEST(HttpBackend, ReplyAndFailures) {
  LocalServer server;
  HttpBackend ok(config_for(server.url("/chat")));
  const auto reply = ok.complete(Request{Role::TypeSelect, "classify", {}, false});
  EXPECT_EQ(reply, "afterNfirst");
  EXPECT_EQ(server.last_body["model"], "test-model");
  EXPECT_EQ(server.last_body["messages"][1]["content"], "classify");
  EXPECT_TRUE(server.last_auth.empty());

  const Request r{Role::TypeSelect, "x", {}, false};
  HttpBackend fail(config_for(server.url("/fail")));
  EXPECT_EQ(code_of([&] { fail.complete(r); }), Errc::Transport);
  HttpBackend text(config_for(server.url("/text")));
  EXPECT_EQ(code_of([&] { text.complete(r); }), Errc::UnparseableResponse);
  HttpBackend shape(config_for(server.url("/shape")));
  EXPECT_EQ(code_of([&] { shape.complete(r); }), Errc::UnparseableResponse);
}

TEST(HttpBackend, UnreachableIsTransport) {
  auto cfg = config_for("http://127.0.0.1:1/chat");
  cfg.timeout_seconds = 2.0;
  HttpBackend b(cfg);
  const auto code = code_of([&] { b.complete(Request{Role::TypeSelect, "x", {}, false}); });
  EXPECT_TRUE(code == Errc::Transport || code == Errc::Timeout);
}

TEST(HttpEmbedder, NormalizesAndChecksDimension) {
  LocalServer server;
  HttpEmbedder two(server.url("/embed"), 2);
  const auto v = two.embed("anything");
  ASSERT_EQ(v.size(), 2);
  EXPECT_NEAR(v[0], 0.6, 1e-12);
  EXPECT_NEAR(v[1], 0.8, 1e-12);
  const std::vector<std::string> batch{"a", "b", "c"};
  EXPECT_EQ(two.embed_batch(batch).size(), 3u);

  HttpEmbedder three(server.url("/embed"), 3);
  EXPECT_EQ(code_of([&] { three.embed("x"); }), Errc::DimensionMismatch);
  EXPECT_EQ(code_of([] { HttpEmbedder bad("http://127.0.0.1:1/e", 0); }), Errc::InvalidConfig);
}
