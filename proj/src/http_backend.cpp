// Eigen must come before httplib: <resolv.h> defines a `_res` macro.
#include "chronoqa/reasoner.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>

#include "chronoqa/error.hpp"

namespace chronoqa {
namespace {

constexpr const char* kSystemMessage =
    "You answer questions over a temporal knowledge graph. Follow the requested output format exactly.";

void set_timeouts(httplib::Client& cli, double seconds) {
  const auto usec = static_cast<std::int64_t>(seconds * 1e6);
  const time_t sec = static_cast<time_t>(usec / 1000000);
  const time_t rem = static_cast<time_t>(usec % 1000000);
  cli.set_connection_timeout(sec, rem);
  cli.set_read_timeout(sec, rem);
  cli.set_write_timeout(sec, rem);
}

nlohmann::json post_json(const Endpoint& ep, const nlohmann::json& body, double timeout,
                         const httplib::Headers& headers) {
  httplib::Client cli(ep.origin);
  set_timeouts(cli, timeout);
  const auto t0 = std::chrono::steady_clock::now();
  auto res = cli.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed >= 0.9 * timeout);
    const auto what = ep.origin + ep.path + ": " + httplib::to_string(err);
    throw Error(timed_out ? Errc::Timeout : Errc::Transport, what);
  }
  if (res->status != 200)
    throw Error(Errc::Transport, ep.origin + ep.path + ": HTTP " + std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::UnparseableResponse, std::string("response body is not JSON: ") + e.what());
  }
}

}  // namespace

Endpoint parse_endpoint(std::string_view url) {
  const auto sep = url.find("://");
  if (sep == std::string_view::npos) throw Error(Errc::InvalidConfig, "endpoint needs a scheme: " + std::string(url));
  const auto scheme = url.substr(0, sep);
  if (scheme != "http" && scheme != "https")
    throw Error(Errc::InvalidConfig, "unsupported endpoint scheme: " + std::string(scheme));
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw Error(Errc::InvalidConfig, "https endpoints need a TLS-enabled build");
#endif
  const auto rest = url.substr(sep + 3);
  const auto slash = rest.find('/');
  const auto host = rest.substr(0, slash);
  if (host.empty()) throw Error(Errc::InvalidConfig, "endpoint has no host: " + std::string(url));
  Endpoint ep;
  ep.origin = std::string(scheme) + "://" + std::string(host);
  ep.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  return ep;
}

nlohmann::json chat_request_body(const HttpBackendConfig& cfg, const Request& request) {
  const double temperature =
      request.role == Role::AnswerGeneration ? cfg.answer_temperature : cfg.explore_temperature;
  return {
      {"model", cfg.model},
      {"messages",
       nlohmann::json::array({{{"role", "system"}, {"content", kSystemMessage}},
                              {{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", temperature},
      {"max_tokens", cfg.max_tokens},
  };
}

HttpBackend::HttpBackend(HttpBackendConfig cfg)
    : cfg_(std::move(cfg)), endpoint_(parse_endpoint(cfg_.endpoint)), slots_(std::max(1, cfg_.max_in_flight)) {
  if (cfg_.max_in_flight < 1 || cfg_.max_in_flight > 1024)
    throw Error(Errc::InvalidConfig, "max_in_flight must be in [1, 1024]");
  if (cfg_.max_tokens < 1) throw Error(Errc::InvalidConfig, "max_tokens must be positive");
  if (cfg_.timeout_seconds <= 0) throw Error(Errc::InvalidConfig, "timeout must be positive");
}

std::optional<std::string> HttpBackend::complete(const Request& request) {
  httplib::Headers headers;
  if (!cfg_.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const auto body = chat_request_body(cfg_, request);
  slots_.acquire();
  nlohmann::json reply;
  try {
    reply = post_json(endpoint_, body, cfg_.timeout_seconds, headers);
  } catch (...) {
    slots_.release();
    throw;
  }
  slots_.release();
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::UnparseableResponse, "reply lacks choices[0].message.content");
  }
}

HttpEmbedder::HttpEmbedder(std::string endpoint, int dim, double timeout_seconds)
    : endpoint_(parse_endpoint(endpoint)), dim_(dim), timeout_(timeout_seconds) {
  if (dim_ < 1) throw Error(Errc::InvalidConfig, "embedding dimension must be positive");
}

Vector HttpEmbedder::embed(std::string_view text) const {
  const std::string s(text);
  return embed_batch(std::span<const std::string>(&s, 1)).front();
}

std::vector<Vector> HttpEmbedder::embed_batch(std::span<const std::string> texts) const {
  nlohmann::json body = {{"input", nlohmann::json::array()}};
  for (const auto& t : texts) body["input"].push_back(t);
  const auto reply = post_json(endpoint_, body, timeout_, {});
  if (!reply.contains("embeddings") || !reply.at("embeddings").is_array() ||
      reply.at("embeddings").size() != texts.size())
    throw Error(Errc::UnparseableResponse, "embedding reply needs one vector per input");
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& row : reply.at("embeddings")) {
    if (!row.is_array() || static_cast<int>(row.size()) != dim_)
      throw Error(Errc::DimensionMismatch, "embedding reply has wrong dimension");
    Vector v(dim_);
    for (int i = 0; i < dim_; ++i) v[i] = row.at(static_cast<std::size_t>(i)).get<double>();
    const double n = v.norm();
    if (n > 0) v /= n;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace chronoqa
