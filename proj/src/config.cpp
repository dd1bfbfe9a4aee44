#include "chronoqa/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "chronoqa/error.hpp"

namespace chronoqa {

namespace {

using nlohmann::json;

void check_keys(const json& section, const char* name, const std::set<std::string>& allowed) {
  if (!section.is_object()) throw Error(Errc::InvalidConfig, std::string("config section '") + name + "' must be an object");
  for (const auto& [k, v] : section.items()) {
    if (!allowed.count(k)) throw Error(Errc::InvalidConfig, std::string("unknown key '") + k + "' in section '" + name + "'");
  }
}

template <class T>
void read(const json& section, const char* key, T& out) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::InvalidConfig, std::string("config key '") + key + "' has the wrong type");
  }
}

std::string resolve(const std::string& p, const std::string& base) {
  if (p.empty() || base.empty()) return p;
  const std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

}  // namespace

void Config::validate() const {
  engine.validate();
  memory.validate();
  if (backend.kind != "scripted" && backend.kind != "http")
    throw Error(Errc::InvalidConfig, "backend.kind must be scripted or http");
  if (backend.kind == "http" && (backend.http.endpoint.empty() || backend.http.model.empty()))
    throw Error(Errc::InvalidConfig, "the http backend needs an endpoint and a model");
  if (embedder.kind != "hashing" && embedder.kind != "http")
    throw Error(Errc::InvalidConfig, "embedder.kind must be hashing or http");
  if (embedder.dim < 1) throw Error(Errc::InvalidConfig, "embedder.dim must be positive");
  if (embedder.kind == "http" && embedder.endpoint.empty())
    throw Error(Errc::InvalidConfig, "the http embedder needs an endpoint");
}

Config config_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");
  check_keys(j, "root", {"retrieval", "memory", "backend", "embedder", "paths"});
  Config c;
  if (j.contains("retrieval")) {
    const auto& s = j.at("retrieval");
    check_keys(s, "retrieval",
               {"d_max", "w_max", "w1", "beam", "lambda_sem", "lambda_prox", "sigma_days", "w_exp", "b_max",
                "result_cap", "graph_stream", "dense_stream", "link_threshold", "max_node_attempts", "use_tree"});
    auto& r = c.engine.retrieval;
    read(s, "d_max", r.d_max);
    read(s, "w_max", r.w_max);
    read(s, "w1", r.w1);
    read(s, "beam", r.beam);
    read(s, "lambda_sem", r.lambda_sem);
    read(s, "lambda_prox", r.lambda_prox);
    read(s, "sigma_days", r.sigma_days);
    read(s, "w_exp", r.w_exp);
    read(s, "b_max", r.b_max);
    read(s, "result_cap", r.result_cap);
    read(s, "graph_stream", r.graph_stream);
    read(s, "dense_stream", r.dense_stream);
    read(s, "link_threshold", c.engine.link_threshold);
    read(s, "max_node_attempts", c.engine.max_node_attempts);
    read(s, "use_tree", c.engine.use_tree);
  }
  if (j.contains("memory")) {
    const auto& s = j.at("memory");
    check_keys(s, "memory",
               {"enabled", "capacity", "lambda_sim", "lambda_hit", "cross_type_threshold", "decay", "priority_floor",
                "min_keep"});
    read(s, "enabled", c.engine.use_memory);
    read(s, "capacity", c.memory.capacity);
    read(s, "lambda_sim", c.memory.lambda_sim);
    read(s, "lambda_hit", c.memory.lambda_hit);
    read(s, "cross_type_threshold", c.memory.cross_type_threshold);
    read(s, "decay", c.memory.decay);
    read(s, "priority_floor", c.memory.priority_floor);
    read(s, "min_keep", c.memory.min_keep);
  }
  if (j.contains("backend")) {
    const auto& s = j.at("backend");
    check_keys(s, "backend",
               {"kind", "script", "endpoint", "model", "api_key_env", "explore_temperature", "answer_temperature",
                "max_tokens", "max_in_flight", "timeout_seconds"});
    read(s, "kind", c.backend.kind);
    read(s, "script", c.backend.script);
    read(s, "endpoint", c.backend.http.endpoint);
    read(s, "model", c.backend.http.model);
    read(s, "api_key_env", c.backend.http.api_key_env);
    read(s, "explore_temperature", c.backend.http.explore_temperature);
    read(s, "answer_temperature", c.backend.http.answer_temperature);
    read(s, "max_tokens", c.backend.http.max_tokens);
    read(s, "max_in_flight", c.backend.http.max_in_flight);
    read(s, "timeout_seconds", c.backend.http.timeout_seconds);
  }
  if (j.contains("embedder")) {
    const auto& s = j.at("embedder");
    check_keys(s, "embedder", {"kind", "dim", "endpoint"});
    read(s, "kind", c.embedder.kind);
    read(s, "dim", c.embedder.dim);
    read(s, "endpoint", c.embedder.endpoint);
  }
  if (j.contains("paths")) {
    const auto& s = j.at("paths");
    check_keys(s, "paths", {"tkg", "aliases", "memory", "cold_start"});
    read(s, "tkg", c.paths.tkg);
    read(s, "aliases", c.paths.aliases);
    read(s, "memory", c.paths.memory);
    read(s, "cold_start", c.paths.cold_start);
  }
  c.backend.script = resolve(c.backend.script, base_dir);
  c.paths.tkg = resolve(c.paths.tkg, base_dir);
  c.paths.aliases = resolve(c.paths.aliases, base_dir);
  c.paths.memory = resolve(c.paths.memory, base_dir);
  c.paths.cold_start = resolve(c.paths.cold_start, base_dir);
  c.validate();
  return c;
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, path + ": " + e.what());
  }
  return config_from_json(j, std::filesystem::path(path).parent_path().string());
}

json config_to_json(const Config& c) {
  const auto& r = c.engine.retrieval;
  return {
      {"retrieval",
       {{"d_max", r.d_max}, {"w_max", r.w_max}, {"w1", r.w1}, {"beam", r.beam}, {"lambda_sem", r.lambda_sem},
        {"lambda_prox", r.lambda_prox}, {"sigma_days", r.sigma_days}, {"w_exp", r.w_exp}, {"b_max", r.b_max},
        {"result_cap", r.result_cap}, {"graph_stream", r.graph_stream}, {"dense_stream", r.dense_stream},
        {"link_threshold", c.engine.link_threshold}, {"max_node_attempts", c.engine.max_node_attempts},
        {"use_tree", c.engine.use_tree}}},
      {"memory",
       {{"enabled", c.engine.use_memory}, {"capacity", c.memory.capacity}, {"lambda_sim", c.memory.lambda_sim},
        {"lambda_hit", c.memory.lambda_hit}, {"cross_type_threshold", c.memory.cross_type_threshold},
        {"decay", c.memory.decay}, {"priority_floor", c.memory.priority_floor}, {"min_keep", c.memory.min_keep}}},
      {"backend",
       {{"kind", c.backend.kind}, {"script", c.backend.script}, {"endpoint", c.backend.http.endpoint},
        {"model", c.backend.http.model}, {"api_key_env", c.backend.http.api_key_env},
        {"explore_temperature", c.backend.http.explore_temperature},
        {"answer_temperature", c.backend.http.answer_temperature}, {"max_tokens", c.backend.http.max_tokens},
        {"max_in_flight", c.backend.http.max_in_flight}, {"timeout_seconds", c.backend.http.timeout_seconds}}},
      {"embedder", {{"kind", c.embedder.kind}, {"dim", c.embedder.dim}, {"endpoint", c.embedder.endpoint}}},
      {"paths",
       {{"tkg", c.paths.tkg}, {"aliases", c.paths.aliases}, {"memory", c.paths.memory},
        {"cold_start", c.paths.cold_start}}},
  };
}

}  // namespace chronoqa
