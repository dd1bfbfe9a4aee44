#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "chronoqa/controller.hpp"
#include "chronoqa/memory.hpp"
#include "chronoqa/reasoner.hpp"

namespace chronoqa {

struct BackendSettings {
  std::string kind = "scripted";  // scripted | http
  std::string script;             // rules file for the scripted backend
  HttpBackendConfig http;
};

struct EmbedderSettings {
  std::string kind = "hashing";  // hashing | http
  int dim = 256;
  std::string endpoint;
};

struct PathSettings {
  std::string tkg;
  std::string aliases;
  std::string memory;
  std::string cold_start;
};

struct Config {
  EngineConfig engine;
  MemoryConfig memory;
  BackendSettings backend;
  EmbedderSettings embedder;
  PathSettings paths;

  // Throws Error{InvalidConfig}.
  void validate() const;
};

// Sections: retrieval, memory, backend, embedder, paths. Missing keys keep
// their defaults; unknown keys are rejected. Relative paths resolve against
// `base_dir`. Throws Error{InvalidConfig}.
Config config_from_json(const nlohmann::json& j, const std::string& base_dir = {});
Config load_config_file(const std::string& path);
nlohmann::json config_to_json(const Config& c);

}  // namespace chronoqa
