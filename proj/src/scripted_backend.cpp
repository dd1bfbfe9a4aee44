#include <fstream>

#include "chronoqa/error.hpp"
#include "chronoqa/reasoner.hpp"
#include "chronoqa/text.hpp"

namespace chronoqa {

ScriptedBackend ScriptedBackend::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("rules") || !doc.at("rules").is_array())
    throw Error(Errc::SchemaError, "rules file: expected an object with a \"rules\" array");
  if (doc.value("schema_version", 1) != 1) throw Error(Errc::SchemaError, "rules file: unsupported schema_version");
  std::vector<Rule> rules;
  std::size_t n = 0;
  for (const auto& r : doc.at("rules")) {
    ++n;
    const auto where = "rule " + std::to_string(n) + ": ";
    if (!r.is_object() || !r.contains("role") || !r.contains("response"))
      throw Error(Errc::SchemaError, where + "needs role and response");
    auto role = parse_role(r.at("role").get<std::string>());
    if (!role) throw Error(Errc::SchemaError, where + "unknown role " + r.at("role").get<std::string>());
    Rule rule{*role, {}, {}};
    const auto& resp = r.at("response");
    rule.response = resp.is_string() ? resp.get<std::string>() : resp.dump();
    if (r.contains("match")) {
      for (const auto& [key, val] : r.at("match").items()) {
        std::vector<std::string> needles;
        if (val.is_string()) {
          needles.push_back(val.get<std::string>());
        } else if (val.is_array()) {
          for (const auto& s : val) needles.push_back(s.get<std::string>());
        } else {
          throw Error(Errc::SchemaError, where + "match values must be strings or string arrays");
        }
        rule.match.emplace_back(key, std::move(needles));
      }
    }
    rules.push_back(std::move(rule));
  }
  return ScriptedBackend(std::move(rules));
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open rules file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, path + ": " + e.what());
  }
  return from_json(doc);
}

std::optional<std::string> ScriptedBackend::complete(const Request& request) {
  for (const auto& rule : rules_) {
    if (rule.role != request.role) continue;
    bool ok = true;
    for (const auto& [key, needles] : rule.match) {
      if (!request.fields.contains(key)) {
        ok = false;
        break;
      }
      const auto& v = request.fields.at(key);
      const std::string hay = v.is_string() ? v.get<std::string>() : v.dump();
      for (const auto& needle : needles) {
        if (!icontains(hay, needle)) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
    }
    if (ok) return rule.response;
  }
  return std::nullopt;
}

}  // namespace chronoqa
