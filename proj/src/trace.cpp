#include "chronoqa/trace.hpp"

namespace chronoqa {

namespace {

using nlohmann::json;

json opt_time(const std::optional<Timestamp>& t) { return t ? json(to_string(*t)) : json(); }

json verdict_json(const std::optional<Verdict>& v) {
  if (!v) return json();
  return {{"sufficient", v->sufficient}, {"action", action_name(v->action)}, {"note", v->note}};
}

json call_json(const Tkg& tkg, const CallOutcome& c) {
  json facts = json::array();
  for (const auto& s : c.result.facts) facts.push_back(step_to_json(tkg, s));
  json cands = json::array();
  for (const auto& sp : c.candidates) {
    json source = json::array();
    if (sp.from_graph) source.push_back("graph");
    if (sp.from_dense) source.push_back("dense");
    cands.push_back({{"path", path_to_json(tkg, sp.path)},
                     {"sem", sp.sem},
                     {"prox", sp.prox},
                     {"score", sp.score},
                     {"source", source}});
  }
  return {{"name", c.result.call.name},
          {"params", c.result.call.params},
          {"priority", c.result.call.priority},
          {"error", c.error.empty() ? json() : json(c.error)},
          {"count", c.result.count ? json(*c.result.count) : json()},
          {"note", c.result.note},
          {"facts", facts},
          {"candidates", cands},
          {"selected", c.selected}};
}

}  // namespace

json indicator_to_json(const Indicator& ind) {
  json cs = json::array();
  for (const auto& c : ind.constraints) cs.push_back(to_string(c));
  return {{"subject", ind.subject},
          {"relation", ind.relation},
          {"object", ind.object},
          {"time_var", ind.time_var},
          {"type", type_name(ind.type)},
          {"constraints", cs},
          {"text", verbalize(ind)}};
}

json path_to_json(const Tkg& tkg, const TemporalPath& path) {
  json steps = json::array();
  for (const auto& s : path.steps) steps.push_back(step_to_json(tkg, s));
  return steps;
}

json trace_to_json(const RunResult& run, const Tkg& tkg, const EngineConfig& cfg) {
  const auto& g = run.grounding;
  const auto& t = run.trajectory;
  json j;
  j["schema_version"] = kTraceSchemaVersion;
  j["question"] = g.question;
  j["flags"] = {{"memory", run.memory_enabled},
                {"tree", cfg.use_tree},
                {"graph_retrieval", cfg.retrieval.graph_stream},
                {"dense_retrieval", cfg.retrieval.dense_stream}};

  json links = json::array();
  for (const auto& l : g.links) {
    links.push_back({{"mention", l.mention},
                     {"entity", l.entity ? json(tkg.entity_name(*l.entity)) : json()},
                     {"similarity", l.similarity}});
  }
  json topics = json::array();
  for (const auto e : g.topics) topics.push_back(tkg.entity_name(e));
  j["grounding"] = {{"mentions", g.mentions},
                    {"links", links},
                    {"topics", topics},
                    {"type", type_name(g.type)},
                    {"subgraph", {{"entities", g.subgraph.entity_count()}, {"facts", g.subgraph.facts().size()}}},
                    {"plan_reused", g.plan_reused}};

  json tree_nodes = json::array();
  for (const auto& n : g.tree.nodes) {
    tree_nodes.push_back({{"id", n.id},
                          {"parent", n.parent},
                          {"depth", n.depth},
                          {"d_pred", n.d_pred},
                          {"subquestion", n.subquestion},
                          {"indicator", indicator_to_json(n.indicator)},
                          {"depends_on", n.depends_on},
                          {"children", n.children}});
  }
  json order = json::array();
  for (const auto& c : g.tree.order) order.push_back(to_string(c));
  j["tree"] = {{"type", type_name(g.tree.type)},
               {"time_vars", g.tree.time_vars},
               {"order", order},
               {"nodes", tree_nodes}};

  json nodes = json::array();
  for (const auto& [id, st] : t.nodes) {
    json attempts = json::array();
    for (const auto& r : t.records) {
      if (r.node_id != id) continue;
      json seeds = json::array();
      for (const auto e : r.seeds) seeds.push_back(tkg.entity_name(e));
      json calls = json::array();
      for (const auto& c : r.calls) calls.push_back(call_json(tkg, c));
      json vote;
      if (r.vote) {
        vote = {{"winning_toolkit", r.vote->toolkit},
                {"index", r.vote->index},
                {"entities", r.vote->entities},
                {"time", opt_time(r.vote->time)},
                {"score", r.vote->score},
                {"reason", r.vote->reason}};
      }
      attempts.push_back({{"attempt", r.attempt},
                          {"subquestion", r.subquestion},
                          {"indicator", indicator_to_json(r.indicator)},
                          {"seeds", seeds},
                          {"memory_hit", r.memory_hit},
                          {"memory_record", r.memory_record ? json(*r.memory_record) : json()},
                          {"toolkit_calls", calls},
                          {"vote", vote},
                          {"sufficiency", verdict_json(r.verdict)},
                          {"error", r.error.empty() ? json() : json(r.error)}});
    }
    json proof = json::array();
    for (const auto& p : st.proof) proof.push_back(path_to_json(tkg, p));
    nodes.push_back({{"id", id},
                     {"status", status_name(st.status)},
                     {"required", st.required},
                     {"answer", st.answer},
                     {"time", opt_time(st.time)},
                     {"count", st.count ? json(*st.count) : json()},
                     {"proof", proof},
                     {"attempts", attempts}});
  }
  j["nodes"] = nodes;

  json bindings = json::object();
  for (const auto& [v, ts] : t.bindings) bindings[v] = to_string(ts);
  json chain = json::array();
  for (std::size_t i = 0; i < t.chain.segments.size(); ++i)
    chain.push_back({{"node", t.chain_nodes.at(i)}, {"path", path_to_json(tkg, t.chain.segments[i])}});
  j["bindings"] = bindings;
  j["chain"] = chain;
  j["answer"] = {{"entities", t.answer.entities},
                 {"time", opt_time(t.answer.time)},
                 {"rationale", t.answer.rationale},
                 {"sufficient", t.sufficient},
                 {"global", verdict_json(t.global)}};
  j["memory_hit"] = run.memory_hit();
  j["reasoner_calls"] = run.stats.reasoner_calls;
  j["toolkit_executions"] = run.stats.toolkit_executions;
  j["memory"] = {{"enabled", run.memory_enabled}, {"hits", run.stats.memory_hits}, {"writes", run.stats.memory_writes}};
  json exchanges = json::array();
  for (const auto& e : run.exchanges) {
    exchanges.push_back({{"role", role_name(e.role)},
                         {"fallback", e.fallback},
                         {"repaired", e.repaired},
                         {"response", e.fallback ? json() : json(e.response)}});
  }
  j["exchanges"] = exchanges;
  j["timing"] = {{"grounding_ms", run.stats.grounding_ms},
                 {"nodes_ms", run.stats.nodes_ms},
                 {"synthesis_ms", run.stats.synthesis_ms},
                 {"total_ms", run.stats.total_ms}};
  return j;
}

}  // namespace chronoqa
