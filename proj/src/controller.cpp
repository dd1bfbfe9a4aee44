#include "chronoqa/controller.hpp"

#include <algorithm>
#include <future>
#include <set>

#include "chronoqa/error.hpp"
#include "chronoqa/text.hpp"

namespace chronoqa {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool is_ordering(TemporalType t) {
  return t == TemporalType::AfterNFirst || t == TemporalType::BeforeNLast || t == TemporalType::First ||
         t == TemporalType::Last;
}

bool is_set(TemporalType t) {
  return t == TemporalType::Before || t == TemporalType::After || t == TemporalType::Between ||
         t == TemporalType::During;
}

bool relation_known(const Tkg& tkg, std::string_view filter) {
  if (trim(filter).empty()) return false;
  for (std::uint32_t r = 0; r < tkg.relation_count(); ++r) {
    if (relation_matches(tkg, RelationId{r}, filter)) return true;
  }
  return false;
}

bool path_satisfies(const TemporalPath& p, const Indicator& ind) {
  return validate_path(p) && (p.empty() || constraints_hold(ind.constraints, representative_time(p)));
}

// One toolkit's proposal for a node answer.
struct Derived {
  std::vector<std::string> entities;
  std::optional<Timestamp> time;
  std::optional<std::size_t> count;
  std::vector<TemporalPath> proof;
  bool valid = true;
};

Derived derive(const Tkg& tkg, const CallOutcome& out, std::span<const EntityId> seeds, const Indicator& ind) {
  Derived d;
  auto facts = out.result.facts;
  const auto add_entity = [&](const PathStep& s) {
    const auto& name = tkg.entity_name(answer_entity(s, seeds, ind));
    if (std::find(d.entities.begin(), d.entities.end(), name) == d.entities.end()) d.entities.push_back(name);
  };
  if (out.result.count) {
    d.count = out.result.count;
    d.entities = {std::to_string(*out.result.count)};
    std::sort(facts.begin(), facts.end());
    for (const auto& s : facts) d.proof.push_back(TemporalPath{{s}});
  } else if (facts.empty()) {
    return d;
  } else if (is_ordering(ind.type)) {
    add_entity(facts.front());
    d.time = facts.front().fact.ts;
    d.proof.push_back(TemporalPath{{facts.front()}});
  } else if (is_set(ind.type)) {
    std::sort(facts.begin(), facts.end());
    for (const auto& s : facts) {
      add_entity(s);
      d.proof.push_back(TemporalPath{{s}});
      if (!d.time || s.fact.ts < *d.time) d.time = s.fact.ts;
    }
  } else if (!out.selected.empty()) {
    const auto& path = out.candidates.at(out.selected.front()).path;
    add_entity(path.steps.back());
    d.time = representative_time(path);
    d.proof.push_back(path);
  } else {
    add_entity(facts.front());
    d.time = facts.front().fact.ts;
    d.proof.push_back(TemporalPath{{facts.front()}});
  }
  for (const auto& p : d.proof) d.valid = d.valid && path_satisfies(p, ind);
  return d;
}

void rename_var(std::string& v, const std::map<std::string, std::string>& names) {
  if (auto it = names.find(v); it != names.end()) v = it->second;
}

void rename_constraint(Constraint& c, const std::map<std::string, std::string>& names) {
  if (c.op != ConstraintOp::Topic) rename_var(c.subject, names);
  for (auto* r : {&c.anchor, &c.bound2}) {
    if (*r && !(*r)->concrete()) rename_var((*r)->var, names);
  }
}

// One granularity step coarser for equality-style anchors.
Indicator widen(Indicator ind, int level) {
  for (int i = 0; i < level; ++i) {
    for (auto& c : ind.constraints) {
      if (c.op == ConstraintOp::SameMonth) {
        c.op = ConstraintOp::SameYear;
      } else if (c.op == ConstraintOp::Equal && c.anchor && c.anchor->concrete()) {
        c.anchor = TimeRef::of(coarsen(*c.anchor->ts));
      }
    }
  }
  return ind;
}

nlohmann::json call_to_json(const ToolkitCall& call) {
  return {{"name", call.name}, {"params", call.params}, {"priority", call.priority}};
}

}  // namespace

void EngineConfig::validate() const {
  retrieval.validate();
  if (link_threshold < 0.0 || link_threshold > 1.0) throw Error(Errc::InvalidConfig, "link_threshold must be in [0, 1]");
  if (max_node_attempts < 1) throw Error(Errc::InvalidConfig, "max_node_attempts must be positive");
}

EntityId answer_entity(const PathStep& step, std::span<const EntityId> seeds, const Indicator& ind) {
  const auto touches = [&](EntityId e) { return std::find(seeds.begin(), seeds.end(), e) != seeds.end(); };
  if (touches(step.source()) && !touches(step.target())) return step.target();
  if (touches(step.target()) && !touches(step.source())) return step.source();
  if (touches(step.source())) return step.target();
  return is_variable(ind.subject) ? step.fact.head : step.fact.tail;
}

nlohmann::json step_to_json(const Tkg& tkg, const PathStep& step) {
  return {{"head", tkg.entity_name(step.fact.head)},
          {"relation", tkg.relation_name(step.fact.relation)},
          {"tail", tkg.entity_name(step.fact.tail)},
          {"time", to_string(step.fact.ts)},
          {"reversed", step.reversed}};
}

std::optional<TemporalPath> path_from_json(const Tkg& tkg, const nlohmann::json& j) {
  if (!j.is_array()) return std::nullopt;
  TemporalPath p;
  try {
    for (const auto& s : j) {
      const auto id = tkg.find_fact(s.at("head").get<std::string>(), s.at("relation").get<std::string>(),
                                    s.at("tail").get<std::string>(), parse_timestamp(s.at("time").get<std::string>()));
      if (!id) return std::nullopt;
      p.steps.push_back({tkg.fact(*id), s.value("reversed", false)});
    }
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  } catch (const Error&) {
    return std::nullopt;
  }
  return p;
}

struct Engine::Run {
  std::string question;
  Reasoner reasoner;
  Grounding g;
  Trajectory traj;
  RunStats stats;
  std::optional<EmbeddingIndex> fact_index;
  std::map<int, int> widen_level;
  std::map<std::string, int> producer;  // time variable -> node id
  std::string decomposition;

  Run(std::string_view q, Backend* backend, const Tkg& tkg) : question(q), reasoner(backend, tkg) {}
};

Engine::Engine(const Tkg& tkg, const Embedder& embedder, Backend* backend, SharedExperiencePool* pool,
               EngineConfig cfg)
    : tkg_(&tkg), embedder_(&embedder), backend_(backend), pool_(pool), cfg_(std::move(cfg)), linker_(tkg, embedder) {
  cfg_.validate();
}

Grounding Engine::ground(std::string_view question, Reasoner& reasoner, RunStats& stats) const {
  (void)stats;
  Grounding g;
  g.question = std::string(question);
  g.mentions = reasoner.extract_mentions(question);
  g.links = linker_.link(g.mentions, cfg_.link_threshold);
  for (const auto& l : g.links) {
    if (l.entity && std::find(g.topics.begin(), g.topics.end(), *l.entity) == g.topics.end()) g.topics.push_back(*l.entity);
  }
  if (g.topics.empty()) throw Error(Errc::NoTopicEntities, "no mention in the question links to a graph entity");
  g.subgraph = build_subgraph(*tkg_, g.topics, cfg_.retrieval.d_max);

  const bool memory = cfg_.use_memory && pool_;
  const auto w_exp = static_cast<std::size_t>(cfg_.retrieval.w_exp);
  Retrieved type_mem;
  if (memory) type_mem = pool_->retrieve(RecordKind::TypeExp, question, "", heuristic_type(question), w_exp);
  g.type = reasoner.classify_type(question, type_mem);

  std::vector<std::string> names;
  for (const auto e : g.topics) names.push_back(tkg_->entity_name(e));
  if (!cfg_.use_tree) {
    g.tree = heuristic_tree(question, g.type, names);
  } else {
    Retrieved plan_mem;
    if (memory) plan_mem = pool_->retrieve(RecordKind::DecompExp, question, "", g.type, w_exp);
    const auto norm = normalize_answer(question);
    for (const auto& r : plan_mem.exemplars) {
      if (normalize_answer(r.question_text) != norm || !r.payload.contains("decomposition")) continue;
      try {
        auto tree = parse_decomposition(r.payload.at("decomposition").get<std::string>(), g.type, question);
        validate_tree(tree, cfg_.retrieval.d_max);
        g.tree = std::move(tree);
        g.plan_reused = true;
        break;
      } catch (const Error&) {
      }
    }
    if (!g.plan_reused) g.tree = reasoner.decompose(question, g.type, names, plan_mem, cfg_.retrieval.d_max);
  }
  for (auto& n : g.tree.nodes) n.d_pred = predicted_depth(n.indicator, cfg_.retrieval);
  return g;
}

RunResult Engine::answer_question(std::string_view question) const {
  const auto t0 = Clock::now();
  Run run(question, backend_, *tkg_);
  try {
    run.g = ground(question, run.reasoner, run.stats);
  } catch (const Error& e) {
    throw e.with_phase("grounding");
  }
  run.stats.grounding_ms = ms_since(t0);
  run.decomposition = render_decomposition(run.g.tree);
  if (cfg_.retrieval.dense_stream) run.fact_index.emplace(build_fact_index(run.g.subgraph, *embedder_));

  auto& tree = run.g.tree;
  std::vector<int> top;
  for (const auto& n : tree.nodes) {
    if (n.parent < 0) top.push_back(n.id);
    if (!n.indicator.time_var.empty()) run.producer[n.indicator.time_var] = n.id;
  }
  std::set<std::string> read;
  const auto note_reads = [&](const Constraint& c) {
    for (const auto* r : {&c.anchor, &c.bound2}) {
      if (*r && !(*r)->concrete()) read.insert((*r)->var);
    }
  };
  for (const auto& n : tree.nodes) {
    for (const auto& c : n.indicator.constraints) note_reads(c);
  }
  for (const auto& c : tree.order) note_reads(c);
  for (const auto& n : tree.nodes) {
    run.traj.nodes[n.id].required = n.id == top.back() || read.count(n.indicator.time_var) > 0;
  }

  const auto t1 = Clock::now();
  for (int id : top) run_node(run, id);
  run.stats.nodes_ms = ms_since(t1);

  const auto t2 = Clock::now();
  try {
    synthesize(run);
  } catch (const Error& e) {
    throw e.with_phase("synthesis");
  }
  run.stats.synthesis_ms = ms_since(t2);
  run.stats.reasoner_calls = run.reasoner.calls();
  run.stats.total_ms = ms_since(t0);

  RunResult out;
  out.grounding = std::move(run.g);
  out.trajectory = std::move(run.traj);
  out.stats = run.stats;
  out.exchanges = run.reasoner.log();
  out.memory_enabled = cfg_.use_memory && pool_;
  return out;
}

void Engine::run_node(Run& run, int node_id) const {
  auto& state = run.traj.nodes[node_id];
  const auto fail = [&](std::string why) {
    run.traj.nodes[node_id].status = NodeStatus::Failed;
    if (!run.traj.records.empty() && run.traj.records.back().node_id == node_id && run.traj.records.back().error.empty()) {
      run.traj.records.back().error = std::move(why);
    } else {
      NodeRecord rec;
      rec.node_id = node_id;
      rec.subquestion = run.g.tree.node(node_id).subquestion;
      rec.indicator = run.g.tree.node(node_id).indicator;
      rec.error = std::move(why);
      run.traj.records.push_back(std::move(rec));
    }
  };
  for (int dep : run.g.tree.node(node_id).depends_on) {
    if (run.traj.nodes[dep].status != NodeStatus::Solved) {
      fail("depends on unsolved node " + std::to_string(dep));
      return;
    }
  }
  (void)state;
  RetrievalConfig rcfg = cfg_.retrieval;
  for (int attempt = 0;; ++attempt) {
    bool solved = false;
    try {
      solved = attempt_node(run, node_id, rcfg);
    } catch (const Error& e) {
      fail(std::string(errc_name(e.code())) + ": " + e.what());
      return;
    }
    if (solved) return;
    if (attempt + 1 >= cfg_.max_node_attempts) {
      fail("attempt budget exhausted");
      return;
    }
    const auto& last = run.traj.records.back();
    const Action action = last.verdict ? last.verdict->action : Action::RetrieveAgain;
    try {
      switch (action) {
        case Action::Accept:
        case Action::RetrieveAgain:
          ++run.widen_level[node_id];
          if (rcfg.beam > 0) rcfg.beam *= 2;
          break;
        case Action::Refine: {
          auto& node = run.g.tree.node(node_id);
          node.subquestion = run.reasoner.refine(node.subquestion, substitute(node.indicator, run.traj.bindings));
          break;
        }
        case Action::Decompose:
          decompose_node(run, node_id);
          return;
      }
    } catch (const Error& e) {
      fail(std::string(errc_name(e.code())) + ": " + e.what());
      return;
    }
  }
}

bool Engine::attempt_node(Run& run, int node_id, const RetrievalConfig& rcfg) const {
  const auto& node = run.g.tree.node(node_id);
  const auto& g = run.g.subgraph;
  NodeRecord rec;
  rec.node_id = node_id;
  rec.subquestion = node.subquestion;
  rec.attempt = static_cast<int>(std::count_if(run.traj.records.begin(), run.traj.records.end(),
                                               [&](const NodeRecord& r) { return r.node_id == node_id; }));
  const Indicator ind = widen(substitute(node.indicator, run.traj.bindings), run.widen_level[node_id]);
  rec.indicator = ind;
  const bool memory = cfg_.use_memory && pool_;
  const auto w_exp = static_cast<std::size_t>(cfg_.retrieval.w_exp);

  if (memory && try_reuse(run, node_id, rec)) {
    run.traj.records.push_back(std::move(rec));
    return true;
  }

  std::vector<EntityId> allowed = run.g.topics;
  for (const auto& [id, st] : run.traj.nodes) {
    if (st.status != NodeStatus::Solved) continue;
    for (const auto& a : st.answer) {
      if (auto e = tkg_->find_entity(a); e && g.contains(*e) && std::find(allowed.begin(), allowed.end(), *e) == allowed.end())
        allowed.push_back(*e);
    }
  }
  Retrieved seed_mem, tool_mem;
  const auto ind_text = verbalize(ind);
  if (memory) {
    seed_mem = pool_->retrieve(RecordKind::SeedExp, node.subquestion, ind_text, ind.type, w_exp);
    tool_mem = pool_->retrieve(RecordKind::ToolkitExp, node.subquestion, ind_text, ind.type, w_exp);
  }
  // Record what has been decided so far even if a later step throws.
  run.traj.records.push_back(rec);
  auto& live = run.traj.records.back();
  live.seeds = run.reasoner.select_seeds(g, ind, node.subquestion, allowed, seed_mem);
  const auto calls = run.reasoner.select_toolkits(ind, node.subquestion, live.seeds, tool_mem);

  std::vector<std::future<CallOutcome>> pending;
  for (const auto& call : calls) {
    pending.push_back(std::async(std::launch::async, [&g, call, cap = rcfg.result_cap] {
      CallOutcome out;
      out.result.call = call;
      try {
        out.result = execute(g, call, cap);
      } catch (const Error& e) {
        out.error = std::string(errc_name(e.code())) + ": " + e.what();
      }
      return out;
    }));
  }
  for (auto& f : pending) live.calls.push_back(f.get());
  std::stable_sort(live.calls.begin(), live.calls.end(),
                   [](const CallOutcome& a, const CallOutcome& b) { return a.result.call.priority < b.result.call.priority; });
  run.stats.toolkit_executions += calls.size();

  bool had_candidates = false;
  for (auto& out : live.calls) {
    if (out.result.facts.empty()) continue;
    had_candidates = true;
    HybridOptions opts;
    std::vector<FactId> ids;
    for (const auto& s : out.result.facts) ids.push_back(s.fact.id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    opts.first_hop = std::move(ids);
    opts.fact_index = run.fact_index ? &*run.fact_index : nullptr;
    out.candidates = hybrid_retrieve(g, live.seeds, ind, *embedder_, rcfg, opts);
    out.selected = run.reasoner.select_paths(out.candidates, node.subquestion, ind, static_cast<std::size_t>(rcfg.w_max));
  }

  std::vector<Derived> derived;
  std::vector<VoteCandidate> votes;
  for (const auto& out : live.calls) {
    if (!out.error.empty()) continue;
    auto d = derive(*tkg_, out, live.seeds, ind);
    if (d.entities.empty()) continue;
    VoteCandidate v;
    v.toolkit = out.result.call.name;
    v.priority = out.result.call.priority;
    v.entities = d.entities;
    v.time = d.time;
    v.result_size = out.result.facts.size();
    v.expected_size = is_ordering(ind.type) ? 1 : 0;
    v.valid = d.valid;
    votes.push_back(std::move(v));
    derived.push_back(std::move(d));
  }
  Derived win;
  if (!derived.empty()) {
    live.vote = run.reasoner.debate_vote(node.subquestion, ind.type, votes);
    win = derived.at(live.vote->index);
  }

  SufficiencyInput in;
  in.scope = Scope::Local;
  in.question = node.subquestion;
  in.indicator = ind;
  in.answer = win.entities;
  in.paths = win.proof;
  in.had_candidates = had_candidates;
  live.verdict = run.reasoner.check_sufficiency(in);
  if (!live.verdict->sufficient) return false;

  auto& st = run.traj.nodes[node_id];
  st.status = NodeStatus::Solved;
  st.answer = win.entities;
  st.time = win.time;
  st.count = win.count;
  st.proof = win.proof;
  if (win.time && !node.indicator.time_var.empty()) run.traj.bindings.emplace(node.indicator.time_var, *win.time);

  if (memory) {
    nlohmann::json evidence = nlohmann::json::array();
    for (const auto& p : win.proof) {
      nlohmann::json path = nlohmann::json::array();
      for (const auto& s : p.steps) path.push_back(step_to_json(*tkg_, s));
      evidence.push_back(path);
    }
    nlohmann::json call_list = nlohmann::json::array();
    for (const auto& c : calls) call_list.push_back(call_to_json(c));
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto e : live.seeds) seeds.push_back(tkg_->entity_name(e));

    ExperienceRecord trace;
    trace.kind = RecordKind::TraceExp;
    trace.question_text = node.subquestion;
    trace.indicator_text = ind_text;
    trace.primary_type = ind.type;
    trace.payload = {{"answer", win.entities},
                     {"time", win.time ? nlohmann::json(to_string(*win.time)) : nlohmann::json()},
                     {"count", win.count ? nlohmann::json(*win.count) : nlohmann::json()},
                     {"evidence", evidence},
                     {"calls", call_list}};
    write_back(run, trace, true);
    ExperienceRecord tools = trace;
    tools.kind = RecordKind::ToolkitExp;
    tools.payload = {{"calls", call_list}};
    write_back(run, tools, false);
    ExperienceRecord seed = trace;
    seed.kind = RecordKind::SeedExp;
    seed.payload = {{"seeds", seeds}};
    write_back(run, seed, false);
  }
  return true;
}

bool Engine::try_reuse(Run& run, int node_id, NodeRecord& rec) const {
  const auto& node = run.g.tree.node(node_id);
  const auto& ind = rec.indicator;
  const auto concrete = concrete_entity(ind);
  const bool check_relation = relation_known(*tkg_, ind.relation);
  std::vector<TemporalPath> paths;
  std::vector<std::string> answer;
  const auto guard = [&](const ExperienceRecord& r) {
    paths.clear();
    answer.clear();
    const auto& p = r.payload;
    if (!p.contains("answer") || !p.at("answer").is_array() || p.at("answer").empty()) return false;
    if (!p.contains("evidence") || !p.at("evidence").is_array() || p.at("evidence").empty()) return false;
    for (const auto& a : p.at("answer")) {
      if (!a.is_string()) return false;
      answer.push_back(a.get<std::string>());
    }
    bool mentions = !concrete;
    bool relation_ok = !check_relation;
    for (const auto& j : p.at("evidence")) {
      auto path = path_from_json(*tkg_, j);
      if (!path || path->empty()) return false;
      for (const auto& s : path->steps) {
        if (!run.g.subgraph.contains(s.fact.id)) return false;
        if (concrete && (iequals(tkg_->entity_name(s.fact.head), *concrete) || iequals(tkg_->entity_name(s.fact.tail), *concrete)))
          mentions = true;
        if (check_relation && relation_matches(*tkg_, s.fact.relation, ind.relation)) relation_ok = true;
      }
      if (!path_satisfies(*path, ind)) return false;
      paths.push_back(std::move(*path));
    }
    if (!mentions || !relation_ok) return false;
    SufficiencyInput in;
    in.scope = Scope::Local;
    in.question = node.subquestion;
    in.indicator = ind;
    in.answer = answer;
    in.paths = paths;
    in.had_candidates = true;
    return run.reasoner.check_sufficiency(in).sufficient;
  };
  const auto hit = pool_->lookup_and_test(node.subquestion, ind, guard, static_cast<std::size_t>(cfg_.retrieval.w_exp));
  if (!hit.sufficient || !hit.record) return false;
  const auto& p = hit.record->payload;
  auto& st = run.traj.nodes[node_id];
  st.status = NodeStatus::Solved;
  st.answer = answer;
  st.proof = paths;
  if (p.contains("time") && p.at("time").is_string()) st.time = parse_timestamp(p.at("time").get<std::string>());
  if (p.contains("count") && p.at("count").is_number_unsigned()) st.count = p.at("count").get<std::size_t>();
  if (st.time && !node.indicator.time_var.empty()) run.traj.bindings.emplace(node.indicator.time_var, *st.time);
  rec.memory_hit = true;
  rec.memory_record = hit.record->id;
  rec.verdict = Verdict{true, Action::Accept, "reused verified trace"};
  ++run.stats.memory_hits;
  return true;
}

bool Engine::decompose_node(Run& run, int node_id) const {
  auto& tree = run.g.tree;
  const int d_max = cfg_.retrieval.d_max;
  const int depth = tree.node(node_id).depth;
  if (depth >= d_max || run.traj.branch_budget_used >= cfg_.retrieval.b_max)
    throw Error(Errc::BudgetExhausted, "no depth or branch budget left to decompose node " + std::to_string(node_id));
  const auto parent_ind = substitute(tree.node(node_id).indicator, run.traj.bindings);
  const auto parent_text = tree.node(node_id).subquestion;
  Retrieved mem;
  if (cfg_.use_memory && pool_)
    mem = pool_->retrieve(RecordKind::DecompExp, parent_text, "", parent_ind.type,
                          static_cast<std::size_t>(cfg_.retrieval.w_exp));
  std::vector<std::string> names;
  for (const auto e : run.g.topics) names.push_back(tkg_->entity_name(e));
  auto sub = run.reasoner.decompose(parent_text, parent_ind.type, names, mem, d_max - depth);
  const int n_new = static_cast<int>(sub.nodes.size());
  if (n_new > cfg_.retrieval.b_max)
    throw Error(Errc::BudgetExhausted, "decomposition of node " + std::to_string(node_id) + " exceeds the branch budget");
  run.traj.branch_budget_used += n_new - 1;

  const std::string prefix = (parent_ind.time_var.empty() ? "n" + std::to_string(node_id) : parent_ind.time_var) + "_";
  std::map<std::string, std::string> names_map;
  for (const auto& v : sub.time_vars) names_map[v] = prefix + v;
  const int base = static_cast<int>(tree.nodes.size());
  std::vector<int> ids;
  for (auto& child : sub.nodes) {
    TreeNode n = child;
    n.id = base + child.id;
    n.parent = node_id;
    n.depth = depth + 1;
    n.children.clear();
    for (auto& d : n.depends_on) d += base;
    for (int d : tree.node(node_id).depends_on) n.depends_on.push_back(d);
    std::sort(n.depends_on.begin(), n.depends_on.end());
    n.depends_on.erase(std::unique(n.depends_on.begin(), n.depends_on.end()), n.depends_on.end());
    rename_var(n.indicator.time_var, names_map);
    for (auto& v : n.indicator.time_vars) rename_var(v, names_map);
    for (auto& c : n.indicator.constraints) rename_constraint(c, names_map);
    n.d_pred = predicted_depth(n.indicator, cfg_.retrieval);
    ids.push_back(n.id);
    tree.nodes.push_back(std::move(n));
  }
  // The last child answers the parent, so it inherits the parent's bound constraints.
  auto& last = tree.node(ids.back());
  for (auto c : parent_ind.constraints) {
    const bool bound = (!c.anchor || c.anchor->concrete()) && (!c.bound2 || c.bound2->concrete());
    if (!bound) continue;
    if (c.op != ConstraintOp::Topic) c.subject = last.indicator.time_var;
    if (std::find(last.indicator.constraints.begin(), last.indicator.constraints.end(), c) ==
        last.indicator.constraints.end())
      last.indicator.constraints.push_back(c);
  }
  last.indicator.type = derive_type(last.indicator.constraints);
  for (const auto& c : sub.order) {
    auto copy = c;
    rename_constraint(copy, names_map);
    tree.order.push_back(copy);
  }
  for (const auto& v : sub.time_vars) tree.time_vars.push_back(names_map[v]);
  tree.node(node_id).children = ids;
  validate_tree(tree, d_max);

  const bool required = run.traj.nodes[node_id].required;
  for (int id : ids) {
    run.traj.nodes[id].required = required;
    run.producer[tree.node(id).indicator.time_var] = id;
  }
  for (int id : ids) run_node(run, id);

  const auto child = run.traj.nodes.at(ids.back());
  auto& st = run.traj.nodes[node_id];
  st.status = child.status;
  st.answer = child.answer;
  st.time = child.time;
  st.count = child.count;
  st.proof = child.proof;
  const auto& var = tree.node(node_id).indicator.time_var;
  if (st.status == NodeStatus::Solved && st.time && !var.empty()) run.traj.bindings.emplace(var, *st.time);
  return st.status == NodeStatus::Solved;
}

void Engine::synthesize(Run& run) const {
  const auto& tree = run.g.tree;
  auto& traj = run.traj;
  std::vector<std::string> order;
  try {
    order = time_var_order(tree);
  } catch (const Error&) {
    order = tree.time_vars;
  }
  const auto rank_of = [&](const std::string& v) {
    const auto it = std::find(order.begin(), order.end(), v);
    return static_cast<std::size_t>(it - order.begin());
  };
  std::vector<int> leaves;
  for (const auto& n : tree.nodes) {
    const auto& st = traj.nodes[n.id];
    if (n.children.empty() && st.status == NodeStatus::Solved && !st.proof.empty()) leaves.push_back(n.id);
  }
  std::stable_sort(leaves.begin(), leaves.end(), [&](int a, int b) {
    return rank_of(tree.node(a).indicator.time_var) < rank_of(tree.node(b).indicator.time_var);
  });
  traj.chain.segments.clear();
  traj.chain_nodes.clear();
  for (int id : leaves) {
    auto paths = traj.nodes[id].proof;
    std::stable_sort(paths.begin(), paths.end(), [](const TemporalPath& a, const TemporalPath& b) {
      const auto sa = a.steps.front().fact.ts.start_day(), sb = b.steps.front().fact.ts.start_day();
      return sa != sb ? sa < sb : a < b;
    });
    for (auto& p : paths) {
      traj.chain.segments.push_back(std::move(p));
      traj.chain_nodes.push_back(id);
    }
  }
  if (!validate_trp(traj.chain))
    throw Error(Errc::IncoherentChain, "solved subquestions do not form a time-ordered reasoning chain");

  int target = -1;
  for (const auto& n : tree.nodes) {
    if (n.parent < 0) target = n.id;
  }
  const auto& tstate = traj.nodes[target];
  Answer draft;
  if (tstate.status == NodeStatus::Solved) {
    draft.entities = tstate.answer;
    draft.time = tstate.time;
  }
  SufficiencyInput in;
  in.scope = Scope::Global;
  in.question = run.question;
  in.indicator = substitute(tree.node(target).indicator, traj.bindings);
  in.answer = draft.entities;
  in.paths = traj.chain.segments;
  in.had_candidates = true;
  for (const auto& [id, st] : traj.nodes) {
    if (st.required) in.statuses.push_back(st.status);
  }
  traj.global = run.reasoner.check_sufficiency(in);
  traj.sufficient = traj.global->sufficient;
  if (!draft.entities.empty()) {
    std::vector<PathStep> evidence;
    for (const auto& seg : traj.chain.segments) evidence.insert(evidence.end(), seg.steps.begin(), seg.steps.end());
    traj.answer = run.reasoner.generate_answer(run.question, run.g.type, draft, evidence);
  } else {
    traj.answer = draft;
    traj.answer.rationale = "no subquestion chain reached the answer";
  }

  if (!(cfg_.use_memory && pool_)) return;
  if (traj.sufficient) {
    ExperienceRecord type_rec;
    type_rec.kind = RecordKind::TypeExp;
    type_rec.question_text = run.question;
    type_rec.primary_type = run.g.type;
    type_rec.payload = {{"type", type_name(run.g.type)}};
    write_back(run, type_rec, false);
    if (cfg_.use_tree) {
      ExperienceRecord plan;
      plan.kind = RecordKind::DecompExp;
      plan.question_text = run.question;
      plan.primary_type = run.g.type;
      plan.payload = {{"decomposition", run.decomposition}};
      write_back(run, plan, false);
    }
  } else {
    ExperienceRecord warn;
    warn.kind = RecordKind::TraceExp;
    warn.question_text = run.question;
    warn.indicator_text = verbalize(in.indicator);
    warn.primary_type = in.indicator.type;
    warn.outcome = Outcome::Incorrect;
    warn.sufficient = false;
    warn.payload = {{"answer", traj.answer.entities}, {"note", traj.global->note}};
    write_back(run, warn, false);
  }
}

void Engine::write_back(Run& run, ExperienceRecord rec, bool augment) const {
  const auto id = pool_->write_back(std::move(rec));
  ++run.stats.memory_writes;
  if (augment) pool_->cross_type_augment(id);
}

}  // namespace chronoqa
