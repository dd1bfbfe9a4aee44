#include "chronoqa/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "chronoqa/error.hpp"

namespace chronoqa {

void RetrievalConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(Errc::InvalidConfig, msg); };
  if (std::abs(lambda_sem + lambda_prox - 1.0) > 1e-9) fail("lambda_sem + lambda_prox must equal 1");
  if (lambda_sem < 0 || lambda_prox < 0) fail("score weights must be non-negative");
  if (d_max < 1 || w_max < 1 || w1 < 1 || w_exp < 1 || b_max < 1) fail("d_max, w_max, w1, w_exp and b_max must be >= 1");
  if (!(sigma_days > 0)) fail("sigma_days must be > 0");
  if (result_cap < 1) fail("result_cap must be >= 1");
}

int predicted_depth(const Indicator& ind, const RetrievalConfig& cfg) { return std::clamp(ind.hops, 1, cfg.d_max); }

namespace {

std::vector<EntityId> unique_seeds(std::span<const EntityId> seeds) {
  std::vector<EntityId> out;
  for (EntityId s : seeds) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

void prune_level(std::vector<TemporalPath>& level, const Subgraph& g, const Vector& target, const Embedder& embedder,
                 int beam) {
  if (beam <= 0 || level.size() <= static_cast<std::size_t>(beam)) return;
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(level.size());
  for (std::size_t i = 0; i < level.size(); ++i) {
    ranked.emplace_back(cosine(embedder.embed(verbalize(g.tkg(), level[i])), target), i);
  }
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return level[a.second] < level[b.second];
  });
  std::vector<TemporalPath> kept;
  kept.reserve(static_cast<std::size_t>(beam));
  for (int i = 0; i < beam; ++i) kept.push_back(std::move(level[ranked[static_cast<std::size_t>(i)].second]));
  level = std::move(kept);
}

}  // namespace

std::vector<TemporalPath> expand_paths(const Subgraph& g, std::span<const EntityId> seeds, const Indicator& ind,
                                       const Embedder& embedder, const RetrievalConfig& cfg,
                                       const ExpandOptions& opts) {
  if (seeds.empty()) throw Error(Errc::EmptySeeds, "path expansion needs at least one seed");
  const auto roots = unique_seeds(seeds);
  for (EntityId s : roots) {
    if (!g.contains(s)) {
      throw Error(Errc::UnknownEntity, "seed '" + (s.value < g.tkg().entity_count() ? g.tkg().entity_name(s) : std::string("?")) +
                                           "' is not in the subgraph");
    }
  }

  // Extensions only move forward in time, so a prefix whose last start is
  // already past the window's upper bound can never satisfy the constraints.
  const TimeWindow window = implied_window(ind.constraints);
  const auto hopeless = [&](const PathStep& step) {
    return window.before && step.fact.ts.start() >= window.before->start();
  };
  std::unordered_set<std::uint32_t> first_hop;
  if (opts.first_hop) {
    for (FactId id : *opts.first_hop) first_hop.insert(id.value);
  }
  const Vector target = cfg.beam > 0 ? embedder.embed(verbalize(ind)) : Vector();

  std::vector<TemporalPath> out;
  std::vector<TemporalPath> level;
  for (EntityId s : roots) {
    for (const PathStep& step : g.neighbors(s, Direction::Both)) {
      if (opts.first_hop && !first_hop.count(step.fact.id.value)) continue;
      if (hopeless(step)) continue;
      level.push_back(TemporalPath{{step}});
    }
  }
  for (int d = 1; d <= opts.depth && !level.empty(); ++d) {
    prune_level(level, g, target, embedder, cfg.beam);
    out.insert(out.end(), level.begin(), level.end());
    if (d == opts.depth) break;
    std::vector<TemporalPath> next;
    for (const TemporalPath& p : level) {
      const PathStep& last = p.steps.back();
      for (const PathStep& step : g.neighbors(last.target(), Direction::Both)) {
        if (step.fact.ts.start() < last.fact.ts.start()) continue;
        if (hopeless(step)) continue;
        const bool reused = std::any_of(p.steps.begin(), p.steps.end(),
                                        [&](const PathStep& s) { return s.fact.id == step.fact.id; });
        if (reused) continue;
        TemporalPath q = p;
        q.steps.push_back(step);
        next.push_back(std::move(q));
      }
    }
    level = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<TemporalPath> candidate_bound_filter(const std::vector<TemporalPath>& paths,
                                                 std::span<const EntityId> seeds, int d) {
  const auto s = static_cast<long>(seeds.size());
  std::vector<TemporalPath> out;
  for (const auto& p : paths) {
    const auto len = static_cast<long>(p.length());
    if (!(s * (d - 1) < len && len <= s * d)) continue;
    std::size_t next = 0;
    if (!p.empty()) {
      if (next < seeds.size() && p.steps.front().source() == seeds[next]) ++next;
      for (const auto& step : p.steps) {
        if (next < seeds.size() && step.target() == seeds[next]) ++next;
      }
    }
    if (next == seeds.size()) out.push_back(p);
  }
  return out;
}

Timestamp representative_time(const TemporalPath& path) {
  if (path.empty()) throw Error(Errc::EmptyPath, "empty path has no representative time");
  return path.steps.back().fact.ts;
}

std::vector<TemporalPath> temporal_filter(const std::vector<TemporalPath>& paths,
                                          const std::vector<Constraint>& constraints) {
  std::vector<TemporalPath> out;
  for (const auto& p : paths) {
    if (!validate_path(p)) continue;
    if (!constraints.empty() && (p.empty() || !constraints_hold(constraints, representative_time(p)))) continue;
    out.push_back(p);
  }
  return out;
}

double proximity(const Timestamp& t, const std::optional<Timestamp>& anchor, double sigma_days) {
  if (!anchor) return 1.0;
  const auto delta = static_cast<double>(std::llabs(t.start_day() - anchor->start_day()));
  return std::exp(-delta / sigma_days);
}

double combine_score(double sem, double prox, const RetrievalConfig& cfg) {
  return cfg.lambda_sem * sem + cfg.lambda_prox * prox;
}

namespace {

ScoredPath score_with(const Tkg& tkg, const Vector& ind_vec, const std::optional<Timestamp>& anchor,
                      const TemporalPath& path, const Embedder& embedder, const RetrievalConfig& cfg) {
  ScoredPath sp;
  sp.path = path;
  sp.sem = cosine(ind_vec, embedder.embed(verbalize(tkg, path)));
  sp.prox = proximity(representative_time(path), anchor, cfg.sigma_days);
  sp.score = combine_score(sp.sem, sp.prox, cfg);
  return sp;
}

}  // namespace

ScoredPath score_path(const Tkg& tkg, const Indicator& ind, const TemporalPath& path, const Embedder& embedder,
                      const RetrievalConfig& cfg) {
  return score_with(tkg, embedder.embed(verbalize(ind)), reference_anchor(ind), path, embedder, cfg);
}

std::vector<ScoredPath> sort_and_truncate(std::vector<ScoredPath> scored, std::size_t w1) {
  std::sort(scored.begin(), scored.end(), [](const ScoredPath& a, const ScoredPath& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.path < b.path;
  });
  if (scored.size() > w1) scored.resize(w1);
  return scored;
}

std::vector<ScoredPath> rerank(const Tkg& tkg, const std::vector<TemporalPath>& paths, const Indicator& ind,
                               const Embedder& embedder, const RetrievalConfig& cfg) {
  const Vector ind_vec = embedder.embed(verbalize(ind));
  const auto anchor = reference_anchor(ind);
  std::vector<ScoredPath> scored;
  scored.reserve(paths.size());
  for (const auto& p : paths) scored.push_back(score_with(tkg, ind_vec, anchor, p, embedder, cfg));
  return sort_and_truncate(std::move(scored), static_cast<std::size_t>(cfg.w1));
}

std::vector<TemporalPath> dense_retrieve(const Subgraph& g, const Indicator& ind, const EmbeddingIndex& fact_index,
                                         const Embedder& embedder, std::size_t k, std::span<const EntityId> seeds,
                                         const std::optional<std::vector<FactId>>& allowed) {
  std::vector<TemporalPath> out;
  if (fact_index.size() == 0 || k == 0) return out;
  std::unordered_set<std::uint64_t> allow;
  if (allowed) {
    for (FactId id : *allowed) allow.insert(id.value);
  }
  const auto filter = [&](std::uint64_t id, std::span<const std::string>) {
    return g.contains(FactId{static_cast<std::uint32_t>(id)}) && (!allowed || allow.count(id) > 0);
  };
  const auto is_seed = [&](EntityId e) { return std::find(seeds.begin(), seeds.end(), e) != seeds.end(); };
  for (const auto& hit : fact_index.search(embedder.embed(verbalize(ind)), k, filter)) {
    const Fact& f = g.tkg().fact(FactId{static_cast<std::uint32_t>(hit.id)});
    const bool reversed = is_seed(f.tail) && !is_seed(f.head);
    out.push_back(TemporalPath{{PathStep{f, reversed}}});
  }
  return out;
}

std::vector<ScoredPath> hybrid_retrieve(const Subgraph& g, std::span<const EntityId> seeds, const Indicator& ind,
                                        const Embedder& embedder, const RetrievalConfig& cfg,
                                        const HybridOptions& opts) {
  if (seeds.empty()) throw Error(Errc::EmptySeeds, "retrieval needs at least one seed");
  const auto roots = unique_seeds(seeds);
  const int d = predicted_depth(ind, cfg);
  std::map<TemporalPath, std::pair<bool, bool>> pool;
  if (cfg.graph_stream) {
    ExpandOptions eo;
    eo.depth = std::min(static_cast<int>(roots.size()) * d, cfg.d_max);
    eo.first_hop = opts.first_hop;
    for (auto& p : candidate_bound_filter(expand_paths(g, roots, ind, embedder, cfg, eo), roots, d)) {
      pool[std::move(p)].first = true;
    }
  }
  if (cfg.dense_stream && opts.fact_index) {
    for (auto& p : dense_retrieve(g, ind, *opts.fact_index, embedder, static_cast<std::size_t>(cfg.w1), roots,
                                  opts.first_hop)) {
      pool[std::move(p)].second = true;
    }
  }
  std::vector<TemporalPath> merged;
  merged.reserve(pool.size());
  for (const auto& [p, _] : pool) merged.push_back(p);
  auto ranked = rerank(g.tkg(), temporal_filter(merged, ind.constraints), ind, embedder, cfg);
  for (auto& sp : ranked) {
    const auto& flags = pool.at(sp.path);
    sp.from_graph = flags.first;
    sp.from_dense = flags.second;
  }
  return ranked;
}

}  // namespace chronoqa
