#include "oracles.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <tuple>

namespace chronoqa::testing {

std::set<TemporalPath> brute_paths(const Tkg& tkg, const std::vector<EntityId>& seeds, int depth) {
  std::set<TemporalPath> out;
  std::function<void(TemporalPath&, EntityId)> dfs = [&](TemporalPath& p, EntityId at) {
    if (!p.empty()) out.insert(p);
    if (static_cast<int>(p.length()) == depth) return;
    for (const auto& f : tkg.facts()) {
      for (bool rev : {false, true}) {
        const PathStep step{f, rev};
        if (step.source() != at) continue;
        if (f.head == f.tail && rev) continue;
        if (!p.empty() && f.ts.start_day() < p.steps.back().fact.ts.start_day()) continue;
        if (std::any_of(p.steps.begin(), p.steps.end(), [&](const PathStep& s) { return s.fact.id == f.id; })) continue;
        p.steps.push_back(step);
        dfs(p, step.target());
        p.steps.pop_back();
      }
    }
  };
  std::set<std::uint32_t> seen;
  for (auto s : seeds) {
    if (!seen.insert(s.value).second) continue;
    TemporalPath p;
    dfs(p, s);
  }
  return out;
}

Tkg random_tkg(std::mt19937& rng, int max_entities, int max_facts) {
  const int n = std::uniform_int_distribution<int>(2, max_entities)(rng);
  const int m = std::uniform_int_distribution<int>(1, max_facts)(rng);
  std::ostringstream tsv;
  for (int i = 0; i < m; ++i) {
    const int h = std::uniform_int_distribution<int>(0, n - 1)(rng);
    int t = std::uniform_int_distribution<int>(0, n - 2)(rng);
    if (t >= h) ++t;
    tsv << 'v' << h << "\tr" << i % 3 << "\tv" << t << '\t' << 2000 + std::uniform_int_distribution<int>(0, 5)(rng) << '\n';
  }
  std::istringstream in(tsv.str());
  return load_tsv(in);
}

bool within_candidate_bound(const TemporalPath& p, const std::vector<EntityId>& seeds, int d) {
  const long s = static_cast<long>(seeds.size());
  const long len = static_cast<long>(p.length());
  if (!(s * (d - 1) < len && len <= s * d)) return false;
  std::vector<EntityId> nodes{p.steps.front().source()};
  for (const auto& st : p.steps) nodes.push_back(st.target());
  std::size_t k = 0;
  for (auto n : nodes)
    if (k < seeds.size() && n == seeds[k]) ++k;
  return k == seeds.size();
}

bool reference_valid(const TemporalPath& p) {
  for (std::size_t i = 1; i < p.steps.size(); ++i) {
    const auto& a = p.steps[i - 1];
    const auto& b = p.steps[i];
    const auto a_end = a.reversed ? a.fact.head : a.fact.tail;
    const auto b_begin = b.reversed ? b.fact.tail : b.fact.head;
    if (a_end != b_begin) return false;
    if (b.fact.ts.start_day() < a.fact.ts.start_day()) return false;
  }
  return true;
}

double cos_or_zero(const Vector& a, const Vector& b) {
  return (a.norm() == 0 || b.norm() == 0) ? 0.0 : a.dot(b) / (a.norm() * b.norm());
}

std::vector<std::uint64_t> oracle_rank(const ExperiencePool& pool, RecordKind kind, const Vector& q, const Vector& i,
                                       TemporalType type) {
  std::uint64_t max_hits = 0;
  for (auto id : pool.buffer()) max_hits = std::max(max_hits, pool.record(id).hit_count);
  std::vector<std::tuple<int, double, std::uint64_t>> rows;
  for (const auto& [id, r] : pool.records()) {
    if (r.kind != kind) continue;
    if (r.primary_type != type && !r.secondary_types.count(type)) continue;
    const double sim = 0.5 * cos_or_zero(r.e_q, q) + 0.5 * cos_or_zero(r.e_i, i);
    if (pool.in_buffer(id)) {
      const double h = max_hits ? double(r.hit_count) / double(max_hits) : 0.0;
      rows.emplace_back(0, 0.6 * sim + 0.4 * h, id);
    } else {
      rows.emplace_back(1, sim, id);
    }
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<std::uint64_t> out;
  for (const auto& r : rows) out.push_back(std::get<2>(r));
  return out;
}

}  // namespace chronoqa::testing
