#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "chronoqa/embedding.hpp"
#include "chronoqa/error.hpp"
#include "chronoqa/retrieval.hpp"
#include "chronoqa/toolkits.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace chronoqa;
using namespace chronoqa::testing;

namespace {

Indicator bare(const char* s, const char* p, const char* o) {
  Indicator ind;
  ind.subject = s;
  ind.relation = p;
  ind.object = o;
  return ind;
}

}  // namespace

TEST(ExpandPaths, DefinitionExamplePath) {
  const Tkg tkg = definitions_tkg();
  const HashingEmbedder e;
  const auto g = Subgraph::full(tkg);
  const std::vector<EntityId> seeds{ent(tkg, "Merkel")};
  RetrievalConfig cfg;
  const auto ex1 = forward_path({fact(tkg, "Merkel", "visit", "Paris"), fact(tkg, "Paris", "host", "Conference"),
                                 fact(tkg, "Conference", "attended_by", "EU")});
  const auto deep = expand_paths(g, seeds, bare("Merkel", "related", "?x"), e, cfg, {3, std::nullopt});
  EXPECT_NE(std::find(deep.begin(), deep.end(), ex1), deep.end());
  const auto shallow = expand_paths(g, seeds, bare("Merkel", "related", "?x"), e, cfg, {1, std::nullopt});
  ASSERT_EQ(shallow.size(), 1u);
  EXPECT_EQ(shallow[0].steps[0].fact, fact(tkg, "Merkel", "visit", "Paris"));
  EXPECT_THROW(expand_paths(g, std::vector<EntityId>{}, bare("a", "b", "c"), e, cfg, {}), Error);
}

// Property: beam disabled -> exactly the brute-force monotone path set.
TEST(ExpandPathsProperty, MatchesExhaustiveEnumeration) {
  std::mt19937 rng(23);
  const HashingEmbedder e(32);
  RetrievalConfig cfg;
  cfg.beam = 0;
  for (int round = 0; round < 30; ++round) {
    const Tkg tkg = random_tkg(rng, 30, 60);
    const auto g = Subgraph::full(tkg);
    std::vector<EntityId> seeds{tkg.facts()[0].head};
    if (round % 3 == 0) seeds.push_back(tkg.facts().back().tail);
    const int depth = std::uniform_int_distribution<int>(1, 3)(rng);
    const auto got = expand_paths(g, seeds, bare("?x", "r", "?y"), e, cfg, {depth, std::nullopt});
    const std::set<TemporalPath> got_set(got.begin(), got.end());
    ASSERT_EQ(got_set.size(), got.size()) << "duplicates";
    ASSERT_EQ(got_set, brute_paths(tkg, seeds, depth)) << "round " << round;
    for (const auto& p : got) ASSERT_TRUE(validate_path(p));
  }
}

TEST(ExpandPaths, BeamBoundsEachLevel) {
  std::mt19937 rng(29);
  const HashingEmbedder e(32);
  RetrievalConfig cfg;
  cfg.beam = 4;
  const Tkg tkg = random_tkg(rng, 6, 60);
  const auto g = Subgraph::full(tkg);
  const std::vector<EntityId> seeds{tkg.facts()[0].head};
  const auto got = expand_paths(g, seeds, bare("?x", "r1", "?y"), e, cfg, {3, std::nullopt});
  std::map<std::size_t, int> per_len;
  for (const auto& p : got) ++per_len[p.length()];
  for (const auto& [len, n] : per_len) EXPECT_LE(n, 4) << len;
}

TEST(CandidateBoundFilter, LengthWindow) {
  const Tkg tkg = definitions_tkg();
  const std::vector<EntityId> merkel{ent(tkg, "Merkel")};
  const auto a = fact(tkg, "Merkel", "visit", "Paris");
  const auto b = fact(tkg, "Paris", "host", "Conference");
  const auto c = fact(tkg, "Conference", "attended_by", "EU");
  EXPECT_EQ(candidate_bound_filter({forward_path({a, b, c})}, merkel, 3).size(), 1u);
  EXPECT_TRUE(candidate_bound_filter({forward_path({a, b})}, merkel, 3).empty());
}

// Property: for |S|, D in {1,2,3}, survivors are exactly the paths whose
// length is in (|S|(D-1), |S|D] and whose node sequence visits the seeds in order.
TEST(CandidateBoundFilterProperty, MatchesDirectEvaluation) {
  std::mt19937 rng(31);
  for (int round = 0; round < 20; ++round) {
    const Tkg tkg = random_tkg(rng, 8, 40);
    const auto g = Subgraph::full(tkg);
    RetrievalConfig cfg;
    cfg.beam = 0;
    std::vector<EntityId> pool;
    for (std::uint32_t i = 0; i < tkg.entity_count(); ++i) pool.push_back(EntityId{i});
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto all = brute_paths(tkg, {pool[0]}, 6);
    const std::vector<TemporalPath> paths(all.begin(), all.end());
    for (int s = 1; s <= 3; ++s) {
      if (static_cast<int>(pool.size()) < s) break;
      const std::vector<EntityId> seeds(pool.begin(), pool.begin() + s);
      for (int d = 1; d <= 3; ++d) {
        std::vector<TemporalPath> want;
        for (const auto& p : paths)
          if (within_candidate_bound(p, seeds, d)) want.push_back(p);
        ASSERT_EQ(candidate_bound_filter(paths, seeds, d), want) << "s=" << s << " d=" << d;
      }
    }
  }
}

TEST(TemporalFilter, StrictAfterAndMonotone) {
  const Tkg tkg = case_tkg();
  const auto opening = forward_path({fact(tkg, "Olympics 2008", "opening", "Beijing")});
  const auto merkel = TemporalPath{{{fact(tkg, "Angela Merkel", "visit", "Beijing"), true}}};
  const auto cs = parse_constraints("after(t2, 2008-08-08)");
  const auto kept = temporal_filter({opening, merkel}, cs);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0], merkel);
  EXPECT_EQ(temporal_filter({opening, merkel}, {}).size(), 2u);
  // Non-monotone: Beijing <- Merkel (2008-12) then Beijing <- opening (2008-08) reversed.
  TemporalPath bad{{{fact(tkg, "Olympics 2008", "closing", "Beijing"), false},
                    {fact(tkg, "Olympics 2008", "opening", "Beijing"), true}}};
  EXPECT_TRUE(temporal_filter({bad}, {}).empty());
}

TEST(RepresentativeTime, LastFactStart) {
  const Tkg tkg = definitions_tkg();
  EXPECT_EQ(to_string(representative_time(forward_path(
                {fact(tkg, "Merkel", "visit", "Paris"), fact(tkg, "Paris", "host", "Conference"),
                 fact(tkg, "Conference", "attended_by", "EU")}))),
            "2014");
  EXPECT_EQ(to_string(representative_time(forward_path({fact(tkg, "Obama", "meet", "UN")}))), "2009");
  EXPECT_EQ(to_string(representative_time(
                forward_path({fact(tkg, "Beijing", "linked_via", "EU"), fact(tkg, "EU", "event_in", "Paris")}))),
            "2012");
  EXPECT_THROW(representative_time(TemporalPath{}), Error);
}

TEST(ScorePath, Arithmetic) {
  RetrievalConfig cfg;
  EXPECT_DOUBLE_EQ(combine_score(1.0, proximity(parse_timestamp("2009-01-01"), parse_timestamp("2009-01-01"), 365), cfg), 1.0);
  const double prox = proximity(parse_timestamp("2010-01-01"), parse_timestamp("2009-01-01"), 365);
  EXPECT_NEAR(prox, std::exp(-1.0), 1e-12);
  EXPECT_NEAR(combine_score(0.0, prox, cfg), 0.4 * std::exp(-1.0), 1e-9);
  EXPECT_EQ(proximity(parse_timestamp("1900"), std::nullopt, 365), 1.0);
}

TEST(ScorePath, UsesEmbedderAndAnchor) {
  const Tkg tkg = case_tkg();
  const HashingEmbedder e;
  RetrievalConfig cfg;
  auto ind = bare("?y", "sign environmental treaty", "China");
  ind.constraints = parse_constraints("after(t2, 2008-08-08)");
  const auto p = forward_path({fact(tkg, "Japan", "sign_treaty_env", "China")});
  const auto s = score_path(tkg, ind, p, e, cfg);
  EXPECT_NEAR(s.sem, cosine(e.embed(verbalize(ind)), e.embed(verbalize(tkg, p))), 1e-12);
  EXPECT_NEAR(s.prox, std::exp(-186.0 / 365.0), 1e-12);  // 2008-08-08 .. 2009-02-10
  EXPECT_NEAR(s.score, 0.6 * s.sem + 0.4 * s.prox, 1e-12);
}

// Property: score is monotone in sem and prox, and never increases with |dt|.
TEST(ScorePathProperty, Monotone) {
  RetrievalConfig cfg;
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> u(-1, 1), p(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const double s1 = u(rng), s2 = u(rng), q1 = p(rng), q2 = p(rng);
    if (s1 <= s2) ASSERT_LE(combine_score(s1, q1, cfg), combine_score(s2, q1, cfg));
    if (q1 <= q2) ASSERT_LE(combine_score(s1, q1, cfg), combine_score(s1, q2, cfg));
  }
  const auto anchor = parse_timestamp("2010-06-01");
  double prev = 2.0;
  for (int d = 0; d < 2000; d += 7) {
    const double pr = proximity(from_days(anchor.start_day() + d), anchor, 365);
    ASSERT_LE(pr, prev);
    ASSERT_DOUBLE_EQ(pr, proximity(from_days(anchor.start_day() - d), anchor, 365));
    prev = pr;
  }
}

// Property: rerank is the prefix of a brute-force sort and ignores input order.
TEST(RerankProperty, PrefixOfBruteForceSort) {
  std::mt19937 rng(41);
  for (int round = 0; round < 200; ++round) {
    std::vector<ScoredPath> xs;
    const int n = std::uniform_int_distribution<int>(0, 30)(rng);
    for (int i = 0; i < n; ++i) {
      ScoredPath s;
      Fact f;
      f.id = FactId{static_cast<std::uint32_t>(i)};
      s.path.steps.push_back({f, false});
      s.score = std::uniform_int_distribution<int>(0, 5)(rng) / 5.0;  // many ties
      xs.push_back(s);
    }
    auto want = xs;
    std::sort(want.begin(), want.end(), [](const ScoredPath& a, const ScoredPath& b) {
      return a.score != b.score ? a.score > b.score : a.path < b.path;
    });
    const std::size_t w1 = std::uniform_int_distribution<std::size_t>(1, 35)(rng);
    want.resize(std::min(w1, want.size()));
    std::shuffle(xs.begin(), xs.end(), rng);
    const auto got = sort_and_truncate(xs, w1);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_EQ(got[i].path, want[i].path);
  }
}

TEST(DenseRetrieve, TreatyFactsAboveVisits) {
  const Tkg tkg = case_tkg();
  const HashingEmbedder e;
  const auto g = Subgraph::full(tkg);
  const auto index = build_fact_index(g, e);
  const auto ind = bare("?y", "sign environmental treaty", "China");
  const auto all = dense_retrieve(g, ind, index, e, kUnlimited);
  EXPECT_EQ(all.size(), tkg.fact_count());
  const auto q = e.embed(verbalize(ind));
  double worst_treaty = 2, best_visit = -2;
  for (const auto& f : tkg.facts()) {
    const double c = cosine(q, e.embed(verbalize(tkg, f)));
    if (tkg.relation_name(f.relation) == "sign_treaty_env") worst_treaty = std::min(worst_treaty, c);
    if (tkg.relation_name(f.relation) == "visit") best_visit = std::max(best_visit, c);
  }
  ASSERT_GT(worst_treaty, best_visit);  // oracle agrees before checking the ranking
  std::size_t last_treaty = 0, first_visit = all.size();
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& rel = tkg.relation_name(all[i].steps[0].fact.relation);
    if (rel == "sign_treaty_env") last_treaty = i;
    if (rel == "visit") first_visit = std::min(first_visit, i);
  }
  EXPECT_LT(last_treaty, first_visit);

  std::istringstream empty("");
  const Tkg none = load_tsv(empty);
  const auto g0 = Subgraph::full(none);
  EXPECT_TRUE(dense_retrieve(g0, ind, build_fact_index(g0, e), e, 10).empty());
}

TEST(HybridRetrieve, JapanFirstAmongTreaties) {
  const Tkg tkg = case_tkg();
  const HashingEmbedder e;
  const auto g = Subgraph::full(tkg);
  const auto index = build_fact_index(g, e);
  auto ind = bare("?y", "sign environmental treaty", "China");
  ind.constraints = parse_constraints("after(t2, 2008-08-08)");
  RetrievalConfig cfg;
  const std::vector<EntityId> seeds{ent(tkg, "China")};
  const auto out = hybrid_retrieve(g, seeds, ind, e, cfg, {std::nullopt, &index});
  ASSERT_FALSE(out.empty());
  const ScoredPath* first_treaty = nullptr;
  for (const auto& s : out) {
    ASSERT_TRUE(validate_path(s.path));
    ASSERT_TRUE(constraints_hold(ind.constraints, representative_time(s.path)));
    if (!first_treaty && s.path.length() == 1 && tkg.relation_name(s.path.steps[0].fact.relation) == "sign_treaty_env")
      first_treaty = &s;
  }
  ASSERT_TRUE(first_treaty);
  EXPECT_EQ(tkg.entity_name(first_treaty->path.steps[0].fact.head), "Japan");
  std::set<std::vector<std::uint32_t>> seen;
  for (const auto& s : out) {
    std::vector<std::uint32_t> key;
    for (const auto& st : s.path.steps) key.push_back(st.fact.id.value);
    EXPECT_TRUE(seen.insert(key).second) << "duplicate fact sequence";
  }
}

TEST(HybridRetrieve, DefinitionPathInPool) {
  const Tkg tkg = definitions_tkg();
  const HashingEmbedder e;
  const auto g = Subgraph::full(tkg);
  const auto index = build_fact_index(g, e);
  RetrievalConfig cfg;
  auto ind = bare("Merkel", "linked to", "EU");
  ind.hops = 3;
  const std::vector<EntityId> seeds{ent(tkg, "Merkel")};
  const auto out = hybrid_retrieve(g, seeds, ind, e, cfg, {std::nullopt, &index});
  const auto ex1 = forward_path({fact(tkg, "Merkel", "visit", "Paris"), fact(tkg, "Paris", "host", "Conference"),
                                 fact(tkg, "Conference", "attended_by", "EU")});
  EXPECT_TRUE(std::any_of(out.begin(), out.end(), [&](const ScoredPath& s) { return s.path == ex1; }));
}

TEST(RetrievalConfig, Validation) {
  RetrievalConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.lambda_sem = 0.7;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.sigma_days = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.w1 = 0;
  EXPECT_THROW(cfg.validate(), Error);
}
