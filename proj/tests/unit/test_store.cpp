#include <gtest/gtest.h>

#include <algorithm>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include "chronoqa/error.hpp"
#include "chronoqa/store.hpp"
#include "fixtures.hpp"

using namespace chronoqa;
using namespace chronoqa::testing;

TEST(LoadTsv, CaseFixture) {
  const Tkg tkg = case_tkg();
  EXPECT_EQ(tkg.fact_count(), 19u);
  EXPECT_TRUE(tkg.find_entity("China"));
  EXPECT_TRUE(tkg.find_entity("Olympics 2008"));
  for (const auto& f : tkg.facts()) EXPECT_EQ(f.ts.granularity(), Granularity::Day);
}

TEST(LoadTsv, EmptyStream) {
  std::istringstream in("");
  const Tkg tkg = load_tsv(in);
  EXPECT_EQ(tkg.fact_count(), 0u);
  EXPECT_EQ(tkg.entity_count(), 0u);
}

TEST(LoadTsv, ThreeFieldsIsParseErrorWithLine) {
  std::istringstream in("A\tr\tB\t2009\n# note\nA\tr\tB\n");
  try {
    load_tsv(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadTsv, CrlfAndCommentsAndDuplicates) {
  std::istringstream in("# h\r\nB\tr\tC\t2010\r\nA\tr\tB\t2009\r\nA\tr\tB\t2009\r\n");
  const Tkg tkg = load_tsv(in);
  EXPECT_EQ(tkg.fact_count(), 2u);
  // Canonical order: earlier fact first.
  EXPECT_EQ(tkg.entity_name(tkg.facts()[0].head), "A");
}

TEST(LoadTsv, BadTimestampCarriesLine) {
  std::istringstream in("A\tr\tB\t2009-02-30\n");
  try {
    load_tsv(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(Neighbors, OlympicsOutInWindow) {
  const Tkg tkg = case_tkg();
  const auto got = tkg.neighbors(ent(tkg, "Olympics 2008"), Direction::Out,
                                 {parse_timestamp("2008-01-01"), parse_timestamp("2009-01-01")});
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(tkg.relation_name(got[0].fact.relation), "opening");
  EXPECT_EQ(to_string(got[0].fact.ts), "2008-08-08");
  EXPECT_EQ(tkg.relation_name(got[1].fact.relation), "closing");
}

TEST(Neighbors, BeijingInMatchesScan) {
  const Tkg tkg = case_tkg();
  const auto beijing = ent(tkg, "Beijing");
  std::vector<FactId> expected;
  for (const auto& f : tkg.facts())
    if (f.tail == beijing) expected.push_back(f.id);
  std::sort(expected.begin(), expected.end());
  const auto got = tkg.neighbors(beijing, Direction::In);
  ASSERT_EQ(got.size(), expected.size());
  EXPECT_EQ(got.size(), 5u);  // 3 visits + opening + closing
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].fact.id, expected[i]);
}

TEST(Neighbors, IsolatedAndUnknown) {
  std::istringstream in("A\tr\tB\t2009\nC\tself\tC\t2010\n");
  const Tkg tkg = load_tsv(in);
  EXPECT_EQ(tkg.neighbors(ent(tkg, "C"), Direction::Both).size(), 1u);  // self-loop once
  EXPECT_THROW(tkg.neighbors(EntityId{99}, Direction::Both), Error);
}

TEST(Subgraph, MerkelHops) {
  const Tkg tkg = definitions_tkg();
  const std::vector<EntityId> topics{ent(tkg, "Merkel")};
  const auto g3 = build_subgraph(tkg, topics, 3);
  EXPECT_TRUE(g3.contains(ent(tkg, "EU")));
  EXPECT_EQ(g3.hop_distance(ent(tkg, "Conference")), 2);
  const auto g1 = build_subgraph(tkg, topics, 1);
  EXPECT_TRUE(g1.contains(ent(tkg, "Paris")));
  EXPECT_FALSE(g1.contains(ent(tkg, "Conference")));
}

TEST(Subgraph, Errors) {
  const Tkg tkg = definitions_tkg();
  const std::vector<EntityId> topics{ent(tkg, "Merkel")};
  try {
    build_subgraph(tkg, topics, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyTopics);
  }
  EXPECT_THROW(build_subgraph(tkg, std::vector<EntityId>{}, 2), Error);
  EXPECT_THROW(build_subgraph(tkg, std::vector<EntityId>{EntityId{500}}, 2), Error);
}

// Property: membership equals a brute-force BFS over undirected adjacency.
TEST(SubgraphProperty, MatchesBruteForceBfs) {
  std::mt19937 rng(11);
  for (int round = 0; round < 40; ++round) {
    const int n = std::uniform_int_distribution<int>(3, 25)(rng);
    const int m = std::uniform_int_distribution<int>(1, 50)(rng);
    std::ostringstream tsv;
    for (int i = 0; i < m; ++i) {
      const int h = std::uniform_int_distribution<int>(0, n - 1)(rng);
      const int t = std::uniform_int_distribution<int>(0, n - 1)(rng);
      tsv << 'e' << h << "\tr\te" << t << '\t' << 2000 + (i % 20) << '\n';
    }
    std::istringstream in(tsv.str());
    const Tkg tkg = load_tsv(in);
    const EntityId topic = tkg.facts()[0].head;
    const int d = std::uniform_int_distribution<int>(1, 3)(rng);

    std::map<std::uint32_t, int> dist{{topic.value, 0}};
    std::queue<std::uint32_t> q;
    q.push(topic.value);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (const auto& f : tkg.facts()) {
        for (auto [a, b] : {std::pair{f.head.value, f.tail.value}, std::pair{f.tail.value, f.head.value}}) {
          if (a == u && !dist.count(b)) {
            dist[b] = dist[u] + 1;
            q.push(b);
          }
        }
      }
    }
    std::set<std::uint32_t> want;
    for (const auto& f : tkg.facts()) {
      const auto dh = dist.count(f.head.value) ? dist[f.head.value] : 1 << 20;
      const auto dt = dist.count(f.tail.value) ? dist[f.tail.value] : 1 << 20;
      if (dh <= d && dt <= d && std::min(dh, dt) <= d - 1) want.insert(f.id.value);
    }
    const auto g = build_subgraph(tkg, std::vector<EntityId>{topic}, d);
    std::set<std::uint32_t> got;
    for (auto id : g.facts()) got.insert(id.value);
    ASSERT_EQ(got, want) << "round " << round;
    for (const auto& [e, k] : dist) {
      if (k <= d) ASSERT_EQ(g.hop_distance(EntityId{e}), k);
    }
  }
}

TEST(ValidatePath, DefinitionExamples) {
  const Tkg tkg = definitions_tkg();
  const auto p1 = fact(tkg, "Merkel", "visit", "Paris");
  const auto p2 = fact(tkg, "Paris", "host", "Conference");
  const auto p3 = fact(tkg, "Conference", "attended_by", "EU");
  EXPECT_TRUE(validate_path(forward_path({p1, p2, p3})));
  EXPECT_FALSE(validate_path(forward_path({p3, p2, p1})));
  auto earlier = p2;
  earlier.ts = parse_timestamp("2011");
  EXPECT_FALSE(validate_path(forward_path({p1, earlier, p3})));
  EXPECT_TRUE(validate_path(forward_path({p1})));
  EXPECT_TRUE(validate_path(TemporalPath{}));
  // Disconnected: Merkel->Paris then Conference->EU.
  EXPECT_FALSE(validate_path(forward_path({p1, p3})));
}

TEST(ValidateTrp, DefinitionExamples) {
  const Tkg tkg = definitions_tkg();
  const TemporalPath s1 = forward_path({fact(tkg, "Obama", "meet", "UN")});
  const TemporalPath s2 = forward_path({fact(tkg, "Beijing", "linked_via", "EU"), fact(tkg, "EU", "event_in", "Paris")});
  EXPECT_TRUE(validate_trp({{s1, s2}}));
  EXPECT_FALSE(validate_trp({{s2, s1}}));
  EXPECT_TRUE(validate_trp({}));
}
