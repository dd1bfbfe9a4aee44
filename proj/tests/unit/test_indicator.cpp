#include <gtest/gtest.h>

#include <random>

#include "chronoqa/error.hpp"
#include "chronoqa/indicator.hpp"

using namespace chronoqa;

TEST(ParseConstraints, Forms) {
  auto cs = parse_constraints("after_first(t2, t1)");
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].op, ConstraintOp::After);
  EXPECT_EQ(cs[0].anchor->var, "t1");
  EXPECT_EQ(cs[1].op, ConstraintOp::First);

  cs = parse_constraints("between(t3, [t1, t2])");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].op, ConstraintOp::Between);
  EXPECT_EQ(cs[0].bound2->var, "t2");
  EXPECT_EQ(parse_constraints("between(t3, t1, t2)"), cs);

  cs = parse_constraints("same_year(t1, 2008); count(t1), topic(?x, climate)");
  ASSERT_EQ(cs.size(), 3u);
  EXPECT_EQ(cs[0].op, ConstraintOp::SameYear);
  EXPECT_EQ(cs[2].word, "climate");

  cs = parse_constraints("t2 > t1");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].op, ConstraintOp::After);

  EXPECT_THROW(parse_constraints("whenever(t1)"), Error);
}

TEST(ParseEdge, ShapeAndErrors) {
  const auto ind = parse_edge("?y --[sign environmental treaty]--> China (t2)");
  EXPECT_EQ(ind.subject, "?y");
  EXPECT_EQ(ind.relation, "sign environmental treaty");
  EXPECT_EQ(ind.object, "China");
  EXPECT_EQ(ind.time_var, "t2");
  EXPECT_EQ(concrete_entity(ind), "China");
  try {
    parse_edge("China signed with ?y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SchemaError);
  }
  EXPECT_THROW(parse_edge(" --[r]--> B"), Error);
}

TEST(DeriveType, Table) {
  const auto t = [](const char* s) { return derive_type(parse_constraints(s)); };
  EXPECT_EQ(t("after_first(t2, t1)"), TemporalType::AfterNFirst);
  EXPECT_EQ(t("before_last(t2, t1)"), TemporalType::BeforeNLast);
  EXPECT_EQ(t("between(t3, [t1, t2])"), TemporalType::Between);
  EXPECT_EQ(t("before(t1, 2020); count(t1)"), TemporalType::Count);
  EXPECT_EQ(t("before(t1, 2020)"), TemporalType::Before);
  EXPECT_EQ(t("same_year(t1, 2008)"), TemporalType::Equal);
  EXPECT_EQ(derive_type({}), TemporalType::Equal);
}

TEST(TypeNames, RoundTrip) {
  for (auto t : kAllTypes) EXPECT_EQ(parse_type(type_name(t)), t);
  EXPECT_EQ(parse_type("after_first"), TemporalType::AfterNFirst);
  EXPECT_FALSE(parse_type("sometimes"));
}

TEST(Substitute, BindsVariables) {
  Indicator ind = parse_edge("?y --[visit]--> Beijing (t2)");
  ind.constraints = parse_constraints("before_last(t2, t1)");
  EXPECT_FALSE(reference_anchor(ind));
  const auto bound = substitute(ind, {{"t1", parse_timestamp("2010-06-26")}});
  EXPECT_EQ(reference_anchor(bound), parse_timestamp("2010-06-26"));
  EXPECT_FALSE(constraints_hold(bound.constraints, parse_timestamp("2010-07-01")));
  EXPECT_TRUE(constraints_hold(bound.constraints, parse_timestamp("2009-11-15")));
}

// Property: the implied window is sound; every day satisfying the
// constraints is admitted by it.
TEST(ImpliedWindowProperty, Sound) {
  std::mt19937 rng(5);
  const char* ops[] = {"before", "after", "same_year", "same_month", "between"};
  for (int round = 0; round < 300; ++round) {
    std::string text;
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < n; ++i) {
      const std::string op = ops[std::uniform_int_distribution<int>(0, 4)(rng)];
      const int y = std::uniform_int_distribution<int>(2000, 2006)(rng);
      const int m = std::uniform_int_distribution<int>(1, 12)(rng);
      char buf[64];
      if (op == "between") {
        std::snprintf(buf, sizeof buf, "between(t1, %d, %d)", y, y + std::uniform_int_distribution<int>(0, 3)(rng));
      } else if (op == "same_month") {
        std::snprintf(buf, sizeof buf, "same_month(t1, %d-%02d)", y, m);
      } else {
        std::snprintf(buf, sizeof buf, "%s(t1, %d-%02d-15)", op.c_str(), y, m);
      }
      text += (text.empty() ? "" : "; ") + std::string(buf);
    }
    const auto cs = parse_constraints(text);
    const auto w = implied_window(cs);
    for (auto day = parse_timestamp("1999-06-01").start_day(); day < parse_timestamp("2011-01-01").start_day(); day += 3) {
      const auto t = from_days(day);
      if (constraints_hold(cs, t)) ASSERT_TRUE(w.admits(t)) << text << " @ " << to_string(t);
    }
  }
}
