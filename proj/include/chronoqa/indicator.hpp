#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chronoqa/store.hpp"
#include "chronoqa/timestamp.hpp"

namespace chronoqa {

enum class TemporalType {
  Equal,
  Before,
  After,
  During,
  Between,
  First,
  Last,
  BeforeNLast,
  AfterNFirst,
  Count,
  Comparison,
};

inline constexpr std::array<TemporalType, 11> kAllTypes = {
    TemporalType::Equal,  TemporalType::Before,      TemporalType::After,       TemporalType::During,
    TemporalType::Between, TemporalType::First,      TemporalType::Last,        TemporalType::BeforeNLast,
    TemporalType::AfterNFirst, TemporalType::Count, TemporalType::Comparison,
};

// "equal", "before", ..., "beforeNlast", "afterNfirst", "count", "comparison".
std::string_view type_name(TemporalType t);
// Case-insensitive; also accepts "before_last"/"after_first" spellings.
std::optional<TemporalType> parse_type(std::string_view text);

enum class ConstraintOp { Before, After, Between, Equal, SameYear, SameMonth, First, Last, Count, Topic };

std::string_view op_name(ConstraintOp op);

// A time reference: a concrete timestamp or a time variable name ("t1").
struct TimeRef {
  std::optional<Timestamp> ts;
  std::string var;

  bool concrete() const { return ts.has_value(); }
  static TimeRef of(Timestamp t) { return {t, {}}; }
  static TimeRef variable(std::string name) { return {std::nullopt, std::move(name)}; }
  bool operator==(const TimeRef&) const = default;
};

std::string to_string(const TimeRef& ref);

struct Constraint {
  ConstraintOp op = ConstraintOp::Equal;
  std::string subject;          // time variable the constraint restricts; entity variable for Topic
  std::optional<TimeRef> anchor;  // absent for First/Last/Count/Topic
  std::optional<TimeRef> bound2;  // upper bound for Between
  std::string word;             // Topic keyword

  bool operator==(const Constraint&) const = default;
};

// `before(t2, t1)`, `after_first(t2, 2008-08-08)`, `between(t3, t1, t2)`,
// `between(t3, [t1, t2])`, `same_year(t1, 2008)`, `specific_year(t1, 2010)`,
// `first(t2)`, `count(t1)`, `topic(?x, climate)`, `t2 > t1`, `t1 < 2010`.
// Compound forms expand to several constraints. Throws Error{ConstraintError}.
std::vector<Constraint> parse_constraints(std::string_view text);
std::string to_string(const Constraint& c);

bool is_variable(std::string_view term);

struct Indicator {
  std::string subject;  // entity name or ?var
  std::string relation;
  std::string object;
  TemporalType type = TemporalType::Equal;
  std::vector<Constraint> constraints;
  std::vector<std::string> time_vars;
  std::string time_var;  // variable carried by this edge
  int hops = 1;          // edges in the template

  bool operator==(const Indicator&) const = default;
};

// `Subject --[relation]--> Object (t1)`; the time part is optional.
// Throws Error{SchemaError} on other shapes.
Indicator parse_edge(std::string_view text);

// The concrete (non-variable) endpoint, subject first.
std::optional<std::string> concrete_entity(const Indicator& ind);
// First concrete anchor among ordering/equality constraints.
std::optional<Timestamp> reference_anchor(const Indicator& ind);

// Replaces bound time variables in anchors.
Indicator substitute(const Indicator& ind, const std::map<std::string, Timestamp>& bindings);

// Evaluates a constraint on a representative time. Constraints with unbound
// anchors and non-temporal ops (First/Last/Count/Topic) hold vacuously.
bool constraint_holds(const Constraint& c, const Timestamp& t);
bool constraints_hold(const std::vector<Constraint>& cs, const Timestamp& t);

// Largest exclusive window implied by the concrete constraints; used as a
// sound pre-filter (every time satisfying the constraints lies inside).
TimeWindow implied_window(const std::vector<Constraint>& cs);

// Type implied by a constraint set, e.g. after+first -> afterNfirst.
TemporalType derive_type(const std::vector<Constraint>& cs);

}  // namespace chronoqa
