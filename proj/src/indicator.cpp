#include "chronoqa/indicator.hpp"

#include <algorithm>
#include <cctype>

#include "chronoqa/error.hpp"
#include "chronoqa/text.hpp"

namespace chronoqa {

std::string_view type_name(TemporalType t) {
  switch (t) {
    case TemporalType::Equal: return "equal";
    case TemporalType::Before: return "before";
    case TemporalType::After: return "after";
    case TemporalType::During: return "during";
    case TemporalType::Between: return "between";
    case TemporalType::First: return "first";
    case TemporalType::Last: return "last";
    case TemporalType::BeforeNLast: return "beforeNlast";
    case TemporalType::AfterNFirst: return "afterNfirst";
    case TemporalType::Count: return "count";
    case TemporalType::Comparison: return "comparison";
  }
  return "equal";
}

std::optional<TemporalType> parse_type(std::string_view text) {
  std::string key;
  for (char c : trim(text)) {
    if (c == '_' || c == '-' || c == ' ' || c == '"' || c == '\'' || c == '.') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "beforelast") return TemporalType::BeforeNLast;
  if (key == "afterfirst") return TemporalType::AfterNFirst;
  for (TemporalType t : kAllTypes) {
    if (key == to_lower(type_name(t))) return t;
  }
  return std::nullopt;
}

std::string_view op_name(ConstraintOp op) {
  switch (op) {
    case ConstraintOp::Before: return "before";
    case ConstraintOp::After: return "after";
    case ConstraintOp::Between: return "between";
    case ConstraintOp::Equal: return "equal";
    case ConstraintOp::SameYear: return "same_year";
    case ConstraintOp::SameMonth: return "same_month";
    case ConstraintOp::First: return "first";
    case ConstraintOp::Last: return "last";
    case ConstraintOp::Count: return "count";
    case ConstraintOp::Topic: return "topic";
  }
  return "equal";
}

std::string to_string(const TimeRef& ref) { return ref.ts ? to_string(*ref.ts) : ref.var; }

std::string to_string(const Constraint& c) {
  std::string out(op_name(c.op));
  out += '(';
  out += c.subject;
  if (c.op == ConstraintOp::Topic) {
    out += ", " + c.word;
  } else {
    if (c.anchor) out += ", " + to_string(*c.anchor);
    if (c.bound2) out += ", " + to_string(*c.bound2);
  }
  out += ')';
  return out;
}

bool is_variable(std::string_view term) { return !term.empty() && term.front() == '?'; }

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s.front())) || s.front() == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

TimeRef parse_ref(std::string_view raw) {
  const auto s = trim(raw);
  if (!s.empty() && std::isdigit(static_cast<unsigned char>(s.front()))) {
    try {
      return TimeRef::of(parse_timestamp(s));
    } catch (const Error& e) {
      throw Error(Errc::ConstraintError, std::string("bad time reference: ") + e.what());
    }
  }
  if (!is_identifier(s)) throw Error(Errc::ConstraintError, "bad time reference '" + std::string(s) + "'");
  return TimeRef::variable(std::string(s));
}

std::string parse_var(std::string_view raw) {
  const auto s = trim(raw);
  if (!is_identifier(s)) throw Error(Errc::ConstraintError, "expected a time variable, got '" + std::string(s) + "'");
  return std::string(s);
}

// `a < b < c` and `a > b` chains.
void parse_symbolic(std::string_view text, std::vector<Constraint>& out) {
  std::vector<std::string> operands;
  std::vector<char> ops;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '<' || c == '>') {
      operands.emplace_back(trim(cur));
      ops.push_back(c);
      cur.clear();
      if (i + 1 < text.size() && text[i + 1] == '=') ++i;
    } else {
      cur.push_back(c);
    }
  }
  operands.emplace_back(trim(cur));
  for (std::size_t i = 0; i < ops.size(); ++i) {
    TimeRef lhs = parse_ref(operands[i]);
    TimeRef rhs = parse_ref(operands[i + 1]);
    const bool less = ops[i] == '<';
    if (!lhs.concrete()) {
      out.push_back({less ? ConstraintOp::Before : ConstraintOp::After, lhs.var, rhs, std::nullopt, {}});
    } else if (!rhs.concrete()) {
      out.push_back({less ? ConstraintOp::After : ConstraintOp::Before, rhs.var, lhs, std::nullopt, {}});
    } else {
      throw Error(Errc::ConstraintError, "comparison between two constants: " + std::string(text));
    }
  }
}

std::vector<std::string> split_args(std::string_view inner) {
  std::string cleaned;
  for (char c : inner) {
    if (c != '[' && c != ']') cleaned.push_back(c);
  }
  std::vector<std::string> args;
  for (auto& a : split(cleaned, ',')) args.emplace_back(trim(a));
  if (args.size() == 1 && args.front().empty()) args.clear();
  return args;
}

void parse_one(std::string_view piece, std::vector<Constraint>& out) {
  const auto s = trim(piece);
  if (s.empty()) return;
  const auto open = s.find('(');
  if (open == std::string_view::npos || s.back() != ')') {
    if (s.find_first_of("<>") != std::string_view::npos) return parse_symbolic(s, out);
    throw Error(Errc::ConstraintError, "unrecognized constraint '" + std::string(s) + "'");
  }
  const std::string name = to_lower(trim(s.substr(0, open)));
  const std::string_view inner = s.substr(open + 1, s.size() - open - 2);
  const auto need = [&](std::size_t n, const std::vector<std::string>& args) {
    if (args.size() != n) {
      throw Error(Errc::ConstraintError, name + " takes " + std::to_string(n) + " arguments: '" + std::string(s) + "'");
    }
  };
  if (name == "count" && inner.find_first_of("<>") != std::string_view::npos) {
    std::vector<Constraint> inner_cs;
    parse_symbolic(inner, inner_cs);
    const std::string var = inner_cs.front().subject;
    out.insert(out.end(), inner_cs.begin(), inner_cs.end());
    out.push_back({ConstraintOp::Count, var, std::nullopt, std::nullopt, {}});
    return;
  }
  const auto args = split_args(inner);
  const auto binary = [&](ConstraintOp op) {
    need(2, args);
    out.push_back({op, parse_var(args[0]), parse_ref(args[1]), std::nullopt, {}});
  };
  const auto unary = [&](ConstraintOp op) {
    need(1, args);
    out.push_back({op, parse_var(args[0]), std::nullopt, std::nullopt, {}});
  };
  if (name == "before") return binary(ConstraintOp::Before);
  if (name == "after") return binary(ConstraintOp::After);
  if (name == "equal" || name == "same_day" || name == "at") return binary(ConstraintOp::Equal);
  if (name == "same_year" || name == "specific_year" || name == "in_year") return binary(ConstraintOp::SameYear);
  if (name == "same_month" || name == "specific_month") return binary(ConstraintOp::SameMonth);
  if (name == "first") return unary(ConstraintOp::First);
  if (name == "last") return unary(ConstraintOp::Last);
  if (name == "count") return unary(ConstraintOp::Count);
  if (name == "after_first") {
    binary(ConstraintOp::After);
    out.push_back({ConstraintOp::First, out.back().subject, std::nullopt, std::nullopt, {}});
    return;
  }
  if (name == "before_last") {
    binary(ConstraintOp::Before);
    out.push_back({ConstraintOp::Last, out.back().subject, std::nullopt, std::nullopt, {}});
    return;
  }
  if (name == "between") {
    need(3, args);
    out.push_back({ConstraintOp::Between, parse_var(args[0]), parse_ref(args[1]), parse_ref(args[2]), {}});
    return;
  }
  if (name == "topic") {
    need(2, args);
    if (args[1].empty()) throw Error(Errc::ConstraintError, "topic needs a keyword");
    out.push_back({ConstraintOp::Topic, args[0], std::nullopt, std::nullopt, args[1]});
    return;
  }
  throw Error(Errc::ConstraintError, "unknown constraint '" + name + "'");
}

}  // namespace

std::vector<Constraint> parse_constraints(std::string_view text) {
  std::vector<Constraint> parsed;
  // Split on ';' and on top-level commas between complete calls.
  std::string cur;
  int depth = 0;
  const auto flush = [&] {
    parse_one(cur, parsed);
    cur.clear();
  };
  for (char c : text) {
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if ((c == ';' || c == ',') && depth == 0) {
      flush();
      continue;
    }
    cur.push_back(c);
  }
  flush();
  std::vector<Constraint> out;
  for (auto& c : parsed) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(std::move(c));
  }
  return out;
}

Indicator parse_edge(std::string_view text) {
  const auto s = trim(text);
  const auto open = s.find("--[");
  const auto close = s.find("]-->");
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw Error(Errc::SchemaError, "indicator must look like 'A --[relation]--> B (t1)': '" + std::string(s) + "'");
  }
  Indicator ind;
  ind.subject = std::string(trim(s.substr(0, open)));
  ind.relation = std::string(trim(s.substr(open + 3, close - open - 3)));
  std::string_view rest = trim(s.substr(close + 4));
  if (!rest.empty() && rest.back() == ')') {
    const auto p = rest.rfind('(');
    if (p != std::string_view::npos) {
      ind.time_var = std::string(trim(rest.substr(p + 1, rest.size() - p - 2)));
      rest = trim(rest.substr(0, p));
    }
  }
  ind.object = std::string(rest);
  if (ind.subject.empty() || ind.relation.empty() || ind.object.empty()) {
    throw Error(Errc::SchemaError, "indicator has an empty slot: '" + std::string(s) + "'");
  }
  if (!ind.time_var.empty()) ind.time_vars.push_back(ind.time_var);
  return ind;
}

std::optional<std::string> concrete_entity(const Indicator& ind) {
  if (!ind.subject.empty() && !is_variable(ind.subject)) return ind.subject;
  if (!ind.object.empty() && !is_variable(ind.object)) return ind.object;
  return std::nullopt;
}

std::optional<Timestamp> reference_anchor(const Indicator& ind) {
  for (const auto& c : ind.constraints) {
    if (c.anchor && c.anchor->concrete()) return c.anchor->ts;
  }
  return std::nullopt;
}

Indicator substitute(const Indicator& ind, const std::map<std::string, Timestamp>& bindings) {
  Indicator out = ind;
  const auto fill = [&](std::optional<TimeRef>& ref) {
    if (!ref || ref->concrete()) return;
    if (auto it = bindings.find(ref->var); it != bindings.end()) *ref = TimeRef::of(it->second);
  };
  for (auto& c : out.constraints) {
    fill(c.anchor);
    fill(c.bound2);
  }
  return out;
}

bool constraint_holds(const Constraint& c, const Timestamp& t) {
  const auto concrete = [](const std::optional<TimeRef>& r) { return r && r->concrete(); };
  switch (c.op) {
    case ConstraintOp::Before:
      return !concrete(c.anchor) || strictly_before(t, *c.anchor->ts);
    case ConstraintOp::After:
      return !concrete(c.anchor) || strictly_before(*c.anchor->ts, t);
    case ConstraintOp::Between:
      return (!concrete(c.anchor) || strictly_before(*c.anchor->ts, t)) &&
             (!concrete(c.bound2) || strictly_before(t, *c.bound2->ts));
    case ConstraintOp::Equal:
      return !concrete(c.anchor) || contains(*c.anchor->ts, t);
    case ConstraintOp::SameYear:
      return !concrete(c.anchor) || contains(Timestamp::of_year(c.anchor->ts->year()), t);
    case ConstraintOp::SameMonth: {
      if (!concrete(c.anchor)) return true;
      const Timestamp& a = *c.anchor->ts;
      const Timestamp period = a.month() ? Timestamp::of_month(a.year(), *a.month()) : Timestamp::of_year(a.year());
      return contains(period, t);
    }
    case ConstraintOp::First:
    case ConstraintOp::Last:
    case ConstraintOp::Count:
    case ConstraintOp::Topic:
      return true;
  }
  return true;
}

bool constraints_hold(const std::vector<Constraint>& cs, const Timestamp& t) {
  return std::all_of(cs.begin(), cs.end(), [&](const Constraint& c) { return constraint_holds(c, t); });
}

TimeWindow implied_window(const std::vector<Constraint>& cs) {
  TimeWindow w;
  const auto lower = [&](const Timestamp& after) {
    if (!w.after || w.after->end() < after.end()) w.after = after;
  };
  const auto upper = [&](const Timestamp& before) {
    if (!w.before || before.start() < w.before->start()) w.before = before;
  };
  const auto enclose = [&](const Timestamp& period) {
    lower(from_days(period.start_day() - 1));
    upper(from_days(period.end_day() + 1));
  };
  for (const auto& c : cs) {
    const bool a = c.anchor && c.anchor->concrete();
    switch (c.op) {
      case ConstraintOp::Before:
        if (a) upper(*c.anchor->ts);
        break;
      case ConstraintOp::After:
        if (a) lower(*c.anchor->ts);
        break;
      case ConstraintOp::Between:
        if (a) lower(*c.anchor->ts);
        if (c.bound2 && c.bound2->concrete()) upper(*c.bound2->ts);
        break;
      case ConstraintOp::Equal:
        if (a) enclose(*c.anchor->ts);
        break;
      case ConstraintOp::SameYear:
        if (a) enclose(Timestamp::of_year(c.anchor->ts->year()));
        break;
      case ConstraintOp::SameMonth:
        if (a) {
          const Timestamp& t = *c.anchor->ts;
          enclose(t.month() ? Timestamp::of_month(t.year(), *t.month()) : Timestamp::of_year(t.year()));
        }
        break;
      default:
        break;
    }
  }
  return w;
}

TemporalType derive_type(const std::vector<Constraint>& cs) {
  const auto has = [&](ConstraintOp op) {
    return std::any_of(cs.begin(), cs.end(), [&](const Constraint& c) { return c.op == op; });
  };
  if (has(ConstraintOp::Count)) return TemporalType::Count;
  if (has(ConstraintOp::Between)) return TemporalType::Between;
  if (has(ConstraintOp::After) && has(ConstraintOp::First)) return TemporalType::AfterNFirst;
  if (has(ConstraintOp::Before) && has(ConstraintOp::Last)) return TemporalType::BeforeNLast;
  if (has(ConstraintOp::First)) return TemporalType::First;
  if (has(ConstraintOp::Last)) return TemporalType::Last;
  if (has(ConstraintOp::Equal) || has(ConstraintOp::SameYear) || has(ConstraintOp::SameMonth)) {
    return TemporalType::Equal;
  }
  if (has(ConstraintOp::After)) return TemporalType::After;
  if (has(ConstraintOp::Before)) return TemporalType::Before;
  return TemporalType::Equal;
}

}  // namespace chronoqa
