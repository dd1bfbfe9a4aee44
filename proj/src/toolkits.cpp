#include "chronoqa/toolkits.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <future>
#include <numeric>
#include <set>

#include "chronoqa/embedding.hpp"
#include "chronoqa/error.hpp"
#include "chronoqa/text.hpp"

namespace chronoqa {

std::string_view toolkit_name(ToolkitKind kind) {
  switch (kind) {
    case ToolkitKind::OneHop: return "OneHop";
    case ToolkitKind::AfterFirst: return "AfterFirst";
    case ToolkitKind::BeforeLast: return "BeforeLast";
    case ToolkitKind::BetweenRange: return "BetweenRange";
    case ToolkitKind::DayEvents: return "DayEvents";
    case ToolkitKind::PeriodEvents: return "PeriodEvents";
    case ToolkitKind::DirectConnection: return "DirectConnection";
    case ToolkitKind::Timeline: return "Timeline";
  }
  return "OneHop";
}

std::string_view toolkit_summary(ToolkitKind kind) {
  switch (kind) {
    case ToolkitKind::OneHop: return "facts touching an entity, optionally inside (after, before); params entity, direction, after, before, limit";
    case ToolkitKind::AfterFirst: return "earliest facts of an entity strictly after a time; params entity, after, relation_filter, limit";
    case ToolkitKind::BeforeLast: return "latest facts of an entity strictly before a time; params entity, before, relation_filter, limit";
    case ToolkitKind::BetweenRange: return "facts of an entity strictly inside two times; params entity, between, relation_filter";
    case ToolkitKind::DayEvents: return "all facts on one day; params date, relation_filter, limit";
    case ToolkitKind::PeriodEvents: return "all facts inside a month or year; params month or year, relation_filter, limit";
    case ToolkitKind::DirectConnection: return "facts linking two entities; params entity, entity2, direction, after, before";
    case ToolkitKind::Timeline: return "an entity's facts in time order; params entity, direction, after, before, limit";
  }
  return "";
}

bool relation_matches(const Tkg& tkg, RelationId relation, std::string_view filter) {
  const auto want = word_tokens(filter);
  if (want.empty()) return true;
  const auto subset_of = [&](std::string_view name) {
    const auto have = word_tokens(name);
    const std::set<std::string> pool(have.begin(), have.end());
    return std::all_of(want.begin(), want.end(), [&](const std::string& t) { return pool.count(t) > 0; });
  };
  if (subset_of(tkg.relation_name(relation))) return true;
  for (const auto& alias : tkg.aliases(relation)) {
    if (subset_of(alias)) return true;
  }
  return false;
}

bool FactFilter::admits(const Tkg& tkg, const Fact& fact) const {
  if (!relation.empty() && !relation_matches(tkg, fact.relation, relation)) return false;
  if (!keyword.empty() && !icontains(verbalize(tkg, fact), keyword)) return false;
  return true;
}

namespace {

std::vector<PathStep> filtered(const Subgraph& g, std::vector<PathStep> steps, const FactFilter& filter) {
  if (filter.relation.empty() && filter.keyword.empty()) return steps;
  std::erase_if(steps, [&](const PathStep& s) { return !filter.admits(g.tkg(), s.fact); });
  return steps;
}

void truncate(std::vector<PathStep>& steps, std::size_t limit) {
  if (steps.size() > limit) steps.resize(limit);
}

void sort_descending(std::vector<PathStep>& steps) {
  std::stable_sort(steps.begin(), steps.end(),
                   [](const PathStep& a, const PathStep& b) { return a.fact.ts.start() > b.fact.ts.start(); });
}

}  // namespace

std::vector<PathStep> one_hop(const Subgraph& g, EntityId entity, Direction direction, const TimeWindow& window,
                              const FactFilter& filter, std::size_t limit) {
  auto steps = filtered(g, g.neighbors(entity, direction, window), filter);
  truncate(steps, limit);
  return steps;
}

std::vector<PathStep> after_first(const Subgraph& g, EntityId entity, const Timestamp& after, const FactFilter& filter,
                                  std::size_t limit) {
  auto steps = filtered(g, g.neighbors(entity, Direction::Both), filter);
  std::erase_if(steps, [&](const PathStep& s) { return !strictly_before(after, s.fact.ts); });
  truncate(steps, limit);
  return steps;
}

std::vector<PathStep> before_last(const Subgraph& g, EntityId entity, const Timestamp& before, const FactFilter& filter,
                                  std::size_t limit) {
  auto steps = filtered(g, g.neighbors(entity, Direction::Both), filter);
  std::erase_if(steps, [&](const PathStep& s) { return !strictly_before(s.fact.ts, before); });
  sort_descending(steps);
  truncate(steps, limit);
  return steps;
}

std::vector<PathStep> between_range(const Subgraph& g, EntityId entity, const Timestamp& lo, const Timestamp& hi,
                                    const FactFilter& filter, std::size_t limit) {
  if (lo.start() > hi.start()) {
    throw Error(Errc::InvalidWindow, "window starts at " + to_string(lo) + " after its end " + to_string(hi));
  }
  auto steps = filtered(g, g.neighbors(entity, Direction::Both), filter);
  std::erase_if(steps, [&](const PathStep& s) { return !(strictly_before(lo, s.fact.ts) && strictly_before(s.fact.ts, hi)); });
  truncate(steps, limit);
  return steps;
}

std::vector<PathStep> day_events(const Subgraph& g, const Timestamp& date, const FactFilter& filter, std::size_t limit) {
  if (date.granularity() != Granularity::Day) {
    throw Error(Errc::GranularityError, "DayEvents needs a day, got " + to_string(date));
  }
  std::vector<PathStep> steps;
  const auto& by_day = g.tkg().by_start_day();
  if (auto it = by_day.find(date.start_day()); it != by_day.end()) {
    for (FactId id : it->second) {
      const Fact& f = g.tkg().fact(id);
      if (f.ts == date && g.contains(id)) steps.push_back({f, false});
    }
  }
  steps = filtered(g, std::move(steps), filter);
  truncate(steps, limit);
  return steps;
}

std::vector<PathStep> period_events(const Subgraph& g, const Timestamp& period, const FactFilter& filter,
                                    std::size_t limit) {
  if (period.granularity() == Granularity::Day) {
    throw Error(Errc::GranularityError, "PeriodEvents needs a month or year, got " + to_string(period));
  }
  std::vector<PathStep> steps;
  const auto& by_day = g.tkg().by_start_day();
  for (auto it = by_day.lower_bound(period.start_day()); it != by_day.end() && it->first <= period.end_day(); ++it) {
    for (FactId id : it->second) {
      const Fact& f = g.tkg().fact(id);
      if (contains(period, f.ts) && g.contains(id)) steps.push_back({f, false});
    }
  }
  steps = filtered(g, std::move(steps), filter);
  truncate(steps, limit);
  return steps;
}

std::vector<PathStep> direct_connection(const Subgraph& g, EntityId a, EntityId b, Direction direction,
                                        const TimeWindow& window, const FactFilter& filter) {
  if (!g.contains(b)) throw Error(Errc::UnknownEntity, "'" + g.tkg().entity_name(b) + "' is not in the subgraph");
  auto steps = filtered(g, g.neighbors(a, direction, window), filter);
  std::erase_if(steps, [&](const PathStep& s) { return s.target() != b; });
  return steps;
}

std::vector<PathStep> timeline(const Subgraph& g, EntityId entity, Direction direction, const TimeWindow& window,
                               const FactFilter& filter, std::size_t limit) {
  return one_hop(g, entity, direction, window, filter, limit);
}

std::size_t count_results(const ToolkitResult& result) { return result.facts.size(); }

namespace {

std::string canonical_key(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (c == '_' || c == ' ' || c == '-') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return key;
}

class Params {
 public:
  Params(const Subgraph& g, const ToolkitCall& call) : g_(g), call_(call) {}

  const std::string* find(std::string_view key) const {
    auto it = call_.params.find(std::string(key));
    if (it == call_.params.end() || trim(it->second).empty()) return nullptr;
    return &it->second;
  }
  const std::string& require(std::string_view key) const {
    if (const auto* v = find(key)) return *v;
    throw Error(Errc::MissingParam, "missing parameter '" + std::string(key) + "' for " + call_.name);
  }

  EntityId entity(std::string_view key) const {
    const std::string name(trim(require(key)));
    auto id = g_.tkg().find_entity(name);
    if (!id) throw Error(Errc::UnknownEntity, "unknown entity '" + name + "'");
    if (!g_.contains(*id)) throw Error(Errc::UnknownEntity, "'" + name + "' is not in the subgraph");
    return *id;
  }

  Timestamp time(std::string_view raw, std::string_view key) const {
    try {
      return parse_timestamp(trim(raw));
    } catch (const Error& e) {
      throw Error(Errc::ParseError, "parameter '" + std::string(key) + "': " + e.what());
    }
  }
  std::optional<Timestamp> opt_time(std::string_view key) const {
    if (const auto* v = find(key)) return time(*v, key);
    return std::nullopt;
  }
  Timestamp req_time(std::string_view key) const { return time(require(key), key); }

  std::pair<Timestamp, Timestamp> between() const {
    if (const auto* v = find("between")) {
      std::string cleaned;
      for (char c : *v) {
        if (c != '(' && c != ')' && c != '[' && c != ']') cleaned.push_back(c);
      }
      auto parts = split(cleaned, ',');
      if (parts.size() != 2) throw Error(Errc::ParseError, "parameter 'between' needs two times: '" + *v + "'");
      return {time(parts[0], "between"), time(parts[1], "between")};
    }
    if (find("after") && find("before")) return {req_time("after"), req_time("before")};
    throw Error(Errc::MissingParam, "missing parameter 'between' for " + call_.name);
  }

  Direction direction() const {
    const auto* v = find("direction");
    if (!v) return Direction::Both;
    const auto d = to_lower(trim(*v));
    if (d == "out" || d == "outgoing" || d == "forward" || d == "head") return Direction::Out;
    if (d == "in" || d == "incoming" || d == "backward" || d == "tail") return Direction::In;
    if (d == "both" || d == "any" || d == "either") return Direction::Both;
    throw Error(Errc::ParseError, "parameter 'direction': '" + *v + "'");
  }

  TimeWindow window() const { return {opt_time("after"), opt_time("before")}; }

  FactFilter filter() const {
    FactFilter f;
    if (const auto* v = find("relation_filter")) f.relation = *v;
    if (const auto* v = find("keyword")) f.keyword = std::string(trim(*v));
    return f;
  }

  std::size_t limit(std::size_t fallback) const {
    const auto* v = find("limit");
    if (!v) return fallback;
    const auto s = trim(*v);
    if (s == "inf" || s == "all" || s == "unlimited") return kUnlimited;
    long long n = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc() || p != s.data() + s.size() || n < 1) {
      throw Error(Errc::ParseError, "parameter 'limit' must be an integer >= 1, got '" + *v + "'");
    }
    return static_cast<std::size_t>(n);
  }

  Timestamp period() const {
    for (const char* key : {"period", "month", "year", "date"}) {
      if (find(key)) return req_time(key);
    }
    throw Error(Errc::MissingParam, "missing parameter 'year' or 'month' for " + call_.name);
  }

 private:
  const Subgraph& g_;
  const ToolkitCall& call_;
};

std::map<std::string, std::string> normalize_params(const std::map<std::string, std::string>& raw) {
  static const std::map<std::string, std::string> aliases = {
      {"entity1", "entity"}, {"source", "entity"},     {"target", "entity2"},   {"relation", "relation_filter"},
      {"relationfilter", "relation_filter"},            {"filter_relation", "relation_filter"},
      {"n", "limit"},        {"top_k", "limit"},       {"day", "date"},
  };
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : raw) {
    std::string key = to_lower(trim(k));
    if (auto it = aliases.find(key); it != aliases.end()) key = it->second;
    out.emplace(key, v);
  }
  return out;
}

std::vector<PathStep> run_named(const Subgraph& g, const std::string& key, const ToolkitCall& call, std::size_t cap,
                                std::optional<std::size_t>& count);

std::vector<PathStep> run_kind(const Subgraph& g, const std::string& key, const ToolkitCall& call, std::size_t cap) {
  const Params p(g, call);
  const auto clamp = [&](std::size_t n) { return std::min(n, cap); };
  if (key == "onehop") return one_hop(g, p.entity("entity"), p.direction(), p.window(), p.filter(), clamp(p.limit(kUnlimited)));
  if (key == "afterfirst") return after_first(g, p.entity("entity"), p.req_time("after"), p.filter(), clamp(p.limit(1)));
  if (key == "after") return after_first(g, p.entity("entity"), p.req_time("after"), p.filter(), clamp(p.limit(kUnlimited)));
  if (key == "beforelast") return before_last(g, p.entity("entity"), p.req_time("before"), p.filter(), clamp(p.limit(1)));
  if (key == "before") return before_last(g, p.entity("entity"), p.req_time("before"), p.filter(), clamp(p.limit(kUnlimited)));
  if (key == "betweenrange" || key == "between") {
    const auto [lo, hi] = p.between();
    return between_range(g, p.entity("entity"), lo, hi, p.filter(), clamp(p.limit(kUnlimited)));
  }
  if (key == "dayevents") return day_events(g, p.req_time("date"), p.filter(), clamp(p.limit(kUnlimited)));
  if (key == "periodevents") return period_events(g, p.period(), p.filter(), clamp(p.limit(kUnlimited)));
  if (key == "directconnection") {
    auto steps = direct_connection(g, p.entity("entity"), p.entity("entity2"), p.direction(), p.window(), p.filter());
    truncate(steps, clamp(p.limit(kUnlimited)));
    return steps;
  }
  if (key == "timeline") return timeline(g, p.entity("entity"), p.direction(), p.window(), p.filter(), clamp(p.limit(kUnlimited)));
  if (key == "firstlast") {
    const auto* mode = p.find("mode");
    const std::string m = mode ? to_lower(trim(*mode)) : "first";
    if (m != "first" && m != "last") throw Error(Errc::ParseError, "parameter 'mode' must be first or last");
    auto steps = timeline(g, p.entity("entity"), p.direction(), p.window(), p.filter(), kUnlimited);
    if (m == "last") sort_descending(steps);
    truncate(steps, clamp(p.limit(1)));
    return steps;
  }
  throw Error(Errc::UnknownToolkit, "unknown toolkit '" + call.name + "'");
}

std::vector<PathStep> run_named(const Subgraph& g, const std::string& key, const ToolkitCall& call, std::size_t cap,
                                std::optional<std::size_t>& count) {
  if (key != "count") return run_kind(g, key, call, cap);
  const Params p(g, call);
  std::string over;
  if (const auto* v = p.find("over")) {
    over = canonical_key(*v);
  } else if (p.find("between")) {
    over = "betweenrange";
  } else if (p.find("before") && p.find("after")) {
    over = "betweenrange";
  } else if (p.find("before")) {
    over = "before";
  } else if (p.find("after")) {
    over = "after";
  } else {
    over = "timeline";
  }
  if (over == "count") throw Error(Errc::UnknownToolkit, "Count cannot aggregate Count");
  auto steps = run_kind(g, over, call, cap);
  count = steps.size();
  return steps;
}

const std::set<std::string>& accepted_keys() {
  static const std::set<std::string> keys = {"onehop", "afterfirst",       "after",    "beforelast", "before",
                                             "betweenrange", "between",    "dayevents", "periodevents",
                                             "directconnection", "timeline", "firstlast", "count"};
  return keys;
}

}  // namespace

bool known_toolkit(std::string_view name) { return accepted_keys().count(canonical_key(name)) > 0; }

ToolkitResult execute(const Subgraph& g, const ToolkitCall& call, std::size_t cap) {
  const std::string key = canonical_key(call.name);
  if (!accepted_keys().count(key)) throw Error(Errc::UnknownToolkit, "unknown toolkit '" + call.name + "'");
  ToolkitResult result;
  result.call = call;
  result.call.params = normalize_params(call.params);
  result.facts = run_named(g, key, result.call, cap, result.count);
  if (result.facts.size() == cap) result.note = "truncated at result cap";
  return result;
}

std::vector<ToolkitResult> execute_all(const Subgraph& g, const std::vector<ToolkitCall>& calls, std::size_t cap) {
  std::vector<std::size_t> order(calls.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return calls[a].priority < calls[b].priority; });
  std::vector<ToolkitResult> out;
  out.reserve(calls.size());
  if (calls.size() <= 1) {
    for (std::size_t i : order) out.push_back(execute(g, calls[i], cap));
    return out;
  }
  std::vector<std::future<ToolkitResult>> pending;
  pending.reserve(calls.size());
  for (std::size_t i : order) {
    pending.push_back(std::async(std::launch::async, [&g, &calls, i, cap] { return execute(g, calls[i], cap); }));
  }
  for (auto& f : pending) out.push_back(f.get());
  return out;
}

}  // namespace chronoqa
