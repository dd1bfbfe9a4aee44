#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chronoqa/store.hpp"

namespace chronoqa {

enum class ToolkitKind { OneHop, AfterFirst, BeforeLast, BetweenRange, DayEvents, PeriodEvents, DirectConnection, Timeline };

inline constexpr std::array<ToolkitKind, 8> kToolkits = {
    ToolkitKind::OneHop,       ToolkitKind::AfterFirst,       ToolkitKind::BeforeLast, ToolkitKind::BetweenRange,
    ToolkitKind::DayEvents,    ToolkitKind::PeriodEvents,     ToolkitKind::DirectConnection, ToolkitKind::Timeline,
};

std::string_view toolkit_name(ToolkitKind kind);
std::string_view toolkit_summary(ToolkitKind kind);

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

// Params use normalized keys: entity, entity2, direction, after, before,
// between, date, month, year, relation_filter, keyword, limit, granularity,
// mode (FirstLast), over (Count).
struct ToolkitCall {
  std::string name;
  std::map<std::string, std::string> params;
  int priority = 1;

  bool operator==(const ToolkitCall&) const = default;
};

struct ToolkitResult {
  ToolkitCall call;
  std::vector<PathStep> facts;
  std::optional<std::size_t> count;  // set by Count
  std::string note;
};

// Token-subset match (case-insensitive, `_` equals space) of the filter
// against the relation name or any of its aliases. Empty filter matches.
bool relation_matches(const Tkg& tkg, RelationId relation, std::string_view filter);

struct FactFilter {
  std::string relation;
  std::string keyword;  // case-insensitive substring of the verbalized fact

  bool admits(const Tkg& tkg, const Fact& fact) const;
};

std::vector<PathStep> one_hop(const Subgraph& g, EntityId entity, Direction direction, const TimeWindow& window = {},
                              const FactFilter& filter = {}, std::size_t limit = kUnlimited);
// start(ts) > end(after), ascending, first `limit`.
std::vector<PathStep> after_first(const Subgraph& g, EntityId entity, const Timestamp& after,
                                  const FactFilter& filter = {}, std::size_t limit = 1);
// end(ts) < start(before), descending by start, first `limit`.
std::vector<PathStep> before_last(const Subgraph& g, EntityId entity, const Timestamp& before,
                                  const FactFilter& filter = {}, std::size_t limit = 1);
// strictly_before(lo, ts) and strictly_before(ts, hi). Throws InvalidWindow when lo starts after hi.
std::vector<PathStep> between_range(const Subgraph& g, EntityId entity, const Timestamp& lo, const Timestamp& hi,
                                    const FactFilter& filter = {}, std::size_t limit = kUnlimited);
// Throws GranularityError unless `date` is day-granular.
std::vector<PathStep> day_events(const Subgraph& g, const Timestamp& date, const FactFilter& filter = {},
                                 std::size_t limit = kUnlimited);
// Facts whose interval lies inside `period`. Throws GranularityError for day input.
std::vector<PathStep> period_events(const Subgraph& g, const Timestamp& period, const FactFilter& filter = {},
                                    std::size_t limit = kUnlimited);
std::vector<PathStep> direct_connection(const Subgraph& g, EntityId a, EntityId b, Direction direction = Direction::Both,
                                        const TimeWindow& window = {}, const FactFilter& filter = {});
std::vector<PathStep> timeline(const Subgraph& g, EntityId entity, Direction direction = Direction::Both,
                               const TimeWindow& window = {}, const FactFilter& filter = {},
                               std::size_t limit = kUnlimited);

std::size_t count_results(const ToolkitResult& result);

// Dispatches by name (case-insensitive, `_` ignored). Aliases: Before,
// After (unlimited BeforeLast/AfterFirst), FirstLast (Timeline with mode and
// limit 1), Count (aggregates the toolkit named by `over`). Results are
// truncated to `cap`. Throws UnknownToolkit, MissingParam, UnknownEntity.
ToolkitResult execute(const Subgraph& g, const ToolkitCall& call, std::size_t cap = 10000);

// Executes every call (concurrently when more than one) and returns results
// in priority order, ties by input order.
std::vector<ToolkitResult> execute_all(const Subgraph& g, const std::vector<ToolkitCall>& calls,
                                       std::size_t cap = 10000);

// True when `name` is one of the eight toolkits or an accepted alias.
bool known_toolkit(std::string_view name);

}  // namespace chronoqa
