#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chronoqa {

enum class Errc {
  MalformedTimestamp,
  InvalidDate,
  ParseError,
  UnknownEntity,
  EmptyTopics,
  DimensionMismatch,
  InvalidWindow,
  GranularityError,
  UnknownToolkit,
  MissingParam,
  EmptySeeds,
  EmptyPath,
  CorruptRecord,
  UnparseableResponse,
  SchemaError,
  ConstraintError,
  NoValidSeed,
  NoTopicEntities,
  BudgetExhausted,
  IncoherentChain,
  GlobalInsufficient,
  Timeout,
  Transport,
  Io,
  InvalidConfig,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::optional<std::size_t> line = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

  // Phase tag ("grounding", "node:2", "synthesis", ...) attached by the controller.
  const std::string& phase() const noexcept { return phase_; }
  Error with_phase(std::string phase) const;

 private:
  Errc code_;
  std::optional<std::size_t> line_;
  std::string phase_;
};

}  // namespace chronoqa
