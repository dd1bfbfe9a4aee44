#include "chronoqa/error.hpp"

namespace chronoqa {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedTimestamp: return "MalformedTimestamp";
    case Errc::InvalidDate: return "InvalidDate";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownEntity: return "UnknownEntity";
    case Errc::EmptyTopics: return "EmptyTopics";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidWindow: return "InvalidWindow";
    case Errc::GranularityError: return "GranularityError";
    case Errc::UnknownToolkit: return "UnknownToolkit";
    case Errc::MissingParam: return "MissingParam";
    case Errc::EmptySeeds: return "EmptySeeds";
    case Errc::EmptyPath: return "EmptyPath";
    case Errc::CorruptRecord: return "CorruptRecord";
    case Errc::UnparseableResponse: return "UnparseableResponse";
    case Errc::SchemaError: return "SchemaError";
    case Errc::ConstraintError: return "ConstraintError";
    case Errc::NoValidSeed: return "NoValidSeed";
    case Errc::NoTopicEntities: return "NoTopicEntities";
    case Errc::BudgetExhausted: return "BudgetExhausted";
    case Errc::IncoherentChain: return "IncoherentChain";
    case Errc::GlobalInsufficient: return "GlobalInsufficient";
    case Errc::Timeout: return "Timeout";
    case Errc::Transport: return "Transport";
    case Errc::Io: return "Io";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

namespace {

std::string compose(Errc code, const std::string& message, std::optional<std::size_t> line) {
  std::string out(errc_name(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(compose(code, message, line)), code_(code), line_(line) {}

Error Error::with_phase(std::string phase) const {
  Error copy = *this;
  copy.phase_ = std::move(phase);
  return copy;
}

}  // namespace chronoqa
