#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chronoqa {

// Entry point behind the `chronoqa` binary; args excludes the program name.
// Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct EvalItem {
  std::string id;
  std::string question;
  std::vector<std::string> answers;
  std::string type;  // optional gold type label
};

// JSONL `{id?, question, answers, type?}`; missing ids become q<line>.
// Throws Error{ParseError} with the line number.
std::vector<EvalItem> load_questions(std::istream& in);

// True when the first predicted answer equals any gold answer after
// normalization (lowercase, trim, `_` as space).
bool hit_at_1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold);

struct EvalOutcome {
  EvalItem item;
  std::vector<std::string> predicted;
  std::string type;  // gold label if given, else the classified type
  bool hit = false;
  std::string error;
  std::size_t reasoner_calls = 0;
  std::size_t toolkit_executions = 0;
  bool memory_hit = false;
};

struct EvalReport {
  std::vector<EvalOutcome> outcomes;  // sorted by id
  double elapsed_ms = 0.0;
};

// Deterministic text report; timing is not part of it.
std::string format_report(const EvalReport& report);

}  // namespace chronoqa
