#include <sstream>
#include <string>

#include "chronoqa/reasoner.hpp"

namespace chronoqa {
namespace {

std::string field(const nlohmann::json& f, const char* key) {
  if (!f.contains(key)) return {};
  const auto& v = f.at(key);
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void list_block(std::ostringstream& os, const nlohmann::json& f, const char* key, const char* title) {
  if (!f.contains(key) || !f.at(key).is_array() || f.at(key).empty()) return;
  os << title << ":\n";
  for (const auto& item : f.at(key)) os << "- " << (item.is_string() ? item.get<std::string>() : item.dump()) << '\n';
}

// Exemplars first, then warnings.
void memory_blocks(std::ostringstream& os, const nlohmann::json& f) {
  list_block(os, f, "exemplars", "Worked examples");
  list_block(os, f, "warnings", "Known mistakes, avoid repeating");
}

}  // namespace

std::string render_prompt(Role role, const nlohmann::json& f) {
  std::ostringstream os;
  switch (role) {
    case Role::Ner:
      os << "List the named entities in the question that could be nodes of a knowledge graph. "
            "Skip dates.\nReply as JSON: {\"entities\": [\"...\"]}\n";
      os << "Question: " << field(f, "question") << '\n';
      break;
    case Role::TypeSelect:
      os << "Label the temporal reasoning needed by the question with one of: equal, before, after, during, "
            "between, first, last, beforeNlast, afterNfirst, count, comparison. Reply with the label only.\n";
      memory_blocks(os, f);
      os << "Question: " << field(f, "question") << '\n';
      break;
    case Role::Decompose:
      os << "Split the question into subquestions that can each be answered by one graph edge. "
            "Answer in four blocks, one item per line:\n"
            "Subquestions:\nIndicators:   (Subject --[relation]--> Object (tN), unknowns as ?x)\n"
            "Constraints:  (one line per subquestion, items separated by ';')\nTime_vars:\n";
      memory_blocks(os, f);
      os << "Temporal type: " << field(f, "type") << '\n';
      os << "Topic entities: " << field(f, "topics") << '\n';
      os << "Question: " << field(f, "question") << '\n';
      break;
    case Role::SeedSelect:
      os << "Pick the entities to start the graph search from. Use only names from the candidate list.\n"
            "Reply as JSON: {\"seeds\": [\"...\"]}\n";
      memory_blocks(os, f);
      os << "Candidates: " << field(f, "candidates") << '\n';
      os << "Indicator: " << field(f, "indicator") << '\n';
      os << "Subquestion: " << field(f, "subquestion") << '\n';
      break;
    case Role::ToolkitSelect:
      os << "Choose one or more retrieval tools for the subquestion and fill in their parameters.\n";
      list_block(os, f, "catalog", "Tools");
      os << "Reply as JSON: {\"selected_toolkits\": [{\"original_name\": \"...\", \"parameters\": {}, "
            "\"priority\": 1}]}\n";
      memory_blocks(os, f);
      os << "Temporal type: " << field(f, "type") << '\n';
      os << "Indicator: " << field(f, "indicator") << '\n';
      os << "Seeds: " << field(f, "seeds") << '\n';
      os << "Subquestion: " << field(f, "subquestion") << '\n';
      break;
    case Role::PathSelect:
      os << "Pick at most " << field(f, "w_max") << " paths that best answer the subquestion.\n"
            "Reply as JSON: {\"selected\": [index, ...]}\n";
      list_block(os, f, "paths", "Paths");
      os << "Indicator: " << field(f, "indicator") << '\n';
      os << "Subquestion: " << field(f, "subquestion") << '\n';
      break;
    case Role::DebateVote:
      os << "Several tools proposed answers. Judge them on relevance, temporal correctness and completeness "
            "and pick one.\nReply as JSON: {\"winning_toolkit\": \"...\", \"entity\": \"...\", \"time\": \"...\", "
            "\"reason\": \"...\"}\n";
      list_block(os, f, "candidates", "Proposals");
      os << "Temporal type: " << field(f, "type") << '\n';
      os << "Subquestion: " << field(f, "subquestion") << '\n';
      break;
    case Role::Sufficiency:
      os << "Decide whether the evidence answers the " << field(f, "scope") << " question. If not, say what "
            "to do next: Decompose, Refine or RetrieveAgain.\nReply as JSON: {\"sufficient\": true, "
            "\"action\": \"Accept\", \"note\": \"...\"}\n";
      list_block(os, f, "paths", "Evidence");
      os << "Answer so far: " << field(f, "answer") << '\n';
      os << "Indicator: " << field(f, "indicator") << '\n';
      os << "Question: " << field(f, "question") << '\n';
      break;
    case Role::AnswerGeneration:
      os << "Give the final answer using only the evidence below. List every equally valid entity.\n"
            "Reply as JSON: {\"answers\": [\"...\"], \"rationale\": \"...\"}\n";
      list_block(os, f, "evidence", "Evidence");
      os << "Draft answer: " << field(f, "draft") << '\n';
      os << "Temporal type: " << field(f, "type") << '\n';
      os << "Question: " << field(f, "question") << '\n';
      break;
    case Role::Refine:
      os << "Rewrite the subquestion so it is more specific to the graph vocabulary.\n"
            "Reply as JSON: {\"subquestion\": \"...\"}\n";
      os << "Indicator: " << field(f, "indicator") << '\n';
      os << "Subquestion: " << field(f, "subquestion") << '\n';
      break;
  }
  if (f.contains("repair_note")) os << field(f, "repair_note") << '\n';
  return os.str();
}

}  // namespace chronoqa
