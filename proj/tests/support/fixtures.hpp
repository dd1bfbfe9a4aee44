#pragma once

#include <string>
#include <vector>

#include "chronoqa/store.hpp"

namespace chronoqa::testing {

inline std::string data_path(const std::string& rel) { return std::string(CHRONOQA_DATA_DIR) + "/" + rel; }

inline const char* case_questions[] = {
    "After the 2008 Olympics, which country was the first to sign an environmental treaty with China?",
    "Before the 2010 Summit, which leader visited Beijing last?",
    "How many times did the UN hold a climate summit before 2020?",
    "Between the 2015 Conference and the 2018 Summit, which companies collaborated with Microsoft?",
};

Tkg case_tkg();         // case studies + aliases
Tkg definitions_tkg();  // year-granular definition examples

EntityId ent(const Tkg& tkg, const std::string& name);
// Fact by (head, relation, tail); asserts uniqueness.
Fact fact(const Tkg& tkg, const std::string& head, const std::string& relation, const std::string& tail);
// Path walking facts forward.
TemporalPath forward_path(const std::vector<Fact>& facts);
std::vector<std::string> names(const Tkg& tkg, const std::vector<PathStep>& steps, bool heads = true);

}  // namespace chronoqa::testing
