#include "chronoqa/reasoner.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "chronoqa/error.hpp"
#include "chronoqa/text.hpp"

namespace chronoqa {

namespace {

constexpr std::array<std::pair<Role, std::string_view>, 10> kRoles = {{
    {Role::Ner, "ner"},
    {Role::TypeSelect, "type_select"},
    {Role::Decompose, "decompose"},
    {Role::SeedSelect, "seed_select"},
    {Role::ToolkitSelect, "toolkit_select"},
    {Role::PathSelect, "path_select"},
    {Role::DebateVote, "debate_vote"},
    {Role::Sufficiency, "sufficiency"},
    {Role::AnswerGeneration, "answer_generation"},
    {Role::Refine, "refine"},
}};

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string json_to_param(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& x : v) {
      if (!out.empty()) out += ',';
      out += json_to_param(x);
    }
    return out;
  }
  return v.dump();
}

std::string render_record(const ExperienceRecord& r) {
  std::string out = r.question_text;
  if (!r.indicator_text.empty()) out += " | " + r.indicator_text;
  out += " => ";
  out += r.kind == RecordKind::TypeExp ? std::string(type_name(r.primary_type)) : r.payload.dump();
  return out;
}

void add_memory(nlohmann::json& fields, const Retrieved& memory) {
  fields["exemplars"] = nlohmann::json::array();
  fields["warnings"] = nlohmann::json::array();
  for (const auto& r : memory.exemplars) fields["exemplars"].push_back(render_record(r));
  for (const auto& r : memory.warnings) fields["warnings"].push_back(render_record(r));
}

const nlohmann::json& require(const nlohmann::json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (j.contains(k)) return j.at(k);
  }
  throw Error(Errc::SchemaError, std::string("reply lacks field '") + *keys.begin() + "'");
}

bool has_word(const std::vector<std::string>& words, std::string_view w) {
  return std::find(words.begin(), words.end(), w) != words.end();
}

// ---- decomposition text ----

enum class Block { None, Subquestions, Indicators, Constraints, TimeVars };

Block header_of(std::string_view line, std::string_view& rest) {
  auto s = trim(line);
  while (!s.empty() && (s.front() == '#' || s.front() == '*')) s.remove_prefix(1);
  // "Name:" with an optional inline value, or a bare "Name" heading line.
  const auto colon = std::min(s.find(':'), s.size());
  auto head = squash(s.substr(0, colon));
  while (!head.empty() && head.back() == '*') head.pop_back();
  Block b = Block::None;
  if (head == "subquestions") b = Block::Subquestions;
  else if (head == "indicators") b = Block::Indicators;
  else if (head == "constraints") b = Block::Constraints;
  else if (head == "timevars") b = Block::TimeVars;
  if (b == Block::None) return b;
  rest = colon < s.size() ? s.substr(colon + 1) : std::string_view{};
  while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
  return b;
}

std::string strip_item(std::string_view line) {
  auto s = trim(line);
  if (s.starts_with("- ") || s.starts_with("* ")) s = trim(s.substr(2));
  // "1." "2)" "Q1:" prefixes
  std::size_t i = 0;
  if (i < s.size() && (s[i] == 'Q' || s[i] == 'q') && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))
    ++i;
  const std::size_t digits_from = i;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i > digits_from && i < s.size() && (s[i] == '.' || s[i] == ')' || s[i] == ':')) s = trim(s.substr(i + 1));
  if (!s.empty() && s.back() == ',') s = trim(s.substr(0, s.size() - 1));
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
    s = trim(s.substr(1, s.size() - 2));
  return std::string(s);
}

std::vector<std::string> block_items(const std::vector<std::string>& lines) {
  std::string joined;
  for (const auto& l : lines) joined += l + "\n";
  const auto t = trim(joined);
  if (!t.empty() && t.front() == '[' && t.back() == ']') {
    try {
      const auto arr = nlohmann::json::parse(t);
      std::vector<std::string> out;
      bool all_strings = true;
      for (const auto& x : arr) {
        if (!x.is_string()) all_strings = false;
        else out.push_back(x.get<std::string>());
      }
      if (all_strings) return out;
    } catch (const nlohmann::json::exception&) {
    }
  }
  std::vector<std::string> out;
  for (const auto& l : lines) {
    auto item = strip_item(l);
    if (item.empty() || item == "[" || item == "]" || item == "{" || item == "}") continue;
    out.push_back(std::move(item));
  }
  return out;
}

bool empty_constraint_item(std::string_view s) {
  const auto l = to_lower(trim(s));
  return l.empty() || l == "none" || l == "-" || l == "[]" || l == "n/a";
}

std::string clean_constraint_item(std::string s) {
  s.erase(std::remove(s.begin(), s.end(), '"'), s.end());
  auto t = std::string(trim(s));
  // A whole-line list wrapper, but not the bracketed bounds of between().
  if (t.size() >= 2 && t.front() == '[' && t.back() == ']') t = std::string(trim(std::string_view(t).substr(1, t.size() - 2)));
  return t;
}

Constraint flip(const Constraint& c, const std::string& var) {
  Constraint out = c;
  out.subject = var;
  out.anchor = TimeRef::variable(c.subject);
  out.op = c.op == ConstraintOp::Before ? ConstraintOp::After : ConstraintOp::Before;
  return out;
}

void collect_order_edges(const Constraint& c, std::vector<std::pair<std::string, std::string>>& edges) {
  const auto var = [](const std::optional<TimeRef>& r) -> std::string { return r && !r->concrete() ? r->var : ""; };
  switch (c.op) {
    case ConstraintOp::Before:
      if (auto a = var(c.anchor); !a.empty()) edges.emplace_back(c.subject, a);
      break;
    case ConstraintOp::After:
      if (auto a = var(c.anchor); !a.empty()) edges.emplace_back(a, c.subject);
      break;
    case ConstraintOp::Between:
      if (auto a = var(c.anchor); !a.empty()) edges.emplace_back(a, c.subject);
      if (auto b = var(c.bound2); !b.empty()) edges.emplace_back(c.subject, b);
      break;
    default:
      break;
  }
}

// ---- heuristics ----

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "the",   "a",    "an",   "in",    "on",    "at",     "before", "after", "during", "between", "since",
      "until", "which", "who", "whom",  "what",  "when",   "where",  "why",   "how",    "did",     "does",
      "do",    "was",  "is",   "were",  "are",   "of",     "for",    "to",    "with",   "by",      "from",
      "and",   "or",   "many", "times", "first", "last",   "prior",  "following", "whose", "has", "have",
      "had",   "will", "can",  "could", "would", "should", "this",   "that",  "these",  "those",   "it",
      "there", "then", "also", "about", "as",    "following"};
  return words;
}

std::string relation_guess(std::string_view question, const std::vector<std::string>& topics) {
  std::set<std::string> topic_words;
  for (const auto& t : topics) {
    for (auto& w : word_tokens(t)) topic_words.insert(std::move(w));
  }
  std::string out;
  for (const auto& w : word_tokens(question)) {
    if (stopwords().count(w) || topic_words.count(w)) continue;
    if (std::all_of(w.begin(), w.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::vector<Constraint> explicit_time_constraints(std::string_view question, const std::string& var) {
  static const std::regex between_re(R"(\bbetween\s+(?:the\s+)?(\d{4}(?:-\d{2}){0,2})\s+and\s+(?:the\s+)?(\d{4}(?:-\d{2}){0,2})\b)",
                                     std::regex::icase);
  static const std::regex single_re(R"(\b(before|after|since|until|by|in|during|on|prior to)\s+(?:the\s+)?(\d{4}(?:-\d{2}){0,2})\b)",
                                    std::regex::icase);
  std::vector<Constraint> out;
  const std::string q(question);
  std::smatch m;
  if (std::regex_search(q, m, between_re)) {
    try {
      out.push_back({ConstraintOp::Between, var, TimeRef::of(parse_timestamp(m[1].str())),
                     TimeRef::of(parse_timestamp(m[2].str())), {}});
      return out;
    } catch (const Error&) {
    }
  }
  for (auto it = std::sregex_iterator(q.begin(), q.end(), single_re); it != std::sregex_iterator(); ++it) {
    const auto word = to_lower((*it)[1].str());
    Timestamp ts;
    try {
      ts = parse_timestamp((*it)[2].str());
    } catch (const Error&) {
      continue;
    }
    ConstraintOp op = ConstraintOp::Equal;
    if (word == "before" || word == "until" || word == "by" || word == "prior to") op = ConstraintOp::Before;
    else if (word == "after" || word == "since") op = ConstraintOp::After;
    Constraint c{op, var, TimeRef::of(ts), std::nullopt, {}};
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

std::optional<Timestamp> anchor_of(const Indicator& ind, ConstraintOp op) {
  for (const auto& c : ind.constraints) {
    if (c.op == op && c.anchor && c.anchor->concrete()) return c.anchor->ts;
  }
  return std::nullopt;
}

const Constraint* find_op(const Indicator& ind, ConstraintOp op) {
  for (const auto& c : ind.constraints) {
    if (c.op == op) return &c;
  }
  return nullptr;
}

bool any_relation_matches(const Tkg& tkg, std::string_view filter) {
  if (trim(filter).empty()) return false;
  for (std::uint32_t r = 0; r < tkg.relation_count(); ++r) {
    if (relation_matches(tkg, RelationId{r}, filter)) return true;
  }
  return false;
}

}  // namespace

std::string_view role_name(Role role) {
  for (const auto& [r, name] : kRoles) {
    if (r == role) return name;
  }
  return "ner";
}

std::optional<Role> parse_role(std::string_view text) {
  const auto key = squash(text);
  for (const auto& [r, name] : kRoles) {
    if (squash(name) == key) return r;
  }
  return std::nullopt;
}

std::string_view status_name(NodeStatus s) {
  switch (s) {
    case NodeStatus::Pending: return "pending";
    case NodeStatus::Solved: return "solved";
    case NodeStatus::Failed: return "failed";
  }
  return "pending";
}

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Accept: return "Accept";
    case Action::Decompose: return "Decompose";
    case Action::Refine: return "Refine";
    case Action::RetrieveAgain: return "RetrieveAgain";
  }
  return "Accept";
}

nlohmann::json extract_json(std::string_view reply) {
  std::string_view body = reply;
  if (const auto fence = reply.find("```"); fence != std::string_view::npos) {
    auto after = reply.substr(fence + 3);
    const auto nl = after.find('\n');
    if (nl != std::string_view::npos && trim(after.substr(0, nl)).find_first_of("{[") == std::string_view::npos)
      after = after.substr(nl + 1);
    const auto end = after.find("```");
    body = end == std::string_view::npos ? after : after.substr(0, end);
  }
  const auto open = body.find('{');
  const auto close = body.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open)
    throw Error(Errc::SchemaError, "reply holds no JSON object");
  try {
    auto j = nlohmann::json::parse(body.substr(open, close - open + 1));
    if (!j.is_object()) throw Error(Errc::SchemaError, "reply JSON is not an object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("reply JSON does not parse: ") + e.what());
  }
}

// ---------------- decomposition ----------------

QuestionTree parse_decomposition(std::string_view text, TemporalType type, std::string_view question) {
  std::map<Block, std::vector<std::string>> blocks;
  Block current = Block::None;
  for (const auto& raw : split(text, '\n')) {
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view rest;
    if (const Block b = header_of(line, rest); b != Block::None) {
      if (blocks.count(b)) throw Error(Errc::SchemaError, "decomposition repeats a block");
      current = b;
      blocks[b];
      if (!trim(rest).empty()) blocks[b].emplace_back(trim(rest));
      continue;
    }
    if (current != Block::None && !trim(line).empty()) blocks[current].push_back(line);
  }
  for (const auto& [b, name] : {std::pair{Block::Subquestions, "Subquestions"}, std::pair{Block::Indicators, "Indicators"},
                                std::pair{Block::Constraints, "Constraints"}, std::pair{Block::TimeVars, "Time_vars"}}) {
    if (!blocks.count(b)) throw Error(Errc::SchemaError, std::string("decomposition lacks the ") + name + " block");
  }
  const auto subqs = block_items(blocks[Block::Subquestions]);
  const auto inds = block_items(blocks[Block::Indicators]);
  auto cons = block_items(blocks[Block::Constraints]);
  if (subqs.empty()) throw Error(Errc::SchemaError, "decomposition has no subquestions");
  if (inds.size() != subqs.size())
    throw Error(Errc::SchemaError, "decomposition has " + std::to_string(subqs.size()) + " subquestions but " +
                                       std::to_string(inds.size()) + " indicators");
  if (cons.empty()) cons.assign(subqs.size(), "none");
  if (cons.size() != subqs.size())
    throw Error(Errc::SchemaError, "decomposition has " + std::to_string(subqs.size()) + " subquestions but " +
                                       std::to_string(cons.size()) + " constraint lines");

  QuestionTree tree;
  tree.question = std::string(question);
  tree.type = type;
  tree.source = std::string(text);
  {
    std::string vars;
    for (const auto& l : blocks[Block::TimeVars]) vars += l + ",";
    std::string cur;
    const auto flush = [&] {
      const auto v = std::string(trim(cur));
      cur.clear();
      if (v.empty()) return;
      if (std::find(tree.time_vars.begin(), tree.time_vars.end(), v) == tree.time_vars.end()) tree.time_vars.push_back(v);
    };
    for (char c : vars) {
      if (c == ',' || c == ' ' || c == '\t' || c == '\n') flush();
      else if (c != '[' && c != ']' && c != '"' && c != '\'' && c != '-' && c != '*') cur.push_back(c);
    }
    flush();
  }
  const std::set<std::string> declared(tree.time_vars.begin(), tree.time_vars.end());
  const auto check_declared = [&](const std::string& v, std::size_t i) {
    if (!declared.count(v))
      throw Error(Errc::ConstraintError, "subquestion " + std::to_string(i + 1) + " uses undeclared time variable '" + v + "'");
  };

  std::map<std::string, int> bound_by;
  for (std::size_t i = 0; i < subqs.size(); ++i) {
    TreeNode node;
    node.id = static_cast<int>(i);
    node.subquestion = subqs[i];
    node.indicator = parse_edge(inds[i]);
    std::vector<Constraint> cs;
    if (!empty_constraint_item(cons[i])) cs = parse_constraints(clean_constraint_item(cons[i]));
    auto& ind = node.indicator;
    if (ind.time_var.empty()) {
      for (const auto& c : cs) {
        if (c.op != ConstraintOp::Topic) {
          ind.time_var = c.subject;
          break;
        }
      }
      if (ind.time_var.empty()) throw Error(Errc::ConstraintError, "subquestion " + std::to_string(i + 1) + " has no time variable");
      ind.time_vars = {ind.time_var};
    }
    check_declared(ind.time_var, i);
    if (bound_by.count(ind.time_var))
      throw Error(Errc::ConstraintError, "time variable '" + ind.time_var + "' is produced by two subquestions");
    bound_by[ind.time_var] = node.id;
    for (const auto& c : cs) {
      if (c.op == ConstraintOp::Topic) {
        ind.constraints.push_back(c);
        continue;
      }
      check_declared(c.subject, i);
      if (c.anchor && !c.anchor->concrete()) check_declared(c.anchor->var, i);
      if (c.bound2 && !c.bound2->concrete()) check_declared(c.bound2->var, i);
      if (c.subject == ind.time_var) {
        ind.constraints.push_back(c);
      } else if ((c.op == ConstraintOp::Before || c.op == ConstraintOp::After) && c.anchor && !c.anchor->concrete() &&
                 c.anchor->var == ind.time_var) {
        ind.constraints.push_back(flip(c, ind.time_var));
      } else {
        tree.order.push_back(c);
      }
    }
    ind.type = derive_type(ind.constraints);
    tree.nodes.push_back(std::move(node));
  }
  for (auto& node : tree.nodes) {
    std::set<int> deps;
    for (const auto& c : node.indicator.constraints) {
      for (const auto* r : {&c.anchor, &c.bound2}) {
        if (!*r || (*r)->concrete()) continue;
        const auto it = bound_by.find((*r)->var);
        if (it == bound_by.end()) continue;
        if (it->second >= node.id)
          throw Error(Errc::ConstraintError, "subquestion " + std::to_string(node.id + 1) + " reads '" + (*r)->var +
                                                 "' before it is produced");
        deps.insert(it->second);
      }
    }
    node.depends_on.assign(deps.begin(), deps.end());
  }
  return tree;
}

std::string render_decomposition(const QuestionTree& tree) {
  std::ostringstream os;
  os << "Subquestions:\n";
  for (const auto& n : tree.nodes) os << n.id + 1 << ". " << n.subquestion << '\n';
  os << "Indicators:\n";
  for (const auto& n : tree.nodes) {
    const auto& i = n.indicator;
    os << n.id + 1 << ". " << i.subject << " --[" << i.relation << "]--> " << i.object;
    if (!i.time_var.empty()) os << " (" << i.time_var << ')';
    os << '\n';
  }
  os << "Constraints:\n";
  for (const auto& n : tree.nodes) {
    os << n.id + 1 << ". ";
    if (n.indicator.constraints.empty()) os << "none";
    for (std::size_t k = 0; k < n.indicator.constraints.size(); ++k) {
      if (k) os << "; ";
      os << to_string(n.indicator.constraints[k]);
    }
    os << '\n';
  }
  os << "Time_vars:\n";
  for (std::size_t k = 0; k < tree.time_vars.size(); ++k) os << (k ? ", " : "") << tree.time_vars[k];
  os << '\n';
  return os.str();
}

std::vector<std::string> time_var_order(const QuestionTree& tree) {
  std::vector<std::string> vars = tree.time_vars;
  for (const auto& n : tree.nodes) {
    if (!n.indicator.time_var.empty() && std::find(vars.begin(), vars.end(), n.indicator.time_var) == vars.end())
      vars.push_back(n.indicator.time_var);
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vars.size(); ++i) index[vars[i]] = i;
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& n : tree.nodes) {
    for (const auto& c : n.indicator.constraints) collect_order_edges(c, edges);
  }
  for (const auto& c : tree.order) collect_order_edges(c, edges);
  std::vector<std::set<std::size_t>> out(vars.size());
  std::vector<int> indeg(vars.size(), 0);
  for (const auto& [a, b] : edges) {
    if (!index.count(a) || !index.count(b)) continue;
    const auto ia = index[a], ib = index[b];
    if (ia == ib) throw Error(Errc::ConstraintError, "time variable '" + a + "' is ordered against itself");
    if (out[ia].insert(ib).second) ++indeg[ib];
  }
  std::vector<std::string> order;
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (indeg[i] == 0) ready.insert(i);
  }
  while (!ready.empty()) {
    const auto i = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(vars[i]);
    for (auto j : out[i]) {
      if (--indeg[j] == 0) ready.insert(j);
    }
  }
  if (order.size() != vars.size()) throw Error(Errc::ConstraintError, "time variable ordering has a cycle");
  return order;
}

void validate_tree(const QuestionTree& tree, int d_max) {
  if (tree.nodes.empty()) throw Error(Errc::ConstraintError, "question tree has no nodes");
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.id != static_cast<int>(i)) throw Error(Errc::ConstraintError, "node ids must be dense");
    if (n.depth < 1 || n.depth > d_max)
      throw Error(Errc::ConstraintError, "node " + std::to_string(n.id) + " exceeds the depth budget");
    if (n.parent >= 0) {
      if (n.parent >= n.id) throw Error(Errc::ConstraintError, "node parent must precede it");
      const auto& p = tree.node(n.parent);
      if (n.depth != p.depth + 1) throw Error(Errc::ConstraintError, "child depth must be parent depth + 1");
      if (std::find(p.children.begin(), p.children.end(), n.id) == p.children.end())
        throw Error(Errc::ConstraintError, "parent does not list child " + std::to_string(n.id));
    } else if (n.depth != 1) {
      throw Error(Errc::ConstraintError, "top-level nodes have depth 1");
    }
    for (int d : n.depends_on) {
      if (d < 0 || d >= n.id) throw Error(Errc::ConstraintError, "dependencies must point to earlier nodes");
      const auto a = reference_anchor(tree.node(d).indicator);
      const auto b = reference_anchor(n.indicator);
      if (a && b && *b < *a)
        throw Error(Errc::ConstraintError, "node " + std::to_string(n.id) + " is anchored before the node it depends on");
    }
  }
  (void)time_var_order(tree);
}

// ---------------- heuristics ----------------

std::vector<std::string> heuristic_mentions(std::string_view question) {
  struct Tok {
    std::string text;
    bool breaks_after;
  };
  std::vector<Tok> toks;
  std::string cur;
  const auto flush = [&](bool brk) {
    std::string_view t = cur;
    bool punct_end = brk;
    while (!t.empty() && std::string_view(",.;:!?\"()").find(t.back()) != std::string_view::npos) {
      t.remove_suffix(1);
      punct_end = true;
    }
    while (!t.empty() && std::string_view("\"'(").find(t.front()) != std::string_view::npos) t.remove_prefix(1);
    if (!t.empty()) toks.push_back({std::string(t), punct_end});
    else if (punct_end && !toks.empty()) toks.back().breaks_after = true;
    cur.clear();
  };
  for (char c : question) {
    if (std::isspace(static_cast<unsigned char>(c))) flush(false);
    else cur.push_back(c);
  }
  flush(false);

  const auto capitalized = [](const std::string& t) {
    const auto c = static_cast<unsigned char>(t.front());
    return std::isupper(c) != 0;
  };
  const auto numeric = [](const std::string& t) {
    return std::isdigit(static_cast<unsigned char>(t.front())) != 0;
  };
  std::vector<std::string> out;
  std::vector<std::string> run;
  const auto close = [&] {
    while (!run.empty() && stopwords().count(to_lower(run.front()))) run.erase(run.begin());
    while (!run.empty() && to_lower(run.back()) == "of") run.pop_back();
    const bool named = std::any_of(run.begin(), run.end(), [&](const std::string& t) { return capitalized(t); });
    if (named) {
      std::string m;
      for (const auto& t : run) m += (m.empty() ? "" : " ") + t;
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    run.clear();
  };
  for (const auto& t : toks) {
    const bool joins = capitalized(t.text) || numeric(t.text) || (!run.empty() && t.text == "of");
    if (!joins) {
      close();
      continue;
    }
    run.push_back(t.text);
    if (t.breaks_after) close();
  }
  close();
  return out;
}

TemporalType heuristic_type(std::string_view question) {
  const auto q = to_lower(question);
  const auto w = word_tokens(question);
  const bool after = has_word(w, "after") || has_word(w, "since") || has_word(w, "following");
  const bool before = has_word(w, "before") || has_word(w, "until") || q.find("prior to") != std::string::npos;
  if (q.find("how many") != std::string::npos || q.find("number of") != std::string::npos ||
      q.find("how often") != std::string::npos)
    return TemporalType::Count;
  if (has_word(w, "first") && after) return TemporalType::AfterNFirst;
  if (has_word(w, "last") && before) return TemporalType::BeforeNLast;
  if (has_word(w, "between")) return TemporalType::Between;
  if (has_word(w, "first")) return TemporalType::First;
  if (has_word(w, "last")) return TemporalType::Last;
  if (before) return TemporalType::Before;
  if (after) return TemporalType::After;
  if (has_word(w, "during")) return TemporalType::During;
  if (has_word(w, "earlier") || has_word(w, "later") || has_word(w, "compared")) return TemporalType::Comparison;
  return TemporalType::Equal;
}

QuestionTree heuristic_tree(std::string_view question, TemporalType type, const std::vector<std::string>& topics) {
  QuestionTree tree;
  tree.question = std::string(question);
  tree.type = type;
  tree.time_vars = {"t1"};
  TreeNode node;
  node.subquestion = std::string(question);
  auto& ind = node.indicator;
  ind.subject = "?x";
  ind.relation = relation_guess(question, topics);
  if (ind.relation.empty()) ind.relation = "related to";
  ind.object = topics.empty() ? "?y" : topics.front();
  ind.time_var = "t1";
  ind.time_vars = {"t1"};
  ind.constraints = explicit_time_constraints(question, "t1");
  const auto add = [&](ConstraintOp op) { ind.constraints.push_back({op, "t1", std::nullopt, std::nullopt, {}}); };
  switch (type) {
    case TemporalType::First:
    case TemporalType::AfterNFirst: add(ConstraintOp::First); break;
    case TemporalType::Last:
    case TemporalType::BeforeNLast: add(ConstraintOp::Last); break;
    case TemporalType::Count: add(ConstraintOp::Count); break;
    default: break;
  }
  ind.type = derive_type(ind.constraints);
  if (ind.constraints.empty() || (ind.type == TemporalType::Equal && !reference_anchor(ind))) ind.type = type;
  tree.nodes.push_back(std::move(node));
  std::ostringstream os;
  os << render_decomposition(tree);
  tree.source = os.str();
  return tree;
}

std::vector<ToolkitCall> heuristic_toolkits(const Tkg& tkg, const Indicator& ind, const std::string& seed) {
  std::map<std::string, std::string> base{{"entity", seed}};
  if (any_relation_matches(tkg, ind.relation)) base["relation_filter"] = ind.relation;
  if (const auto* topic = find_op(ind, ConstraintOp::Topic)) base["keyword"] = topic->word;
  const auto with = [&](std::map<std::string, std::string> extra) {
    auto p = base;
    for (auto& [k, v] : extra) p[k] = v;
    return p;
  };
  const auto after = anchor_of(ind, ConstraintOp::After);
  const auto before = anchor_of(ind, ConstraintOp::Before);
  const auto* between = find_op(ind, ConstraintOp::Between);
  const bool between_concrete = between && between->anchor && between->anchor->concrete() && between->bound2 &&
                                between->bound2->concrete();
  const auto window = implied_window(ind.constraints);
  std::map<std::string, std::string> window_params;
  if (window.after) window_params["after"] = to_string(*window.after);
  if (window.before) window_params["before"] = to_string(*window.before);

  std::vector<ToolkitCall> calls;
  switch (ind.type) {
    case TemporalType::AfterNFirst:
      if (after) {
        calls.push_back({"AfterFirst", with({{"after", to_string(*after)}, {"limit", "1"}}), 1});
        calls.push_back({"FirstLast", with({{"mode", "first"}, {"after", to_string(*after)}}), 2});
      } else {
        calls.push_back({"FirstLast", with({{"mode", "first"}}), 1});
      }
      break;
    case TemporalType::BeforeNLast:
      if (before) {
        calls.push_back({"BeforeLast", with({{"before", to_string(*before)}, {"limit", "1"}}), 1});
        calls.push_back({"FirstLast", with({{"mode", "last"}, {"before", to_string(*before)}}), 2});
      } else {
        calls.push_back({"FirstLast", with({{"mode", "last"}}), 1});
      }
      break;
    case TemporalType::Between:
      if (between_concrete) {
        calls.push_back({"BetweenRange",
                         with({{"between", to_string(*between->anchor->ts) + "," + to_string(*between->bound2->ts)}}), 1});
      } else {
        calls.push_back({"Timeline", with(window_params), 1});
      }
      break;
    case TemporalType::Count: {
      auto p = with(window_params);
      if (between_concrete) {
        p.erase("after");
        p.erase("before");
        p["between"] = to_string(*between->anchor->ts) + "," + to_string(*between->bound2->ts);
        p["over"] = "BetweenRange";
      } else if (after && before) {
        p["between"] = to_string(*after) + "," + to_string(*before);
        p.erase("after");
        p.erase("before");
        p["over"] = "BetweenRange";
      } else if (before) {
        p["before"] = to_string(*before);
        p.erase("after");
        p["over"] = "Before";
      } else if (after) {
        p["after"] = to_string(*after);
        p.erase("before");
        p["over"] = "After";
      } else {
        p["over"] = "Timeline";
      }
      calls.push_back({"Count", p, 1});
      break;
    }
    case TemporalType::First:
    case TemporalType::Last: {
      auto p = with(window_params);
      p["mode"] = ind.type == TemporalType::First ? "first" : "last";
      calls.push_back({"FirstLast", p, 1});
      break;
    }
    case TemporalType::Before:
      if (before) calls.push_back({"Before", with({{"before", to_string(*before)}}), 1});
      else calls.push_back({"Timeline", base, 1});
      break;
    case TemporalType::After:
      if (after) calls.push_back({"After", with({{"after", to_string(*after)}}), 1});
      else calls.push_back({"Timeline", base, 1});
      break;
    case TemporalType::Comparison:
      calls.push_back({"Timeline", with(window_params), 1});
      break;
    case TemporalType::Equal:
    case TemporalType::During: {
      const auto anchor = reference_anchor(ind);
      if (concrete_entity(ind)) {
        auto p = with(window_params);
        p.erase("relation_filter");
        calls.push_back({"OneHop", p, 1});
      } else if (anchor && anchor->granularity() == Granularity::Day) {
        calls.push_back({"DayEvents", {{"date", to_string(*anchor)}}, 1});
      } else if (anchor) {
        calls.push_back({"PeriodEvents", {{"period", to_string(*anchor)}}, 1});
      } else {
        calls.push_back({"Timeline", base, 1});
      }
      break;
    }
  }
  return calls;
}

std::size_t heuristic_vote(TemporalType type, const std::vector<VoteCandidate>& candidates) {
  if (candidates.empty()) throw Error(Errc::SchemaError, "debate-vote needs at least one candidate");
  const bool earliest = type == TemporalType::First || type == TemporalType::AfterNFirst;
  const bool latest = type == TemporalType::Last || type == TemporalType::BeforeNLast;
  const auto better = [&](const VoteCandidate& a, std::size_t ia, const VoteCandidate& b, std::size_t ib) {
    if (a.valid != b.valid) return a.valid;
    const bool sa = a.expected_size == 0 || a.result_size == a.expected_size;
    const bool sb = b.expected_size == 0 || b.result_size == b.expected_size;
    if (sa != sb) return sa;
    if ((earliest || latest) && a.time != b.time) {
      if (!a.time) return false;
      if (!b.time) return true;
      return earliest ? *a.time < *b.time : *b.time < *a.time;
    }
    if (a.priority != b.priority) return a.priority < b.priority;
    return ia < ib;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (better(candidates[i], i, candidates[best], best)) best = i;
  }
  return best;
}

Verdict heuristic_sufficiency(const SufficiencyInput& in) {
  if (in.scope == Scope::Global) {
    const bool failed = std::any_of(in.statuses.begin(), in.statuses.end(),
                                    [](NodeStatus s) { return s != NodeStatus::Solved; });
    if (failed) return {false, Action::Decompose, "a required subquestion is unsolved"};
    if (in.answer.empty()) return {false, Action::Refine, "no answer could be assembled"};
    return {true, Action::Accept, "all subquestions solved"};
  }
  if (in.answer.empty()) {
    if (!in.had_candidates) return {false, Action::RetrieveAgain, "no candidates retrieved"};
    return {false, Action::Refine, "candidates did not yield an answer"};
  }
  for (const auto& p : in.paths) {
    if (!validate_path(p)) return {false, Action::Refine, "evidence path is not temporally valid"};
    if (!p.empty() && !constraints_hold(in.indicator.constraints, representative_time(p)))
      return {false, Action::Refine, "evidence violates a time constraint"};
  }
  return {true, Action::Accept, "answer supported by valid evidence"};
}

// ---------------- Reasoner ----------------

Reasoner::Reasoner(Backend* backend, const Tkg& tkg) : backend_(backend), tkg_(&tkg) {}

template <class T>
T Reasoner::ask(Role role, nlohmann::json fields, const std::function<T(const std::string&)>& parse,
                const std::function<T()>& fallback) {
  ++calls_;
  Exchange ex{role, false, false, {}};
  Request req{role, render_prompt(role, fields), fields, false};
  std::optional<std::string> reply = backend_ ? backend_->complete(req) : std::nullopt;
  if (!reply) {
    ex.fallback = true;
    log_.push_back(ex);
    return fallback();
  }
  ex.response = *reply;
  try {
    T value = parse(*reply);
    log_.push_back(ex);
    return value;
  } catch (const Error& e) {
    const auto code = e.code();
    if (code != Errc::SchemaError && code != Errc::ConstraintError && code != Errc::UnparseableResponse) {
      log_.push_back(ex);
      throw;
    }
    fields["repair_note"] = std::string("The previous reply was unusable (") + e.what() +
                            "). Reply again using exactly the requested format.";
    Request retry{role, render_prompt(role, fields), fields, true};
    ++calls_;
    ex.repaired = true;
    auto again = backend_->complete(retry);
    if (!again) {
      log_.push_back(ex);
      throw;
    }
    ex.response = *again;
    log_.push_back(ex);
    return parse(*again);
  }
}

std::vector<std::string> Reasoner::extract_mentions(std::string_view question) {
  nlohmann::json fields{{"question", question}};
  return ask<std::vector<std::string>>(
      Role::Ner, fields,
      [](const std::string& reply) {
        const auto j = extract_json(reply);
        const auto& arr = require(j, {"entities", "mentions"});
        if (!arr.is_array()) throw Error(Errc::SchemaError, "entities must be an array");
        std::vector<std::string> out;
        for (const auto& e : arr) {
          if (!e.is_string()) throw Error(Errc::SchemaError, "entities must be strings");
          const auto s = std::string(trim(e.get<std::string>()));
          if (!s.empty() && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
        }
        return out;
      },
      [&] { return heuristic_mentions(question); });
}

TemporalType Reasoner::classify_type(std::string_view question, const Retrieved& memory) {
  const auto norm = normalize_answer(question);
  for (const auto& r : memory.exemplars) {
    if (r.kind == RecordKind::TypeExp && normalize_answer(r.question_text) == norm) return r.primary_type;
  }
  nlohmann::json fields{{"question", question}};
  add_memory(fields, memory);
  return ask<TemporalType>(
      Role::TypeSelect, fields,
      [](const std::string& reply) {
        std::string_view s = trim(reply);
        std::string label;
        if (!s.empty() && s.front() == '{') {
          try {
            label = json_to_param(require(extract_json(s), {"type", "temporal_type", "label"}));
          } catch (const Error&) {
            throw Error(Errc::UnparseableResponse, "type reply is not a label: '" + std::string(s) + "'");
          }
        } else {
          if (const auto colon = s.rfind(':'); colon != std::string_view::npos) s = s.substr(colon + 1);
          for (char c : s) {
            if (c != '"' && c != '\'' && c != '`' && c != '.' && c != '*') label.push_back(c);
          }
        }
        const auto t = parse_type(trim(label));
        if (!t) throw Error(Errc::UnparseableResponse, "unknown temporal type '" + std::string(trim(label)) + "'");
        return *t;
      },
      [&] { return heuristic_type(question); });
}

QuestionTree Reasoner::decompose(std::string_view question, TemporalType type, const std::vector<std::string>& topics,
                                 const Retrieved& memory, int d_max) {
  std::string topic_list;
  for (const auto& t : topics) topic_list += (topic_list.empty() ? "" : ", ") + t;
  nlohmann::json fields{{"question", question}, {"type", type_name(type)}, {"topics", topic_list}};
  add_memory(fields, memory);
  return ask<QuestionTree>(
      Role::Decompose, fields,
      [&](const std::string& reply) {
        auto tree = parse_decomposition(reply, type, question);
        validate_tree(tree, d_max);
        return tree;
      },
      [&] { return heuristic_tree(question, type, topics); });
}

std::vector<EntityId> Reasoner::select_seeds(const Subgraph& g, const Indicator& ind, std::string_view subquestion,
                                             const std::vector<EntityId>& allowed, const Retrieved& memory) {
  const auto resolve = [&](std::string_view name) -> std::optional<EntityId> {
    for (const auto e : allowed) {
      if (iequals(tkg_->entity_name(e), trim(name))) return e;
    }
    if (const auto e = tkg_->find_entity(trim(name)); e && g.contains(*e)) return e;
    return std::nullopt;
  };
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto e : allowed) candidates.push_back(tkg_->entity_name(e));
  nlohmann::json fields{{"subquestion", subquestion}, {"indicator", verbalize(ind)}, {"candidates", candidates}};
  add_memory(fields, memory);
  return ask<std::vector<EntityId>>(
      Role::SeedSelect, fields,
      [&](const std::string& reply) {
        const auto j = extract_json(reply);
        const auto& arr = require(j, {"seeds", "selected_seeds", "entities"});
        if (!arr.is_array()) throw Error(Errc::SchemaError, "seeds must be an array");
        std::vector<EntityId> out;
        for (const auto& s : arr) {
          if (!s.is_string()) throw Error(Errc::SchemaError, "seeds must be strings");
          if (auto e = resolve(s.get<std::string>()); e && std::find(out.begin(), out.end(), *e) == out.end())
            out.push_back(*e);
        }
        if (out.empty()) throw Error(Errc::NoValidSeed, "none of the proposed seeds is a topic or resolved entity");
        return out;
      },
      [&] {
        if (const auto name = concrete_entity(ind)) {
          if (auto e = resolve(*name)) return std::vector<EntityId>{*e};
        }
        if (allowed.empty()) throw Error(Errc::NoValidSeed, "no topic entity available as a seed");
        return std::vector<EntityId>{allowed.front()};
      });
}

std::vector<ToolkitCall> Reasoner::select_toolkits(const Indicator& ind, std::string_view subquestion,
                                                   const std::vector<EntityId>& seeds, const Retrieved& memory) {
  nlohmann::json seed_names = nlohmann::json::array();
  for (const auto e : seeds) seed_names.push_back(tkg_->entity_name(e));
  nlohmann::json catalog = nlohmann::json::array();
  for (const auto k : kToolkits) catalog.push_back(std::string(toolkit_name(k)) + ": " + std::string(toolkit_summary(k)));
  nlohmann::json fields{{"subquestion", subquestion}, {"indicator", verbalize(ind)}, {"type", type_name(ind.type)},
                        {"seeds", seed_names},        {"catalog", catalog}};
  add_memory(fields, memory);
  return ask<std::vector<ToolkitCall>>(
      Role::ToolkitSelect, fields,
      [](const std::string& reply) {
        const auto j = extract_json(reply);
        const auto& arr = require(j, {"selected_toolkits", "toolkits"});
        if (!arr.is_array() || arr.empty()) throw Error(Errc::SchemaError, "selected_toolkits must be a nonempty array");
        std::vector<ToolkitCall> calls;
        for (const auto& item : arr) {
          if (!item.is_object()) throw Error(Errc::SchemaError, "each selected toolkit must be an object");
          const auto& name = require(item, {"original_name", "name", "toolkit"});
          if (!name.is_string()) throw Error(Errc::SchemaError, "toolkit name must be a string");
          ToolkitCall call;
          call.name = name.get<std::string>();
          if (!known_toolkit(call.name)) throw Error(Errc::UnknownToolkit, "unknown toolkit '" + call.name + "'");
          if (item.contains("parameters") || item.contains("params")) {
            const auto& params = item.contains("parameters") ? item.at("parameters") : item.at("params");
            if (!params.is_object()) throw Error(Errc::SchemaError, "toolkit parameters must be an object");
            for (const auto& [k, v] : params.items()) {
              if (!v.is_null()) call.params[k] = json_to_param(v);
            }
          }
          if (item.contains("priority")) {
            if (!item.at("priority").is_number_integer()) throw Error(Errc::SchemaError, "priority must be an integer");
            call.priority = item.at("priority").get<int>();
          }
          calls.push_back(std::move(call));
        }
        return calls;
      },
      [&] {
        if (seeds.empty()) throw Error(Errc::EmptySeeds, "toolkit selection needs a seed");
        return heuristic_toolkits(*tkg_, ind, tkg_->entity_name(seeds.front()));
      });
}

std::vector<std::size_t> Reasoner::select_paths(const std::vector<ScoredPath>& candidates, std::string_view subquestion,
                                                const Indicator& ind, std::size_t w_max) {
  if (candidates.empty() || w_max == 0) return {};
  const auto top = [&] {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(w_max, candidates.size()); ++i) out.push_back(i);
    return out;
  };
  if (candidates.size() == 1) return top();
  nlohmann::json paths = nlohmann::json::array();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::ostringstream os;
    os << '[' << i << "] " << verbalize(*tkg_, candidates[i].path) << " (score " << candidates[i].score << ')';
    paths.push_back(os.str());
  }
  nlohmann::json fields{{"subquestion", subquestion}, {"indicator", verbalize(ind)}, {"paths", paths}, {"w_max", w_max}};
  return ask<std::vector<std::size_t>>(
      Role::PathSelect, fields,
      [&](const std::string& reply) {
        const auto j = extract_json(reply);
        const auto& arr = require(j, {"selected", "indices", "paths"});
        if (!arr.is_array() || arr.empty()) throw Error(Errc::SchemaError, "selected must be a nonempty array");
        std::vector<std::size_t> out;
        for (const auto& v : arr) {
          if (!v.is_number_integer()) throw Error(Errc::SchemaError, "selected entries must be integers");
          const auto i = v.get<long long>();
          if (i < 0 || static_cast<std::size_t>(i) >= candidates.size())
            throw Error(Errc::SchemaError, "selected index " + std::to_string(i) + " is out of range");
          if (std::find(out.begin(), out.end(), static_cast<std::size_t>(i)) == out.end())
            out.push_back(static_cast<std::size_t>(i));
        }
        if (out.size() > w_max) out.resize(w_max);
        return out;
      },
      top);
}

WinningAnswer Reasoner::debate_vote(std::string_view subquestion, TemporalType type,
                                    const std::vector<VoteCandidate>& candidates) {
  if (candidates.empty()) throw Error(Errc::SchemaError, "debate-vote needs at least one candidate");
  const auto make = [&](std::size_t i, std::string reason) {
    const auto& c = candidates[i];
    WinningAnswer w{i, c.toolkit, c.entities, c.time, 0.0, std::move(reason)};
    std::size_t agree = 0;
    for (const auto& o : candidates) agree += (o.entities == c.entities && o.time == c.time) ? 1 : 0;
    w.score = static_cast<double>(agree) / static_cast<double>(candidates.size());
    return w;
  };
  if (candidates.size() == 1) return make(0, "single proposal");
  nlohmann::json props = nlohmann::json::array();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    std::string ents;
    for (const auto& e : c.entities) ents += (ents.empty() ? "" : ", ") + e;
    props.push_back("[" + std::to_string(i) + "] " + c.toolkit + ": " + ents + (c.time ? " at " + to_string(*c.time) : "") +
                    (c.valid ? "" : " (violates constraints)"));
  }
  nlohmann::json fields{{"subquestion", subquestion}, {"type", type_name(type)}, {"candidates", props}};
  return ask<WinningAnswer>(
      Role::DebateVote, fields,
      [&](const std::string& reply) {
        const auto j = extract_json(reply);
        const auto& win = require(j, {"winning_toolkit", "winner"});
        std::optional<std::size_t> idx;
        if (win.is_number_integer()) {
          const auto i = win.get<long long>();
          if (i >= 0 && static_cast<std::size_t>(i) < candidates.size()) idx = static_cast<std::size_t>(i);
        } else if (win.is_string()) {
          const auto name = win.get<std::string>();
          const auto ent = j.contains("entity") ? json_to_param(j.at("entity")) : std::string();
          for (std::size_t i = 0; i < candidates.size() && !idx; ++i) {
            if (squash(candidates[i].toolkit) != squash(name)) continue;
            if (!ent.empty() && !candidates[i].entities.empty() &&
                std::none_of(candidates[i].entities.begin(), candidates[i].entities.end(),
                             [&](const std::string& e) { return iequals(e, ent); }))
              continue;
            idx = i;
          }
        }
        if (!idx) throw Error(Errc::SchemaError, "winning_toolkit does not name a proposal");
        return make(*idx, j.contains("reason") ? json_to_param(j.at("reason")) : std::string());
      },
      [&] { return make(heuristic_vote(type, candidates), "ranked by validity, expected size and time order"); });
}

Verdict Reasoner::check_sufficiency(const SufficiencyInput& in) {
  nlohmann::json paths = nlohmann::json::array();
  for (const auto& p : in.paths) paths.push_back(verbalize(*tkg_, p));
  std::string answer;
  for (const auto& a : in.answer) answer += (answer.empty() ? "" : ", ") + a;
  nlohmann::json fields{{"scope", in.scope == Scope::Local ? "local" : "global"},
                        {"question", in.question},
                        {"indicator", verbalize(in.indicator)},
                        {"answer", answer},
                        {"paths", paths}};
  return ask<Verdict>(
      Role::Sufficiency, fields,
      [](const std::string& reply) {
        const auto j = extract_json(reply);
        const auto& s = require(j, {"sufficient"});
        if (!s.is_boolean()) throw Error(Errc::SchemaError, "sufficient must be a boolean");
        Verdict v;
        v.sufficient = s.get<bool>();
        v.note = j.contains("note") ? json_to_param(j.at("note")) : std::string();
        if (v.sufficient) {
          v.action = Action::Accept;
          return v;
        }
        const auto& a = require(j, {"action"});
        const auto key = squash(json_to_param(a));
        if (key == "decompose") v.action = Action::Decompose;
        else if (key == "refine") v.action = Action::Refine;
        else if (key == "retrieveagain" || key == "retrievalagain" || key == "retry") v.action = Action::RetrieveAgain;
        else throw Error(Errc::SchemaError, "action must be Decompose, Refine or RetrieveAgain when insufficient");
        return v;
      },
      [&] { return heuristic_sufficiency(in); });
}

Answer Reasoner::generate_answer(std::string_view question, TemporalType type, const Answer& draft,
                                 const std::vector<PathStep>& evidence) {
  std::set<std::string> grounded;
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& s : evidence) {
    grounded.insert(normalize_answer(tkg_->entity_name(s.fact.head)));
    grounded.insert(normalize_answer(tkg_->entity_name(s.fact.tail)));
    grounded.insert(normalize_answer(to_string(s.fact.ts)));
    ev.push_back(verbalize(*tkg_, s.fact));
  }
  for (const auto& e : draft.entities) grounded.insert(normalize_answer(e));
  if (draft.time) grounded.insert(normalize_answer(to_string(*draft.time)));
  std::string draft_text;
  for (const auto& e : draft.entities) draft_text += (draft_text.empty() ? "" : ", ") + e;
  nlohmann::json fields{{"question", question}, {"type", type_name(type)}, {"draft", draft_text}, {"evidence", ev}};
  return ask<Answer>(
      Role::AnswerGeneration, fields,
      [&](const std::string& reply) {
        const auto j = extract_json(reply);
        const auto& a = require(j, {"answers", "answer"});
        Answer out;
        out.time = draft.time;
        if (a.is_array()) {
          for (const auto& x : a) out.entities.push_back(std::string(trim(json_to_param(x))));
        } else {
          out.entities.push_back(std::string(trim(json_to_param(a))));
        }
        if (out.entities.empty()) throw Error(Errc::SchemaError, "answers must not be empty");
        for (const auto& e : out.entities) {
          if (!grounded.count(normalize_answer(e)))
            throw Error(Errc::SchemaError, "answer '" + e + "' does not occur in the evidence");
        }
        out.rationale = j.contains("rationale") ? json_to_param(j.at("rationale")) : std::string();
        return out;
      },
      [&] {
        Answer out = draft;
        std::ostringstream os;
        os << "Answer drawn from " << evidence.size() << " evidence fact" << (evidence.size() == 1 ? "" : "s");
        if (!evidence.empty()) os << "; last: " << verbalize(*tkg_, evidence.back().fact);
        out.rationale = os.str();
        return out;
      });
}

std::string Reasoner::refine(std::string_view subquestion, const Indicator& ind) {
  nlohmann::json fields{{"subquestion", subquestion}, {"indicator", verbalize(ind)}};
  return ask<std::string>(
      Role::Refine, fields,
      [](const std::string& reply) {
        const auto t = trim(reply);
        std::string out;
        if (!t.empty() && (t.front() == '{' || t.front() == '`')) {
          out = json_to_param(require(extract_json(t), {"subquestion", "question"}));
        } else {
          out = std::string(t);
        }
        if (trim(out).empty()) throw Error(Errc::SchemaError, "refined subquestion is empty");
        return std::string(trim(out));
      },
      [&] { return verbalize(ind); });
}

}  // namespace chronoqa
