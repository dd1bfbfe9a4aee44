#include "chronoqa/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "chronoqa/config.hpp"
#include "chronoqa/controller.hpp"
#include "chronoqa/error.hpp"
#include "chronoqa/text.hpp"
#include "chronoqa/trace.hpp"

namespace chronoqa {

namespace {

struct Options {
  std::string config;
  std::string tkg;
  std::string aliases;
  std::string memory;
  std::string backend;
  std::string script;
  std::string endpoint;
  std::string model;
  std::string trace_out;
  std::string seed_fixture;
  bool no_memory = false;
  bool no_graph = false;
  bool no_embed = false;
  bool no_tree = false;
  int jobs = 1;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--tkg", o.tkg, "fact file (TSV quadruples)");
  cmd->add_option("--aliases", o.aliases, "relation alias file");
  cmd->add_option("--memory", o.memory, "experience pool file (loaded if present, saved after the run)");
  cmd->add_option("--backend", o.backend, "reasoner backend")->check(CLI::IsMember({"scripted", "http"}));
  cmd->add_option("--script", o.script, "rules file for the scripted backend");
  cmd->add_option("--endpoint", o.endpoint, "chat-completion endpoint for the http backend");
  cmd->add_option("--model", o.model, "model name for the http backend");
  cmd->add_option("--seed-fixture", o.seed_fixture, "cold-start exemplars (JSONL) for an empty pool");
  cmd->add_flag("--no-memory", o.no_memory, "bypass the experience pool");
  cmd->add_flag("--no-graph-retrieval", o.no_graph, "disable the graph expansion stream");
  cmd->add_flag("--no-embed-retrieval", o.no_embed, "disable the dense retrieval stream");
  cmd->add_flag("--no-tree", o.no_tree, "answer with a single subquestion instead of a decomposition");
}

Config build_config(const Options& o) {
  Config c = o.config.empty() ? Config{} : load_config_file(o.config);
  if (!o.tkg.empty()) c.paths.tkg = o.tkg;
  if (!o.aliases.empty()) c.paths.aliases = o.aliases;
  if (!o.memory.empty()) c.paths.memory = o.memory;
  if (!o.seed_fixture.empty()) c.paths.cold_start = o.seed_fixture;
  if (!o.backend.empty()) c.backend.kind = o.backend;
  if (!o.script.empty()) c.backend.script = o.script;
  if (!o.endpoint.empty()) c.backend.http.endpoint = o.endpoint;
  if (!o.model.empty()) c.backend.http.model = o.model;
  if (o.no_memory) c.engine.use_memory = false;
  if (o.no_tree) c.engine.use_tree = false;
  if (o.no_graph) c.engine.retrieval.graph_stream = false;
  if (o.no_embed) c.engine.retrieval.dense_stream = false;
  c.validate();
  if (c.paths.tkg.empty()) throw Error(Errc::InvalidConfig, "no fact file given (--tkg or paths.tkg)");
  return c;
}

// Everything a run needs, built from a Config.
struct Session {
  Config cfg;
  Tkg tkg;
  std::unique_ptr<Embedder> embedder;
  std::unique_ptr<Backend> backend;
  std::unique_ptr<SharedExperiencePool> pool;
  std::unique_ptr<Engine> engine;

  explicit Session(Config c) : cfg(std::move(c)) {
    tkg = load_tsv_file(cfg.paths.tkg);
    if (!cfg.paths.aliases.empty()) {
      std::ifstream in(cfg.paths.aliases);
      if (!in) throw Error(Errc::Io, "cannot open alias file " + cfg.paths.aliases);
      tkg.load_aliases(in);
    }
    if (cfg.embedder.kind == "http") {
      embedder = std::make_unique<HttpEmbedder>(cfg.embedder.endpoint, cfg.embedder.dim);
    } else {
      embedder = std::make_unique<HashingEmbedder>(cfg.embedder.dim);
    }
    if (cfg.backend.kind == "http") {
      backend = std::make_unique<HttpBackend>(cfg.backend.http);
    } else if (!cfg.backend.script.empty()) {
      backend = std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(cfg.backend.script));
    } else {
      backend = std::make_unique<ScriptedBackend>();
    }
    if (cfg.engine.use_memory) {
      const bool stored = !cfg.paths.memory.empty() && std::filesystem::exists(cfg.paths.memory);
      ExperiencePool p = stored ? ExperiencePool::load_file(cfg.paths.memory, *embedder, cfg.memory)
                                : ExperiencePool(*embedder, cfg.memory);
      if (p.empty() && !cfg.paths.cold_start.empty()) {
        std::ifstream in(cfg.paths.cold_start);
        if (!in) throw Error(Errc::Io, "cannot open cold-start file " + cfg.paths.cold_start);
        p.import(in);
      }
      pool = std::make_unique<SharedExperiencePool>(std::move(p));
    }
    engine = std::make_unique<Engine>(tkg, *embedder, backend.get(), pool.get(), cfg.engine);
  }

  void save() const {
    if (!pool || cfg.paths.memory.empty()) return;
    pool->read([&](const ExperiencePool& p) {
      p.save_file(cfg.paths.memory);
      return 0;
    });
  }
};

int report_error(const Error& e, std::ostream& err) {
  err << "error[" << errc_name(e.code()) << "]";
  if (!e.phase().empty()) err << " (" << e.phase() << ")";
  if (e.line()) err << " line " << *e.line();
  err << ": " << e.what() << '\n';
  return 2;
}

std::string join(const std::vector<std::string>& xs, const char* sep) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : sep) + x;
  return out;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << j.dump(2) << '\n';
}

int cmd_ingest(const std::string& tkg_path, const std::string& alias_path, std::ostream& out) {
  Tkg tkg = load_tsv_file(tkg_path);
  if (!alias_path.empty()) {
    std::ifstream in(alias_path);
    if (!in) throw Error(Errc::Io, "cannot open alias file " + alias_path);
    tkg.load_aliases(in);
  }
  std::size_t hist[3] = {0, 0, 0};
  for (const auto& f : tkg.facts()) ++hist[static_cast<int>(f.ts.granularity())];
  out << "entities: " << tkg.entity_count() << '\n'
      << "relations: " << tkg.relation_count() << '\n'
      << "facts: " << tkg.fact_count() << '\n'
      << "granularity: year=" << hist[0] << " month=" << hist[1] << " day=" << hist[2] << '\n';
  return 0;
}

int cmd_ask(const std::string& question, const Options& o, std::ostream& out) {
  Session s(build_config(o));
  const auto run = s.engine->answer_question(question);
  const auto& a = run.trajectory.answer;
  out << "answer: " << join(a.entities, ", ") << '\n';
  if (a.time) out << "time: " << to_string(*a.time) << '\n';
  out << "type: " << type_name(run.grounding.type) << '\n'
      << "sufficient: " << (run.trajectory.sufficient ? "true" : "false") << '\n'
      << "memory_hit: " << (run.memory_hit() ? "true" : "false") << '\n'
      << "reasoner_calls: " << run.stats.reasoner_calls << '\n'
      << "toolkit_executions: " << run.stats.toolkit_executions << '\n';
  if (!o.trace_out.empty()) write_json(o.trace_out, trace_to_json(run, s.tkg, s.cfg.engine));
  s.save();
  return 0;
}

int cmd_eval(const std::string& questions, const std::string& report_out, const std::string& trace_dir,
             const Options& o, std::ostream& out, std::ostream& err) {
  std::ifstream in(questions);
  if (!in) throw Error(Errc::Io, "cannot open questions file " + questions);
  const auto items = load_questions(in);
  Session s(build_config(o));
  if (!trace_dir.empty()) std::filesystem::create_directories(trace_dir);

  const auto t0 = std::chrono::steady_clock::now();
  EvalReport report;
  report.outcomes.resize(items.size());
  const auto work = [&](std::size_t i) {
    auto& oc = report.outcomes[i];
    oc.item = items[i];
    oc.type = items[i].type;
    try {
      const auto run = s.engine->answer_question(items[i].question);
      oc.predicted = run.trajectory.answer.entities;
      if (oc.type.empty()) oc.type = std::string(type_name(run.grounding.type));
      oc.reasoner_calls = run.stats.reasoner_calls;
      oc.toolkit_executions = run.stats.toolkit_executions;
      oc.memory_hit = run.memory_hit();
      if (!trace_dir.empty())
        write_json((std::filesystem::path(trace_dir) / (items[i].id + ".json")).string(),
                   trace_to_json(run, s.tkg, s.cfg.engine));
    } catch (const Error& e) {
      oc.error = std::string(errc_name(e.code()));
    }
    oc.hit = oc.error.empty() && hit_at_1(oc.predicted, oc.item.answers);
    if (oc.type.empty()) oc.type = "unknown";
  };
  const auto jobs = static_cast<std::size_t>(std::max(1, o.jobs));
  if (jobs == 1 || items.size() <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(jobs, items.size()); ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < items.size(); i = next++) work(i);
      });
    }
    for (auto& t : workers) t.join();
  }
  std::stable_sort(report.outcomes.begin(), report.outcomes.end(),
                   [](const EvalOutcome& a, const EvalOutcome& b) { return a.item.id < b.item.id; });
  report.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  const auto text = format_report(report);
  out << text;
  if (!report_out.empty()) {
    std::ofstream f(report_out, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::Io, "cannot write " + report_out);
    f << text;
  }
  err << "elapsed_ms: " << std::fixed << std::setprecision(1) << report.elapsed_ms << '\n';
  s.save();
  return 0;
}

ExperiencePool load_pool(const std::string& path, const Config& cfg, const Embedder& embedder) {
  if (path.empty()) throw Error(Errc::InvalidConfig, "no memory file given (--memory)");
  return ExperiencePool::load_file(path, embedder, cfg.memory);
}

int cmd_memory(const std::string& sub, const std::string& path, const std::string& config, double decay,
               long long min_keep, std::ostream& out) {
  Config cfg = config.empty() ? Config{} : load_config_file(config);
  const std::string file = path.empty() ? cfg.paths.memory : path;
  const HashingEmbedder embedder(cfg.embedder.dim);
  auto pool = load_pool(file, cfg, embedder);
  if (sub == "list") {
    out << "id\tkind\ttype\thits\toutcome\tquestion\n";
    for (const auto& [id, r] : pool.records()) {
      out << id << '\t' << kind_name(r.kind) << '\t' << type_name(r.primary_type) << '\t' << r.hit_count << '\t'
          << (r.outcome == Outcome::Verified ? "verified" : "incorrect") << '\t' << r.question_text << '\n';
    }
    return 0;
  }
  if (sub == "stats") {
    std::map<RecordKind, std::size_t> kinds;
    std::map<TemporalType, std::size_t> types;
    std::size_t verified = 0;
    for (const auto& [id, r] : pool.records()) {
      ++kinds[r.kind];
      ++types[r.primary_type];
      verified += r.outcome == Outcome::Verified ? 1 : 0;
    }
    out << "records: " << pool.size() << '\n'
        << "buffer: " << pool.buffer().size() << '/' << pool.config().capacity << '\n'
        << "outcomes: verified=" << verified << " incorrect=" << pool.size() - verified << '\n'
        << "kinds:";
    for (const auto& [k, n] : kinds) out << ' ' << kind_name(k) << '=' << n;
    out << "\ntypes:";
    for (const auto& [t, n] : types) out << ' ' << type_name(t) << '=' << n;
    out << '\n';
    return 0;
  }
  const double d = decay > 0 ? decay : cfg.memory.decay;
  const auto keep = min_keep >= 0 ? static_cast<std::uint64_t>(min_keep) : cfg.memory.min_keep;
  const auto pruned = pool.adapt(d, keep);
  pool.save_file(file);
  out << "pruned: " << pruned << '\n' << "buffer: " << pool.buffer().size() << '/' << pool.config().capacity << '\n';
  return 0;
}

}  // namespace

std::vector<EvalItem> load_questions(std::istream& in) {
  std::vector<EvalItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      EvalItem item;
      item.id = j.contains("id") ? (j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump())
                                 : "q" + std::to_string(line_no);
      item.question = j.at("question").get<std::string>();
      const auto& a = j.at("answers");
      if (a.is_string()) item.answers.push_back(a.get<std::string>());
      else item.answers = a.get<std::vector<std::string>>();
      item.type = j.value("type", std::string());
      items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, std::string("bad question record: ") + e.what(), line_no);
    }
  }
  return items;
}

bool hit_at_1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
  if (predicted.empty()) return false;
  const auto top = normalize_answer(predicted.front());
  return std::any_of(gold.begin(), gold.end(), [&](const std::string& g) { return normalize_answer(g) == top; });
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  const auto n = report.outcomes.size();
  std::size_t hits = 0, errors = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_type;
  for (const auto& o : report.outcomes) {
    hits += o.hit ? 1 : 0;
    errors += o.error.empty() ? 0 : 1;
    auto& [h, t] = by_type[o.type];
    h += o.hit ? 1 : 0;
    ++t;
  }
  const auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  os << "questions: " << n << '\n'
     << "errors: " << errors << '\n'
     << "hits@1: " << ratio(hits, n) << " (" << hits << '/' << n << ")\n"
     << "by_type:\n";
  for (const auto& [type, ht] : by_type)
    os << "  " << type << ": " << ratio(ht.first, ht.second) << " (" << ht.first << '/' << ht.second << ")\n";
  os << "results:\n";
  for (const auto& o : report.outcomes) {
    os << "  " << o.item.id << '\t' << (o.hit ? "hit" : "miss") << '\t' << o.type << '\t'
       << (o.error.empty() ? join(o.predicted, "|") : "error=" + o.error) << "\tgold=" << join(o.item.answers, "|")
       << "\tcalls=" << o.reasoner_calls << "\ttoolkits=" << o.toolkit_executions
       << "\tmemory_hit=" << (o.memory_hit ? "yes" : "no") << '\n';
  }
  return os.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal knowledge-graph question answering"};
  app.require_subcommand(1);
  Options opts;

  std::string ingest_tkg, ingest_aliases;
  auto* ingest = app.add_subcommand("ingest", "load a fact file and print its statistics");
  ingest->add_option("--tkg", ingest_tkg, "fact file")->required();
  ingest->add_option("--aliases", ingest_aliases, "relation alias file");

  std::string question;
  auto* ask = app.add_subcommand("ask", "answer one question");
  ask->add_option("question", question, "question text")->required();
  add_common(ask, opts);
  ask->add_option("--trace-out", opts.trace_out, "write the run trace as JSON");

  std::string questions, report_out, trace_dir;
  auto* eval = app.add_subcommand("eval", "batch Hits@1 evaluation");
  eval->add_option("--questions", questions, "JSONL questions file")->required();
  eval->add_option("--report-out", report_out, "also write the report to this file");
  eval->add_option("--trace-dir", trace_dir, "write one trace per question into this directory");
  eval->add_option("--jobs", opts.jobs, "questions answered concurrently")->check(CLI::PositiveNumber);
  add_common(eval, opts);

  std::string mem_file, mem_config;
  double decay = -1.0;
  long long min_keep = -1;
  auto* memory = app.add_subcommand("memory", "inspect or compact an experience pool");
  memory->require_subcommand(1);
  for (const char* name : {"list", "stats", "compact"}) {
    auto* sub = memory->add_subcommand(name);
    sub->add_option("--memory", mem_file, "experience pool file");
    sub->add_option("--config", mem_config, "JSON config file");
    if (std::string(name) == "compact") {
      sub->add_option("--decay", decay, "priority decay per step");
      sub->add_option("--min-keep", min_keep, "minimum age before a record may be dropped");
    }
  }

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("chronoqa");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*ingest) return cmd_ingest(ingest_tkg, ingest_aliases, out);
    if (*ask) return cmd_ask(question, opts, out);
    if (*eval) return cmd_eval(questions, report_out, trace_dir, opts, out, err);
    for (auto* sub : memory->get_subcommands()) {
      if (*sub) return cmd_memory(sub->get_name(), mem_file, mem_config, decay, min_keep, out);
    }
  } catch (const Error& e) {
    return report_error(e, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace chronoqa
