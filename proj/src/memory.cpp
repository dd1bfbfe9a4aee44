#include "chronoqa/memory.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "chronoqa/error.hpp"
#include "chronoqa/text.hpp"

namespace chronoqa {

using nlohmann::json;

std::string_view kind_name(RecordKind kind) {
  switch (kind) {
    case RecordKind::TypeExp: return "TypeExp";
    case RecordKind::DecompExp: return "DecompExp";
    case RecordKind::ToolkitExp: return "ToolkitExp";
    case RecordKind::SeedExp: return "SeedExp";
    case RecordKind::TraceExp: return "TraceExp";
  }
  return "TraceExp";
}

std::optional<RecordKind> parse_kind(std::string_view text) {
  for (auto k : {RecordKind::TypeExp, RecordKind::DecompExp, RecordKind::ToolkitExp, RecordKind::SeedExp,
                 RecordKind::TraceExp}) {
    if (iequals(text, kind_name(k))) return k;
  }
  return std::nullopt;
}

void MemoryConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(Errc::InvalidConfig, msg); };
  if (capacity < 1) fail("memory capacity must be >= 1");
  if (lambda_sim < 0 || lambda_hit < 0) fail("memory weights must be non-negative");
  if (!(decay > 0 && decay <= 1)) fail("decay must be in (0, 1]");
}

double buffer_score(double sim, std::uint64_t hits, std::uint64_t max_hits, double lambda_sim, double lambda_hit) {
  const double hit_term = max_hits == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(max_hits);
  return lambda_sim * sim + lambda_hit * hit_term;
}

ExperiencePool::ExperiencePool(const Embedder& embedder, MemoryConfig cfg) : embedder_(&embedder), cfg_(cfg) {
  cfg_.validate();
}

double ExperiencePool::similarity(const ExperienceRecord& r, const Vector& q, const Vector& i) const {
  return 0.5 * cosine(r.e_q, q) + 0.5 * cosine(r.e_i, i);
}

std::uint64_t ExperiencePool::max_buffer_hits() const {
  std::uint64_t m = 0;
  for (auto id : buffer_) m = std::max(m, records_.at(id).hit_count);
  return m;
}

std::vector<std::uint64_t> ExperiencePool::rank(RecordKind kind, std::string_view question,
                                                std::string_view indicator, TemporalType type) const {
  return rank(kind, embedder_->embed(question), embedder_->embed(indicator), type);
}

std::vector<std::uint64_t> ExperiencePool::rank(RecordKind kind, const Vector& q, const Vector& i,
                                                TemporalType type) const {
  std::vector<std::pair<double, std::uint64_t>> hot;
  std::vector<std::pair<double, std::uint64_t>> cold;
  const auto max_hits = max_buffer_hits();
  for (const auto& [id, r] : records_) {
    if (r.kind != kind || !r.has_type(type)) continue;
    const double sim = similarity(r, q, i);
    if (in_buffer(id)) {
      hot.emplace_back(buffer_score(sim, r.hit_count, max_hits, cfg_.lambda_sim, cfg_.lambda_hit), id);
    } else {
      cold.emplace_back(sim, id);
    }
  }
  const auto by_score = [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::sort(hot.begin(), hot.end(), by_score);
  std::sort(cold.begin(), cold.end(), by_score);
  std::vector<std::uint64_t> out;
  out.reserve(hot.size() + cold.size());
  for (const auto& [_, id] : hot) out.push_back(id);
  for (const auto& [_, id] : cold) out.push_back(id);
  return out;
}

Retrieved ExperiencePool::retrieve(RecordKind kind, std::string_view question, std::string_view indicator,
                                   TemporalType type, std::size_t w_exp) {
  Retrieved out;
  std::vector<std::uint64_t> used;
  for (auto id : rank(kind, question, indicator, type)) {
    const auto& r = records_.at(id);
    auto& bucket = r.outcome == Outcome::Verified ? out.exemplars : out.warnings;
    if (bucket.size() >= w_exp) continue;
    bucket.push_back(r);
    used.push_back(id);
    if (out.exemplars.size() >= w_exp && out.warnings.size() >= w_exp) break;
  }
  touch(used);
  for (auto* list : {&out.exemplars, &out.warnings}) {
    for (auto& r : *list) r = records_.at(r.id);
  }
  return out;
}

void ExperiencePool::touch(const std::vector<std::uint64_t>& ids) {
  ++seq_;
  for (auto id : ids) {
    auto& r = records_.at(id);
    ++r.hit_count;
    r.last_used_seq = seq_;
  }
  for (auto id : ids) admit(id);
}

void ExperiencePool::admit(std::uint64_t id) {
  buffer_.insert(id);
  while (buffer_.size() > cfg_.capacity) {
    auto victim = *std::min_element(buffer_.begin(), buffer_.end(), [&](std::uint64_t a, std::uint64_t b) {
      const auto& ra = records_.at(a);
      const auto& rb = records_.at(b);
      return std::tie(ra.hit_count, ra.last_used_seq, a) < std::tie(rb.hit_count, rb.last_used_seq, b);
    });
    buffer_.erase(victim);
  }
}

std::uint64_t ExperiencePool::write_back(ExperienceRecord record) {
  if (record.e_q.size() != embedder_->dim()) record.e_q = embedder_->embed(record.question_text);
  if (record.e_i.size() != embedder_->dim()) record.e_i = embedder_->embed(record.indicator_text);
  ++seq_;
  auto key = std::make_tuple(record.kind, record.question_text, record.indicator_text);
  if (auto it = dedup_.find(key); it != dedup_.end()) {
    auto& existing = records_.at(it->second);
    existing.hit_count += record.hit_count;
    existing.payload = std::move(record.payload);
    existing.outcome = record.outcome;
    existing.sufficient = record.sufficient;
    existing.primary_type = record.primary_type;
    existing.secondary_types.insert(record.secondary_types.begin(), record.secondary_types.end());
    existing.secondary_types.erase(existing.primary_type);
    existing.last_used_seq = seq_;
    admit(existing.id);
    return existing.id;
  }
  record.id = next_id_++;
  record.created_seq = seq_;
  record.last_used_seq = seq_;
  record.secondary_types.erase(record.primary_type);
  const auto id = record.id;
  dedup_.emplace(std::move(key), id);
  records_.emplace(id, std::move(record));
  admit(id);
  return id;
}

std::set<TemporalType> ExperiencePool::cross_type_augment(std::uint64_t id, std::optional<double> threshold) {
  const double thr = threshold.value_or(cfg_.cross_type_threshold);
  auto& rec = records_.at(id);
  std::map<TemporalType, double> best;
  for (const auto& [oid, other] : records_) {
    if (oid == id || other.outcome != Outcome::Verified || other.primary_type == rec.primary_type) continue;
    const double c = cosine(rec.e_i, other.e_i);
    auto [it, inserted] = best.emplace(other.primary_type, c);
    if (!inserted) it->second = std::max(it->second, c);
  }
  std::set<TemporalType> added;
  for (const auto& [t, c] : best) {
    if (c >= thr && rec.secondary_types.insert(t).second) added.insert(t);
  }
  return added;
}

double ExperiencePool::priority(const ExperienceRecord& r, double decay) const {
  const auto age = static_cast<double>(seq_ - std::min(seq_, r.last_used_seq));
  return (1.0 + static_cast<double>(r.hit_count)) * std::pow(decay, age);
}

std::size_t ExperiencePool::adapt(double decay, std::uint64_t min_keep) {
  std::vector<std::uint64_t> drop;
  for (auto id : buffer_) {
    const auto& r = records_.at(id);
    const auto age = seq_ - std::min(seq_, r.created_seq);
    if (age >= min_keep && priority(r, decay) < cfg_.priority_floor) drop.push_back(id);
  }
  for (auto id : drop) buffer_.erase(id);
  return drop.size();
}

LookupResult ExperiencePool::lookup_and_test(std::string_view question, const Indicator& ind,
                                             const std::function<bool(const ExperienceRecord&)>& sufficient,
                                             std::size_t w_exp) {
  const auto got = retrieve(RecordKind::TraceExp, question, verbalize(ind), ind.type, w_exp);
  for (const auto& r : got.exemplars) {
    if (sufficient(r)) return {true, r};
  }
  return {};
}

json record_to_json(const ExperienceRecord& r, bool with_embeddings) {
  json j;
  j["schema_version"] = ExperiencePool::kSchemaVersion;
  j["id"] = r.id;
  j["kind"] = kind_name(r.kind);
  j["question"] = r.question_text;
  j["indicator"] = r.indicator_text;
  j["type"] = type_name(r.primary_type);
  json sec = json::array();
  for (auto t : r.secondary_types) sec.push_back(type_name(t));
  j["secondary_types"] = sec;
  j["payload"] = r.payload;
  j["sufficient"] = r.sufficient;
  j["outcome"] = r.outcome == Outcome::Verified ? "verified" : "incorrect";
  j["hit_count"] = r.hit_count;
  j["created_seq"] = r.created_seq;
  j["last_used_seq"] = r.last_used_seq;
  if (with_embeddings) {
    j["e_q"] = std::vector<double>(r.e_q.data(), r.e_q.data() + r.e_q.size());
    j["e_I"] = std::vector<double>(r.e_i.data(), r.e_i.data() + r.e_i.size());
  }
  return j;
}

void ExperiencePool::persist(std::ostream& out) const {
  json header;
  header["schema_version"] = kSchemaVersion;
  header["record"] = "header";
  header["seq"] = seq_;
  header["next_id"] = next_id_;
  header["dim"] = embedder_->dim();
  out << header.dump() << '\n';
  for (const auto& [id, r] : records_) {
    json j = record_to_json(r);
    j["in_buffer"] = in_buffer(id);
    out << j.dump() << '\n';
  }
}

namespace {

ExperienceRecord parse_record(const json& j, std::size_t line_no, int dim) {
  const auto corrupt = [&](const std::string& why) { return Error(Errc::CorruptRecord, why, line_no); };
  if (!j.is_object()) throw corrupt("record is not an object");
  if (j.contains("schema_version") && j["schema_version"] != ExperiencePool::kSchemaVersion) {
    throw corrupt("unsupported schema_version " + j["schema_version"].dump());
  }
  ExperienceRecord r;
  try {
    auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!kind) throw corrupt("unknown kind " + j.at("kind").dump());
    r.kind = *kind;
    r.question_text = j.at("question").get<std::string>();
    r.indicator_text = j.value("indicator", std::string());
    auto type = parse_type(j.at("type").get<std::string>());
    if (!type) throw corrupt("unknown type " + j.at("type").dump());
    r.primary_type = *type;
    for (const auto& s : j.value("secondary_types", json::array())) {
      auto t = parse_type(s.get<std::string>());
      if (!t) throw corrupt("unknown secondary type " + s.dump());
      r.secondary_types.insert(*t);
    }
    r.payload = j.value("payload", json::object());
    r.sufficient = j.value("sufficient", true);
    const auto outcome = j.value("outcome", std::string("verified"));
    if (outcome == "verified") {
      r.outcome = Outcome::Verified;
    } else if (outcome == "incorrect") {
      r.outcome = Outcome::Incorrect;
    } else {
      throw corrupt("unknown outcome '" + outcome + "'");
    }
    r.id = j.value("id", std::uint64_t{0});
    r.hit_count = j.value("hit_count", std::uint64_t{0});
    r.created_seq = j.value("created_seq", std::uint64_t{0});
    r.last_used_seq = j.value("last_used_seq", std::uint64_t{0});
    const auto vec = [&](const char* key, Vector& out) {
      if (!j.contains(key)) return;
      const auto values = j.at(key).get<std::vector<double>>();
      if (static_cast<int>(values.size()) != dim) {
        throw corrupt(std::string(key) + " has " + std::to_string(values.size()) + " values, expected " + std::to_string(dim));
      }
      out = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    };
    vec("e_q", r.e_q);
    vec("e_I", r.e_i);
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  }
  return r;
}

}  // namespace

void ExperiencePool::ingest_line(const json& j, std::size_t line_no, bool keep_ids) {
  ExperienceRecord r = parse_record(j, line_no, embedder_->dim());
  if (!keep_ids) {
    r.id = 0;
    write_back(std::move(r));
    return;
  }
  if (r.id == 0 || records_.count(r.id)) throw Error(Errc::CorruptRecord, "missing or duplicate id", line_no);
  if (r.e_q.size() != embedder_->dim()) r.e_q = embedder_->embed(r.question_text);
  if (r.e_i.size() != embedder_->dim()) r.e_i = embedder_->embed(r.indicator_text);
  auto key = std::make_tuple(r.kind, r.question_text, r.indicator_text);
  if (!dedup_.emplace(key, r.id).second) throw Error(Errc::CorruptRecord, "duplicate record", line_no);
  const bool buffered = j.value("in_buffer", true);
  const auto id = r.id;
  next_id_ = std::max(next_id_, id + 1);
  seq_ = std::max({seq_, r.created_seq, r.last_used_seq});
  records_.emplace(id, std::move(r));
  if (buffered) admit(id);
}

namespace {

template <class F>
void for_each_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(Errc::CorruptRecord, e.what(), line_no);
    }
    f(j, line_no);
  }
}

}  // namespace

ExperiencePool ExperiencePool::load(std::istream& in, const Embedder& embedder, MemoryConfig cfg) {
  ExperiencePool pool(embedder, cfg);
  for_each_line(in, [&](const json& j, std::size_t line_no) {
    if (j.is_object() && j.value("record", std::string()) == "header") {
      if (j.value("schema_version", kSchemaVersion) != kSchemaVersion) {
        throw Error(Errc::CorruptRecord, "unsupported schema_version", line_no);
      }
      pool.seq_ = std::max(pool.seq_, j.value("seq", std::uint64_t{0}));
      pool.next_id_ = std::max(pool.next_id_, j.value("next_id", std::uint64_t{1}));
      return;
    }
    pool.ingest_line(j, line_no, true);
  });
  return pool;
}

std::size_t ExperiencePool::import(std::istream& in) {
  std::size_t n = 0;
  for_each_line(in, [&](const json& j, std::size_t line_no) {
    if (j.is_object() && j.value("record", std::string()) == "header") return;
    ingest_line(j, line_no, false);
    ++n;
  });
  return n;
}

void ExperiencePool::save_file(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + tmp);
    persist(out);
    if (!out) throw Error(Errc::Io, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::Io, "cannot replace " + path + ": " + ec.message());
}

ExperiencePool ExperiencePool::load_file(const std::string& path, const Embedder& embedder, MemoryConfig cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open memory file " + path);
  return load(in, embedder, cfg);
}

Retrieved SharedExperiencePool::retrieve(RecordKind kind, std::string_view question, std::string_view indicator,
                                         TemporalType type, std::size_t w_exp) {
  std::vector<std::uint64_t> ranked;
  {
    std::shared_lock lock(mutex_);
    ranked = pool_.rank(kind, question, indicator, type);
  }
  std::unique_lock lock(mutex_);
  Retrieved out;
  std::vector<std::uint64_t> used;
  for (auto id : ranked) {
    auto it = pool_.records().find(id);
    if (it == pool_.records().end()) continue;
    auto& bucket = it->second.outcome == Outcome::Verified ? out.exemplars : out.warnings;
    if (bucket.size() >= w_exp) continue;
    bucket.push_back(it->second);
    used.push_back(id);
  }
  pool_.touch(used);
  for (auto* list : {&out.exemplars, &out.warnings}) {
    for (auto& r : *list) r = pool_.record(r.id);
  }
  return out;
}

std::uint64_t SharedExperiencePool::write_back(ExperienceRecord record) {
  std::unique_lock lock(mutex_);
  return pool_.write_back(std::move(record));
}

std::set<TemporalType> SharedExperiencePool::cross_type_augment(std::uint64_t id) {
  std::unique_lock lock(mutex_);
  return pool_.cross_type_augment(id);
}

LookupResult SharedExperiencePool::lookup_and_test(std::string_view question, const Indicator& ind,
                                                   const std::function<bool(const ExperienceRecord&)>& sufficient,
                                                   std::size_t w_exp) {
  const auto got = retrieve(RecordKind::TraceExp, question, verbalize(ind), ind.type, w_exp);
  for (const auto& r : got.exemplars) {
    if (sufficient(r)) return {true, r};
  }
  return {};
}

}  // namespace chronoqa
