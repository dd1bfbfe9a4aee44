#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <tuple>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronoqa/embedding.hpp"
#include "chronoqa/indicator.hpp"

namespace chronoqa {

enum class RecordKind { TypeExp, DecompExp, ToolkitExp, SeedExp, TraceExp };
enum class Outcome { Verified, Incorrect };

std::string_view kind_name(RecordKind kind);
std::optional<RecordKind> parse_kind(std::string_view text);

struct ExperienceRecord {
  std::uint64_t id = 0;
  RecordKind kind = RecordKind::TraceExp;
  std::string question_text;
  std::string indicator_text;
  TemporalType primary_type = TemporalType::Equal;
  std::set<TemporalType> secondary_types;
  nlohmann::json payload = nlohmann::json::object();
  Vector e_q;
  Vector e_i;
  bool sufficient = true;
  Outcome outcome = Outcome::Verified;
  std::uint64_t hit_count = 0;
  std::uint64_t created_seq = 0;
  std::uint64_t last_used_seq = 0;

  bool has_type(TemporalType t) const { return primary_type == t || secondary_types.count(t) > 0; }
};

struct MemoryConfig {
  std::size_t capacity = 200;
  double lambda_sim = 0.6;
  double lambda_hit = 0.4;
  double cross_type_threshold = 0.8;
  double decay = 0.9;
  double priority_floor = 0.5;
  std::uint64_t min_keep = 10;

  void validate() const;
};

// lambda_sim * sim + lambda_hit * hits / max_hits (hit term 0 when max_hits is 0).
double buffer_score(double sim, std::uint64_t hits, std::uint64_t max_hits, double lambda_sim, double lambda_hit);

struct Retrieved {
  std::vector<ExperienceRecord> exemplars;  // Verified only
  std::vector<ExperienceRecord> warnings;   // Incorrect only
};

struct LookupResult {
  bool sufficient = false;
  std::optional<ExperienceRecord> record;
};

class ExperiencePool {
 public:
  static constexpr int kSchemaVersion = 1;

  explicit ExperiencePool(const Embedder& embedder, MemoryConfig cfg = {});

  const MemoryConfig& config() const { return cfg_; }
  const Embedder& embedder() const { return *embedder_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::uint64_t seq() const { return seq_; }
  const std::map<std::uint64_t, ExperienceRecord>& records() const { return records_; }
  const ExperienceRecord& record(std::uint64_t id) const { return records_.at(id); }
  const std::set<std::uint64_t>& buffer() const { return buffer_; }
  bool in_buffer(std::uint64_t id) const { return buffer_.count(id) > 0; }

  // 0.5 cos(e_q) + 0.5 cos(e_I).
  double similarity(const ExperienceRecord& r, const Vector& q, const Vector& i) const;
  std::uint64_t max_buffer_hits() const;

  // Eligible record ids in retrieval order: buffer members by buffer score,
  // then the rest by similarity; ties by id. Read-only.
  std::vector<std::uint64_t> rank(RecordKind kind, std::string_view question, std::string_view indicator,
                                  TemporalType type) const;
  std::vector<std::uint64_t> rank(RecordKind kind, const Vector& q, const Vector& i, TemporalType type) const;

  // Top-w_exp Verified exemplars plus Incorrect warnings; bumps hit counts and
  // recency of everything returned and admits it to the buffer.
  Retrieved retrieve(RecordKind kind, std::string_view question, std::string_view indicator, TemporalType type,
                     std::size_t w_exp);
  void touch(const std::vector<std::uint64_t>& ids);

  // Inserts into the archive and the buffer. A record with the same
  // (kind, question, indicator) is merged and keeps its id. Missing
  // embeddings are computed.
  std::uint64_t write_back(ExperienceRecord record);

  // Adds every other type whose Verified records come within the threshold
  // of this record's indicator embedding.
  std::set<TemporalType> cross_type_augment(std::uint64_t id, std::optional<double> threshold = std::nullopt);

  // Drops buffer members whose decayed priority fell below the floor and
  // that are at least `min_keep` steps old. Returns the number dropped.
  std::size_t adapt(double decay, std::uint64_t min_keep);
  double priority(const ExperienceRecord& r, double decay) const;

  // First TraceExp exemplar accepted by `sufficient`.
  LookupResult lookup_and_test(std::string_view question, const Indicator& ind,
                               const std::function<bool(const ExperienceRecord&)>& sufficient, std::size_t w_exp);

  void persist(std::ostream& out) const;
  // Header line optional; embeddings optional. Throws Error{CorruptRecord}.
  static ExperiencePool load(std::istream& in, const Embedder& embedder, MemoryConfig cfg = {});
  // Appends records from a JSONL file (cold-start exemplars). Returns count.
  std::size_t import(std::istream& in);

  void save_file(const std::string& path) const;
  static ExperiencePool load_file(const std::string& path, const Embedder& embedder, MemoryConfig cfg = {});

 private:
  void admit(std::uint64_t id);
  void ingest_line(const nlohmann::json& j, std::size_t line_no, bool keep_ids);

  const Embedder* embedder_;
  MemoryConfig cfg_;
  std::map<std::uint64_t, ExperienceRecord> records_;
  std::map<std::tuple<RecordKind, std::string, std::string>, std::uint64_t> dedup_;
  std::set<std::uint64_t> buffer_;
  std::uint64_t next_id_ = 1;
  std::uint64_t seq_ = 0;
};

nlohmann::json record_to_json(const ExperienceRecord& r, bool with_embeddings = true);

// Reader/writer wrapper: rankings run under a shared lock, hit bumps and
// writes under an exclusive lock.
class SharedExperiencePool {
 public:
  explicit SharedExperiencePool(ExperiencePool pool) : pool_(std::move(pool)) {}

  Retrieved retrieve(RecordKind kind, std::string_view question, std::string_view indicator, TemporalType type,
                     std::size_t w_exp);
  std::uint64_t write_back(ExperienceRecord record);
  std::set<TemporalType> cross_type_augment(std::uint64_t id);
  LookupResult lookup_and_test(std::string_view question, const Indicator& ind,
                               const std::function<bool(const ExperienceRecord&)>& sufficient, std::size_t w_exp);

  template <class F>
  auto read(F&& f) const {
    std::shared_lock lock(mutex_);
    return f(pool_);
  }
  template <class F>
  auto write(F&& f) {
    std::unique_lock lock(mutex_);
    return f(pool_);
  }

 private:
  mutable std::shared_mutex mutex_;
  ExperiencePool pool_;
};

}  // namespace chronoqa
