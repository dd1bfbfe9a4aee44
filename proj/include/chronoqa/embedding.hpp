#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "chronoqa/indicator.hpp"
#include "chronoqa/store.hpp"

namespace chronoqa {

using Vector = Eigen::VectorXd;

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int dim() const = 0;
  // Unit-norm vector, or the zero vector for text with no tokens.
  virtual Vector embed(std::string_view text) const = 0;
  virtual std::vector<Vector> embed_batch(std::span<const std::string> texts) const;
};

// Bag of lowercased alphanumeric tokens, each hashed (FNV-1a 64) into one of
// `dim` buckets, then L2-normalized.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(int dim = 256);
  int dim() const override { return dim_; }
  Vector embed(std::string_view text) const override;

 private:
  int dim_;
};

std::uint64_t fnv1a64(std::string_view bytes);

// Cosine similarity; 0 when either side is the zero vector.
// Throws Error{DimensionMismatch}.
double cosine(const Vector& a, const Vector& b);

struct SearchHit {
  std::uint64_t id;
  double similarity;
};

// Exact cosine index. Vectors are stored as rows of one matrix and scored
// with a single matrix-vector product.
class EmbeddingIndex {
 public:
  using Filter = std::function<bool(std::uint64_t id, std::span<const std::string> tags)>;

  explicit EmbeddingIndex(int dim);

  // Duplicate ids replace the earlier entry.
  void add(std::uint64_t id, const Vector& v, std::vector<std::string> tags = {});
  std::size_t size() const { return ids_.size(); }
  int dim() const { return dim_; }

  // Top-k by cosine among entries passing `filter`; ties by id ascending.
  // Throws Error{DimensionMismatch}.
  std::vector<SearchHit> search(const Vector& query, std::size_t k, const Filter& filter = {}) const;

 private:
  int dim_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows_;
  Eigen::VectorXd norms_;
  std::vector<std::uint64_t> ids_;
  std::unordered_map<std::uint64_t, Eigen::Index> row_of_;
  std::vector<std::vector<std::string>> tags_;
};

struct EntityLink {
  std::string mention;
  std::optional<EntityId> entity;  // empty when below the threshold
  double similarity = 0.0;
};

class EntityLinker {
 public:
  EntityLinker(const Tkg& tkg, const Embedder& embedder);

  // Best entity per mention; an exact interned name always links with 1.0.
  std::vector<EntityLink> link(std::span<const std::string> mentions, double threshold = 0.35) const;
  std::vector<SearchHit> candidates(std::string_view mention, std::size_t k) const;

 private:
  const Tkg* tkg_;
  const Embedder* embedder_;
  EmbeddingIndex index_;
};

// `head relation tail at <ts>`.
std::string verbalize(const Tkg& tkg, const Fact& fact);
// Facts joined by " ; ".
std::string verbalize(const Tkg& tkg, const TemporalPath& path);
// `subject relation object` followed by ` <op> <anchor>` per constraint.
std::string verbalize(const Indicator& ind);

// Index over verbalized subgraph facts keyed by FactId.
EmbeddingIndex build_fact_index(const Subgraph& g, const Embedder& embedder);

}  // namespace chronoqa
