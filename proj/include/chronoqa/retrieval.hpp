#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "chronoqa/embedding.hpp"
#include "chronoqa/indicator.hpp"
#include "chronoqa/store.hpp"

namespace chronoqa {

struct RetrievalConfig {
  int d_max = 3;
  int w_max = 3;
  int w1 = 80;
  int beam = 64;  // <= 0 disables frontier pruning
  double lambda_sem = 0.6;
  double lambda_prox = 0.4;
  double sigma_days = 365.0;
  int w_exp = 10;
  int b_max = 4;
  std::size_t result_cap = 10000;
  bool graph_stream = true;
  bool dense_stream = true;

  // Throws Error{InvalidConfig}.
  void validate() const;
};

struct ScoredPath {
  TemporalPath path;
  double sem = 0.0;
  double prox = 1.0;
  double score = 0.0;
  bool from_graph = false;
  bool from_dense = false;
};

// Edges in the indicator template, clamped to [1, d_max].
int predicted_depth(const Indicator& ind, const RetrievalConfig& cfg);

struct ExpandOptions {
  int depth = 1;
  // Restricts the first hop to these facts (toolkit output).
  std::optional<std::vector<FactId>> first_hop;
};

// Breadth-first expansion from all seeds. Paths never reuse a fact, may walk
// facts backwards, keep interval starts non-decreasing, and are pruned early
// only when no extension could satisfy the indicator's constraints. When a
// level exceeds cfg.beam it keeps the paths most similar to the indicator.
// Throws EmptySeeds, UnknownEntity.
std::vector<TemporalPath> expand_paths(const Subgraph& g, std::span<const EntityId> seeds, const Indicator& ind,
                                       const Embedder& embedder, const RetrievalConfig& cfg,
                                       const ExpandOptions& opts);

// |S|(D-1) < length <= |S|D, with the seeds visited in order.
std::vector<TemporalPath> candidate_bound_filter(const std::vector<TemporalPath>& paths,
                                                 std::span<const EntityId> seeds, int d);

// Start of the last fact. Throws EmptyPath.
Timestamp representative_time(const TemporalPath& path);

std::vector<TemporalPath> temporal_filter(const std::vector<TemporalPath>& paths,
                                          const std::vector<Constraint>& constraints);

double proximity(const Timestamp& t, const std::optional<Timestamp>& anchor, double sigma_days);
double combine_score(double sem, double prox, const RetrievalConfig& cfg);

ScoredPath score_path(const Tkg& tkg, const Indicator& ind, const TemporalPath& path, const Embedder& embedder,
                      const RetrievalConfig& cfg);

// Score descending, ties by canonical path order, truncated to w1.
std::vector<ScoredPath> sort_and_truncate(std::vector<ScoredPath> scored, std::size_t w1);
std::vector<ScoredPath> rerank(const Tkg& tkg, const std::vector<TemporalPath>& paths, const Indicator& ind,
                               const Embedder& embedder, const RetrievalConfig& cfg);

// Top-k facts of the index as single-step paths. A fact touching a seed is
// oriented away from it.
std::vector<TemporalPath> dense_retrieve(const Subgraph& g, const Indicator& ind, const EmbeddingIndex& fact_index,
                                         const Embedder& embedder, std::size_t k,
                                         std::span<const EntityId> seeds = {},
                                         const std::optional<std::vector<FactId>>& allowed = std::nullopt);

struct HybridOptions {
  std::optional<std::vector<FactId>> first_hop;
  const EmbeddingIndex* fact_index = nullptr;  // required for the dense stream
};

// union(graph stream, dense stream) -> dedup -> temporal filter -> rerank.
std::vector<ScoredPath> hybrid_retrieve(const Subgraph& g, std::span<const EntityId> seeds, const Indicator& ind,
                                        const Embedder& embedder, const RetrievalConfig& cfg,
                                        const HybridOptions& opts);

}  // namespace chronoqa
