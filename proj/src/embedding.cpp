#include "chronoqa/embedding.hpp"

#include <algorithm>
#include <numeric>

#include "chronoqa/error.hpp"
#include "chronoqa/text.hpp"

namespace chronoqa {

std::vector<Vector> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

HashingEmbedder::HashingEmbedder(int dim) : dim_(dim) {
  if (dim < 1) throw Error(Errc::InvalidConfig, "embedding dimension must be >= 1");
}

Vector HashingEmbedder::embed(std::string_view text) const {
  Vector v = Vector::Zero(dim_);
  for (const auto& tok : word_tokens(text)) v[static_cast<Eigen::Index>(fnv1a64(tok) % static_cast<std::uint64_t>(dim_))] += 1.0;
  const double n = v.norm();
  if (n > 0) v /= n;
  return v;
}

double cosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::DimensionMismatch,
                "vectors of size " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

EmbeddingIndex::EmbeddingIndex(int dim) : dim_(dim), rows_(0, dim) {}

void EmbeddingIndex::add(std::uint64_t id, const Vector& v, std::vector<std::string> tags) {
  if (v.size() != dim_) {
    throw Error(Errc::DimensionMismatch, "index dimension " + std::to_string(dim_) + ", vector " + std::to_string(v.size()));
  }
  Eigen::Index row;
  if (auto it = row_of_.find(id); it != row_of_.end()) {
    row = it->second;
    tags_[static_cast<std::size_t>(row)] = std::move(tags);
  } else {
    row = static_cast<Eigen::Index>(ids_.size());
    if (row >= rows_.rows()) {
      const Eigen::Index cap = std::max<Eigen::Index>(16, rows_.rows() * 2);
      rows_.conservativeResize(cap, dim_);
      norms_.conservativeResize(cap);
    }
    ids_.push_back(id);
    row_of_.emplace(id, row);
    tags_.push_back(std::move(tags));
  }
  rows_.row(row) = v.transpose();
  norms_[row] = v.norm();
}

std::vector<SearchHit> EmbeddingIndex::search(const Vector& query, std::size_t k, const Filter& filter) const {
  if (query.size() != dim_) {
    throw Error(Errc::DimensionMismatch, "index dimension " + std::to_string(dim_) + ", query " + std::to_string(query.size()));
  }
  const auto n = static_cast<Eigen::Index>(ids_.size());
  std::vector<SearchHit> hits;
  if (n == 0 || k == 0) return hits;
  const double qn = query.norm();
  const Eigen::VectorXd dots = rows_.topRows(n) * query;
  hits.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (filter && !filter(ids_[idx], tags_[idx])) continue;
    const double denom = qn * norms_[i];
    hits.push_back({ids_[idx], denom > 0 ? dots[i] / denom : 0.0});
  }
  const auto better = [](const SearchHit& a, const SearchHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  };
  if (k < hits.size()) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
    hits.resize(k);
  } else {
    std::sort(hits.begin(), hits.end(), better);
  }
  return hits;
}

EntityLinker::EntityLinker(const Tkg& tkg, const Embedder& embedder)
    : tkg_(&tkg), embedder_(&embedder), index_(embedder.dim()) {
  for (std::uint32_t e = 0; e < tkg.entity_count(); ++e) index_.add(e, embedder.embed(tkg.entity_name(EntityId{e})));
}

std::vector<SearchHit> EntityLinker::candidates(std::string_view mention, std::size_t k) const {
  return index_.search(embedder_->embed(mention), k);
}

std::vector<EntityLink> EntityLinker::link(std::span<const std::string> mentions, double threshold) const {
  std::vector<EntityLink> out;
  for (const auto& m : mentions) {
    EntityLink link{m, std::nullopt, 0.0};
    if (auto exact = tkg_->find_entity(m)) {
      link.entity = *exact;
      link.similarity = 1.0;
    } else if (auto hits = candidates(m, 1); !hits.empty()) {
      link.similarity = hits.front().similarity;
      if (link.similarity >= threshold) link.entity = EntityId{static_cast<std::uint32_t>(hits.front().id)};
    }
    out.push_back(std::move(link));
  }
  return out;
}

std::string verbalize(const Tkg& tkg, const Fact& fact) {
  return tkg.entity_name(fact.head) + " " + tkg.relation_name(fact.relation) + " " + tkg.entity_name(fact.tail) +
         " at " + to_string(fact.ts);
}

std::string verbalize(const Tkg& tkg, const TemporalPath& path) {
  std::string out;
  for (const auto& step : path.steps) {
    if (!out.empty()) out += " ; ";
    out += verbalize(tkg, step.fact);
  }
  return out;
}

std::string verbalize(const Indicator& ind) {
  std::string out = ind.subject + " " + ind.relation + " " + ind.object;
  for (const auto& c : ind.constraints) {
    out += ' ';
    if (c.op == ConstraintOp::Topic) {
      out += "topic " + c.word;
      continue;
    }
    out += op_name(c.op);
    if (c.anchor) out += " " + to_string(*c.anchor);
    if (c.bound2) out += " " + to_string(*c.bound2);
  }
  return out;
}

EmbeddingIndex build_fact_index(const Subgraph& g, const Embedder& embedder) {
  EmbeddingIndex index(embedder.dim());
  for (FactId id : g.facts()) index.add(id.value, embedder.embed(verbalize(g.tkg(), g.tkg().fact(id))));
  return index;
}

}  // namespace chronoqa
