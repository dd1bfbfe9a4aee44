#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "chronoqa/memory.hpp"
#include "chronoqa/store.hpp"

namespace chronoqa::testing {

// All monotone, fact-distinct walks of length 1..depth starting at a seed.
std::set<TemporalPath> brute_paths(const Tkg& tkg, const std::vector<EntityId>& seeds, int depth);

// Random graph over v0..v{n-1}, relations r0..r2, years 2000..2005, no self-loops.
Tkg random_tkg(std::mt19937& rng, int max_entities, int max_facts);

// Direct evaluation of the candidate bound: |S|(D-1) < len <= |S|D and the
// node sequence visits the seeds in order.
bool within_candidate_bound(const TemporalPath& p, const std::vector<EntityId>& seeds, int d);

// Reference path checker: consecutive steps share an entity and interval
// starts never decrease, computed from raw day numbers.
bool reference_valid(const TemporalPath& p);

double cos_or_zero(const Vector& a, const Vector& b);

// Buffer members by lambda_sim*sim + lambda_hit*hits/max, then archive-only
// records by sim; ties by id.
std::vector<std::uint64_t> oracle_rank(const ExperiencePool& pool, RecordKind kind, const Vector& q, const Vector& i,
                                       TemporalType type);

}  // namespace chronoqa::testing
