#ifndef MATHCUR_DEDUP_HPP_
#define MATHCUR_DEDUP_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mathcur/common.hpp"
#include "mathcur/corpus.hpp"
#include "mathcur/io.hpp"

namespace mathcur {

struct DedupItem {
  std::string_view id;
  std::string_view text;
};

struct DedupCluster {
  std::string representative;
  std::vector<std::string> duplicates;
};

struct DedupReport {
  std::size_t kept = 0;
  std::size_t removed = 0;
  std::vector<DedupCluster> clusters;  // ordered by representative position

  Json to_json() const;
};

struct DedupResult {
  std::vector<std::size_t> survivors;  // input indices, ascending
  DedupReport report;
};

/// Duplicates are records whose normalized text (NFKC, casefold, collapsed
/// whitespace) is identical; the first in input order survives.
DedupResult exact_dedup(std::span<const DedupItem> items);

struct NearDedupConfig {
  double jaccard_threshold = 0.9;
  std::size_t shingle_n = 3;
  std::size_t num_permutations = 128;
  std::uint64_t seed = 0x5eed;
};

/// LSH banding chosen for a threshold: the largest row count whose miss
/// probability (1 - t^rows)^bands at the threshold stays below 1e-6.
struct Banding {
  std::size_t bands = 0;
  std::size_t rows = 0;
};
Banding banding_for(double threshold, std::size_t num_permutations);

/// Sorted, deduplicated 128-bit hashes of the token n-grams of the
/// normalized text. Texts shorter than n yield one shingle (the whole text).
std::vector<Hash128> shingle_set(std::string_view text, std::size_t n);

double jaccard(std::span<const Hash128> a, std::span<const Hash128> b);

/// All (i, j), i < j, that share at least one LSH band.
std::vector<std::pair<std::size_t, std::size_t>> minhash_candidate_pairs(
    std::span<const std::vector<Hash128>> shingles, const NearDedupConfig& cfg);

/// MinHash/LSH candidates confirmed by exact Jaccard. A record is removed iff
/// an earlier surviving record reaches the threshold; it joins the earliest
/// such survivor's cluster. Survivors are therefore pairwise below the
/// threshold, which makes the pass idempotent.
DedupResult near_dedup(std::span<const DedupItem> items, const NearDedupConfig& cfg);

template <typename Record>
std::vector<DedupItem> dedup_items(const std::vector<Record>& records, std::vector<std::string>& storage) {
  storage.clear();
  storage.reserve(records.size());
  for (const auto& r : records) storage.push_back(record_text(r));
  std::vector<DedupItem> items;
  items.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) items.push_back({records[i].id, storage[i]});
  return items;
}

template <typename Record>
std::vector<Record> select_indices(const std::vector<Record>& records, std::span<const std::size_t> indices) {
  std::vector<Record> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(records[i]);
  return out;
}

}  // namespace mathcur

#endif  // MATHCUR_DEDUP_HPP_
