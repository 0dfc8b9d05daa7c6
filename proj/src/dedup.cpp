#include "mathcur/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "mathcur/text.hpp"

namespace mathcur {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

DedupResult assemble(std::span<const DedupItem> items, const std::vector<std::size_t>& owner) {
  // owner[i] == i for survivors, otherwise the representative index.
  DedupResult result;
  std::map<std::size_t, std::vector<std::string>> by_representative;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (owner[i] == i) {
      result.survivors.push_back(i);
    } else {
      by_representative[owner[i]].emplace_back(items[i].id);
    }
  }
  for (auto& [rep, dups] : by_representative)
    result.report.clusters.push_back({std::string(items[rep].id), std::move(dups)});
  result.report.kept = result.survivors.size();
  result.report.removed = items.size() - result.survivors.size();
  return result;
}

}  // namespace

Json DedupReport::to_json() const {
  Json j = Json::object();
  j["kept"] = kept;
  j["removed"] = removed;
  Json arr = Json::array();
  for (const auto& c : clusters) {
    Json e = Json::object();
    e["representative"] = c.representative;
    e["duplicates"] = c.duplicates;
    arr.push_back(std::move(e));
  }
  j["clusters"] = std::move(arr);
  return j;
}

DedupResult exact_dedup(std::span<const DedupItem> items) {
  std::vector<std::string> normalized(items.size());
  std::vector<Hash128> hashes(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    normalized[i] = normalize_text(items[i].text);
    hashes[i] = hash128(normalized[i]);
  });

  std::vector<std::size_t> owner(items.size());
  std::unordered_map<Hash128, std::vector<std::size_t>, Hash128Hasher> seen;
  for (std::size_t i = 0; i < items.size(); ++i) {
    owner[i] = i;
    auto& reps = seen[hashes[i]];
    for (auto r : reps) {
      if (normalized[r] == normalized[i]) {
        owner[i] = r;
        break;
      }
    }
    if (owner[i] == i) reps.push_back(i);
  }
  return assemble(items, owner);
}

Banding banding_for(double threshold, std::size_t num_permutations) {
  if (num_permutations == 0) throw InputError("num_permutations must be >= 1");
  Banding best{num_permutations, 1};
  for (std::size_t rows = 1; rows <= num_permutations; ++rows) {
    const std::size_t bands = num_permutations / rows;
    const double miss = std::pow(1.0 - std::pow(threshold, static_cast<double>(rows)), static_cast<double>(bands));
    if (miss < 1e-6) best = {bands, rows};
  }
  return best;
}

std::vector<Hash128> shingle_set(std::string_view text, std::size_t n) {
  const auto tokens = tokenize_for_matching(text);
  std::vector<Hash128> out;
  auto join = [&](std::size_t begin, std::size_t end) {
    std::string key;
    for (std::size_t k = begin; k < end; ++k) {
      if (k > begin) key.push_back('\x1f');
      key += tokens[k];
    }
    return hash128(key);
  };
  if (tokens.empty()) return out;
  if (tokens.size() < n) {
    out.push_back(join(0, tokens.size()));
    return out;
  }
  out.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) out.push_back(join(i, i + n));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double jaccard(std::span<const Hash128> a, std::span<const Hash128> b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::pair<std::size_t, std::size_t>> minhash_candidate_pairs(
    std::span<const std::vector<Hash128>> shingles, const NearDedupConfig& cfg) {
  const std::size_t m = cfg.num_permutations;
  const Banding banding = banding_for(cfg.jaccard_threshold, m);
  std::vector<std::uint64_t> perm_seeds(m);
  for (std::size_t k = 0; k < m; ++k) perm_seeds[k] = splitmix64(cfg.seed + k);

  std::vector<std::vector<std::uint64_t>> signatures(shingles.size());
  parallel_for(shingles.size(), [&](std::size_t i) {
    auto& sig = signatures[i];
    sig.assign(m, std::numeric_limits<std::uint64_t>::max());
    for (const auto& s : shingles[i]) {
      const std::uint64_t base = s.lo ^ splitmix64(s.hi);
      for (std::size_t k = 0; k < m; ++k) sig[k] = std::min(sig[k], splitmix64(base ^ perm_seeds[k]));
    }
  });

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t b = 0; b < banding.bands; ++b) {
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < signatures.size(); ++i) {
      std::uint64_t key = splitmix64(b);
      for (std::size_t r = 0; r < banding.rows; ++r) key = splitmix64(key ^ signatures[i][b * banding.rows + r]);
      buckets[key].push_back(i);
    }
    for (const auto& [key, members] : buckets) {
      for (std::size_t x = 0; x < members.size(); ++x)
        for (std::size_t y = x + 1; y < members.size(); ++y) pairs.emplace_back(members[x], members[y]);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

DedupResult near_dedup(std::span<const DedupItem> items, const NearDedupConfig& cfg) {
  if (!(cfg.jaccard_threshold > 0.0 && cfg.jaccard_threshold <= 1.0))
    throw InputError("jaccard threshold must lie in (0, 1]");
  if (cfg.shingle_n < 1) throw InputError("shingle size must be >= 1");

  std::vector<std::vector<Hash128>> shingles(items.size());
  parallel_for(items.size(), [&](std::size_t i) { shingles[i] = shingle_set(items[i].text, cfg.shingle_n); });

  std::vector<std::vector<std::size_t>> earlier(items.size());
  for (const auto& [i, j] : minhash_candidate_pairs(shingles, cfg)) earlier[j].push_back(i);

  std::vector<std::size_t> owner(items.size());
  for (std::size_t j = 0; j < items.size(); ++j) {
    owner[j] = j;
    for (auto i : earlier[j]) {  // ascending by construction
      if (owner[i] != i) continue;
      if (jaccard(shingles[i], shingles[j]) >= cfg.jaccard_threshold) {
        owner[j] = i;
        break;
      }
    }
  }
  return assemble(items, owner);
}

}  // namespace mathcur
