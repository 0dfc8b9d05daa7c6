#ifndef MATHCUR_CURRICULUM_HPP_
#define MATHCUR_CURRICULUM_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mathcur/corpus.hpp"
#include "mathcur/hyperparams.hpp"
#include "mathcur/io.hpp"

namespace mathcur {

struct MixtureSource {
  std::string name;
  double weight = 0.0;
  std::vector<Document> records;
};

struct SourceComposition {
  std::string name;
  double weight = 0.0;            // normalized requested weight
  double quota_tokens = 0.0;      // final quota after redistribution
  std::uint64_t realized_tokens = 0;
  std::size_t records = 0;
  double shortfall_tokens = 0.0;  // unmet quota once the source ran dry
  bool exhausted = false;
};

struct MixtureReport {
  std::uint64_t requested_tokens = 0;
  std::uint64_t realized_tokens = 0;
  std::vector<SourceComposition> sources;
  std::vector<std::string> warnings;

  double realized_share(std::size_t i) const;
  Json to_json() const;
};

struct MixtureResult {
  std::vector<Document> records;
  MixtureReport report;
};

/// Weights are normalized to sum to 1. Each source is walked in a seeded
/// order and a record is taken whenever it still fits under the source's
/// quota, so the realized tokens end within one record of the quota. An
/// exhausted source reports its shortfall and the remainder is spread over
/// the other sources in proportion to their weights. Output order is a
/// seeded shuffle of the selection.
MixtureResult compose_mixture(const std::vector<MixtureSource>& sources, std::uint64_t total_tokens,
                              std::uint64_t seed);

struct SftHyperparams {
  double learning_rate = 3e-6;
  int batch_size = 128;
  std::string scheduler = "cosine";
  std::string optimizer = "AdamW";
  int warmup_steps = 0;

  static SftHyperparams for_kind(RlKind k);
  Json to_json() const;
};

/// Pre-training schedule constants, carried as manifest metadata only.
Json pretrain_schedule_metadata();

struct DatasetEntry {
  std::string id;
  std::uint64_t prompt_tokens = 0;
};

struct StageDataset {
  std::string path;
  std::vector<DatasetEntry> entries;
};

struct DatasetRef {
  std::string path;
  std::string fingerprint;  // hash over context budget and included ids
  std::size_t included = 0;
  std::size_t excluded = 0;
  std::vector<std::string> included_ids;
};

struct StageManifest {
  std::string stage_name;
  std::uint64_t context_len_tokens = 0;
  RlKind kind = RlKind::instruct_rl;
  RlHyperparams hyper;
  std::vector<DatasetRef> dataset_refs;
  std::optional<std::string> init_from;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  Json to_json() const;
};

inline const std::vector<std::uint64_t> kDefaultStages = {8192, 16384, 32768};

/// One manifest per context length, chained through init_from. Samples whose
/// prompt exceeds the stage context are left out of that stage's refs.
std::vector<StageManifest> build_stage_chain(RlKind kind, const std::vector<StageDataset>& datasets,
                                             std::uint64_t seed,
                                             const std::vector<std::uint64_t>& stages = kDefaultStages,
                                             const std::optional<RlHyperparams>& hyper = std::nullopt);

}  // namespace mathcur

#endif  // MATHCUR_CURRICULUM_HPP_
