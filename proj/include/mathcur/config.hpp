#ifndef MATHCUR_CONFIG_HPP_
#define MATHCUR_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mathcur/filters.hpp"
#include "mathcur/hyperparams.hpp"

namespace mathcur {

/// Settings shared by the pipeline subcommands. The file form is INI:
///
///   [paths]       inputs (comma separated), output, benchmarks, scores, verdicts
///   [filter]      min_tokens, max_tokens, bucket_width, keep_quantile, top_fraction
///   [decontam]    n, include_answers
///   [dedup]       threshold, shingle_n
///   [curriculum]  kind, seed, stages (comma separated)
///   [run]         workers
///
/// Missing keys keep their defaults; unknown sections or keys are rejected.
struct PipelineConfig {
  std::vector<std::string> inputs;
  std::string output;
  std::string benchmarks;
  std::string scores;
  std::string verdicts;

  FilterConfig filter;
  std::size_t decontam_n = 10;
  bool decontam_include_answers = true;
  double dedup_threshold = 0.9;
  std::size_t dedup_shingle_n = 3;
  RlKind curriculum_kind = RlKind::instruct_rl;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> stages = {8192, 16384, 32768};
  std::size_t workers = 0;

  static PipelineConfig load(const std::filesystem::path& path);
  static PipelineConfig parse(const std::string& ini_text);
  std::string to_ini() const;

  /// Every input-side path that is set must exist.
  void check_paths() const;

  friend bool operator==(const PipelineConfig& a, const PipelineConfig& b);
};

}  // namespace mathcur

#endif  // MATHCUR_CONFIG_HPP_
