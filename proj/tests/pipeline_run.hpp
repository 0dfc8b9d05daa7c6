#ifndef MATHCUR_TESTS_PIPELINE_RUN_HPP_
#define MATHCUR_TESTS_PIPELINE_RUN_HPP_

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "test_util.hpp"

namespace pipeline {

namespace fs = std::filesystem;

struct StepResult {
  std::string name;
  int exit_code = 0;
  std::string err;
};

/// Every pipeline invocation, with paths relative to the run directory: the
/// fixture corpus is copied to ./fixture and outputs go under ./out.
inline std::vector<std::pair<std::string, std::vector<std::string>>> steps() {
  const std::vector<std::string> cfg = {"--config", "fixture/pipeline.ini"};
  auto with_cfg = [&](std::vector<std::string> rest) {
    std::vector<std::string> v = cfg;
    v.insert(v.end(), rest.begin(), rest.end());
    return v;
  };
  return {
      {"ingest", with_cfg({"ingest", "--kind", "sample", "-o", "out/ingested.jsonl", "fixture/shard-0.jsonl",
                           "fixture/shard-1.jsonl"})},
      {"dedup", with_cfg({"dedup", "-o", "out/deduped.jsonl", "out/ingested.jsonl"})},
      {"decontam",
       with_cfg({"decontam", "--benchmarks", "fixture/benchmarks.jsonl", "-o", "out/clean.jsonl", "out/deduped.jsonl"})},
      {"verify", with_cfg({"verify", "--gold", "fixture/gold.jsonl", "-o", "out/verdicts.jsonl", "out/clean.jsonl"})},
      {"filter", with_cfg({"filter", "--gold", "fixture/gold.jsonl", "--scores", "fixture/scores.jsonl", "-o",
                           "out/filtered.jsonl", "out/clean.jsonl"})},
      {"difficulty", with_cfg({"difficulty", "--verdicts", "out/verdicts.jsonl", "--gate", "instruct_rl", "--samples",
                               "out/filtered.jsonl", "-o", "out/rl.jsonl"})},
      {"curriculum", with_cfg({"curriculum", "-o", "out/manifests", "out/rl.jsonl"})},
      {"mix", with_cfg({"curriculum", "mix", "--source", "math=fixture/docs-math.jsonl:0.7", "--source",
                        "general=fixture/docs-general.jsonl:0.3", "--total-tokens", "600", "-o", "out/mixture.jsonl"})},
      {"judge-1", with_cfg({"qualgate", "judge", "--record", "out/qual.json", "--batch-id", "batch-001", "--base",
                            "fixture/base.json", "--candidate", "fixture/candidate-round1.json"})},
      {"judge-2", with_cfg({"qualgate", "judge", "--record", "out/qual.json", "--base", "fixture/base.json",
                            "--candidate", "fixture/candidate-round2.json"})},
      {"admit", with_cfg({"qualgate", "admit", "--manifest", "out/corpus-manifest.json", "--record", "out/qual.json",
                          "--tokens", "1500000", "--shares", "fixture/shares.json", "--fixed-shares",
                          "fixture/shares.json", "--quantum", "1000000"})},
      {"grpo-sim", with_cfg({"--seed", "3", "grpo-sim", "--steps", "40", "-o", "out/grpo-log.jsonl"})},
  };
}

/// Copies the fixture into dir/fixture and runs every step with dir as the
/// working directory.
inline std::vector<StepResult> run_all(const fs::path& fixture_src, const fs::path& dir) {
  fs::create_directories(dir);
  fs::copy(fixture_src, dir / "fixture", fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  testutil::ScopedCwd cwd(dir);
  std::vector<StepResult> results;
  for (const auto& [name, args] : steps()) {
    std::ostringstream out, err;
    const int code = mathcur::cli::run(args, out, err);
    results.push_back({name, code, err.str()});
  }
  return results;
}

/// Relative path -> content for every file under root.
inline std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = testutil::read_file(e.path());
  return files;
}

}  // namespace pipeline

#endif  // MATHCUR_TESTS_PIPELINE_RUN_HPP_
