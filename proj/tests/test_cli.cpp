#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "mathcur/io.hpp"
#include "pipeline_run.hpp"
#include "test_util.hpp"

using namespace mathcur;
using testutil::TempDir;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::filesystem::path& p) {
  std::size_t n = 0;
  for_each_line(p, [&](std::size_t, std::string_view) { ++n; });
  return n;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("version and help exit 0") {
    auto v = run({"--version"});
    CHECK(v.code == cli::kExitOk);
    CHECK(v.out.find("mathcur") != std::string::npos);
    CHECK(run({"--help"}).code == cli::kExitOk);
  }

  TEST_CASE("unknown flags and subcommands exit 1") {
    CHECK(run({"--bogus"}).code == cli::kExitInputError);
    CHECK(run({"frobnicate"}).code == cli::kExitInputError);
    CHECK(run({"dedup", "--nope", "x.jsonl"}).code == cli::kExitInputError);
  }

  TEST_CASE("missing input exits 1 and writes nothing") {
    TempDir dir;
    testutil::ScopedCwd cwd(dir.path());
    testutil::write_file("in.jsonl", "{\"id\":\"a\",\"text\":\"hello world\"}\n");
    auto r = run({"decontam", "--benchmarks", "missing.jsonl", "-o", "out.jsonl", "in.jsonl"});
    CHECK(r.code == cli::kExitInputError);
    CHECK_FALSE(std::filesystem::exists("out.jsonl"));
    CHECK_FALSE(r.err.empty());
  }

  TEST_CASE("unclean input is refused by later stages") {
    TempDir dir;
    testutil::ScopedCwd cwd(dir.path());
    testutil::write_file("in.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
    CHECK(run({"dedup", "-o", "out.jsonl", "in.jsonl"}).code == cli::kExitInputError);
    CHECK_FALSE(std::filesystem::exists("out.jsonl"));
  }

  TEST_CASE("judging an absorbing record exits 2") {
    TempDir dir;
    testutil::ScopedCwd cwd(dir.path());
    testutil::write_file("base.json", "{\"m\": 0.5}");
    REQUIRE(run({"qualgate", "judge", "--record", "r.json", "--batch-id", "b", "--base", "base.json", "--candidate",
                 "base.json"})
                .code == cli::kExitOk);
    CHECK(read_json_file("r.json")["state"] == "Accepted");
    CHECK(run({"qualgate", "judge", "--record", "r.json", "--base", "base.json", "--candidate", "base.json"}).code ==
          cli::kExitInvariant);
  }

  TEST_CASE("the fixture pipeline runs end to end") {
    TempDir dir;
    const auto results = pipeline::run_all(MATHCUR_TEST_FIXTURES "/pipeline", dir.path());
    for (const auto& r : results) {
      CAPTURE(r.name);
      CAPTURE(r.err);
      CHECK(r.exit_code == 0);
    }
    const auto out = dir / "out";
    CHECK(line_count(out / "ingested.jsonl") == 500);
    const auto ingest = read_json_file(out / "ingested.ingest-report.json");
    CHECK(ingest["malformed"].size() == 2);
    CHECK(ingest["duplicates"].size() == 1);
    CHECK(line_count(out / "deduped.jsonl") == 495);
    // Five contaminated queries with four rollouts each.
    CHECK(line_count(out / "clean.jsonl") == 475);
    CHECK(line_count(out / "verdicts.jsonl") == 475);
    CHECK(line_count(out / "filtered.jsonl") < 475);
    CHECK(line_count(out / "rl.jsonl") > 0);
    for (const char* stage : {"instruct_rl-8k", "instruct_rl-16k", "instruct_rl-32k"}) {
      CAPTURE(stage);
      CHECK(std::filesystem::exists(out / "manifests" / (std::string(stage) + ".json")));
    }
    CHECK(read_json_file(out / "qual.json")["state"] == "Accepted");
    const auto manifest = read_json_file(out / "corpus-manifest.json");
    CHECK(manifest["seed_refresh_due"] == true);
    CHECK(line_count(out / "grpo-log.jsonl") == 40);

    const auto summary = read_json_file(out / "run-summary.json");
    CHECK(summary["stages"].size() >= 7);
    auto rep = run({"report", (out / "run-summary.json").string()});
    CHECK(rep.code == 0);
    CHECK(rep.out.find("decontam") != std::string::npos);
    CHECK(rep.out.find("475") != std::string::npos);
  }
}
