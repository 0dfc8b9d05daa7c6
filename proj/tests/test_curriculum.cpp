#include <doctest.h>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "mathcur/common.hpp"
#include "mathcur/curriculum.hpp"

using namespace mathcur;

namespace {

MixtureSource source(const std::string& name, double weight, std::size_t n, std::size_t tokens_each) {
  MixtureSource s{name, weight, {}};
  for (std::size_t i = 0; i < n; ++i) {
    Document d;
    d.id = name + "-" + std::to_string(i);
    d.text = "t";
    d.token_count = tokens_each;
    s.records.push_back(d);
  }
  return s;
}

std::map<std::string, std::size_t> count_by_prefix(const std::vector<Document>& docs) {
  std::map<std::string, std::size_t> out;
  for (const auto& d : docs) ++out[d.id.substr(0, d.id.find('-'))];
  return out;
}

StageDataset dataset(const std::string& path, std::vector<std::uint64_t> prompt_tokens) {
  StageDataset ds{path, {}};
  for (std::size_t i = 0; i < prompt_tokens.size(); ++i) ds.entries.push_back({"s" + std::to_string(i), prompt_tokens[i]});
  return ds;
}

}  // namespace

TEST_SUITE("curriculum") {
  TEST_CASE("70/30 weights over uniform records") {
    auto r = compose_mixture({source("A", 0.7, 200, 10), source("B", 0.3, 200, 10)}, 1000, 1);
    CHECK(count_by_prefix(r.records) == std::map<std::string, std::size_t>{{"A", 70}, {"B", 30}});
    CHECK(r.report.realized_tokens == 1000);
    CHECK(r.report.realized_share(0) == doctest::Approx(0.7));
    CHECK(r.report.warnings.empty());
  }

  TEST_CASE("weights are normalized") {
    auto r = compose_mixture({source("A", 7, 200, 10), source("B", 3, 200, 10)}, 1000, 1);
    CHECK(count_by_prefix(r.records) == std::map<std::string, std::size_t>{{"A", 70}, {"B", 30}});
  }

  TEST_CASE("a single source supplies everything") {
    auto r = compose_mixture({source("A", 1.0, 50, 10)}, 300, 9);
    CHECK(r.records.size() == 30);
    CHECK(r.report.sources[0].realized_tokens == 300);
  }

  TEST_CASE("an exhausted source reports its shortfall") {
    auto r = compose_mixture({source("A", 0.7, 10, 10), source("B", 0.3, 200, 10)}, 1000, 3);
    const auto& a = r.report.sources[0];
    const auto& b = r.report.sources[1];
    CHECK(a.exhausted);
    CHECK(a.realized_tokens == 100);
    CHECK(a.shortfall_tokens == doctest::Approx(600));
    CHECK_FALSE(b.exhausted);
    CHECK(b.realized_tokens == 900);
    CHECK(r.report.realized_tokens == 1000);
    CHECK(r.report.warnings.size() == 1);
  }

  TEST_CASE("every source exhausted") {
    auto r = compose_mixture({source("A", 0.5, 3, 10), source("B", 0.5, 3, 10)}, 1000, 3);
    CHECK(r.records.size() == 6);
    CHECK_FALSE(r.report.warnings.empty());
  }

  TEST_CASE("realized shares are within one record of the weights") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<MixtureSource> sources;
      std::uint64_t max_record = 0;
      const int k = 2 + static_cast<int>(rng.below(3));
      double wsum = 0;
      for (int s = 0; s < k; ++s) {
        MixtureSource src{"S" + std::to_string(s), 0.1 + rng.uniform01(), {}};
        wsum += src.weight;
        for (int i = 0; i < 400; ++i) {
          Document d;
          d.id = src.name + "-" + std::to_string(i);
          d.token_count = 1 + rng.below(60);
          max_record = std::max<std::uint64_t>(max_record, d.token_count);
          src.records.push_back(d);
        }
        sources.push_back(src);
      }
      const std::uint64_t budget = 5000;
      auto r = compose_mixture(sources, budget, trial);
      for (int s = 0; s < k; ++s) {
        const double want = sources[s].weight / wsum * budget;
        CHECK(std::abs(static_cast<double>(r.report.sources[s].realized_tokens) - want) <= max_record);
      }
    }
  }

  TEST_CASE("mixtures are reproducible and seed-dependent") {
    auto a = compose_mixture({source("A", 0.6, 100, 7), source("B", 0.4, 100, 5)}, 600, 42);
    auto b = compose_mixture({source("A", 0.6, 100, 7), source("B", 0.4, 100, 5)}, 600, 42);
    auto c = compose_mixture({source("A", 0.6, 100, 7), source("B", 0.4, 100, 5)}, 600, 43);
    auto ids = [](const MixtureResult& m) {
      std::vector<std::string> out;
      for (const auto& d : m.records) out.push_back(d.id);
      return out;
    };
    CHECK(ids(a) == ids(b));
    CHECK(a.report.to_json().dump() == b.report.to_json().dump());
    CHECK(ids(a) != ids(c));
  }

  TEST_CASE("invalid mixtures") {
    CHECK_THROWS_AS(compose_mixture({}, 10, 0), InputError);
    CHECK_THROWS_AS(compose_mixture({source("A", 0.0, 1, 1)}, 10, 0), InputError);
    CHECK_THROWS_AS(compose_mixture({source("A", 1, 1, 1), source("A", 1, 1, 1)}, 10, 0), InputError);
  }

  TEST_CASE("instruct chain") {
    auto chain = build_stage_chain(RlKind::instruct_rl, {dataset("d.jsonl", {100, 200})}, 5);
    REQUIRE(chain.size() == 3);
    CHECK(chain[0].stage_name == "instruct_rl-8k");
    CHECK(chain[0].hyper.batch_size == 256);
    CHECK(chain[0].hyper.kl_coeff == 1e-3);
    CHECK(chain[0].hyper.temperature == 1.2);
    CHECK(chain[0].hyper.learning_rate == 4e-6);
    CHECK(chain[0].hyper.rollouts_per_query == 16);
    CHECK_FALSE(chain[0].init_from.has_value());
    CHECK(chain[1].init_from == chain[0].stage_name);
    CHECK(chain[2].init_from == chain[1].stage_name);
    for (std::size_t i = 1; i < chain.size(); ++i) CHECK(chain[i].context_len_tokens > chain[i - 1].context_len_tokens);
    CHECK(chain[2].context_len_tokens == 32768);
  }

  TEST_CASE("thinking chain") {
    auto chain = build_stage_chain(RlKind::thinking_rl, {dataset("d.jsonl", {100})}, 5);
    CHECK(chain[0].hyper.batch_size == 32);
    CHECK(chain[0].hyper.rollouts_per_query == 16);
    CHECK(chain[0].to_json()["metadata"]["sft"]["learning_rate"] == 8e-5);
  }

  TEST_CASE("a 20,000-token prompt only enters the 32k stage") {
    auto chain = build_stage_chain(RlKind::instruct_rl, {dataset("d.jsonl", {100, 20000})}, 5);
    auto has_long = [](const StageManifest& m) {
      const auto& ids = m.dataset_refs[0].included_ids;
      return std::find(ids.begin(), ids.end(), "s1") != ids.end();
    };
    CHECK_FALSE(has_long(chain[0]));
    CHECK_FALSE(has_long(chain[1]));
    CHECK(has_long(chain[2]));
    CHECK(chain[0].dataset_refs[0].excluded == 1);
    CHECK(chain[0].dataset_refs[0].fingerprint != chain[2].dataset_refs[0].fingerprint);
  }

  TEST_CASE("an empty stage still gets a manifest, with a warning") {
    auto chain = build_stage_chain(RlKind::thinking_rl, {dataset("d.jsonl", {10000})}, 5);
    CHECK(chain[0].dataset_refs[0].included == 0);
    CHECK(chain[0].warnings.size() == 1);
    CHECK(chain[1].warnings.empty());
  }

  TEST_CASE("stage lists") {
    auto single = build_stage_chain(RlKind::instruct_rl, {dataset("d", {1})}, 1, {8192});
    CHECK(single.size() == 1);
    CHECK_THROWS_AS(build_stage_chain(RlKind::instruct_rl, {}, 1, {16384, 8192}), InputError);
    CHECK_THROWS_AS(build_stage_chain(RlKind::instruct_rl, {}, 1, {4096}), InputError);
    CHECK_THROWS_AS(build_stage_chain(RlKind::instruct_rl, {}, 1, {}), InputError);
  }

  TEST_CASE("manifests are byte-stable") {
    auto a = build_stage_chain(RlKind::instruct_rl, {dataset("a", {5, 9000, 20000}), dataset("b", {1})}, 11);
    auto b = build_stage_chain(RlKind::instruct_rl, {dataset("a", {5, 9000, 20000}), dataset("b", {1})}, 11);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].to_json().dump(2) == b[i].to_json().dump(2));
  }

  TEST_CASE("pretraining metadata carries the schedule constants") {
    const auto m = pretrain_schedule_metadata();
    CHECK(m.dump().find("500000") != std::string::npos);
    CHECK(m.dump().find("2000") != std::string::npos);
  }

  TEST_CASE("hyperparameter validation") {
    RlHyperparams h;
    h.rollouts_per_query = 1;
    CHECK_THROWS_AS(h.validate(), InputError);
    h = {};
    h.kl_coeff = 0;
    CHECK_THROWS_AS(h.validate(), InputError);
    CHECK(parse_rl_kind("thinking") == RlKind::thinking_rl);
    CHECK_THROWS_AS(parse_rl_kind("sft"), InputError);
  }
}
