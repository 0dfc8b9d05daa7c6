#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "mathcur/common.hpp"
#include "mathcur/difficulty.hpp"
#include "test_util.hpp"

using namespace mathcur;

namespace {

std::vector<RolloutVerdict> verdicts_for(const std::string& id, std::size_t n, std::size_t correct) {
  std::vector<RolloutVerdict> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({id, i < correct ? 1 : -1});
  return out;
}

RolloutStats stats(const std::string& id, std::size_t n, std::size_t k) { return {id, n, k}; }

bool kept(Gate g, std::size_t n, std::size_t k) {
  return apply_gate(g, {stats("q", n, k)}).size() == 1;
}

}  // namespace

TEST_SUITE("difficulty") {
  TEST_CASE("pass rate examples") {
    CHECK(estimate_pass_rates(verdicts_for("a", 16, 8))[0].pass_rate() == 0.5);
    CHECK(estimate_pass_rates(verdicts_for("a", 16, 0))[0].pass_rate() == 0.0);
    CHECK(estimate_pass_rates(verdicts_for("a", 4, 3))[0].pass_rate() == 0.75);
  }

  TEST_CASE("grouping keeps first-appearance order") {
    std::vector<RolloutVerdict> v = {{"b", 1}, {"a", -1}, {"b", -1}, {"a", 1}, {"c", 1}};
    auto s = estimate_pass_rates(v);
    REQUIRE(s.size() == 3);
    CHECK(s[0].sample_id == "b");
    CHECK(s[1].sample_id == "a");
    CHECK(s[1].n_rollouts == 2);
    CHECK(s[2].n_correct == 1);
  }

  TEST_CASE("a reward other than +1/-1 is rejected") {
    CHECK_THROWS_AS(estimate_pass_rates({{"a", 0}}), InputError);
  }

  TEST_CASE("gate examples") {
    CHECK_FALSE(kept(Gate::instruct_rl, 16, 0));
    CHECK_FALSE(kept(Gate::instruct_rl, 16, 16));
    CHECK(kept(Gate::instruct_rl, 16, 8));
    CHECK_FALSE(kept(Gate::thinking_rl, 16, 16));
    CHECK(kept(Gate::thinking_rl, 16, 0));
    CHECK(kept(Gate::thinking_rl, 16, 15));
    CHECK(kept(Gate::long_context, 10, 1));  // exactly 0.1
    CHECK_FALSE(kept(Gate::long_context, 16, 1));
    CHECK(kept(Gate::long_context, 10, 9));  // exactly 0.9
  }

  TEST_CASE("exhaustive table for N = 16") {
    for (std::size_t k = 0; k <= 16; ++k) {
      CAPTURE(k);
      CHECK(kept(Gate::instruct_rl, 16, k) == (k >= 1 && k <= 15));
      CHECK(kept(Gate::thinking_rl, 16, k) == (k <= 15));
      CHECK(kept(Gate::long_context, 16, k) == (k >= 2 && k <= 14));
    }
  }

  TEST_CASE("instruct keeps a subset of thinking; gates idempotent and order-independent") {
    Rng rng(2);
    std::vector<RolloutStats> all;
    for (int i = 0; i < 300; ++i) {
      const std::size_t n = 1 + rng.below(20);
      all.push_back(stats("q" + std::to_string(i), n, rng.below(n + 1)));
    }
    auto ins = gate_instruct_rl(all);
    auto thk = gate_thinking_rl(all);
    std::set<std::string> thk_set(thk.begin(), thk.end());
    for (const auto& id : ins) CHECK(thk_set.count(id) == 1);

    for (Gate g : {Gate::instruct_rl, Gate::thinking_rl, Gate::long_context}) {
      const auto once = apply_gate(g, all);
      std::vector<RolloutStats> survivors;
      for (const auto& s : all)
        if (std::find(once.begin(), once.end(), s.sample_id) != once.end()) survivors.push_back(s);
      CHECK(apply_gate(g, survivors) == once);
      auto shuffled = all;
      rng.shuffle(shuffled);
      auto again = apply_gate(g, shuffled);
      std::sort(again.begin(), again.end());
      auto sorted = once;
      std::sort(sorted.begin(), sorted.end());
      CHECK(again == sorted);
    }
  }

  TEST_CASE("read_verdicts reports the bad line") {
    testutil::TempDir dir;
    testutil::write_file(dir / "v.jsonl", "{\"sample_id\":\"a\",\"reward\":1}\n{\"sample_id\":\"a\"}\n");
    try {
      read_verdicts(dir / "v.jsonl");
      FAIL("expected InputError");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
  }
}
