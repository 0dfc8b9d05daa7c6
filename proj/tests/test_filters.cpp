#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mathcur/common.hpp"
#include "mathcur/filters.hpp"
#include "mathcur/text.hpp"
#include "oracles.hpp"

using namespace mathcur;

namespace {

Sample scored(std::string id, double score, std::size_t tokens) {
  Sample s;
  s.id = std::move(id);
  s.prompt = "p";
  s.response = "r";
  s.reward_score = score;
  s.response_token_count = tokens;
  return s;
}

Sample answered(std::string id, std::string response, std::optional<std::string> gold) {
  Sample s;
  s.id = std::move(id);
  s.prompt = "p";
  s.response = std::move(response);
  s.gold_answer = std::move(gold);
  s.response_token_count = count_tokens(s.response);
  return s;
}

Document scored_doc(std::string id, double q) {
  Document d;
  d.id = std::move(id);
  d.text = "t";
  d.quality_score = q;
  return d;
}

std::set<std::string> id_set(const std::vector<Sample>& v) {
  std::set<std::string> out;
  for (const auto& s : v) out.insert(s.id);
  return out;
}

std::vector<std::string> doc_ids(const std::vector<Document>& v) {
  std::vector<std::string> out;
  for (const auto& d : v) out.push_back(d.id);
  return out;
}

}  // namespace

TEST_SUITE("filters") {
  TEST_CASE("rule filter examples") {
    FilterConfig cfg;
    cfg.min_tokens = 5;
    const std::vector<Sample> in = {answered("keep", "so we get \\boxed{12}", "12"),
                                    answered("none", "I give up on this one", "12"),
                                    answered("short", "\\boxed{12}", "12"),
                                    answered("wrong", "clearly it is \\boxed{13}", "12"),
                                    answered("nogold", "clearly it is \\boxed{13}", std::nullopt)};
    auto r = rule_filter(in, {}, cfg);
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0].id == "keep");
    std::map<std::string, RejectReason> why;
    for (const auto& rej : r.rejected) why[rej.sample.id] = rej.reason;
    CHECK(why.at("none") == RejectReason::unparseable);
    CHECK(why.at("short") == RejectReason::too_short);
    CHECK(why.at("wrong") == RejectReason::mismatch);
    CHECK(why.at("nogold") == RejectReason::no_reference);
    CHECK(to_string(RejectReason::too_short) == "too-short");
  }

  TEST_CASE("reference map overrides gold_answer") {
    const std::vector<Sample> in = {answered("q1#0", "\\boxed{5}", "4")};
    CHECK(rule_filter(in, {{"q1#0", "5"}}, FilterConfig{}).kept.size() == 1);
  }

  TEST_CASE("bucket_key") {
    CHECK(bucket_key(0, 128) == 0);
    CHECK(bucket_key(130, 128) == 1);
    CHECK(bucket_key(128, 128) == 1);
    CHECK(bucket_key(127, 128) == 0);
  }

  TEST_CASE("nearest_rank agrees with the integer oracle") {
    for (std::uint64_t q_micro : {1ULL, 100000ULL, 250000ULL, 500000ULL, 900000ULL, 333333ULL, 999999ULL, 1000000ULL})
      for (std::size_t n = 1; n <= 300; ++n) {
        CAPTURE(q_micro);
        CAPTURE(n);
        CHECK(nearest_rank(static_cast<double>(q_micro) / 1e6, n) == oracle::nearest_rank_micro(q_micro, n));
      }
  }

  TEST_CASE("quantile over scores 1..20 keeps 18, 19, 20") {
    std::vector<Sample> in;
    for (int i = 1; i <= 20; ++i) in.push_back(scored("s" + std::to_string(i), i, 50));
    FilterConfig cfg;
    cfg.keep_quantile = 0.9;
    auto r = reward_quantile_filter(in, cfg);
    REQUIRE(r.buckets.size() == 1);
    CHECK(r.buckets[0].threshold == 18.0);
    CHECK(id_set(r.kept) == std::set<std::string>{"s18", "s19", "s20"});
  }

  TEST_CASE("equal scores in a bucket are all kept") {
    std::vector<Sample> in;
    for (int i = 0; i < 7; ++i) in.push_back(scored("s" + std::to_string(i), 0.4, 10));
    auto r = reward_quantile_filter(in, FilterConfig{});
    CHECK(r.kept.size() == 7);
    CHECK(r.buckets[0].threshold == 0.4);
  }

  TEST_CASE("buckets are independent") {
    std::vector<Sample> in;
    for (int i = 0; i < 10; ++i) {
      in.push_back(scored("a" + std::to_string(i), i * 0.1, 5));
      in.push_back(scored("b" + std::to_string(i), i * 0.1, 300));
    }
    auto r = reward_quantile_filter(in, FilterConfig{});
    REQUIRE(r.buckets.size() == 2);
    CHECK(r.buckets[0].threshold == r.buckets[1].threshold);
    CHECK(r.buckets[0].lo_tokens == 0);
    CHECK(r.buckets[1].bucket == 2);
    CHECK(r.buckets[1].lo_tokens == 256);
    CHECK(r.buckets[1].hi_tokens == 384);

    // Raising every score in bucket b leaves bucket a's kept set unchanged.
    auto changed = in;
    for (auto& s : changed)
      if (s.id[0] == 'b') *s.reward_score += 5.0;
    auto r2 = reward_quantile_filter(changed, FilterConfig{});
    auto only_a = [](const std::vector<Sample>& v) {
      std::set<std::string> out;
      for (const auto& s : v)
        if (s.id[0] == 'a') out.insert(s.id);
      return out;
    };
    CHECK(only_a(r.kept) == only_a(r2.kept));
  }

  TEST_CASE("quantile filtering is order-independent and matches the oracle per bucket") {
    Rng rng(12);
    std::vector<Sample> in;
    for (int i = 0; i < 3000; ++i) in.push_back(scored("s" + std::to_string(i), rng.uniform01(), rng.below(128 * 6)));
    FilterConfig cfg;
    cfg.keep_quantile = 0.75;
    auto r = reward_quantile_filter(in, cfg);
    auto shuffled = in;
    rng.shuffle(shuffled);
    CHECK(id_set(reward_quantile_filter(shuffled, cfg).kept) == id_set(r.kept));

    std::map<std::size_t, std::vector<double>> by_bucket;
    for (const auto& s : in) by_bucket[s.response_token_count / 128].push_back(*s.reward_score);
    REQUIRE(r.buckets.size() == by_bucket.size());
    for (const auto& b : r.buckets) CHECK(b.threshold == oracle::nearest_rank_threshold(by_bucket[b.bucket], 750000));
  }

  TEST_CASE("missing reward_score is an input error") {
    std::vector<Sample> in = {scored("a", 0.1, 1)};
    in[0].reward_score.reset();
    CHECK_THROWS_AS(reward_quantile_filter(in, FilterConfig{}), InputError);
  }

  TEST_CASE("select_top_fraction") {
    std::vector<Document> ten;
    for (int i = 1; i <= 10; ++i) ten.push_back(scored_doc("d" + std::to_string(i), i / 10.0));
    CHECK(doc_ids(select_top_fraction(ten, 0.2)) == std::vector<std::string>{"d9", "d10"});

    std::vector<Document> five(ten.begin(), ten.begin() + 5);
    CHECK(select_top_fraction(five, 0.2).size() == 1);

    std::vector<Document> ties;
    for (const char* id : {"e", "b", "d", "a", "c", "j", "h", "g", "f", "i"}) ties.push_back(scored_doc(id, 0.5));
    CHECK(doc_ids(select_top_fraction(ties, 0.2)) == std::vector<std::string>{"b", "a"});
    CHECK_THROWS_AS(select_top_fraction(ten, 0.0), InputError);
  }

  TEST_CASE("config validation rejects out-of-range values") {
    FilterConfig c;
    c.keep_quantile = 1.5;
    CHECK_THROWS_AS(c.validate(), InputError);
    c = {};
    c.bucket_width_tokens = 0;
    CHECK_THROWS_AS(c.validate(), InputError);
    c = {};
    c.min_tokens = 10;
    c.max_tokens = 5;
    CHECK_THROWS_AS(c.validate(), InputError);
  }
}
