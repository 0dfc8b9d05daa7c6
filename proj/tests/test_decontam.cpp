#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "mathcur/common.hpp"
#include "mathcur/decontam.hpp"
#include "oracles.hpp"

using namespace mathcur;

namespace {

std::string words(std::size_t n, const std::string& prefix, std::size_t start = 0) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + prefix + std::to_string(start + i);
  return s;
}

Document doc(std::string id, std::string text) {
  Document d;
  d.id = std::move(id);
  d.text = std::move(text);
  return d;
}

BenchmarkItem bench(std::string id, std::string q, std::string a = "", std::string suite = "s") {
  return {std::move(id), std::move(q), std::move(a), std::move(suite), Json::object()};
}

}  // namespace

TEST_SUITE("decontam") {
  TEST_CASE("a 12-token question yields 3 grams at n=10") {
    const std::vector<BenchmarkItem> items = {bench("b", words(12, "q"))};
    auto idx = build_ngram_index(items, {10, false});
    CHECK(idx.size() == 3);
    CHECK(idx.skipped_items().empty());
  }

  TEST_CASE("a 9-token question is skipped") {
    const std::vector<BenchmarkItem> items = {bench("short", words(9, "q"))};
    auto idx = build_ngram_index(items, {10, false});
    CHECK(idx.empty());
    CHECK(idx.skipped_items() == std::vector<std::string>{"short"});
  }

  TEST_CASE("a shared span is stored once with both sources") {
    const std::string shared = words(10, "s");
    const std::vector<BenchmarkItem> items = {bench("b1", "alpha " + shared), bench("b2", shared + " omega")};
    auto idx = build_ngram_index(items, {10, false});
    CHECK(idx.size() == 3);
    std::string joined;
    for (const auto& t : tokenize_for_matching(shared)) joined += (joined.empty() ? "" : "\x1f") + t;
    const auto* e = idx.find(joined);
    REQUIRE(e != nullptr);
    REQUIRE(e->sources.size() == 2);
    CHECK(e->sources[0].benchmark_id == "b1");
    CHECK(e->sources[1].benchmark_id == "b2");
  }

  TEST_CASE("answers are indexed unless disabled") {
    const std::vector<BenchmarkItem> items = {bench("b", words(3, "q"), words(10, "ans"))};
    CHECK(build_ngram_index(items, {10, true}).size() == 1);
    CHECK(build_ngram_index(items, {10, false}).empty());
  }

  TEST_CASE("an empty benchmark list warns") {
    auto idx = build_ngram_index(std::vector<BenchmarkItem>{}, {});
    CHECK(idx.empty());
    CHECK_FALSE(idx.warnings().empty());
  }

  TEST_CASE("verbatim containment is removed, 9-token overlap and short records kept") {
    const std::string q = words(14, "q");
    const std::vector<BenchmarkItem> items = {bench("b", q)};
    auto idx = build_ngram_index(items, {10, false});
    const std::string nine = words(9, "q", 2);
    const std::vector<Document> records = {doc("verbatim", "Problem: " + q + " Solve it."),
                                           doc("nine", "x " + nine + " y"), doc("five", words(5, "q"))};
    CHECK(oracle::longest_common_run(records[1].text, q) == 9);
    auto r = contamination_scan(records, idx);
    REQUIRE(r.clean.size() == 2);
    CHECK(r.clean[0].id == "nine");
    CHECK(r.clean[1].id == "five");
    REQUIRE(r.matches.size() == 1);
    CHECK(r.matches[0].record_id == "verbatim");
    CHECK(r.matches[0].benchmark_id == "b");
    CHECK(r.removed == 1);
  }

  TEST_CASE("normalization applies before matching; digits are verbatim") {
    const std::vector<BenchmarkItem> items = {bench("b", "What is 12 plus 30 when you add them and then double it")};
    auto idx = build_ngram_index(items, {10, false});
    const std::vector<Document> records = {doc("upper", "WHAT   IS 12 PLUS 30 WHEN YOU ADD THEM AND THEN"),
                                           doc("digits", "What is 13 plus 30 when you add them and then double")};
    auto r = contamination_scan(records, idx);
    REQUIRE(r.clean.size() == 1);
    CHECK(r.clean[0].id == "digits");
  }

  TEST_CASE("sample fields are scanned separately") {
    const std::string q = words(10, "q");
    const std::vector<BenchmarkItem> items = {bench("b", q)};
    auto idx = build_ngram_index(items, {10, false});
    Sample straddle;
    straddle.id = "s";
    straddle.prompt = words(5, "q");
    straddle.response = words(5, "q", 5);
    Sample inside = straddle;
    inside.id = "t";
    inside.response = q;
    auto r = contamination_scan(std::vector<Sample>{straddle, inside}, idx);
    REQUIRE(r.clean.size() == 1);
    CHECK(r.clean[0].id == "s");
  }

  TEST_CASE("zero false negatives against the brute-force oracle") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
      // Small vocabulary so that long accidental overlaps actually occur.
      std::string b, r;
      for (int i = 0; i < 30; ++i) b += (i ? " " : "") + std::string("v") + std::to_string(rng.below(4));
      for (int i = 0; i < 40; ++i) r += (i ? " " : "") + std::string("v") + std::to_string(rng.below(4));
      if (trial % 3 == 0) {
        auto bt = tokenize_for_matching(b);
        const auto start = rng.below(bt.size() - 10);
        std::string planted;
        for (std::size_t k = 0; k < 10; ++k) planted += " " + bt[start + k];
        r += planted;
      }
      const std::vector<BenchmarkItem> items = {bench("b", b)};
      auto idx = build_ngram_index(items, {10, false});
      const bool expected = oracle::longest_common_run(r, b) >= 10;
      auto res = contamination_scan(std::vector<Document>{doc("r", r)}, idx);
      CAPTURE(trial);
      CHECK((res.removed == 1) == expected);
    }
  }

  TEST_CASE("disjoint vocabularies remove nothing") {
    Rng rng(5);
    std::vector<BenchmarkItem> items;
    for (int i = 0; i < 20; ++i) {
      std::string q;
      for (int k = 0; k < 20; ++k) q += (k ? " " : "") + std::string("bench") + std::to_string(rng.below(40));
      items.push_back(bench("b" + std::to_string(i), q));
    }
    auto idx = build_ngram_index(items, {10, false});
    std::vector<Document> records;
    for (int i = 0; i < 500; ++i) {
      std::string t;
      for (int k = 0; k < 30; ++k) t += (k ? " " : "") + std::string("corp") + std::to_string(rng.below(40));
      records.push_back(doc("d" + std::to_string(i), t));
    }
    CHECK(contamination_scan(records, idx).removed == 0);
  }

  TEST_CASE("result is independent of record order and worker count") {
    Rng rng(6);
    const std::string q = words(15, "q");
    const std::vector<BenchmarkItem> items = {bench("b", q)};
    auto idx = build_ngram_index(items, {10, false});
    std::vector<Document> records;
    for (int i = 0; i < 200; ++i)
      records.push_back(doc("d" + std::to_string(i), i % 9 == 0 ? "pre " + q : words(20, "z", i)));
    auto ids = [](const std::vector<Document>& v) {
      std::vector<std::string> out;
      for (const auto& d : v) out.push_back(d.id);
      std::sort(out.begin(), out.end());
      return out;
    };
    set_worker_count(1);
    auto a = contamination_scan(records, idx);
    auto shuffled = records;
    rng.shuffle(shuffled);
    set_worker_count(4);
    auto b = contamination_scan(shuffled, idx);
    set_worker_count(0);
    CHECK(ids(a.clean) == ids(b.clean));
    CHECK(a.removed == 23);
  }
}
