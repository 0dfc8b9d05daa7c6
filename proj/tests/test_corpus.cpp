#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "mathcur/common.hpp"
#include "mathcur/corpus.hpp"
#include "mathcur/text.hpp"
#include "test_util.hpp"

using namespace mathcur;
using testutil::TempDir;

TEST_SUITE("corpus") {
  TEST_CASE("count_tokens on the reference strings") {
    CHECK(count_tokens("") == 0);
    CHECK(count_tokens("the answer is 42") == 4);
    // \frac | 1 | 2 | leftover braces | + | x
    CHECK(count_tokens("\\frac{1}{2} + x") == 6);
    CHECK(count_tokens("x^{10}") == 2);  // 10, then "x^{}"
    CHECK(count_tokens("   \t\n ") == 0);
  }

  TEST_CASE("count_tokens is additive across a space") {
    const std::vector<std::string> pieces = {"", "a", "\\sqrt{2}", "12,345", "答案 是", "x^2+2x+1", "(1, 2]", "ﬁne"};
    for (const auto& a : pieces)
      for (const auto& b : pieces) {
        CAPTURE(a);
        CAPTURE(b);
        CHECK(count_tokens(a + " " + b) == count_tokens(a) + count_tokens(b));
      }
  }

  TEST_CASE("normalization folds case, width and whitespace") {
    CHECK(normalize_text("ABC  ") == "abc");
    CHECK(normalize_text("Ｈｅｌｌｏ\t  World") == "hello world");
    CHECK(tokenize_for_matching("x+1=数学") == std::vector<std::string>{"x", "+", "1", "=", "数", "学"});
  }

  TEST_CASE("ingest: three valid lines") {
    TempDir dir;
    testutil::write_file(dir / "a.jsonl",
                         "{\"id\":\"a\",\"text\":\"one\"}\n{\"id\":\"b\",\"text\":\"two\"}\n{\"id\":\"c\",\"text\":\"three\"}\n");
    const std::vector<std::filesystem::path> shards = {dir / "a.jsonl"};
    auto r = ingest_documents(shards);
    CHECK(r.records.size() == 3);
    CHECK(r.report.empty());
    CHECK(r.report.lines_read == 3);
  }

  TEST_CASE("ingest: bad JSON on line 2 is reported and skipped") {
    TempDir dir;
    testutil::write_file(dir / "a.jsonl",
                         "{\"id\":\"a\",\"text\":\"one\"}\n{\"id\":\"b\",\"text\":\n{\"id\":\"c\",\"text\":\"three\"}\n");
    const std::vector<std::filesystem::path> shards = {dir / "a.jsonl"};
    auto r = ingest_documents(shards);
    REQUIRE(r.records.size() == 2);
    REQUIRE(r.report.malformed.size() == 1);
    CHECK(r.report.malformed[0].line == 2);
    CHECK(r.records[1].id == "c");
  }

  TEST_CASE("ingest: the first record of a duplicated id wins") {
    TempDir dir;
    testutil::write_file(dir / "a.jsonl", "{\"id\":\"a\",\"text\":\"first\"}\n");
    testutil::write_file(dir / "b.jsonl", "{\"id\":\"a\",\"text\":\"second\"}\n");
    const std::vector<std::filesystem::path> shards = {dir / "a.jsonl", dir / "b.jsonl"};
    auto r = ingest_documents(shards);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].text == "first");
    REQUIRE(r.report.duplicates.size() == 1);
    CHECK(r.report.duplicates[0].shard == 1);
    CHECK(r.report.duplicates[0].id == "a");
  }

  TEST_CASE("ingest: an unreadable shard is an input error") {
    const std::vector<std::filesystem::path> shards = {"/nonexistent/shard.jsonl"};
    CHECK_THROWS_AS(ingest_samples(shards), InputError);
  }

  TEST_CASE("ingest: token-count mismatch is malformed unless trusted") {
    TempDir dir;
    testutil::write_file(dir / "a.jsonl", "{\"id\":\"a\",\"text\":\"one two\",\"token_count\":5}\n");
    const std::vector<std::filesystem::path> shards = {dir / "a.jsonl"};
    CHECK(ingest_documents(shards).records.empty());
    ParseOptions trust;
    trust.trust_token_counts = true;
    auto r = ingest_documents(shards, trust);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].token_count == 5);
  }

  TEST_CASE("record validation") {
    CHECK_THROWS_AS(sample_from_json(Json::parse(R"({"id":"x","prompt":"p"})")), InputError);
    CHECK_THROWS_AS(document_from_json(Json::parse(R"({"id":"x","text":"t","lang":"fr"})")), InputError);
    CHECK_THROWS_AS(document_from_json(Json::parse(R"({"id":"x","text":"t","quality_score":1.5})")), InputError);
    CHECK_THROWS_AS(document_from_json(Json::parse(R"({"id":"","text":"t"})")), InputError);
    CHECK_NOTHROW(benchmark_from_json(Json::parse(R"({"id":"b","question":"q"})")));
  }

  TEST_CASE("unknown fields survive a round trip in order") {
    const auto j = Json::parse(R"({"id":"s1","prompt":"p","response":"r 1","zeta":1,"alpha":{"k":[1,2]}})");
    const Sample s = sample_from_json(j);
    const Json back = to_json(s);
    std::vector<std::string> keys;
    for (auto it = back.begin(); it != back.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"id", "prompt", "response", "response_token_count", "zeta", "alpha"});
    CHECK(back["alpha"]["k"][1] == 2);
  }

  TEST_CASE("ingest then write is byte-stable") {
    TempDir dir;
    testutil::write_file(dir / "in.jsonl",
                         "{\"id\":\"a\",\"text\":\"数学 corpus ﬁle\",\"lang\":\"zh\",\"quality_score\":0.25,\"x\":null}\n"
                         "{\"id\":\"b\",\"text\":\"plain\",\"source\":\"web\"}\n");
    std::vector<std::filesystem::path> shards = {dir / "in.jsonl"};
    auto first = ingest_documents(shards);
    write_records(dir / "one.jsonl", first.records);
    shards = {dir / "one.jsonl"};
    auto second = ingest_documents(shards);
    CHECK(second.report.empty());
    write_records(dir / "two.jsonl", second.records);
    CHECK(testutil::read_file(dir / "one.jsonl") == testutil::read_file(dir / "two.jsonl"));
  }

  TEST_CASE("shard partitioning does not change the merged records") {
    TempDir dir;
    std::string all;
    for (int i = 0; i < 40; ++i) all += "{\"id\":\"r" + std::to_string(i) + "\",\"text\":\"t " + std::to_string(i % 7) + "\"}\n";
    testutil::write_file(dir / "all.jsonl", all);
    const auto mid = all.rfind('\n', all.find("\"r23\"")) + 1;
    testutil::write_file(dir / "p0.jsonl", all.substr(0, mid));
    testutil::write_file(dir / "p1.jsonl", all.substr(mid));
    const std::vector<std::filesystem::path> one = {dir / "all.jsonl"};
    const std::vector<std::filesystem::path> two = {dir / "p0.jsonl", dir / "p1.jsonl"};
    set_worker_count(3);
    auto a = ingest_documents(one);
    auto b = ingest_documents(two);
    set_worker_count(0);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].id == b.records[i].id);
  }

  TEST_CASE("uncommitted atomic writes leave nothing behind") {
    TempDir dir;
    {
      AtomicFileWriter w(dir / "out.jsonl");
      w.write_line("partial");
    }
    CHECK(std::filesystem::is_empty(dir.path()));
  }

  TEST_CASE("hash128 matches published MurmurHash3 x64/128 vectors") {
    CHECK(hash128("", 0) == Hash128{});
    // Reference value from the canonical smhasher implementation.
    CHECK(hash128("hello", 0).lo == 0xcbd8a7b341bd9b02ULL);
    CHECK(hash128("hello", 0).hi == 0x5b1e906a48ae1d19ULL);
  }

  TEST_CASE("Rng draws are reproducible and bounded") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
      const auto x = a.below(7);
      CHECK(x == b.below(7));
      CHECK(x < 7);
      const double u = a.uniform01();
      CHECK(u == b.uniform01());
      CHECK((u >= 0.0 && u < 1.0));
    }
  }

  TEST_CASE("parallel_for rethrows worker exceptions") {
    set_worker_count(4);
    CHECK_THROWS_AS(parallel_for(100, [](std::size_t i) {
                      if (i == 57) throw InputError("boom");
                    }),
                    InputError);
    set_worker_count(0);
  }
}
