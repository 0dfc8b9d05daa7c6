#ifndef MATHCUR_CORPUS_HPP_
#define MATHCUR_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mathcur/io.hpp"
#include "mathcur/text.hpp"

namespace mathcur {

enum class Lang { en, zh, other };

std::string_view to_string(Lang lang);
std::optional<Lang> parse_lang(std::string_view s);

/// One pre-training corpus record.
struct Document {
  std::string id;
  std::string text;
  Lang lang = Lang::other;
  std::string source;
  std::optional<double> quality_score;
  std::size_t token_count = 0;
  Json extra = Json::object();  // unknown fields, original order
};

/// One prompt/response pair.
struct Sample {
  std::string id;
  std::string prompt;
  std::string response;
  std::optional<std::string> gold_answer;
  std::optional<double> reward_score;
  std::size_t response_token_count = 0;
  std::optional<double> pass_rate;
  Json extra = Json::object();
};

struct BenchmarkItem {
  std::string id;
  std::string question;
  std::string answer;
  std::string suite;
  Json extra = Json::object();
};

enum class RecordKind { document, sample, benchmark };

std::optional<RecordKind> parse_record_kind(std::string_view s);

/// Text that hygiene stages (dedup, decontamination) look at.
/// Dedup keys on the whole record; decontamination scans each field on its
/// own so that n-grams never straddle a field boundary.
inline const std::string& record_text(const Document& d) { return d.text; }
std::string record_text(const Sample& s);
inline std::vector<std::string_view> record_fields(const Document& d) { return {d.text}; }
inline std::vector<std::string_view> record_fields(const Sample& s) { return {s.prompt, s.response}; }

struct ParseOptions {
  /// Keep token counts found in the file even if they disagree with the
  /// active counter. Off by default: a mismatch makes the line malformed.
  bool trust_token_counts = false;
  const TokenCounter* counter = &default_token_counter();
};

// Each throws InputError with a human-readable reason on a bad record.
Document document_from_json(const Json& j, const ParseOptions& opts = {});
Sample sample_from_json(const Json& j, const ParseOptions& opts = {});
BenchmarkItem benchmark_from_json(const Json& j, const ParseOptions& opts = {});

Json to_json(const Document& d);
Json to_json(const Sample& s);
Json to_json(const BenchmarkItem& b);

struct IngestIssue {
  std::size_t shard = 0;
  std::size_t line = 0;  // 1-based
  std::string id;
  std::string message;
};

struct IngestReport {
  std::size_t lines_read = 0;
  std::vector<IngestIssue> malformed;
  std::vector<IngestIssue> duplicates;

  bool empty() const { return malformed.empty() && duplicates.empty(); }
  Json to_json() const;
};

template <typename Record>
struct IngestResult {
  std::vector<Record> records;
  IngestReport report;
};

/// Reads JSON Lines shards (parsed in parallel), merges them in
/// (shard index, line number) order and keeps the first record for each id.
/// An unreadable shard throws InputError.
IngestResult<Document> ingest_documents(std::span<const std::filesystem::path> shards,
                                        const ParseOptions& opts = {});
IngestResult<Sample> ingest_samples(std::span<const std::filesystem::path> shards,
                                    const ParseOptions& opts = {});
IngestResult<BenchmarkItem> ingest_benchmarks(std::span<const std::filesystem::path> shards,
                                              const ParseOptions& opts = {});

template <typename Record>
void write_records(const std::filesystem::path& path, std::span<const Record> records) {
  AtomicFileWriter writer(path);
  for (const auto& r : records) writer.write_line(dump_line(to_json(r)));
  writer.commit();
}

template <typename Record>
void write_records(const std::filesystem::path& path, const std::vector<Record>& records) {
  write_records(path, std::span<const Record>(records));
}

}  // namespace mathcur

#endif  // MATHCUR_CORPUS_HPP_
