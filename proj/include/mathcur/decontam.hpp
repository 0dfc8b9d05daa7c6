#ifndef MATHCUR_DECONTAM_HPP_
#define MATHCUR_DECONTAM_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mathcur/common.hpp"
#include "mathcur/corpus.hpp"
#include "mathcur/io.hpp"

namespace mathcur {

struct NgramSource {
  std::string benchmark_id;
  std::string suite;
};

struct IndexOptions {
  std::size_t n = 10;
  bool include_answers = true;
};

/// Set of hashed token n-grams taken from benchmark questions (and answers).
/// Built once, then read-only; safe to share across scanner threads.
class NgramIndex {
 public:
  struct Entry {
    std::string gram;  // tokens joined by '\x1f', used to confirm hash hits
    std::vector<NgramSource> sources;
  };

  std::size_t n() const { return n_; }
  std::size_t size() const { return grams_.size(); }
  bool empty() const { return grams_.empty(); }

  /// Hash lookup confirmed by comparing the gram text.
  const Entry* find(std::string_view joined_gram) const;

  const std::vector<std::string>& skipped_items() const { return skipped_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  friend NgramIndex build_ngram_index(std::span<const BenchmarkItem>, const IndexOptions&);

  std::size_t n_ = 10;
  std::unordered_map<Hash128, Entry, Hash128Hasher> grams_;
  std::vector<std::string> skipped_;
  std::vector<std::string> warnings_;
};

/// Items contributing no n-gram (every indexed field shorter than n tokens)
/// are listed in skipped_items(). An empty item list yields an empty index
/// and a warning.
NgramIndex build_ngram_index(std::span<const BenchmarkItem> items, const IndexOptions& opts = {});

struct ContaminationMatch {
  std::string record_id;
  std::string benchmark_id;
  std::string suite;
  std::string gram;  // space separated

  Json to_json() const;
};

/// First indexed n-gram found in the text, if any.
std::optional<std::string> find_contaminating_gram(std::string_view text, const NgramIndex& index);

template <typename Record>
struct ScanResult {
  std::vector<Record> clean;
  std::vector<ContaminationMatch> matches;  // one line per (record, benchmark)
  std::size_t removed = 0;
};

ScanResult<Document> contamination_scan(const std::vector<Document>& records, const NgramIndex& index);
ScanResult<Sample> contamination_scan(const std::vector<Sample>& records, const NgramIndex& index);

}  // namespace mathcur

#endif  // MATHCUR_DECONTAM_HPP_
