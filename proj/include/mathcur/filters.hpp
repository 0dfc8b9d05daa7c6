#ifndef MATHCUR_FILTERS_HPP_
#define MATHCUR_FILTERS_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "mathcur/corpus.hpp"
#include "mathcur/io.hpp"

namespace mathcur {

struct FilterConfig {
  std::size_t min_tokens = 0;
  std::size_t max_tokens = std::numeric_limits<std::size_t>::max();
  std::size_t bucket_width_tokens = 128;
  double keep_quantile = 0.9;
  double top_fraction = 0.2;

  /// Throws InputError when a field is out of range.
  void validate() const;
};

// ---- rule-based filtering -------------------------------------------------

enum class RejectReason { no_reference, too_short, too_long, unparseable, mismatch };

std::string_view to_string(RejectReason r);

struct Rejection {
  Sample sample;
  RejectReason reason;
  std::string detail;
};

struct RuleFilterResult {
  std::vector<Sample> kept;
  std::vector<Rejection> rejected;
};

/// Keeps a sample iff its response token count is within bounds, a final
/// answer can be extracted, and that answer is equivalent to the reference.
/// The reference comes from `references` by id, falling back to the sample's
/// gold_answer. Checks run in the order of RejectReason.
RuleFilterResult rule_filter(const std::vector<Sample>& samples,
                             const std::unordered_map<std::string, std::string>& references,
                             const FilterConfig& cfg);

// ---- length-bucketed reward quantile --------------------------------------

/// floor(token_count / width).
std::size_t bucket_key(std::size_t token_count, std::size_t width);

/// Nearest-rank quantile rank: the smallest k in [1, n] with k / n >= q.
std::size_t nearest_rank(double q, std::size_t n);

struct BucketReport {
  std::size_t bucket = 0;
  std::size_t lo_tokens = 0;  // inclusive
  std::size_t hi_tokens = 0;  // exclusive
  double threshold = 0.0;
  std::size_t kept = 0;
  std::size_t total = 0;
  bool singleton = false;
};

struct QuantileFilterResult {
  std::vector<Sample> kept;  // input order
  std::vector<BucketReport> buckets;  // ascending bucket key

  Json report_json() const;
};

/// Within each token-count bucket, keeps samples whose reward_score is at or
/// above the bucket's nearest-rank keep_quantile. Throws InputError if a
/// sample has no reward_score.
QuantileFilterResult reward_quantile_filter(const std::vector<Sample>& samples, const FilterConfig& cfg);

// ---- seed selection -------------------------------------------------------

/// The ceil(fraction * N) highest quality_score documents; ties at the cut go
/// to the smaller id. Output is in input order. Throws InputError on an
/// unscored document.
std::vector<Document> select_top_fraction(const std::vector<Document>& docs, double fraction);

/// Attaches scores from {id, reward_score} lines; returns ids that had none.
std::vector<std::string> attach_scores(std::vector<Sample>& samples,
                                       const std::unordered_map<std::string, double>& scores);

}  // namespace mathcur

#endif  // MATHCUR_FILTERS_HPP_
