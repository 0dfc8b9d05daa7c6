#ifndef MATHCUR_QUALGATE_HPP_
#define MATHCUR_QUALGATE_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mathcur/io.hpp"

namespace mathcur {

// Data qualification: a candidate batch replaces same-category seed data, a
// validation model is trained on it, and its benchmark metrics are compared
// against the base model. Transition table for judge_round:
//
//   state    round  candidate >= base on all keys   next
//   Pending  1      yes                             Accepted
//   Pending  1      no                              Retry, round 2
//   Retry    2      yes / no                        Accepted / Retry, round 3
//   Retry    3      yes / no                        Accepted / Discarded
//   Accepted, Discarded: absorbing, judging them throws InvariantError.

enum class QualState { Pending, Accepted, Retry, Discarded };
enum class RoundVerdict { accept, reject };

std::string_view to_string(QualState s);
std::string_view to_string(RoundVerdict v);

inline constexpr int kMaxQualificationRounds = 3;

struct RoundEntry {
  int round = 1;
  RoundVerdict verdict = RoundVerdict::reject;
};

using MetricMap = std::map<std::string, double>;

struct QualificationRecord {
  std::string batch_id;
  int round = 1;
  MetricMap base_metrics;
  MetricMap candidate_metrics;
  QualState state = QualState::Pending;
  std::vector<RoundEntry> history;

  /// Throws InvariantError if state, round and history disagree.
  void check_consistent() const;

  Json to_json() const;
  static QualificationRecord from_json(const Json& j);
};

/// Key metrics default to every benchmark present in both maps when the list
/// is empty. A key metric missing from either map throws InputError and the
/// input record is left untouched.
QualificationRecord judge_round(const QualificationRecord& record, const std::vector<std::string>& key_metrics);

struct ManifestEntry {
  std::string batch_id;
  std::uint64_t tokens = 0;
  MetricMap category_shares;
};

struct CorpusManifest {
  MetricMap fixed_shares;  // category -> share; empty disables the check
  std::uint64_t refresh_quantum_tokens = 0;  // 0 never refreshes
  std::vector<ManifestEntry> entries;
  std::uint64_t total_tokens = 0;
  std::uint64_t seed_refreshes = 0;
  bool seed_refresh_due = false;

  bool contains(std::string_view batch_id) const;

  Json to_json() const;
  static CorpusManifest from_json(const Json& j);
};

inline constexpr double kCategoryShareTolerance = 0.01;

/// Adds an Accepted batch to the manifest. Rejected with InputError when the
/// batch is not Accepted, already admitted, or declares category shares more
/// than 1% (absolute) away from the manifest's fixed shares. Sets
/// seed_refresh_due when the cumulative token total crosses a multiple of
/// the refresh quantum.
CorpusManifest corpus_admit(const CorpusManifest& manifest, const QualificationRecord& batch, std::uint64_t tokens,
                            const MetricMap& category_shares);

}  // namespace mathcur

#endif  // MATHCUR_QUALGATE_HPP_
