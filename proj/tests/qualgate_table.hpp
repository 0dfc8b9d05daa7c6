#ifndef MATHCUR_TESTS_QUALGATE_TABLE_HPP_
#define MATHCUR_TESTS_QUALGATE_TABLE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "mathcur/qualgate.hpp"

namespace qualtable {

using mathcur::QualState;
using mathcur::RoundVerdict;

/// One row of the hand-written transition table. next == nullopt means
/// judge_round must throw InvariantError.
struct Row {
  QualState state;
  int round;
  RoundVerdict verdict;
  std::optional<QualState> next;
  int next_round;
};

inline const std::vector<Row>& table() {
  using S = QualState;
  using V = RoundVerdict;
  static const std::vector<Row> rows = {
      {S::Pending, 1, V::accept, S::Accepted, 1},   {S::Pending, 1, V::reject, S::Retry, 2},
      {S::Pending, 2, V::accept, std::nullopt, 0},  {S::Pending, 2, V::reject, std::nullopt, 0},
      {S::Pending, 3, V::accept, std::nullopt, 0},  {S::Pending, 3, V::reject, std::nullopt, 0},
      {S::Retry, 1, V::accept, std::nullopt, 0},    {S::Retry, 1, V::reject, std::nullopt, 0},
      {S::Retry, 2, V::accept, S::Accepted, 2},     {S::Retry, 2, V::reject, S::Retry, 3},
      {S::Retry, 3, V::accept, S::Accepted, 3},     {S::Retry, 3, V::reject, S::Discarded, 3},
      {S::Accepted, 1, V::accept, std::nullopt, 0}, {S::Accepted, 1, V::reject, std::nullopt, 0},
      {S::Accepted, 2, V::accept, std::nullopt, 0}, {S::Accepted, 2, V::reject, std::nullopt, 0},
      {S::Accepted, 3, V::accept, std::nullopt, 0}, {S::Accepted, 3, V::reject, std::nullopt, 0},
      {S::Discarded, 1, V::accept, std::nullopt, 0}, {S::Discarded, 1, V::reject, std::nullopt, 0},
      {S::Discarded, 2, V::accept, std::nullopt, 0}, {S::Discarded, 2, V::reject, std::nullopt, 0},
      {S::Discarded, 3, V::accept, std::nullopt, 0}, {S::Discarded, 3, V::reject, std::nullopt, 0},
  };
  return rows;
}

/// A record in the given state and round, with the most plausible history
/// for that pair (inconsistent pairs get one anyway so the guard is reached).
inline mathcur::QualificationRecord make_record(QualState state, int round, RoundVerdict verdict) {
  mathcur::QualificationRecord r;
  r.batch_id = "batch";
  r.round = round;
  r.state = state;
  r.base_metrics = {{"gsm8k", 0.6}, {"math", 0.4}};
  r.candidate_metrics = verdict == RoundVerdict::accept ? mathcur::MetricMap{{"gsm8k", 0.6}, {"math", 0.41}}
                                                        : mathcur::MetricMap{{"gsm8k", 0.59}, {"math", 0.45}};
  const int past = state == QualState::Pending ? 0 : state == QualState::Retry ? round - 1 : round;
  for (int i = 1; i <= past; ++i)
    r.history.push_back({i, state == QualState::Accepted && i == past ? RoundVerdict::accept : RoundVerdict::reject});
  return r;
}

/// Runs every row; returns a description of each mismatch.
inline std::vector<std::string> mismatches() {
  std::vector<std::string> out;
  for (const auto& row : table()) {
    const auto rec = make_record(row.state, row.round, row.verdict);
    const std::string where = std::string(mathcur::to_string(row.state)) + " round " + std::to_string(row.round) +
                              " " + std::string(mathcur::to_string(row.verdict));
    try {
      const auto next = mathcur::judge_round(rec, {});
      if (!row.next) {
        out.push_back(where + ": expected InvariantError");
        continue;
      }
      if (next.state != *row.next || next.round != row.next_round)
        out.push_back(where + ": got " + std::string(mathcur::to_string(next.state)) + " round " +
                      std::to_string(next.round));
      else if (next.history.size() != rec.history.size() + 1 || next.history.back().verdict != row.verdict ||
               next.history.back().round != row.round)
        out.push_back(where + ": history not extended by the judged round");
      else if (next.history.size() > static_cast<std::size_t>(mathcur::kMaxQualificationRounds))
        out.push_back(where + ": more than three judged rounds");
      next.check_consistent();
    } catch (const mathcur::InvariantError&) {
      if (row.next) out.push_back(where + ": unexpected InvariantError");
    }
  }
  return out;
}

}  // namespace qualtable

#endif  // MATHCUR_TESTS_QUALGATE_TABLE_HPP_
