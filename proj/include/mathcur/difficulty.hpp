#ifndef MATHCUR_DIFFICULTY_HPP_
#define MATHCUR_DIFFICULTY_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mathcur/io.hpp"

namespace mathcur {

struct RolloutVerdict {
  std::string sample_id;
  int reward = -1;  // +1 or -1
};

struct RolloutStats {
  std::string sample_id;
  std::size_t n_rollouts = 0;
  std::size_t n_correct = 0;

  double pass_rate() const { return static_cast<double>(n_correct) / static_cast<double>(n_rollouts); }
  Json to_json() const;
};

/// Groups verdicts by sample id (first-appearance order) and counts +1s.
/// Throws InputError on a reward other than +1/-1.
std::vector<RolloutStats> estimate_pass_rates(const std::vector<RolloutVerdict>& verdicts);

/// Instruct RL: drop queries solved by none or all rollouts (0 < p < 1).
std::vector<std::string> gate_instruct_rl(const std::vector<RolloutStats>& stats);

/// Thinking RL: drop only saturated queries (p < 1).
std::vector<std::string> gate_thinking_rl(const std::vector<RolloutStats>& stats);

/// Long-context selection: 0.1 <= p <= 0.9, both bounds inclusive. Compared
/// exactly as 10*k >= n and 10*k <= 9*n on the integer counts.
std::vector<std::string> gate_long_context(const std::vector<RolloutStats>& stats);

enum class Gate { instruct_rl, thinking_rl, long_context };

std::vector<std::string> apply_gate(Gate gate, const std::vector<RolloutStats>& stats);

/// Reads {sample_id, reward} lines. Malformed lines throw InputError with the
/// line number.
std::vector<RolloutVerdict> read_verdicts(const std::filesystem::path& path);

}  // namespace mathcur

#endif  // MATHCUR_DIFFICULTY_HPP_
