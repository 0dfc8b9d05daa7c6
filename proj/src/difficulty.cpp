#include "mathcur/difficulty.hpp"

#include <unordered_map>

#include "mathcur/common.hpp"

namespace mathcur {

Json RolloutStats::to_json() const {
  Json j = Json::object();
  j["sample_id"] = sample_id;
  j["n_rollouts"] = n_rollouts;
  j["n_correct"] = n_correct;
  j["pass_rate"] = pass_rate();
  return j;
}

std::vector<RolloutStats> estimate_pass_rates(const std::vector<RolloutVerdict>& verdicts) {
  std::vector<RolloutStats> stats;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& v : verdicts) {
    if (v.reward != 1 && v.reward != -1)
      throw InputError("reward for '" + v.sample_id + "' must be +1 or -1, got " + std::to_string(v.reward));
    auto [it, inserted] = slot.try_emplace(v.sample_id, stats.size());
    if (inserted) stats.push_back({v.sample_id, 0, 0});
    auto& s = stats[it->second];
    ++s.n_rollouts;
    if (v.reward == 1) ++s.n_correct;
  }
  return stats;
}

namespace {

template <typename Pred>
std::vector<std::string> keep_if(const std::vector<RolloutStats>& stats, Pred pred) {
  std::vector<std::string> out;
  for (const auto& s : stats) {
    if (s.n_rollouts == 0 || s.n_correct > s.n_rollouts)
      throw InvariantError("inconsistent rollout stats for '" + s.sample_id + "'");
    if (pred(s)) out.push_back(s.sample_id);
  }
  return out;
}

}  // namespace

std::vector<std::string> gate_instruct_rl(const std::vector<RolloutStats>& stats) {
  return keep_if(stats, [](const RolloutStats& s) { return s.n_correct > 0 && s.n_correct < s.n_rollouts; });
}

std::vector<std::string> gate_thinking_rl(const std::vector<RolloutStats>& stats) {
  return keep_if(stats, [](const RolloutStats& s) { return s.n_correct < s.n_rollouts; });
}

std::vector<std::string> gate_long_context(const std::vector<RolloutStats>& stats) {
  return keep_if(stats, [](const RolloutStats& s) {
    return 10 * s.n_correct >= s.n_rollouts && 10 * s.n_correct <= 9 * s.n_rollouts;
  });
}

std::vector<std::string> apply_gate(Gate gate, const std::vector<RolloutStats>& stats) {
  switch (gate) {
    case Gate::instruct_rl: return gate_instruct_rl(stats);
    case Gate::thinking_rl: return gate_thinking_rl(stats);
    case Gate::long_context: return gate_long_context(stats);
  }
  return {};
}

std::vector<RolloutVerdict> read_verdicts(const std::filesystem::path& path) {
  std::vector<RolloutVerdict> out;
  for_each_line(path, [&](std::size_t line, std::string_view text) {
    if (text.find_first_not_of(" \t") == std::string_view::npos) return;
    try {
      const auto j = Json::parse(text);
      RolloutVerdict v;
      v.sample_id = j.at("sample_id").get<std::string>();
      v.reward = j.at("reward").get<int>();
      out.push_back(std::move(v));
    } catch (const Json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace mathcur
