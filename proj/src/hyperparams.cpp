#include "mathcur/hyperparams.hpp"

#include <cmath>
#include <string>

#include "mathcur/common.hpp"

namespace mathcur {

std::string_view to_string(RlKind k) { return k == RlKind::instruct_rl ? "instruct_rl" : "thinking_rl"; }

RlKind parse_rl_kind(std::string_view s) {
  if (s == "instruct_rl" || s == "instruct") return RlKind::instruct_rl;
  if (s == "thinking_rl" || s == "thinking") return RlKind::thinking_rl;
  throw InputError("unknown curriculum kind '" + std::string(s) + "' (expected instruct_rl or thinking_rl)");
}

RlHyperparams RlHyperparams::for_kind(RlKind k) {
  RlHyperparams h;
  h.batch_size = k == RlKind::instruct_rl ? 256 : 32;
  return h;
}

void RlHyperparams::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(kl_coeff) || !positive(learning_rate) || !positive(temperature) || !positive(clip_eps))
    throw InputError("RL hyperparameters must be positive and finite");
  if (rollouts_per_query < 2) throw InputError("rollouts_per_query must be >= 2");
  if (batch_size < 1) throw InputError("batch_size must be >= 1");
}

Json RlHyperparams::to_json() const {
  Json j = Json::object();
  j["kl_coeff"] = kl_coeff;
  j["learning_rate"] = learning_rate;
  j["rollouts_per_query"] = rollouts_per_query;
  j["batch_size"] = batch_size;
  j["temperature"] = temperature;
  j["clip_eps"] = clip_eps;
  j["reward"] = Json::array({1, -1});
  return j;
}

}  // namespace mathcur
