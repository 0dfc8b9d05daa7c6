#include "mathcur/grpo.hpp"

#include <algorithm>

#include "mathcur/mathverify.hpp"

namespace mathcur {

ArithmeticEnv ArithmeticEnv::standard(int feature_dim) {
  if (feature_dim < 1) throw InputError("feature dimension must be >= 1");
  static const char* const kProblems[][2] = {
      {"2+3", "5"}, {"9-8", "1"}, {"4*2", "8"}, {"6/3", "2"}, {"7-7", "0"},
      {"1+2", "3"}, {"8/2", "4"}, {"3*2", "6"}, {"5+2", "7"}, {"3*3", "9"},
  };
  ArithmeticEnv env;
  const double scale = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  for (std::size_t k = 0; k < std::size(kProblems); ++k) {
    ArithmeticTask t;
    t.query_id = "q" + std::to_string(k);
    t.question = kProblems[k][0];
    t.gold = kProblems[k][1];
    t.features.resize(feature_dim);
    for (int f = 0; f < feature_dim; ++f)
      t.features[f] = (hash64(t.query_id, static_cast<std::uint64_t>(f)) & 1) ? scale : -scale;
    env.tasks.push_back(std::move(t));
  }
  return env;
}

RlHyperparams ToyTrainingConfig::toy_default_hyper() {
  RlHyperparams h;
  h.learning_rate = 0.5;
  h.batch_size = 10;
  return h;
}

Json StepLog::to_json() const {
  Json j = Json::object();
  j["step"] = step;
  j["mean_reward"] = mean_reward;
  j["expected_reward"] = expected_reward;
  j["entropy"] = entropy;
  j["kl"] = kl;
  j["clip_fraction"] = clip_fraction;
  j["mean_ratio"] = mean_ratio;
  j["loss"] = loss;
  if (entropy_warning) j["warning"] = "entropy below floor";
  return j;
}

double TrainingResult::moving_average(std::size_t i, std::size_t window) const {
  if (log.empty() || window == 0) return 0.0;
  i = std::min(i, log.size() - 1);
  const std::size_t start = i + 1 >= window ? i + 1 - window : 0;
  double sum = 0.0;
  for (std::size_t k = start; k <= i; ++k) sum += log[k].mean_reward;
  return sum / static_cast<double>(i + 1 - start);
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t step, std::uint64_t slot) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (step + 1) + 0xbf58476d1ce4e5b9ULL * (slot + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int sample_index(const Eigen::VectorXd& probs, double u) {
  double acc = 0.0;
  for (Eigen::Index a = 0; a < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size() - 1);
}

}  // namespace

TrainingResult run_toy_training(const ArithmeticEnv& env, const ToyTrainingConfig& cfg) {
  if (env.tasks.empty()) throw InputError("toy environment has no tasks");
  if (cfg.steps < 0) throw InputError("steps must be >= 0");
  const auto& h = cfg.hyper;
  if (!(h.learning_rate >= 0.0) || !(h.kl_coeff >= 0.0) || !(h.temperature > 0.0) || !(h.clip_eps > 0.0))
    throw InputError("toy hyperparameters out of range");
  if (h.rollouts_per_query < 2) throw InputError("rollouts_per_query must be >= 2");
  if (h.batch_size < 1) throw InputError("batch_size must be >= 1");

  const Eigen::Index features = env.tasks.front().features.size();
  SoftmaxPolicy<double> policy(env.answer_vocabulary, features, h.temperature);
  const SoftmaxPolicy<double> reference = policy;
  std::uint64_t version = 0;

  TrainingResult result;
  result.reference = {reference.weights(), version};
  const std::size_t n_tasks = env.tasks.size();
  const bool full_batch = static_cast<std::size_t>(h.batch_size) >= n_tasks;
  const std::size_t batch = full_batch ? n_tasks : static_cast<std::size_t>(h.batch_size);
  const int g = h.rollouts_per_query;

  // Reward for each (task, answer), precomputed since binary_reward parses LaTeX.
  std::vector<std::vector<int>> reward_table(n_tasks, std::vector<int>(env.answer_vocabulary, 0));
  for (std::size_t t = 0; t < n_tasks; ++t)
    for (int a = 0; a < env.answer_vocabulary; ++a)
      reward_table[t][a] = binary_reward("\\boxed{" + std::to_string(a) + "}", env.tasks[t].gold);

  bool below_floor = false;
  for (int step = 0; step < cfg.steps; ++step) {
    const PolicySnapshot behavior{policy.weights(), version};
    const SoftmaxPolicy<double> behavior_policy(behavior.parameters, h.temperature);

    StepLog entry;
    entry.step = step;
    for (std::size_t t = 0; t < n_tasks; ++t) {
      const Eigen::VectorXd p = behavior_policy.probs(env.tasks[t].features);
      double er = 0.0;
      for (int a = 0; a < env.answer_vocabulary; ++a) er += p[a] * reward_table[t][a];
      entry.expected_reward += er / static_cast<double>(n_tasks);
    }

    std::vector<std::size_t> picked(batch);
    if (full_batch) {
      for (std::size_t b = 0; b < batch; ++b) picked[b] = b;
    } else {
      Rng pick(mix_seed(cfg.seed, static_cast<std::uint64_t>(step), UINT64_MAX));
      for (auto& b : picked) b = pick.below(n_tasks);
    }

    std::vector<GroupRollout<double>> groups(batch);
    parallel_for(batch, [&](std::size_t b) {
      const auto& task = env.tasks[picked[b]];
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(step), b));
      const Eigen::VectorXd lp = behavior_policy.log_probs(task.features);
      const Eigen::VectorXd lp_ref = reference.log_probs(task.features);
      const Eigen::VectorXd p = lp.array().exp();
      auto& grp = groups[b];
      grp.query_id = task.query_id;
      grp.behavior_version = behavior.version;
      grp.logprobs_behavior.resize(g);
      grp.logprobs_reference.resize(g);
      grp.rewards.resize(g);
      for (int i = 0; i < g; ++i) {
        const int a = sample_index(p, rng.uniform01());
        grp.responses.push_back({a});
        grp.logprobs_behavior[i] = lp[a];
        grp.logprobs_reference[i] = lp_ref[a];
        grp.rewards[i] = reward_table[picked[b]][a];
      }
    });

    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(policy.answers(), policy.features());
    double reward_sum = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const auto& grp = groups[b];
      if (grp.behavior_version != version)
        throw InvariantError("off-policy rollout: behavior version " + std::to_string(grp.behavior_version) +
                             " but policy version " + std::to_string(version));
      const auto& phi = env.tasks[picked[b]].features;
      const Eigen::VectorXd lp_all = policy.log_probs(phi);
      Eigen::VectorXd logp_cur(g);
      std::vector<int> actions(g);
      for (int i = 0; i < g; ++i) {
        actions[i] = grp.responses[i].front();
        logp_cur[i] = lp_all[actions[i]];
      }
      const Eigen::VectorXd adv = group_advantages(grp.rewards);
      const auto loss = grpo_loss(grp, logp_cur, adv, h.clip_eps, h.kl_coeff);
      grad += policy.weighted_log_prob_gradient(phi, actions, loss.dloss_dlogp);
      reward_sum += grp.rewards.mean();
      entry.loss += loss.loss;
      entry.kl += loss.diagnostics.mean_kl;
      entry.clip_fraction += loss.diagnostics.clip_fraction;
      entry.mean_ratio += loss.diagnostics.mean_ratio;
      entry.entropy += policy.entropy(phi);
    }
    const double inv_b = 1.0 / static_cast<double>(batch);
    entry.mean_reward = reward_sum * inv_b;
    entry.loss *= inv_b;
    entry.kl *= inv_b;
    entry.clip_fraction *= inv_b;
    entry.mean_ratio *= inv_b;
    entry.entropy *= inv_b;

    entry.entropy_warning = entry.entropy < cfg.entropy_floor;
    if (entry.entropy_warning && !below_floor)
      result.warnings.push_back("step " + std::to_string(step) + ": entropy " + std::to_string(entry.entropy) +
                                " fell below floor " + std::to_string(cfg.entropy_floor));
    below_floor = entry.entropy_warning;

    if (h.learning_rate != 0.0) {
      policy.weights() -= h.learning_rate * grad * inv_b;
      if (!policy.weights().allFinite()) throw InvariantError("non-finite policy parameters after step " +
                                                              std::to_string(step));
    }
    ++version;
    result.log.push_back(entry);
  }
  result.final_policy = {policy.weights(), version};
  return result;
}

}  // namespace mathcur
