#ifndef MATHCUR_GRPO_HPP_
#define MATHCUR_GRPO_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mathcur/common.hpp"
#include "mathcur/hyperparams.hpp"
#include "mathcur/io.hpp"

namespace mathcur {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// a_i = (r_i - mean) / (population std + eps). A group with zero variance
/// gets all-zero advantages. Throws InputError for groups smaller than 2.
template <typename Derived>
VecX<typename Derived::Scalar> group_advantages(const Eigen::MatrixBase<Derived>& rewards,
                                                typename Derived::Scalar eps = typename Derived::Scalar(1e-8)) {
  using Scalar = typename Derived::Scalar;
  const auto g = rewards.size();
  if (g < 2) throw InputError("group_advantages needs at least 2 rewards, got " + std::to_string(g));
  // Tested on the raw values: the float mean of a constant group need not
  // equal the constant, which would leave a spurious tiny variance.
  if (rewards.maxCoeff() == rewards.minCoeff()) return VecX<Scalar>::Zero(g);
  const Scalar mean = rewards.mean();
  const VecX<Scalar> centered = rewards.derived().array() - mean;
  const Scalar var = centered.squaredNorm() / static_cast<Scalar>(g);
  return centered / (std::sqrt(var) + eps);
}

/// k = exp(d) - d - 1 with d = logp_ref - logp_cur.
template <typename Scalar>
Scalar kl_estimate(Scalar logp_current, Scalar logp_reference) {
  const Scalar d = logp_reference - logp_current;
  // expm1 keeps precision for tiny d; the clamp absorbs rounding below zero.
  const Scalar k = std::expm1(d) - d;
  return k > Scalar(0) ? k : Scalar(0);
}

template <typename Scalar>
struct GroupRollout {
  std::string query_id;
  std::vector<std::vector<int>> responses;
  VecX<Scalar> logprobs_behavior;
  VecX<Scalar> logprobs_reference;
  VecX<Scalar> rewards;
  std::uint64_t behavior_version = 0;

  Eigen::Index size() const { return logprobs_behavior.size(); }
};

template <typename Scalar>
struct LossDiagnostics {
  Scalar clip_fraction = 0;
  Scalar mean_ratio = 0;
  Scalar mean_kl = 0;
};

template <typename Scalar>
struct LossResult {
  Scalar loss = 0;
  LossDiagnostics<Scalar> diagnostics;
  /// d loss / d logp_current_i, for chaining into the policy gradient.
  VecX<Scalar> dloss_dlogp;
};

class NonFiniteRatio : public InvariantError {
 public:
  NonFiniteRatio(Eigen::Index index, const std::string& what) : InvariantError(what), index_(index) {}
  Eigen::Index index() const { return index_; }

 private:
  Eigen::Index index_;
};

/// loss = -mean_i min(r_i a_i, clip(r_i, 1-eps, 1+eps) a_i) + beta * mean_i k_i
/// with r_i = exp(logp_cur_i - logp_behavior_i) and k_i the KL estimate
/// against the group's reference logprobs.
template <typename Scalar>
LossResult<Scalar> grpo_loss(const GroupRollout<Scalar>& group, const VecX<Scalar>& logp_current,
                             const VecX<Scalar>& advantages, Scalar clip_eps, Scalar kl_coeff) {
  const Eigen::Index g = group.size();
  if (logp_current.size() != g || advantages.size() != g || group.logprobs_reference.size() != g)
    throw InputError("grpo_loss: all per-response vectors must have length G = " + std::to_string(g));
  if (g == 0) throw InputError("grpo_loss: empty group");

  LossResult<Scalar> out;
  out.dloss_dlogp.resize(g);
  const Scalar inv_g = Scalar(1) / static_cast<Scalar>(g);
  Scalar surrogate_sum = 0;
  Scalar kl_sum = 0;
  Scalar ratio_sum = 0;
  Eigen::Index clipped = 0;
  for (Eigen::Index i = 0; i < g; ++i) {
    const Scalar ratio = std::exp(logp_current[i] - group.logprobs_behavior[i]);
    if (!std::isfinite(ratio))
      throw NonFiniteRatio(i, "grpo_loss: non-finite importance ratio at response " + std::to_string(i));
    const Scalar a = advantages[i];
    const Scalar lo = Scalar(1) - clip_eps;
    const Scalar hi = Scalar(1) + clip_eps;
    const Scalar clipped_ratio = ratio < lo ? lo : (ratio > hi ? hi : ratio);
    const bool clip_binds = (a > 0 && ratio > hi) || (a < 0 && ratio < lo);
    surrogate_sum += clip_binds ? clipped_ratio * a : ratio * a;
    if (clip_binds) ++clipped;

    const Scalar d = group.logprobs_reference[i] - logp_current[i];
    kl_sum += kl_estimate(logp_current[i], group.logprobs_reference[i]);
    ratio_sum += ratio;

    const Scalar dsurrogate = clip_binds ? Scalar(0) : ratio * a;
    const Scalar dkl = -std::expm1(d);
    out.dloss_dlogp[i] = inv_g * (-dsurrogate + kl_coeff * dkl);
  }
  out.loss = -surrogate_sum * inv_g + kl_coeff * kl_sum * inv_g;
  out.diagnostics.clip_fraction = static_cast<Scalar>(clipped) * inv_g;
  out.diagnostics.mean_ratio = ratio_sum * inv_g;
  out.diagnostics.mean_kl = kl_sum * inv_g;
  return out;
}

/// pi(.|phi) = softmax(W phi / T) over a finite answer vocabulary, W of shape
/// answers x features.
template <typename Scalar>
class SoftmaxPolicy {
 public:
  SoftmaxPolicy(Eigen::Index answers, Eigen::Index features, Scalar temperature)
      : weights_(MatX<Scalar>::Zero(answers, features)), temperature_(temperature) {
    if (!(temperature > 0)) throw InputError("policy temperature must be positive");
  }
  SoftmaxPolicy(MatX<Scalar> weights, Scalar temperature) : weights_(std::move(weights)), temperature_(temperature) {
    if (!(temperature > 0)) throw InputError("policy temperature must be positive");
  }

  const MatX<Scalar>& weights() const { return weights_; }
  MatX<Scalar>& weights() { return weights_; }
  Scalar temperature() const { return temperature_; }
  Eigen::Index answers() const { return weights_.rows(); }
  Eigen::Index features() const { return weights_.cols(); }

  VecX<Scalar> log_probs(const VecX<Scalar>& phi) const {
    const VecX<Scalar> logits = weights_ * phi / temperature_;
    const Scalar m = logits.maxCoeff();
    const Scalar lse = m + std::log((logits.array() - m).exp().sum());
    return logits.array() - lse;
  }

  VecX<Scalar> probs(const VecX<Scalar>& phi) const { return log_probs(phi).array().exp(); }

  Scalar log_prob(const VecX<Scalar>& phi, int answer) const { return log_probs(phi)[answer]; }

  Scalar entropy(const VecX<Scalar>& phi) const {
    const VecX<Scalar> lp = log_probs(phi);
    return -(lp.array().exp() * lp.array()).sum();
  }

  /// sum_i w_i * d logpi(a_i | phi) / dW = (1/T) sum_i w_i (e_{a_i} - pi) phi^T.
  MatX<Scalar> weighted_log_prob_gradient(const VecX<Scalar>& phi, const std::vector<int>& actions,
                                           const VecX<Scalar>& w) const {
    VecX<Scalar> coeff = -w.sum() * probs(phi);
    for (std::size_t i = 0; i < actions.size(); ++i) coeff[actions[i]] += w[static_cast<Eigen::Index>(i)];
    return coeff * phi.transpose() / temperature_;
  }

 private:
  MatX<Scalar> weights_;
  Scalar temperature_;
};

struct PolicySnapshot {
  Eigen::MatrixXd parameters;
  std::uint64_t version = 0;
};

// Toy arithmetic environment used to exercise the optimizer end to end.

struct ArithmeticTask {
  std::string query_id;
  std::string question;  // e.g. "2+3"
  std::string gold;      // integer answer as text
  Eigen::VectorXd features;
};

struct ArithmeticEnv {
  std::vector<ArithmeticTask> tasks;
  int answer_vocabulary = 10;  // answers are the integers 0..vocabulary-1

  /// Ten single-digit problems whose answers cover 0..9, with features
  /// hashed from each query id into feature_dim random-sign coordinates.
  static ArithmeticEnv standard(int feature_dim = 32);
};

struct ToyTrainingConfig {
  RlHyperparams hyper = toy_default_hyper();
  int steps = 200;
  std::uint64_t seed = 0;
  double entropy_floor = 0.05;  // nats, averaged over the batch

  static RlHyperparams toy_default_hyper();
};

struct StepLog {
  int step = 0;
  double mean_reward = 0;      // over sampled rollouts this step
  double expected_reward = 0;  // exact, over all tasks under the pre-update policy
  double entropy = 0;
  double kl = 0;
  double clip_fraction = 0;
  double mean_ratio = 0;
  double loss = 0;
  bool entropy_warning = false;

  Json to_json() const;
};

struct TrainingResult {
  std::vector<StepLog> log;
  std::vector<std::string> warnings;
  PolicySnapshot reference;
  PolicySnapshot final_policy;

  /// Moving average of mean_reward over a trailing window ending at step i.
  double moving_average(std::size_t i, std::size_t window = 20) const;
};

/// Strict on-policy loop: every step samples fresh groups from the current
/// snapshot, scores them with binary_reward, and applies one SGD update.
/// hyper.batch_size queries are drawn per step, or every task when the batch
/// is at least the task count.
/// Throws InvariantError if a rollout's behavior version differs from the
/// policy version at update time.
TrainingResult run_toy_training(const ArithmeticEnv& env, const ToyTrainingConfig& cfg);

}  // namespace mathcur

#endif  // MATHCUR_GRPO_HPP_
