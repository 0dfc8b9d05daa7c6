#ifndef MATHCUR_TESTS_GRPO_CHECKS_HPP_
#define MATHCUR_TESTS_GRPO_CHECKS_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "mathcur/common.hpp"
#include "mathcur/grpo.hpp"

namespace grpocheck {

using mathcur::GroupRollout;
using mathcur::SoftmaxPolicy;

struct FdProblem {
  SoftmaxPolicy<double> policy{5, 2, 1.0};
  Eigen::VectorXd phi;
  GroupRollout<double> group;
  std::vector<int> actions;
  Eigen::VectorXd advantages;
  double clip_eps = 0.2;
  double kl_coeff = 0.0;
};

inline double centered(mathcur::Rng& rng, double scale) { return (2.0 * rng.uniform01() - 1.0) * scale; }

/// A random 5-answer x 2-feature policy with a group of G = 5 responses. The
/// behavior and reference logprobs come from perturbed copies of the policy
/// so ratios land on both sides of the clip range.
inline FdProblem make_problem(std::uint64_t seed) {
  mathcur::Rng rng(seed);
  FdProblem p;
  Eigen::MatrixXd w(5, 2), wb(5, 2), wr(5, 2);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w(i) = centered(rng, 1.5);
    wb(i) = w(i) + centered(rng, 0.4);
    wr(i) = w(i) + centered(rng, 0.6);
  }
  const double temperature = 0.5 + rng.uniform01();
  p.policy = SoftmaxPolicy<double>(w, temperature);
  const SoftmaxPolicy<double> behavior(wb, temperature), reference(wr, temperature);
  p.phi = Eigen::VectorXd(2);
  p.phi << centered(rng, 2.0), centered(rng, 2.0);

  const int g = 5;
  p.group.query_id = "fd";
  p.group.logprobs_behavior.resize(g);
  p.group.logprobs_reference.resize(g);
  p.group.rewards.resize(g);
  for (int i = 0; i < g; ++i) {
    const int a = static_cast<int>(rng.below(5));
    p.actions.push_back(a);
    p.group.responses.push_back({a});
    p.group.logprobs_behavior[i] = behavior.log_prob(p.phi, a);
    p.group.logprobs_reference[i] = reference.log_prob(p.phi, a);
    p.group.rewards[i] = rng.below(2) ? 1.0 : -1.0;
  }
  p.advantages = mathcur::group_advantages(p.group.rewards);
  if (p.advantages.cwiseAbs().maxCoeff() == 0.0)
    for (int i = 0; i < g; ++i) p.advantages[i] = centered(rng, 1.0);
  p.clip_eps = 0.1 + 0.2 * rng.uniform01();
  const double betas[] = {0.0, 1e-3, 0.1, 1.0};
  p.kl_coeff = betas[rng.below(4)];
  return p;
}

inline Eigen::VectorXd logps(const SoftmaxPolicy<double>& policy, const FdProblem& p) {
  const Eigen::VectorXd all = policy.log_probs(p.phi);
  Eigen::VectorXd out(static_cast<Eigen::Index>(p.actions.size()));
  for (std::size_t i = 0; i < p.actions.size(); ++i) out[static_cast<Eigen::Index>(i)] = all[p.actions[i]];
  return out;
}

inline double loss_at(const FdProblem& p, const Eigen::MatrixXd& w) {
  const SoftmaxPolicy<double> policy(w, p.policy.temperature());
  return mathcur::grpo_loss(p.group, logps(policy, p), p.advantages, p.clip_eps, p.kl_coeff).loss;
}

/// Relative infinity-norm error between the analytic gradient and central
/// differences with step h. nullopt when some ratio sits within `margin` of
/// a clip boundary, where the objective has a kink.
inline std::optional<double> gradient_error(const FdProblem& p, double h = 1e-5, double margin = 1e-3) {
  const Eigen::VectorXd lp = logps(p.policy, p);
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    const double r = std::exp(lp[i] - p.group.logprobs_behavior[i]);
    if (std::abs(r - (1 + p.clip_eps)) < margin || std::abs(r - (1 - p.clip_eps)) < margin) return std::nullopt;
  }
  const auto res = mathcur::grpo_loss(p.group, lp, p.advantages, p.clip_eps, p.kl_coeff);
  const Eigen::MatrixXd analytic = p.policy.weighted_log_prob_gradient(p.phi, p.actions, res.dloss_dlogp);
  Eigen::MatrixXd numeric(analytic.rows(), analytic.cols());
  for (Eigen::Index k = 0; k < analytic.size(); ++k) {
    Eigen::MatrixXd up = p.policy.weights(), down = p.policy.weights();
    up(k) += h;
    down(k) -= h;
    numeric(k) = (loss_at(p, up) - loss_at(p, down)) / (2 * h);
  }
  const double scale = std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-6});
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

}  // namespace grpocheck

#endif  // MATHCUR_TESTS_GRPO_CHECKS_HPP_
