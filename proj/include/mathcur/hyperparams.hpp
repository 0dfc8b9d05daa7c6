#ifndef MATHCUR_HYPERPARAMS_HPP_
#define MATHCUR_HYPERPARAMS_HPP_

#include <string_view>

#include "mathcur/io.hpp"

namespace mathcur {

enum class RlKind { instruct_rl, thinking_rl };

std::string_view to_string(RlKind k);
RlKind parse_rl_kind(std::string_view s);

struct RlHyperparams {
  double kl_coeff = 1e-3;
  double learning_rate = 4e-6;
  int rollouts_per_query = 16;
  int batch_size = 256;
  double temperature = 1.2;
  double clip_eps = 0.2;

  static RlHyperparams for_kind(RlKind k);
  void validate() const;
  Json to_json() const;
};

}  // namespace mathcur

#endif  // MATHCUR_HYPERPARAMS_HPP_
