#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fiberpinn {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta_a = 0.9;
  double beta_b = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
  AdamHyper hyper;
};

AdamState make_adam_state(std::size_t n_params, const AdamHyper& hyper = {});

/// Bias-corrected Adam update in place. Throws kInvalidGradient when the
/// gradient, parameter and moment lengths differ.
void adam_step(std::span<double> params, std::span<const double> gradient,
               AdamState& state);

}  // namespace fiberpinn
