#include "fiberpinn/adam.hpp"

#include <cmath>

#include "fiberpinn/error.hpp"

namespace fiberpinn {

void AdamHyper::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidConfig, "learning rate must be finite and > 0");
  }
  if (!(beta_a >= 0.0 && beta_a < 1.0) || !(beta_b >= 0.0 && beta_b < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidConfig, "Adam epsilon must be > 0");
}

AdamState make_adam_state(std::size_t n_params, const AdamHyper& hyper) {
  hyper.validate();
  AdamState s;
  s.first_moment.assign(n_params, 0.0);
  s.second_moment.assign(n_params, 0.0);
  s.hyper = hyper;
  return s;
}

void adam_step(std::span<double> params, std::span<const double> gradient,
               AdamState& state) {
  if (gradient.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw Error(ErrorCode::kInvalidGradient,
                "gradient has " + std::to_string(gradient.size()) + " entries, expected " +
                    std::to_string(params.size()));
  }
  const AdamHyper& h = state.hyper;
  ++state.step_count;
  const auto t = static_cast<double>(state.step_count);
  const double correct_a = 1.0 - std::pow(h.beta_a, t);
  const double correct_b = 1.0 - std::pow(h.beta_b, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = gradient[k];
    double& m = state.first_moment[k];
    double& v = state.second_moment[k];
    m = h.beta_a * m + (1.0 - h.beta_a) * g;
    v = h.beta_b * v + (1.0 - h.beta_b) * g * g;
    params[k] -= h.learning_rate * (m / correct_a) / (std::sqrt(v / correct_b) + h.epsilon);
  }
}

}  // namespace fiberpinn
