#pragma once

// Fully connected tanh network (t, zeta) -> (s_R, s_I) with exact input
// derivatives and exact parameter gradients.
//
// Input derivatives are obtained by propagating truncated Taylor jets through
// every layer: a degree-3 univariate jet in t (zeta held fixed) and a degree-1
// tangent in zeta (t held fixed). Parameter gradients of pointwise losses are
// obtained by reverse-mode differentiation of that jet propagation, so a loss
// built from s, s_t, s_tt, s_ttt and s_zeta is differentiated exactly.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace fiberpinn {

/// Architecture plus flat parameter vector. Layer l contributes a
/// column-major weight block (n_out x n_in) followed by n_out biases.
struct NetworkParams {
  std::vector<std::size_t> layer_sizes;
  std::uint64_t seed = 0;
  std::vector<double> values;

  std::size_t layer_count() const { return layer_sizes.size() - 1; }
};

std::size_t parameter_count(std::span<const std::size_t> layer_sizes);

/// Throws kInvalidArchitecture unless sizes are [2, ..., 2] with every entry
/// >= 1 and at least two entries.
void validate_architecture(std::span<const std::size_t> layer_sizes);

/// Xavier-uniform weights in +-sqrt(6 / (n_in + n_out)), zero biases.
/// Deterministic for a given seed on every platform.
NetworkParams init_network(std::vector<std::size_t> layer_sizes,
                           std::uint64_t seed);

/// Network with every parameter set to zero.
NetworkParams zero_network(std::vector<std::size_t> layer_sizes);

/// Offsets of layer l's weight block and bias block within values.
struct LayerOffsets {
  std::size_t weights = 0;
  std::size_t biases = 0;
};
LayerOffsets layer_offsets(const NetworkParams& params, std::size_t layer);

struct CollocationPoint {
  double t = 0.0;
  double zeta = 0.0;
};

/// Field value and its input derivatives; index 0 is s_R, index 1 is s_I.
struct DerivativeBundle {
  std::array<double, 2> value{};
  std::array<double, 2> d_t{};
  std::array<double, 2> d_tt{};
  std::array<double, 2> d_ttt{};
  std::array<double, 2> d_zeta{};

  DerivativeBundle& operator+=(const DerivativeBundle& other);
  DerivativeBundle& operator*=(double scale);
  /// this += scale * other
  void add_scaled(const DerivativeBundle& other, double scale);
  /// Sum of elementwise products over all ten entries.
  double dot(const DerivativeBundle& other) const;
};

std::array<double, 2> forward(const NetworkParams& params, double t,
                              double zeta);

DerivativeBundle input_derivatives(const NetworkParams& params, double t,
                                   double zeta);

std::vector<DerivativeBundle> input_derivatives(
    const NetworkParams& params, std::span<const CollocationPoint> points);

/// Contribution of one point to a loss: its value and the partial
/// derivatives of that value with respect to every bundle entry.
struct PointTerm {
  double value = 0.0;
  DerivativeBundle adjoint;
};

/// Called with the point's index and its bundle.
using PointLoss = std::function<PointTerm(std::size_t, const DerivativeBundle&)>;

struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Loss = sum over points of point_loss(k, bundle_k); returns it with the
/// exact gradient with respect to params.values. Throws kDivergence when the
/// loss is not finite.
LossGradient loss_gradient(const NetworkParams& params,
                           std::span<const CollocationPoint> points,
                           const PointLoss& point_loss);

}  // namespace fiberpinn
