#pragma once

// Residual-plus-boundary loss of one network on the collocation grid and the
// full-batch Adam loop that minimizes it.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fiberpinn/adam.hpp"
#include "fiberpinn/error.hpp"
#include "fiberpinn/network.hpp"
#include "fiberpinn/physical_model.hpp"

namespace fiberpinn {

struct LossWeights {
  double residual = 1.0;
  double boundary = 1.0;
};

struct LossTerms {
  double total = 0.0;
  double residual = 0.0;  // mean |r|^2 over collocation nodes (unweighted)
  double boundary = 0.0;  // mean |s(0, t_k) - f(t_k)|^2 (unweighted)
};

/// r = i*zeta*s_zeta + i*damping*s + dispersion*s_tt + i*third_order*s_ttt
///     + kerr*|s|^2 s, from a derivative bundle.
std::complex<double> equation_residual(const DerivativeBundle& d, const EquationTerms& e);

/// scale * |r|^2 and its partial derivatives with respect to the bundle.
PointTerm residual_point_term(const DerivativeBundle& d, const EquationTerms& e, double scale);

/// scale * |s - f|^2 and its partial derivatives with respect to the bundle.
PointTerm boundary_point_term(const DerivativeBundle& d, double target, double scale);

/// Every grid node as a collocation point, in Grid's flat order.
std::vector<CollocationPoint> collocation_points(const Grid& grid);

/// For each flat grid node: the boundary slot k (node = initial_indices[k] at
/// zeta = 0) or -1.
std::vector<std::ptrdiff_t> boundary_slots(const Grid& grid);

/// Loss terms from per-node bundles (flat grid order).
LossTerms loss_from_bundles(std::span<const DerivativeBundle> bundles,
                            const EquationTerms& e, const Grid& grid,
                            std::span<const double> boundary,
                            const LossWeights& weights = {});

/// Residual and boundary terms of a network. boundary holds f at the grid's
/// n_initial boundary nodes. Throws kDivergence naming the node when the
/// residual is not finite.
LossTerms pinn_loss(const NetworkParams& params, const NlseCoefficients& coeffs,
                    const Grid& grid, std::span<const double> boundary,
                    const LossWeights& weights = {});

struct TrainConfig {
  std::size_t max_epochs = 40000;
  double loss_threshold = 1e-4;
  std::size_t log_every = 0;  // 0 disables the progress callback cadence check
  LossWeights weights;
  AdamHyper adam;
  std::size_t batch_size = 0;  // residual nodes per epoch; 0 = full batch
  std::uint64_t batch_seed = 0;

  void validate() const;
};

struct TrainedBasis {
  double bit_rate = 0.0;
  NetworkParams params;
  AdamState adam;
  double final_loss = 0.0;
  std::vector<double> loss_history;    // total loss of every evaluated epoch
  std::vector<LossTerms> term_history; // same epochs, split into terms
  std::size_t epochs_run = 0;          // epochs evaluated, including resumed ones
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  LossTerms terms;
  const NetworkParams* params = nullptr;
  const AdamState* adam = nullptr;
};

struct TrainHooks {
  /// Resume from this optimizer state; its step_count is the number of
  /// epochs already completed.
  std::optional<AdamState> resume;
  /// Called after every evaluated epoch whose number is a multiple of
  /// log_every, and after the last one.
  std::function<void(const EpochReport&)> on_log;
};

/// Raised when the loss stops being finite; carries the last parameters and
/// optimizer state that still produced a finite loss.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& message, NetworkParams last_finite,
                   AdamState last_state, std::size_t epoch)
      : Error(ErrorCode::kDivergence, message),
        last_finite_(std::move(last_finite)),
        last_state_(std::move(last_state)),
        epoch_(epoch) {}

  const NetworkParams& last_finite() const { return last_finite_; }
  const AdamState& last_state() const { return last_state_; }
  std::size_t epoch() const { return epoch_; }

 private:
  NetworkParams last_finite_;
  AdamState last_state_;
  std::size_t epoch_;
};

/// Full-batch Adam on pinn_loss. Epoch e evaluates the loss at the current
/// parameters; the loop returns those parameters as soon as the total is
/// below loss_threshold or e reaches max_epochs, otherwise takes one step.
TrainedBasis train_basis(NetworkParams init, const NlseCoefficients& coeffs,
                         const Grid& grid, std::span<const double> boundary,
                         const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Network output at every grid node.
GriddedField evaluate_on_grid(const NetworkParams& params, const Grid& grid);

}  // namespace fiberpinn
