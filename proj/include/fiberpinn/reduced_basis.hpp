#pragma once

// Reduced-basis model over bit rates: fields at a new rate are linear
// combinations of basis networks trained at greedily chosen rates.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "fiberpinn/error.hpp"
#include "fiberpinn/network.hpp"
#include "fiberpinn/physical_model.hpp"
#include "fiberpinn/trainer.hpp"

namespace fiberpinn {

/// c-weighted sum of the basis bundles at one point. Throws
/// kInvalidCoefficients when |c| differs from the basis count.
DerivativeBundle combined_field(std::span<const NetworkParams> bases,
                                std::span<const double> c, double t, double zeta);

/// Bundles of every basis at every grid node, computed once.
struct BasisCache {
  std::size_t n_nodes = 0;
  std::vector<std::vector<DerivativeBundle>> bundles;  // [basis][node]

  std::size_t size() const { return bundles.size(); }
  void add(const NetworkParams& params, const Grid& grid);
};

BasisCache build_cache(std::span<const NetworkParams> bases, const Grid& grid);

/// Combined bundles at every node.
std::vector<DerivativeBundle> combine(const BasisCache& cache, std::span<const double> c);

/// Combined field values at every node of grid.
GriddedField evaluate_combination(std::span<const NetworkParams> bases,
                                  std::span<const double> c, const Grid& grid);

/// Same terms as pinn_loss with the network replaced by the combination.
LossTerms combination_loss(const BasisCache& cache, std::span<const double> c,
                           const NlseCoefficients& coeffs, const Grid& grid,
                           std::span<const double> boundary,
                           const LossWeights& weights = {});

struct CombinationGradient {
  LossTerms terms;
  std::vector<double> gradient;  // d total / d c
};

CombinationGradient combination_loss_gradient(const BasisCache& cache,
                                              std::span<const double> c,
                                              const NlseCoefficients& coeffs,
                                              const Grid& grid,
                                              std::span<const double> boundary,
                                              const LossWeights& weights = {});

struct FitConfig {
  std::size_t max_iterations = 3000;
  double learning_rate = 1e-2;
  double loss_threshold = 1e-9;
  double gradient_tolerance = 1e-10;

  void validate() const;
};

enum class FitStop { kThreshold, kGradient, kMaxIterations };

struct FitResult {
  std::vector<double> c;        // best coefficients seen
  LossTerms loss;               // at c
  double gradient_norm = 0.0;   // at c
  std::vector<double> history;  // total loss of every iterate
  std::size_t iterations = 0;
  FitStop stop = FitStop::kMaxIterations;
};

/// Raised when the combination loss stops being finite.
class FitDiverged : public Error {
 public:
  FitDiverged(const std::string& message, std::vector<double> last_finite)
      : Error(ErrorCode::kDivergence, message), last_finite_(std::move(last_finite)) {}
  const std::vector<double>& last_finite() const { return last_finite_; }

 private:
  std::vector<double> last_finite_;
};

/// Adam on c with the basis networks frozen; returns the best iterate.
FitResult fit_coefficients(const BasisCache& cache, const NlseCoefficients& coeffs,
                           const Grid& grid, std::span<const double> boundary,
                           std::vector<double> init_c, const FitConfig& cfg,
                           const LossWeights& weights = {});

/// Everything a rate-parameterized family shares: the coefficient map, the
/// collocation grid and the rate-independent boundary samples.
struct ParametricProblem {
  std::function<NlseCoefficients(double)> coefficients;
  Grid grid;
  std::vector<double> boundary;
  LossWeights weights;
};

struct GreedyConfig {
  std::size_t max_bases = 12;
  double stop_loss = 1e-4;
  double seed_rate = 0.0;  // 0 selects the lowest candidate
  std::vector<std::size_t> layer_sizes{2, 100, 100, 100, 100, 100, 2};
  std::uint64_t seed = 1;  // basis k is initialized with seed + k

  void validate() const;
};

struct CandidateFit {
  double rate = 0.0;
  std::vector<double> c;
  LossTerms loss;
  bool is_basis = false;
  bool hit_max_iterations = false;
  double gradient_norm = 0.0;
};

/// Error table evaluated with a given number of bases.
struct RoundTable {
  std::size_t n_bases = 0;
  std::vector<CandidateFit> entries;  // remaining candidates only
};

struct Selection {
  std::size_t round = 0;
  double rate = 0.0;
  /// Worst remaining loss that triggered the choice; +inf for the seed basis.
  double worst_loss = std::numeric_limits<double>::infinity();
};

struct ReducedBasisModel {
  std::vector<TrainedBasis> bases;
  std::vector<double> candidate_rates;  // ascending
  std::vector<CandidateFit> candidates; // final fits, same order
  std::vector<Selection> selection_history;
  std::vector<RoundTable> rounds;

  std::vector<NetworkParams> basis_params() const;
  const CandidateFit* find_candidate(double rate) const;
};

struct GreedyHooks {
  std::function<void(const TrainedBasis&, std::size_t round)> on_basis;
  std::function<void(const RoundTable&)> on_round;
  TrainHooks train;  // forwarded to every train_basis call (resume ignored)
};

/// Raised when a basis fails to train; carries the model built so far.
class GreedyAborted : public Error {
 public:
  GreedyAborted(const std::string& message, ReducedBasisModel partial)
      : Error(ErrorCode::kDivergence, message), partial_(std::move(partial)) {}
  const ReducedBasisModel& partial() const { return partial_; }

 private:
  ReducedBasisModel partial_;
};

/// Round 0 trains at the seed rate. Every later round fits c for each
/// remaining candidate (warm start: previous c with 0 appended), picks the
/// largest loss (ties to the lower rate) and trains a basis there. Stops at
/// max_bases or when the worst remaining loss is below stop_loss, then
/// reports final fits for every candidate.
ReducedBasisModel greedy_train(std::vector<double> candidate_rates,
                               const ParametricProblem& problem,
                               const GreedyConfig& cfg, const TrainConfig& train_cfg,
                               const FitConfig& fit_cfg, const GreedyHooks& hooks = {});

struct Prediction {
  GriddedField field;
  LossTerms loss;
  std::vector<double> c;
  bool cached = false;
};

/// Field and loss at a rate inside the candidate range. Uses the stored fit
/// when the rate is a candidate and use_cache is set; otherwise fits from
/// the uniform start and from the nearest candidate's coefficients (and the
/// unit vector when the rate is a basis rate) and keeps the best.
Prediction predict(const ReducedBasisModel& model, const ParametricProblem& problem,
                   double rate, const FitConfig& fit_cfg, bool use_cache = true);

/// Directory with manifest.json and one checkpoint per basis.
void save_model(const ReducedBasisModel& model, const std::filesystem::path& dir);
ReducedBasisModel load_model(const std::filesystem::path& dir);

}  // namespace fiberpinn
