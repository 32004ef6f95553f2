#pragma once

// Experiment configuration: every tunable of a run, read from JSON on top of
// built-in defaults, with dotted-key overrides.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "fiberpinn/complexity.hpp"
#include "fiberpinn/physical_model.hpp"
#include "fiberpinn/reduced_basis.hpp"
#include "fiberpinn/ssfm.hpp"
#include "fiberpinn/trainer.hpp"

namespace fiberpinn {

struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "fiberpinn_out";

  struct Fiber {
    double alpha = 4.605e-5;  // 1/m
    double beta2 = -2e-26;    // s^2/m
    double beta3 = -2e-38;    // s^3/m
    double n2 = 2.6e-20;      // m^2/W
    double a_eff = 8e-11;     // m^2
    double lambda_c = 1.55e-6;
    double length = 1e5;      // L_max, m
  } fiber;

  struct Signal {
    std::string shape = "ook";  // "ook" or "gaussian"
    std::size_t n_bits = 16;
    std::uint64_t pattern_seed = 1;
    std::vector<int> pattern;   // explicit bits; empty = pseudo-random n_bits
    double edge_fraction = 0.1;
    double gaussian_width = 0.25;
    double peak_power = 1e-2;   // W
    double kappa2 = 0.0;        // T_max R_b; 0 = half the pattern length
  } signal;

  struct GridSpec {
    std::size_t n_t = 312;
    std::size_t n_zeta = 11;
    std::size_t n_initial = 100;
  } grid;

  std::vector<std::size_t> layer_sizes{2, 100, 100, 100, 100, 100, 2};

  struct Train {
    double bit_rate = 10e9;  // rate of a single-basis run
    std::size_t max_epochs = 40000;
    double loss_threshold = 1e-4;
    std::size_t log_every = 100;
    double learning_rate = 1e-3;
    double beta_a = 0.9;
    double beta_b = 0.999;
    double epsilon = 1e-8;
    double residual_weight = 1.0;
    double boundary_weight = 1.0;
    std::size_t batch_size = 0;
  } train;

  FitConfig fit;

  struct Greedy {
    std::size_t max_bases = 12;
    double stop_loss = 1e-4;
    double seed_rate = 0.0;
  } greedy;

  struct Sweep {
    double min_rate = 2e9;
    double max_rate = 50e9;
    std::size_t count = 91;
  } sweep;

  struct Ssfm {
    double step_length = 100.0;  // m
    std::size_t pad_factor = 4;
  } ssfm;

  struct Validate {
    std::vector<double> rates;  // empty = lowest, middle and highest sweep rate
    std::size_t n_t = 129;      // reference grid; n_t - 1 must be a power of two
    std::size_t n_zeta = 11;
  } validate;

  ComplexityParams complexity;
  std::vector<double> complexity_distances{1e4, 2e4, 5e4, 1e5, 2e5, 5e5, 1e6};

  /// Throws kInvalidConfig naming the offending key.
  void validate_all() const;
};

nlohmann::json to_json(const RunConfig& cfg);

/// Overlays j on the defaults. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);

/// Applies "a.b.c=value" to j. The value is parsed as JSON when possible and
/// taken as a string otherwise. The key must already exist in the defaults.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Defaults, then the file (when non-empty), then each override in order.
RunConfig load_config(const std::filesystem::path& path,
                      std::span<const std::string> overrides = {});

FiberParams fiber_params(const RunConfig& cfg);
std::vector<int> bit_pattern(const RunConfig& cfg);
double kappa2(const RunConfig& cfg);

/// Normalized launch waveform f(t) (independent of the bit rate).
std::function<double(double)> launch_waveform(const RunConfig& cfg);

Grid training_grid(const RunConfig& cfg);
Grid validation_grid(const RunConfig& cfg);

SignalSpec signal_spec(const RunConfig& cfg, double bit_rate);
NormalizationMap normalization(const RunConfig& cfg, double bit_rate);
NlseCoefficients coefficients(const RunConfig& cfg, double bit_rate);

/// Coefficient map, training grid and boundary samples of the whole family.
ParametricProblem parametric_problem(const RunConfig& cfg);

TrainConfig train_config(const RunConfig& cfg);
GreedyConfig greedy_config(const RunConfig& cfg);

/// count rates uniformly spaced on [min_rate, max_rate].
std::vector<double> sweep_rates(const RunConfig& cfg);
std::vector<double> validation_rates(const RunConfig& cfg);

/// Split-step reference for one rate on the validation grid.
GriddedField reference_on_validation_grid(const RunConfig& cfg, double bit_rate);

}  // namespace fiberpinn
