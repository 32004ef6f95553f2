#pragma once

// Split-step Fourier reference solver for the physical NLSE and a
// finite-difference residual evaluator for the normalized equation.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fiberpinn/physical_model.hpp"

namespace fiberpinn {

enum class SplitScheme {
  kSymmetric,  // half linear, full nonlinear, half linear (2nd order)
  kSimple,     // full linear, then full nonlinear (1st order)
};

struct SsfmConfig {
  double step_length = 100.0;         // m, upper bound on each step
  std::size_t n_time_samples = 2048;  // power of two
  double window = 0.0;                // s, total periodic time window
  SplitScheme scheme = SplitScheme::kSymmetric;

  void validate() const;
  double dt() const { return window / static_cast<double>(n_time_samples); }
};

/// Sample instants -window/2 + j * dt, j = 0..n-1.
std::vector<double> sample_times(const SsfmConfig& cfg);

struct FieldSnapshot {
  double z = 0.0;  // m
  std::vector<std::complex<double>> field;  // sqrt(W)
};

struct FieldEvolution {
  double t_start = 0.0;  // s, time of sample 0
  double dt = 0.0;       // s
  std::vector<FieldSnapshot> snapshots;
};

/// Integrates the physical equation over [0, distance]. Steps are shortened
/// so that every requested snapshot distance (and the final distance) is
/// landed on exactly; the launch field is always the first snapshot.
FieldEvolution propagate(std::span<const std::complex<double>> launch,
                         const FiberParams& fiber, double distance,
                         const SsfmConfig& cfg,
                         std::span<const double> snapshot_distances);

/// Resamples an evolution onto the normalized grid: zeta nodes must coincide
/// with snapshots (z = L_max zeta); time is linearly interpolated at
/// T = T_max t; amplitudes are divided by sqrt(P0).
GriddedField to_normalized(const FieldEvolution& evolution,
                           const NormalizationMap& map, const Grid& grid);

/// Window/sample layout that places every grid t node exactly on an SSFM
/// sample: the window spans pad_factor * 2 T_max and the sample spacing is
/// T_max / (n_t - 1) (half the grid spacing). Requires a uniform grid whose
/// resulting sample count is a power of two.
SsfmConfig aligned_ssfm_config(const NormalizationMap& map, const Grid& grid,
                               std::size_t pad_factor, double step_length);

/// Launches sqrt(P0) * waveform(T / T_max), propagates over L_max with a
/// snapshot at every zeta node and returns the normalized field on grid.
GriddedField reference_field(const std::function<double(double)>& waveform,
                             const FiberParams& fiber, const NormalizationMap& map,
                             const Grid& grid, const SsfmConfig& cfg);

/// Mean of |residual|^2 of the normalized equation over interior nodes, with
/// second-order central differences for s_zeta and s_tt and the five-point
/// central stencil for s_ttt. Requires a uniform grid with n_t >= 6 and
/// n_zeta >= 3.
double nlse_residual_fd(const GriddedField& field,
                        const NlseCoefficients& coeffs, const Grid& grid);

/// Sum of |A|^2 dt; conserved when alpha = 0.
double field_energy(std::span<const std::complex<double>> field, double dt);

}  // namespace fiberpinn
