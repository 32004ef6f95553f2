#pragma once

// Fiber constants, the physical-to-normalized coordinate map, the bit-rate
// dependent coefficients of the normalized NLSE, the (t, zeta) collocation
// grid and launch waveforms.
//
// Physical model (retarded frame, SI units):
//   i S_z + i (alpha/2) S - (beta2/2) S_TT - i (beta3/6) S_TTT + gamma |S|^2 S = 0
// Normalized model on t in [-1, 1], zeta in [0, 1]:
//   i a1 s_zeta + i k1 a2 s + k1 a3 s_tt / k2^2 + i k1 a4 s_ttt / k2^3
//     + k1 a5 |s|^2 s = 0
// with z = L_max zeta, T = T_max t, S = sqrt(P0) s, k1 = L_max / L_D and
// k2 = T_max R_b.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fiberpinn {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

struct FiberParams {
  double alpha = 0.0;     // 1/m
  double beta2 = 0.0;     // s^2/m
  double beta3 = 0.0;     // s^3/m
  double n2 = 0.0;        // m^2/W
  double a_eff = 0.0;     // m^2
  double lambda_c = 0.0;  // m
  double gamma = 0.0;     // 1/(W m), derived
};

/// gamma = n2 * omega_c / (c * a_eff) with omega_c = 2 pi c / lambda_c.
FiberParams derive_fiber_params(double alpha, double beta2, double beta3,
                                double n2, double a_eff, double lambda_c);

/// Standard single-mode fiber constants used throughout the experiments.
FiberParams standard_single_mode_fiber();

struct SignalSpec {
  double bit_rate = 10e9;    // bits/s
  double peak_power = 1e-2;  // W
  std::vector<int> pattern;  // 0 = space, 1 = mark
  double edge_fraction = 0.1;

  /// Throws kInvalidParameter when an invariant is violated.
  void validate() const;
};

struct NormalizationMap {
  double l_d = 0.0;    // dispersion length, m
  double l_nl = 0.0;   // nonlinear length, m (+inf when gamma * P0 == 0)
  double l_max = 0.0;  // m
  double t_max = 0.0;  // half time window, s
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double p0 = 0.0;  // W
};

NormalizationMap compute_normalization(const FiberParams& fiber,
                                       const SignalSpec& spec, double l_max,
                                       double t_max);

/// Multipliers of each term of the normalized equation, i.e. the residual is
///   i*zeta*s_zeta + i*damping*s + dispersion*s_tt + i*third_order*s_ttt
///     + kerr*|s|^2 s.
struct EquationTerms {
  double zeta = 1.0;
  double damping = 0.0;
  double dispersion = 0.0;
  double third_order = 0.0;
  double kerr = 0.0;
};

struct NlseCoefficients {
  double a1 = 1.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double a4 = 0.0;
  double a5 = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 1.0;
  double bit_rate = 0.0;

  EquationTerms terms() const;
};

NlseCoefficients compute_coefficients(const NormalizationMap& map,
                                      const FiberParams& fiber,
                                      double bit_rate);

/// Collocation grid. Nodes are stored zeta-major: node (i_t, j_zeta) has flat
/// index j_zeta * n_t + i_t.
struct Grid {
  std::vector<double> t_nodes;
  std::vector<double> zeta_nodes;
  std::vector<std::size_t> initial_indices;  // into t_nodes, at zeta = 0

  std::size_t n_t() const { return t_nodes.size(); }
  std::size_t n_zeta() const { return zeta_nodes.size(); }
  std::size_t n_initial() const { return initial_indices.size(); }
  std::size_t size() const { return t_nodes.size() * zeta_nodes.size(); }
  std::size_t index(std::size_t i_t, std::size_t j_zeta) const {
    return j_zeta * t_nodes.size() + i_t;
  }

  /// Grid from explicit node lists; validates every invariant.
  static Grid from_nodes(std::vector<double> t_nodes,
                         std::vector<double> zeta_nodes,
                         std::vector<std::size_t> initial_indices);

  /// True when both axes are uniformly spaced to relative 1e-9.
  bool is_uniform() const;
};

Grid build_grid(std::size_t n_t, std::size_t n_zeta, std::size_t n_initial);

/// Complex samples on a Grid, same zeta-major layout.
struct GriddedField {
  std::size_t n_t = 0;
  std::size_t n_zeta = 0;
  std::vector<double> real_part;
  std::vector<double> imag_part;

  GriddedField() = default;
  GriddedField(std::size_t nt, std::size_t nz)
      : n_t(nt), n_zeta(nz), real_part(nt * nz, 0.0), imag_part(nt * nz, 0.0) {}
  explicit GriddedField(const Grid& grid)
      : GriddedField(grid.n_t(), grid.n_zeta()) {}

  std::complex<double> at(std::size_t i_t, std::size_t j_zeta) const {
    const std::size_t k = j_zeta * n_t + i_t;
    return {real_part[k], imag_part[k]};
  }
  void set(std::size_t i_t, std::size_t j_zeta, std::complex<double> value) {
    const std::size_t k = j_zeta * n_t + i_t;
    real_part[k] = value.real();
    imag_part[k] = value.imag();
  }
  double max_amplitude() const;
};

/// Relative L2 distance ||a - b|| / ||reference||.
double relative_l2(const GriddedField& a, const GriddedField& reference);

/// NRZ on-off keying waveform on normalized time: |pattern| equal slots
/// covering [-1, 1], transitions centered on slot boundaries spanning
/// edge_fraction of a slot. The transition is the smooth step
/// e^{-1/x} / (e^{-1/x} + e^{-1/(1-x)}), so the waveform is infinitely
/// differentiable whenever edge_fraction > 0. Bits outside the window are
/// spaces.
double ook_waveform(std::span<const int> pattern, double edge_fraction,
                    double t);

/// ook_waveform sampled at every t node of the grid.
std::vector<double> ook_initial_condition(std::span<const int> pattern,
                                          double edge_fraction,
                                          const Grid& grid);

/// exp(-t^2 / (2 width^2)); test pulse for linear-regime checks.
double gaussian_waveform(double width, double t);

/// Fixed pseudo-random bit pattern; identical for a given seed on every
/// platform (raw engine bits, no library distributions).
std::vector<int> pseudo_random_pattern(std::size_t n_bits, std::uint64_t seed);

/// Samples at the grid's initial-condition nodes taken from a waveform given
/// on every t node.
std::vector<double> boundary_samples(std::span<const double> waveform,
                                     const Grid& grid);

}  // namespace fiberpinn
