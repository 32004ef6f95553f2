#pragma once

// Multiply-accumulate counts of the split-step solver, one PINN per bit rate,
// and the reduced-basis model.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fiberpinn {

struct ComplexityParams {
  std::size_t n_rates = 91;         // T
  std::size_t m_t = 1024;           // time samples of the split-step solver
  std::size_t m_zeta = 11;          // distance nodes of the PINN grid
  double l_max = 1e5;               // m
  double l_unit = 1e3;              // m, split-step computing unit
  std::size_t hidden_layers = 5;    // K
  std::size_t neurons = 100;        // P
  std::size_t n_bases = 12;         // N_b
  double n_dispersion = 6.0 * 1024; // MACs of one linear step
  double n_nonlinear = 8.0 * 1024;  // MACs of one nonlinear step

  /// Throws kInvalidConfig on counts < 1 (n_bases may be 0), l_unit <= 0 or
  /// l_max < 0.
  void validate() const;
  /// Non-empty when m_t is not a power of two.
  std::string warning() const;
};

/// T * (L_max / L_u) * (4 M_t log2 M_t + N_dispersion + N_nonlinear)
double mac_ssfm(const ComplexityParams& p);

/// 2 T P + T (K - 1) P^2
double mac_pinn_per_rate_family(const ComplexityParams& p);

/// 2 N_b P + N_b (K - 1) P^2 + 2 N_b
double mac_parameterized(const ComplexityParams& p);

struct ComplexityRow {
  double distance = 0.0;  // m
  double c_ssfm = 0.0;
  double c_f = 0.0;
  double c_pf = 0.0;
};

/// One row per distance (sorted ascending); only C_SSFM depends on distance.
std::vector<ComplexityRow> comparison_table(const ComplexityParams& p,
                                            std::span<const double> distances);

}  // namespace fiberpinn
