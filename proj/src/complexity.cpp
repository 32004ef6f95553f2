#include "fiberpinn/complexity.hpp"

#include <algorithm>
#include <cmath>

#include "fiberpinn/error.hpp"
#include "fiberpinn/fft.hpp"

namespace fiberpinn {

void ComplexityParams::validate() const {
  if (n_rates < 1 || m_t < 1 || m_zeta < 1 || hidden_layers < 1 || neurons < 1) {
    throw Error(ErrorCode::kInvalidConfig, "complexity counts must be >= 1");
  }
  if (!(l_unit > 0.0)) throw Error(ErrorCode::kInvalidConfig, "l_unit must be > 0");
  if (!(l_max >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "l_max must be >= 0");
  if (!(n_dispersion >= 0.0) || !(n_nonlinear >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "per-step MAC counts must be >= 0");
  }
}

std::string ComplexityParams::warning() const {
  if (is_power_of_two(m_t)) return {};
  return "m_t = " + std::to_string(m_t) +
         " is not a power of two; 4 M_t log2 M_t is evaluated on the real value";
}

double mac_ssfm(const ComplexityParams& p) {
  p.validate();
  const auto m = static_cast<double>(p.m_t);
  return static_cast<double>(p.n_rates) * (p.l_max / p.l_unit) *
         (4.0 * m * std::log2(m) + p.n_dispersion + p.n_nonlinear);
}

double mac_pinn_per_rate_family(const ComplexityParams& p) {
  p.validate();
  const auto t = static_cast<double>(p.n_rates);
  const auto n = static_cast<double>(p.neurons);
  return 2.0 * t * n + t * static_cast<double>(p.hidden_layers - 1) * n * n;
}

double mac_parameterized(const ComplexityParams& p) {
  p.validate();
  const auto b = static_cast<double>(p.n_bases);
  const auto n = static_cast<double>(p.neurons);
  return 2.0 * b * n + b * static_cast<double>(p.hidden_layers - 1) * n * n + 2.0 * b;
}

std::vector<ComplexityRow> comparison_table(const ComplexityParams& p,
                                            std::span<const double> distances) {
  if (distances.empty()) throw Error(ErrorCode::kInvalidConfig, "no distances given");
  std::vector<double> sorted(distances.begin(), distances.end());
  std::sort(sorted.begin(), sorted.end());
  const double c_f = mac_pinn_per_rate_family(p);
  const double c_pf = mac_parameterized(p);
  std::vector<ComplexityRow> rows;
  for (double d : sorted) {
    ComplexityParams at = p;
    at.l_max = d;
    rows.push_back({d, mac_ssfm(at), c_f, c_pf});
  }
  return rows;
}

}  // namespace fiberpinn
