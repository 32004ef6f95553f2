#include "fiberpinn/physical_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fiberpinn/error.hpp"

namespace fiberpinn {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

bool uniformly_spaced(const std::vector<double>& v) {
  if (v.size() < 2) return true;
  const double h = (v.back() - v.front()) / static_cast<double>(v.size() - 1);
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs((v[i] - v[i - 1]) - h) > 1e-9 * std::abs(h)) return false;
  }
  return true;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + h * static_cast<double>(i);
  out.back() = hi;
  return out;
}

// C-infinity step on [0, 1]: 0 at 0, 1 at 1, 1/2 at 1/2, every derivative
// zero at both ends.
double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x);
  const double b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

}  // namespace

FiberParams derive_fiber_params(double alpha, double beta2, double beta3,
                                double n2, double a_eff, double lambda_c) {
  if (!(a_eff > 0.0)) fail(ErrorCode::kInvalidParameter, "a_eff must be > 0");
  if (!(lambda_c > 0.0)) {
    fail(ErrorCode::kInvalidParameter, "lambda_c must be > 0");
  }
  if (!(alpha >= 0.0)) fail(ErrorCode::kInvalidParameter, "alpha must be >= 0");
  if (!(n2 >= 0.0)) fail(ErrorCode::kInvalidParameter, "n2 must be >= 0");
  if (!std::isfinite(beta2) || !std::isfinite(beta3)) {
    fail(ErrorCode::kInvalidParameter, "dispersion constants must be finite");
  }
  FiberParams p;
  p.alpha = alpha;
  p.beta2 = beta2;
  p.beta3 = beta3;
  p.n2 = n2;
  p.a_eff = a_eff;
  p.lambda_c = lambda_c;
  const double omega_c = 2.0 * kPi * kSpeedOfLight / lambda_c;
  p.gamma = n2 * omega_c / (kSpeedOfLight * a_eff);
  return p;
}

FiberParams standard_single_mode_fiber() {
  return derive_fiber_params(4.605e-5, -2e-26, -2e-38, 2.6e-20, 8e-11, 1.55e-6);
}

void SignalSpec::validate() const {
  if (!(bit_rate > 0.0)) fail(ErrorCode::kInvalidParameter, "bit_rate must be > 0");
  if (!(peak_power > 0.0)) {
    fail(ErrorCode::kInvalidParameter, "peak_power must be > 0");
  }
  if (pattern.empty()) fail(ErrorCode::kInvalidParameter, "pattern is empty");
  for (int b : pattern) {
    if (b != 0 && b != 1) fail(ErrorCode::kInvalidParameter, "pattern bits must be 0 or 1");
  }
  if (!(edge_fraction >= 0.0 && edge_fraction <= 0.5)) {
    fail(ErrorCode::kInvalidParameter, "edge_fraction must lie in [0, 0.5]");
  }
}

NormalizationMap compute_normalization(const FiberParams& fiber,
                                       const SignalSpec& spec, double l_max,
                                       double t_max) {
  if (fiber.beta2 == 0.0) {
    fail(ErrorCode::kDegenerateDispersion,
         "beta2 = 0: dispersion length is undefined");
  }
  if (!(spec.bit_rate > 0.0)) fail(ErrorCode::kInvalidParameter, "bit_rate must be > 0");
  if (!(spec.peak_power > 0.0)) {
    fail(ErrorCode::kInvalidParameter, "peak_power must be > 0");
  }
  if (!(l_max > 0.0)) fail(ErrorCode::kInvalidParameter, "l_max must be > 0");
  if (!(t_max > 0.0)) fail(ErrorCode::kInvalidParameter, "t_max must be > 0");

  NormalizationMap m;
  m.l_d = 1.0 / (spec.bit_rate * spec.bit_rate * std::abs(fiber.beta2));
  const double gp = fiber.gamma * spec.peak_power;
  m.l_nl = gp > 0.0 ? 1.0 / gp : std::numeric_limits<double>::infinity();
  m.l_max = l_max;
  m.t_max = t_max;
  m.kappa1 = l_max / m.l_d;
  m.kappa2 = t_max * spec.bit_rate;
  m.p0 = spec.peak_power;
  if (!std::isfinite(m.kappa1) || !std::isfinite(m.kappa2) || !(m.kappa1 > 0.0) ||
      !(m.kappa2 > 0.0)) {
    fail(ErrorCode::kInvalidParameter, "normalization produced non-finite kappa");
  }
  return m;
}

EquationTerms NlseCoefficients::terms() const {
  EquationTerms e;
  e.zeta = a1;
  e.damping = kappa1 * a2;
  e.dispersion = kappa1 * a3 / (kappa2 * kappa2);
  e.third_order = kappa1 * a4 / (kappa2 * kappa2 * kappa2);
  e.kerr = kappa1 * a5;
  return e;
}

NlseCoefficients compute_coefficients(const NormalizationMap& map,
                                      const FiberParams& fiber,
                                      double bit_rate) {
  if (fiber.beta2 == 0.0) {
    fail(ErrorCode::kDegenerateDispersion, "beta2 = 0: coefficients undefined");
  }
  if (!(bit_rate > 0.0) || !(map.l_d > 0.0)) {
    fail(ErrorCode::kInvalidParameter, "invalid normalization map");
  }
  const double sign_b2 = fiber.beta2 > 0.0 ? 1.0 : -1.0;
  NlseCoefficients c;
  c.a1 = 1.0;
  c.a2 = fiber.alpha * map.l_d / 2.0;
  c.a3 = -sign_b2 / 2.0;
  c.a4 = -fiber.beta3 * map.l_d * bit_rate * bit_rate * bit_rate / 6.0;
  // L_D / L_NL, written without the division so that gamma = 0 gives 0.
  c.a5 = fiber.gamma * map.p0 * map.l_d;
  c.kappa1 = map.kappa1;
  c.kappa2 = map.kappa2;
  c.bit_rate = bit_rate;
  for (double v : {c.a2, c.a4, c.a5, c.kappa1, c.kappa2}) {
    if (!std::isfinite(v)) {
      fail(ErrorCode::kInvalidParameter, "non-finite equation coefficient");
    }
  }
  return c;
}

Grid Grid::from_nodes(std::vector<double> t_nodes,
                      std::vector<double> zeta_nodes,
                      std::vector<std::size_t> initial_indices) {
  if (t_nodes.size() < 2 || zeta_nodes.size() < 2) {
    fail(ErrorCode::kInvalidGrid, "grid needs at least two nodes per axis");
  }
  if (!strictly_increasing(t_nodes) || !strictly_increasing(zeta_nodes)) {
    fail(ErrorCode::kInvalidGrid, "grid nodes must be strictly increasing");
  }
  if (t_nodes.front() < -1.0 || t_nodes.back() > 1.0) {
    fail(ErrorCode::kInvalidGrid, "t nodes must lie in [-1, 1]");
  }
  if (zeta_nodes.front() != 0.0 || zeta_nodes.back() > 1.0) {
    fail(ErrorCode::kInvalidGrid, "zeta nodes must start at 0 and lie in [0, 1]");
  }
  if (initial_indices.empty()) {
    fail(ErrorCode::kInvalidGrid, "at least one initial-condition node is required");
  }
  for (std::size_t i = 0; i < initial_indices.size(); ++i) {
    if (initial_indices[i] >= t_nodes.size() ||
        (i > 0 && initial_indices[i] <= initial_indices[i - 1])) {
      fail(ErrorCode::kInvalidGrid, "initial indices must be increasing t-node indices");
    }
  }
  Grid g;
  g.t_nodes = std::move(t_nodes);
  g.zeta_nodes = std::move(zeta_nodes);
  g.initial_indices = std::move(initial_indices);
  return g;
}

bool Grid::is_uniform() const {
  return uniformly_spaced(t_nodes) && uniformly_spaced(zeta_nodes);
}

Grid build_grid(std::size_t n_t, std::size_t n_zeta, std::size_t n_initial) {
  if (n_t < 2 || n_zeta < 2 || n_initial < 1 || n_initial > n_t) {
    std::ostringstream msg;
    msg << "invalid grid sizes (n_t=" << n_t << ", n_zeta=" << n_zeta
        << ", n_initial=" << n_initial << ")";
    fail(ErrorCode::kInvalidGrid, msg.str());
  }
  std::vector<std::size_t> idx(n_initial);
  if (n_initial == 1) {
    idx[0] = (n_t - 1) / 2;
  } else {
    const double step = static_cast<double>(n_t - 1) / static_cast<double>(n_initial - 1);
    for (std::size_t k = 0; k < n_initial; ++k) {
      idx[k] = static_cast<std::size_t>(std::lround(step * static_cast<double>(k)));
    }
  }
  return Grid::from_nodes(linspace(-1.0, 1.0, n_t), linspace(0.0, 1.0, n_zeta),
                          std::move(idx));
}

double GriddedField::max_amplitude() const {
  double m = 0.0;
  for (std::size_t k = 0; k < real_part.size(); ++k) {
    m = std::max(m, std::hypot(real_part[k], imag_part[k]));
  }
  return m;
}

double relative_l2(const GriddedField& a, const GriddedField& reference) {
  if (a.real_part.size() != reference.real_part.size()) {
    fail(ErrorCode::kInvalidGrid, "relative_l2: field shapes differ");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < a.real_part.size(); ++k) {
    const double dr = a.real_part[k] - reference.real_part[k];
    const double di = a.imag_part[k] - reference.imag_part[k];
    num += dr * dr + di * di;
    den += reference.real_part[k] * reference.real_part[k] +
           reference.imag_part[k] * reference.imag_part[k];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

double ook_waveform(std::span<const int> pattern, double edge_fraction,
                    double t) {
  const auto n = static_cast<long>(pattern.size());
  if (n == 0) return 0.0;
  auto bit = [&](long m) -> double {
    return (m >= 0 && m < n) ? static_cast<double>(pattern[static_cast<std::size_t>(m)]) : 0.0;
  };
  const double slot = 2.0 / static_cast<double>(n);
  const double width = edge_fraction * slot;
  const double u = (t + 1.0) / slot;
  const long boundary = std::lround(u);
  const double offset = t - (-1.0 + static_cast<double>(boundary) * slot);
  const double left = bit(boundary - 1);
  const double right = bit(boundary);
  if (left != right && std::abs(offset) <= 0.5 * width) {
    if (width == 0.0) return 0.5 * (left + right);
    return left + (right - left) * smooth_step((offset + 0.5 * width) / width);
  }
  return bit(static_cast<long>(std::floor(u)));
}

std::vector<double> ook_initial_condition(std::span<const int> pattern,
                                          double edge_fraction,
                                          const Grid& grid) {
  std::vector<double> out(grid.n_t());
  for (std::size_t i = 0; i < grid.n_t(); ++i) {
    out[i] = ook_waveform(pattern, edge_fraction, grid.t_nodes[i]);
  }
  return out;
}

double gaussian_waveform(double width, double t) {
  return std::exp(-t * t / (2.0 * width * width));
}

std::vector<int> pseudo_random_pattern(std::size_t n_bits, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<int> bits(n_bits);
  for (auto& b : bits) b = static_cast<int>(engine() >> 63);
  return bits;
}

std::vector<double> boundary_samples(std::span<const double> waveform,
                                     const Grid& grid) {
  if (waveform.size() != grid.n_t()) {
    fail(ErrorCode::kInvalidGrid, "waveform length differs from the t-node count");
  }
  std::vector<double> out;
  out.reserve(grid.n_initial());
  for (std::size_t i : grid.initial_indices) out.push_back(waveform[i]);
  return out;
}

}  // namespace fiberpinn
