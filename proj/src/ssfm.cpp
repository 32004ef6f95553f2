#include "fiberpinn/ssfm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fiberpinn/error.hpp"
#include "fiberpinn/fft.hpp"

namespace fiberpinn {

namespace {

using cd = std::complex<double>;

// Spectral propagator exp(L(w) h) for the linear part
//   A_z = -(alpha/2) A - i (beta2/2) A_TT + (beta3/6) A_TTT,
// with d/dT -> i w in the FFT convention used by FftPlan.
std::vector<cd> linear_propagator(const std::vector<double>& omega,
                                  const FiberParams& fiber, double h) {
  std::vector<cd> out(omega.size());
  for (std::size_t k = 0; k < omega.size(); ++k) {
    const double w = omega[k];
    const cd exponent(-0.5 * fiber.alpha,
                      0.5 * fiber.beta2 * w * w - fiber.beta3 * w * w * w / 6.0);
    out[k] = std::exp(exponent * h);
  }
  return out;
}

void apply_linear(std::vector<cd>& field, const std::vector<cd>& propagator,
                  const FftPlan& fft) {
  fft.forward(field);
  for (std::size_t k = 0; k < field.size(); ++k) field[k] *= propagator[k];
  fft.inverse(field);
}

void apply_nonlinear(std::vector<cd>& field, double gamma, double h) {
  if (gamma == 0.0) return;
  for (auto& a : field) a *= std::polar(1.0, gamma * std::norm(a) * h);
}

bool all_finite(const std::vector<cd>& field) {
  return std::all_of(field.begin(), field.end(), [](const cd& a) {
    return std::isfinite(a.real()) && std::isfinite(a.imag());
  });
}

}  // namespace

void SsfmConfig::validate() const {
  if (!(step_length > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "ssfm step_length must be > 0");
  }
  if (n_time_samples < 8 || !is_power_of_two(n_time_samples)) {
    throw Error(ErrorCode::kInvalidConfig,
                "ssfm n_time_samples must be a power of two >= 8");
  }
  if (!(window > 0.0)) throw Error(ErrorCode::kInvalidConfig, "ssfm window must be > 0");
}

std::vector<double> sample_times(const SsfmConfig& cfg) {
  std::vector<double> t(cfg.n_time_samples);
  const double dt = cfg.dt();
  for (std::size_t j = 0; j < t.size(); ++j) {
    t[j] = -0.5 * cfg.window + static_cast<double>(j) * dt;
  }
  return t;
}

FieldEvolution propagate(std::span<const cd> launch, const FiberParams& fiber,
                         double distance, const SsfmConfig& cfg,
                         std::span<const double> snapshot_distances) {
  cfg.validate();
  if (launch.size() != cfg.n_time_samples) {
    throw Error(ErrorCode::kInvalidConfig, "launch length differs from n_time_samples");
  }
  if (!(distance >= 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "distance must be >= 0");
  }
  std::vector<double> stops;
  for (double z : snapshot_distances) {
    if (!(z >= 0.0 && z <= distance * (1.0 + 1e-12))) {
      throw Error(ErrorCode::kInvalidParameter, "snapshot distance outside [0, distance]");
    }
    stops.push_back(std::min(z, distance));
  }
  stops.push_back(distance);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  FieldEvolution ev;
  ev.dt = cfg.dt();
  ev.t_start = -0.5 * cfg.window;
  std::vector<cd> field(launch.begin(), launch.end());
  ev.snapshots.push_back({0.0, field});

  const FftPlan fft(cfg.n_time_samples);
  const std::vector<double> omega = angular_frequencies(cfg.n_time_samples, ev.dt);
  const bool symmetric = cfg.scheme == SplitScheme::kSymmetric;

  double cached_h = -1.0;
  std::vector<cd> propagator;
  std::size_t step_index = 0;
  double z = 0.0;
  for (double stop : stops) {
    const double segment = stop - z;
    if (segment <= 0.0) continue;
    const auto n_steps = static_cast<std::size_t>(
        std::max(1.0, std::ceil(segment / cfg.step_length - 1e-9)));
    const double h = segment / static_cast<double>(n_steps);
    if (h != cached_h) {
      propagator = linear_propagator(omega, fiber, symmetric ? 0.5 * h : h);
      cached_h = h;
    }
    for (std::size_t s = 0; s < n_steps; ++s, ++step_index) {
      apply_linear(field, propagator, fft);
      apply_nonlinear(field, fiber.gamma, h);
      if (symmetric) apply_linear(field, propagator, fft);
      if (!all_finite(field)) {
        std::ostringstream msg;
        msg << "ssfm diverged at step " << step_index << " (z = " << z + (s + 1) * h
            << " m)";
        throw Error(ErrorCode::kDivergence, msg.str());
      }
    }
    z = stop;
    ev.snapshots.push_back({stop, field});
  }
  return ev;
}

GriddedField to_normalized(const FieldEvolution& evolution,
                           const NormalizationMap& map, const Grid& grid) {
  if (evolution.snapshots.empty()) {
    throw Error(ErrorCode::kCoverage, "evolution has no snapshots");
  }
  const std::size_t n_samples = evolution.snapshots.front().field.size();
  const double z_tol = 1e-9 * std::max(map.l_max, 1.0);
  const double inv_sqrt_p0 = 1.0 / std::sqrt(map.p0);
  GriddedField out(grid);

  // Per-t-node interpolation stencil, shared by every snapshot.
  std::vector<std::size_t> lo(grid.n_t());
  std::vector<double> frac(grid.n_t());
  for (std::size_t i = 0; i < grid.n_t(); ++i) {
    const double x = (grid.t_nodes[i] * map.t_max - evolution.t_start) / evolution.dt;
    if (x < -1e-9 || x > static_cast<double>(n_samples - 1) + 1e-9) {
      std::ostringstream msg;
      msg << "t node " << grid.t_nodes[i] << " lies outside the simulated window";
      throw Error(ErrorCode::kCoverage, msg.str());
    }
    const double r = std::round(x);
    if (std::abs(x - r) < 1e-9) {
      lo[i] = static_cast<std::size_t>(r);
      frac[i] = 0.0;
    } else {
      lo[i] = static_cast<std::size_t>(std::floor(x));
      frac[i] = x - std::floor(x);
    }
  }

  for (std::size_t j = 0; j < grid.n_zeta(); ++j) {
    const double z = map.l_max * grid.zeta_nodes[j];
    const auto it = std::find_if(
        evolution.snapshots.begin(), evolution.snapshots.end(),
        [&](const FieldSnapshot& s) { return std::abs(s.z - z) <= z_tol; });
    if (it == evolution.snapshots.end()) {
      std::ostringstream msg;
      msg << "no snapshot at z = " << z << " m (zeta = " << grid.zeta_nodes[j] << ")";
      throw Error(ErrorCode::kCoverage, msg.str());
    }
    for (std::size_t i = 0; i < grid.n_t(); ++i) {
      cd value = it->field[lo[i]];
      if (frac[i] != 0.0) {
        value = (1.0 - frac[i]) * value + frac[i] * it->field[lo[i] + 1];
      }
      out.set(i, j, value * inv_sqrt_p0);
    }
  }
  return out;
}

SsfmConfig aligned_ssfm_config(const NormalizationMap& map, const Grid& grid,
                               std::size_t pad_factor, double step_length) {
  if (!grid.is_uniform() || grid.n_t() < 2 || pad_factor < 1) {
    throw Error(ErrorCode::kInvalidGrid, "aligned SSFM layout needs a uniform grid");
  }
  const double lo = grid.t_nodes.front();
  const double hi = grid.t_nodes.back();
  if (std::abs(lo + 1.0) > 1e-12 || std::abs(hi - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidGrid, "aligned SSFM layout needs t nodes spanning [-1, 1]");
  }
  SsfmConfig cfg;
  cfg.n_time_samples = 2 * pad_factor * (grid.n_t() - 1);
  cfg.window = 2.0 * static_cast<double>(pad_factor) * map.t_max;
  cfg.step_length = step_length;
  cfg.validate();
  return cfg;
}

GriddedField reference_field(const std::function<double(double)>& waveform,
                             const FiberParams& fiber, const NormalizationMap& map,
                             const Grid& grid, const SsfmConfig& cfg) {
  cfg.validate();
  const double amplitude = std::sqrt(map.p0);
  const std::vector<double> times = sample_times(cfg);
  std::vector<cd> launch(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    launch[j] = amplitude * waveform(times[j] / map.t_max);
  }
  std::vector<double> stops;
  for (double zeta : grid.zeta_nodes) stops.push_back(zeta * map.l_max);
  const FieldEvolution ev = propagate(launch, fiber, map.l_max, cfg, stops);
  return to_normalized(ev, map, grid);
}

double nlse_residual_fd(const GriddedField& field,
                        const NlseCoefficients& coeffs, const Grid& grid) {
  if (grid.n_t() < 6 || grid.n_zeta() < 3 || !grid.is_uniform()) {
    throw Error(ErrorCode::kInvalidGrid,
                "finite-difference residual needs a uniform grid with n_t >= 6, n_zeta >= 3");
  }
  if (field.n_t != grid.n_t() || field.n_zeta != grid.n_zeta()) {
    throw Error(ErrorCode::kInvalidGrid, "field shape differs from grid");
  }
  const EquationTerms e = coeffs.terms();
  const double dt = grid.t_nodes[1] - grid.t_nodes[0];
  const double dz = grid.zeta_nodes[1] - grid.zeta_nodes[0];
  const cd i1(0.0, 1.0);

  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 1; j + 1 < grid.n_zeta(); ++j) {
    for (std::size_t i = 2; i + 2 < grid.n_t(); ++i) {
      const cd s = field.at(i, j);
      const cd s_z = (field.at(i, j + 1) - field.at(i, j - 1)) / (2.0 * dz);
      const cd s_tt =
          (field.at(i + 1, j) - 2.0 * s + field.at(i - 1, j)) / (dt * dt);
      const cd s_ttt = (field.at(i + 2, j) - 2.0 * field.at(i + 1, j) +
                        2.0 * field.at(i - 1, j) - field.at(i - 2, j)) /
                       (2.0 * dt * dt * dt);
      const cd r = i1 * e.zeta * s_z + i1 * e.damping * s + e.dispersion * s_tt +
                   i1 * e.third_order * s_ttt + e.kerr * std::norm(s) * s;
      sum += std::norm(r);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

double field_energy(std::span<const cd> field, double dt) {
  double e = 0.0;
  for (const cd& a : field) e += std::norm(a);
  return e * dt;
}

}  // namespace fiberpinn
