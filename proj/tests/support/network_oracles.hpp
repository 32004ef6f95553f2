#pragma once

// Finite-difference oracles for network input derivatives and parameter
// gradients, shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fiberpinn/network.hpp"
#include "fiberpinn/trainer.hpp"

namespace oracle {

namespace fp = fiberpinn;

/// Random architecture [2, h1, (h2), 2] with hidden widths in [1, 16], Xavier
/// weights and random biases.
inline fp::NetworkParams random_network(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> width(1, 16);
  std::uniform_int_distribution<int> depth(1, 2);
  std::vector<std::size_t> sizes{2};
  for (int k = depth(rng); k > 0; --k) sizes.push_back(width(rng));
  sizes.push_back(2);
  fp::NetworkParams p = fp::init_network(sizes, rng());
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    const auto off = fp::layer_offsets(p, l);
    for (std::size_t k = 0; k < sizes[l + 1]; ++k) p.values[off.biases + k] = u(rng);
  }
  return p;
}

inline double output(const fp::NetworkParams& p, double t, double z, int k) {
  return fp::forward(p, t, z)[static_cast<std::size_t>(k)];
}

struct DerivativeErrors {
  double d_t = 0, d_tt = 0, d_ttt = 0, d_zeta = 0;
};

inline double rel(double got, double want, double floor) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

/// Largest relative deviation of each order from finite differences of the
/// scalar forward pass at one point: central differences with h = 1e-4 for
/// d_t and d_zeta, Richardson-extrapolated stencils for d_tt and d_ttt.
/// Entries below 1e-3 (or 1e-3 of the larger output's entry) are compared
/// against that floor so that a derivative crossing zero does not turn
/// rounding noise into a large relative error.
inline DerivativeErrors derivative_errors(const fp::NetworkParams& p, double t, double z) {
  const fp::DerivativeBundle d = fp::input_derivatives(p, t, z);
  DerivativeErrors e;
  const double h1 = 1e-4;
  const double h2 = 1e-2;
  const double h3 = 1e-2;
  auto floor_of = [](const std::array<double, 2>& a) {
    return std::max(1e-3 * std::max(std::abs(a[0]), std::abs(a[1])), 1e-3);
  };
  for (int k = 0; k < 2; ++k) {
    const auto i = static_cast<std::size_t>(k);
    auto f = [&](double tt) { return output(p, tt, z, k); };
    const double fd_t = (f(t + h1) - f(t - h1)) / (2 * h1);
    auto tt = [&](double h) { return (f(t + h) - 2 * f(t) + f(t - h)) / (h * h); };
    const double fd_tt = (4 * tt(h2 / 2) - tt(h2)) / 3;
    auto ttt = [&](double h) {
      return (f(t + 2 * h) - 2 * f(t + h) + 2 * f(t - h) - f(t - 2 * h)) / (2 * h * h * h);
    };
    // Richardson extrapolation removes the O(h^2) term of the 5-point stencil.
    const double fd_ttt = (4 * ttt(h3 / 2) - ttt(h3)) / 3;
    const double fd_z = (output(p, t, z + h1, k) - output(p, t, z - h1, k)) / (2 * h1);
    e.d_t = std::max(e.d_t, rel(d.d_t[i], fd_t, floor_of(d.d_t)));
    e.d_tt = std::max(e.d_tt, rel(d.d_tt[i], fd_tt, floor_of(d.d_tt)));
    e.d_ttt = std::max(e.d_ttt, rel(d.d_ttt[i], fd_ttt, floor_of(d.d_ttt)));
    e.d_zeta = std::max(e.d_zeta, rel(d.d_zeta[i], fd_z, floor_of(d.d_zeta)));
  }
  return e;
}

/// Loss touching every bundle entry: residual of a generic equation over a
/// small batch plus a boundary mismatch on its first points.
struct TestLoss {
  std::vector<fp::CollocationPoint> points;
  fp::EquationTerms terms;
  std::vector<double> targets;

  fp::PointTerm operator()(std::size_t k, const fp::DerivativeBundle& d) const {
    fp::PointTerm out = fp::residual_point_term(d, terms, 1.0 / static_cast<double>(points.size()));
    if (k < targets.size()) {
      const fp::PointTerm b = fp::boundary_point_term(d, targets[k], 0.5);
      out.value += b.value;
      out.adjoint += b.adjoint;
    }
    // Extra linear and quadratic pieces so that d_t also carries an adjoint.
    out.value += 0.3 * d.d_t[0] + 0.1 * d.d_t[1] * d.d_t[1];
    out.adjoint.d_t[0] += 0.3;
    out.adjoint.d_t[1] += 0.2 * d.d_t[1];
    return out;
  }

  double value(const fp::NetworkParams& p) const {
    const auto bundles = fp::input_derivatives(p, points);
    double s = 0;
    for (std::size_t k = 0; k < bundles.size(); ++k) s += (*this)(k, bundles[k]).value;
    return s;
  }
};

inline TestLoss random_loss(std::mt19937_64& rng, std::size_t n_points) {
  std::uniform_real_distribution<double> t(-1, 1), z(0, 1), c(-1, 1);
  TestLoss loss;
  for (std::size_t k = 0; k < n_points; ++k) loss.points.push_back({t(rng), z(rng)});
  loss.terms = {1.0, c(rng), c(rng), c(rng), c(rng)};
  for (std::size_t k = 0; k < n_points / 2; ++k) loss.targets.push_back(c(rng));
  return loss;
}

/// Largest relative deviation of the reverse-mode gradient from central
/// differences (h = 1e-5) over all parameters. Entries much smaller than the
/// gradient's largest entry are compared against a floor of 1e-6 of it.
inline double gradient_error(const fp::NetworkParams& p, const TestLoss& loss) {
  const fp::LossGradient g = fp::loss_gradient(
      p, loss.points, [&](std::size_t k, const fp::DerivativeBundle& d) { return loss(k, d); });
  double g_max = 0;
  for (double v : g.gradient) g_max = std::max(g_max, std::abs(v));
  const double h = 1e-5;
  double worst = 0;
  fp::NetworkParams q = p;
  for (std::size_t k = 0; k < p.values.size(); ++k) {
    q.values[k] = p.values[k] + h;
    const double up = loss.value(q);
    q.values[k] = p.values[k] - h;
    const double down = loss.value(q);
    q.values[k] = p.values[k];
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, rel(g.gradient[k], fd, std::max(1e-6 * g_max, 1e-9)));
  }
  return worst;
}

}  // namespace oracle
