#include "fiberpinn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace fiberpinn {

namespace {

struct ResidualParts {
  double r_re = 0.0;
  double r_im = 0.0;
};

ResidualParts residual_parts(const DerivativeBundle& d, const EquationTerms& e) {
  const double u = d.value[0];
  const double v = d.value[1];
  const double n = u * u + v * v;
  // r = i X + Y with X = zeta s_z + damping s + third_order s_ttt and
  // Y = dispersion s_tt + kerr |s|^2 s.
  const double x_re = e.zeta * d.d_zeta[0] + e.damping * u + e.third_order * d.d_ttt[0];
  const double x_im = e.zeta * d.d_zeta[1] + e.damping * v + e.third_order * d.d_ttt[1];
  return {-x_im + e.dispersion * d.d_tt[0] + e.kerr * n * u,
          x_re + e.dispersion * d.d_tt[1] + e.kerr * n * v};
}

std::string node_label(const CollocationPoint& p) {
  std::ostringstream s;
  s << "(t = " << p.t << ", zeta = " << p.zeta << ")";
  return s.str();
}

// Points and bookkeeping for one loss evaluation.
struct LossPlan {
  std::vector<CollocationPoint> points;
  std::vector<bool> in_residual;
  std::vector<std::ptrdiff_t> slot;  // boundary slot or -1
  double residual_scale = 0.0;       // 1 / residual node count
  double boundary_scale = 0.0;       // 1 / boundary node count
};

LossPlan full_plan(const Grid& grid) {
  LossPlan plan;
  plan.points = collocation_points(grid);
  plan.in_residual.assign(plan.points.size(), true);
  plan.slot = boundary_slots(grid);
  plan.residual_scale = 1.0 / static_cast<double>(grid.size());
  plan.boundary_scale = 1.0 / static_cast<double>(grid.n_initial());
  return plan;
}

// Random subset of residual nodes plus every boundary node; the sample is a
// function of (seed, epoch) only, so resumed runs draw the same batches.
LossPlan batch_plan(const Grid& grid, const LossPlan& full, std::size_t batch,
                    std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 engine(seq);
  std::vector<std::size_t> order(full.points.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = 0; k < batch; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(engine() % (order.size() - k));
    std::swap(order[k], order[j]);
  }
  std::vector<bool> chosen(full.points.size(), false);
  for (std::size_t k = 0; k < batch; ++k) chosen[order[k]] = true;

  LossPlan plan;
  for (std::size_t k = 0; k < full.points.size(); ++k) {
    if (!chosen[k] && full.slot[k] < 0) continue;
    plan.points.push_back(full.points[k]);
    plan.in_residual.push_back(chosen[k]);
    plan.slot.push_back(full.slot[k]);
  }
  plan.residual_scale = 1.0 / static_cast<double>(batch);
  plan.boundary_scale = 1.0 / static_cast<double>(grid.n_initial());
  return plan;
}

struct Evaluation {
  LossTerms terms;
  std::vector<double> gradient;
};

Evaluation evaluate_plan(const NetworkParams& params, const LossPlan& plan,
                         const EquationTerms& e, std::span<const double> boundary,
                         const LossWeights& w) {
  LossTerms terms;
  const PointLoss point_loss = [&](std::size_t k, const DerivativeBundle& d) {
    PointTerm out;
    if (plan.in_residual[k]) {
      PointTerm r = residual_point_term(d, e, plan.residual_scale);
      if (!std::isfinite(r.value)) {
        throw Error(ErrorCode::kDivergence,
                    "non-finite residual at node " + node_label(plan.points[k]));
      }
      terms.residual += r.value;
      r.adjoint *= w.residual;
      out.value += w.residual * r.value;
      out.adjoint += r.adjoint;
    }
    if (plan.slot[k] >= 0) {
      PointTerm b = boundary_point_term(d, boundary[static_cast<std::size_t>(plan.slot[k])],
                                        plan.boundary_scale);
      terms.boundary += b.value;
      out.value += w.boundary * b.value;
      out.adjoint.add_scaled(b.adjoint, w.boundary);
    }
    return out;
  };
  LossGradient lg = loss_gradient(params, plan.points, point_loss);
  terms.total = lg.loss;
  return {terms, std::move(lg.gradient)};
}

void check_boundary(const Grid& grid, std::span<const double> boundary) {
  if (boundary.size() != grid.n_initial()) {
    throw Error(ErrorCode::kInvalidGrid,
                "boundary has " + std::to_string(boundary.size()) +
                    " samples, grid has " + std::to_string(grid.n_initial()) +
                    " initial nodes");
  }
}

}  // namespace

std::complex<double> equation_residual(const DerivativeBundle& d, const EquationTerms& e) {
  const ResidualParts r = residual_parts(d, e);
  return {r.r_re, r.r_im};
}

PointTerm residual_point_term(const DerivativeBundle& d, const EquationTerms& e,
                              double scale) {
  const ResidualParts r = residual_parts(d, e);
  const double u = d.value[0];
  const double v = d.value[1];
  const double g_re = 2.0 * scale * r.r_re;
  const double g_im = 2.0 * scale * r.r_im;
  PointTerm out;
  out.value = scale * (r.r_re * r.r_re + r.r_im * r.r_im);
  DerivativeBundle& a = out.adjoint;
  a.d_zeta = {e.zeta * g_im, -e.zeta * g_re};
  a.d_tt = {e.dispersion * g_re, e.dispersion * g_im};
  a.d_ttt = {e.third_order * g_im, -e.third_order * g_re};
  a.value = {e.damping * g_im + e.kerr * (g_re * (3.0 * u * u + v * v) + g_im * 2.0 * u * v),
             -e.damping * g_re + e.kerr * (g_re * 2.0 * u * v + g_im * (u * u + 3.0 * v * v))};
  return out;
}

PointTerm boundary_point_term(const DerivativeBundle& d, double target, double scale) {
  const double du = d.value[0] - target;
  const double dv = d.value[1];
  PointTerm out;
  out.value = scale * (du * du + dv * dv);
  out.adjoint.value = {2.0 * scale * du, 2.0 * scale * dv};
  return out;
}

std::vector<CollocationPoint> collocation_points(const Grid& grid) {
  std::vector<CollocationPoint> pts(grid.size());
  for (std::size_t j = 0; j < grid.n_zeta(); ++j) {
    for (std::size_t i = 0; i < grid.n_t(); ++i) {
      pts[grid.index(i, j)] = {grid.t_nodes[i], grid.zeta_nodes[j]};
    }
  }
  return pts;
}

std::vector<std::ptrdiff_t> boundary_slots(const Grid& grid) {
  std::vector<std::ptrdiff_t> slot(grid.size(), -1);
  for (std::size_t k = 0; k < grid.n_initial(); ++k) {
    slot[grid.index(grid.initial_indices[k], 0)] = static_cast<std::ptrdiff_t>(k);
  }
  return slot;
}

LossTerms loss_from_bundles(std::span<const DerivativeBundle> bundles,
                            const EquationTerms& e, const Grid& grid,
                            std::span<const double> boundary, const LossWeights& weights) {
  check_boundary(grid, boundary);
  if (bundles.size() != grid.size()) {
    throw Error(ErrorCode::kInvalidGrid, "bundle count differs from grid size");
  }
  LossTerms terms;
  const double inv_n = 1.0 / static_cast<double>(grid.size());
  for (std::size_t k = 0; k < bundles.size(); ++k) {
    const double r = residual_point_term(bundles[k], e, inv_n).value;
    if (!std::isfinite(r)) {
      const std::size_t i = k % grid.n_t();
      const std::size_t j = k / grid.n_t();
      throw Error(ErrorCode::kDivergence,
                  "non-finite residual at node " +
                      node_label({grid.t_nodes[i], grid.zeta_nodes[j]}));
    }
    terms.residual += r;
  }
  const double inv_b = 1.0 / static_cast<double>(grid.n_initial());
  for (std::size_t k = 0; k < grid.n_initial(); ++k) {
    const DerivativeBundle& d = bundles[grid.index(grid.initial_indices[k], 0)];
    terms.boundary += boundary_point_term(d, boundary[k], inv_b).value;
  }
  terms.total = weights.residual * terms.residual + weights.boundary * terms.boundary;
  return terms;
}

LossTerms pinn_loss(const NetworkParams& params, const NlseCoefficients& coeffs,
                    const Grid& grid, std::span<const double> boundary,
                    const LossWeights& weights) {
  check_boundary(grid, boundary);
  const auto points = collocation_points(grid);
  const auto bundles = input_derivatives(params, points);
  return loss_from_bundles(bundles, coeffs.terms(), grid, boundary, weights);
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw Error(ErrorCode::kInvalidConfig, "max_epochs must be >= 1");
  if (!(loss_threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "loss_threshold must be > 0");
  }
  if (!(weights.residual >= 0.0) || !(weights.boundary >= 0.0) ||
      !std::isfinite(weights.residual) || !std::isfinite(weights.boundary)) {
    throw Error(ErrorCode::kInvalidConfig, "loss weights must be finite and >= 0");
  }
  adam.validate();
}

TrainedBasis train_basis(NetworkParams init, const NlseCoefficients& coeffs,
                         const Grid& grid, std::span<const double> boundary,
                         const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  validate_architecture(init.layer_sizes);
  check_boundary(grid, boundary);
  if (init.values.size() != parameter_count(init.layer_sizes)) {
    throw Error(ErrorCode::kInvalidArchitecture, "parameter vector does not match layer sizes");
  }
  const EquationTerms e = coeffs.terms();
  const LossPlan full = full_plan(grid);
  const bool batched = cfg.batch_size > 0 && cfg.batch_size < grid.size();

  TrainedBasis out;
  out.bit_rate = coeffs.bit_rate;
  out.params = std::move(init);
  if (hooks.resume) {
    out.adam = *hooks.resume;
    if (out.adam.first_moment.size() != out.params.values.size()) {
      throw Error(ErrorCode::kInvalidGradient, "resume state does not match the network");
    }
    out.adam.hyper = cfg.adam;
  } else {
    out.adam = make_adam_state(out.params.values.size(), cfg.adam);
  }

  NetworkParams last_params = out.params;
  AdamState last_state = out.adam;
  for (std::size_t epoch = static_cast<std::size_t>(out.adam.step_count) + 1;; ++epoch) {
    Evaluation ev;
    try {
      if (batched) {
        const LossPlan plan = batch_plan(grid, full, cfg.batch_size, cfg.batch_seed, epoch);
        ev = evaluate_plan(out.params, plan, e, boundary, cfg.weights);
      } else {
        ev = evaluate_plan(out.params, full, e, boundary, cfg.weights);
      }
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kDivergence) throw;
      throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + ": " +
                                 err.what(),
                             std::move(last_params), std::move(last_state), epoch);
    }
    out.loss_history.push_back(ev.terms.total);
    out.term_history.push_back(ev.terms);
    out.final_loss = ev.terms.total;
    out.epochs_run = epoch;

    const bool done = ev.terms.total < cfg.loss_threshold || epoch >= cfg.max_epochs;
    if (hooks.on_log && (done || (cfg.log_every > 0 && epoch % cfg.log_every == 0))) {
      hooks.on_log({epoch, ev.terms, &out.params, &out.adam});
    }
    if (done) break;
    last_params.values = out.params.values;
    last_state = out.adam;
    adam_step(out.params.values, ev.gradient, out.adam);
  }
  return out;
}

GriddedField evaluate_on_grid(const NetworkParams& params, const Grid& grid) {
  const auto bundles = input_derivatives(params, collocation_points(grid));
  GriddedField field(grid);
  for (std::size_t k = 0; k < bundles.size(); ++k) {
    field.real_part[k] = bundles[k].value[0];
    field.imag_part[k] = bundles[k].value[1];
  }
  return field;
}

}  // namespace fiberpinn
