#include "fiberpinn/reduced_basis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "fiberpinn/checkpoint.hpp"

namespace fiberpinn {

namespace {

void check_coefficients(std::size_t n_bases, std::span<const double> c) {
  if (c.size() != n_bases) {
    throw Error(ErrorCode::kInvalidCoefficients,
                "got " + std::to_string(c.size()) + " coefficients for " +
                    std::to_string(n_bases) + " bases");
  }
}

void check_problem(const Grid& grid, std::span<const double> boundary) {
  if (boundary.size() != grid.n_initial()) {
    throw Error(ErrorCode::kInvalidGrid, "boundary length differs from the grid's initial nodes");
  }
}

bool same_rate(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

std::string describe(std::span<const double> c) {
  std::ostringstream s;
  s << std::setprecision(6) << "[";
  for (std::size_t k = 0; k < c.size(); ++k) s << (k ? ", " : "") << c[k];
  s << "]";
  return s.str();
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

DerivativeBundle combined_field(std::span<const NetworkParams> bases,
                                std::span<const double> c, double t, double zeta) {
  check_coefficients(bases.size(), c);
  DerivativeBundle out;
  for (std::size_t p = 0; p < bases.size(); ++p) {
    out.add_scaled(input_derivatives(bases[p], t, zeta), c[p]);
  }
  return out;
}

void BasisCache::add(const NetworkParams& params, const Grid& grid) {
  if (!bundles.empty() && n_nodes != grid.size()) {
    throw Error(ErrorCode::kInvalidGrid, "cache grid size changed");
  }
  n_nodes = grid.size();
  bundles.push_back(input_derivatives(params, collocation_points(grid)));
}

BasisCache build_cache(std::span<const NetworkParams> bases, const Grid& grid) {
  BasisCache cache;
  cache.n_nodes = grid.size();
  for (const auto& p : bases) cache.add(p, grid);
  return cache;
}

std::vector<DerivativeBundle> combine(const BasisCache& cache, std::span<const double> c) {
  check_coefficients(cache.size(), c);
  std::vector<DerivativeBundle> out(cache.n_nodes);
  for (std::size_t p = 0; p < cache.size(); ++p) {
    const auto& b = cache.bundles[p];
    for (std::size_t k = 0; k < out.size(); ++k) out[k].add_scaled(b[k], c[p]);
  }
  return out;
}

GriddedField evaluate_combination(std::span<const NetworkParams> bases,
                                  std::span<const double> c, const Grid& grid) {
  check_coefficients(bases.size(), c);
  GriddedField out(grid);
  for (std::size_t p = 0; p < bases.size(); ++p) {
    const GriddedField f = evaluate_on_grid(bases[p], grid);
    for (std::size_t k = 0; k < f.real_part.size(); ++k) {
      out.real_part[k] += c[p] * f.real_part[k];
      out.imag_part[k] += c[p] * f.imag_part[k];
    }
  }
  return out;
}

LossTerms combination_loss(const BasisCache& cache, std::span<const double> c,
                           const NlseCoefficients& coeffs, const Grid& grid,
                           std::span<const double> boundary, const LossWeights& weights) {
  if (cache.n_nodes != grid.size()) throw Error(ErrorCode::kInvalidGrid, "cache built on another grid");
  return loss_from_bundles(combine(cache, c), coeffs.terms(), grid, boundary, weights);
}

CombinationGradient combination_loss_gradient(const BasisCache& cache,
                                              std::span<const double> c,
                                              const NlseCoefficients& coeffs,
                                              const Grid& grid,
                                              std::span<const double> boundary,
                                              const LossWeights& weights) {
  if (cache.n_nodes != grid.size()) throw Error(ErrorCode::kInvalidGrid, "cache built on another grid");
  check_problem(grid, boundary);
  const std::vector<DerivativeBundle> s = combine(cache, c);
  const EquationTerms e = coeffs.terms();
  const std::vector<std::ptrdiff_t> slot = boundary_slots(grid);
  const double inv_n = 1.0 / static_cast<double>(grid.size());
  const double inv_b = 1.0 / static_cast<double>(grid.n_initial());

  CombinationGradient out;
  out.gradient.assign(cache.size(), 0.0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    PointTerm r = residual_point_term(s[k], e, inv_n);
    out.terms.residual += r.value;
    DerivativeBundle adj = r.adjoint;
    adj *= weights.residual;
    if (slot[k] >= 0) {
      const PointTerm b =
          boundary_point_term(s[k], boundary[static_cast<std::size_t>(slot[k])], inv_b);
      out.terms.boundary += b.value;
      adj.add_scaled(b.adjoint, weights.boundary);
    }
    for (std::size_t p = 0; p < cache.size(); ++p) {
      out.gradient[p] += adj.dot(cache.bundles[p][k]);
    }
  }
  out.terms.total =
      weights.residual * out.terms.residual + weights.boundary * out.terms.boundary;
  return out;
}

void FitConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidConfig, "fit learning_rate must be > 0");
  }
  if (!(loss_threshold >= 0.0) || !(gradient_tolerance >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "fit tolerances must be >= 0");
  }
}

FitResult fit_coefficients(const BasisCache& cache, const NlseCoefficients& coeffs,
                           const Grid& grid, std::span<const double> boundary,
                           std::vector<double> init_c, const FitConfig& cfg,
                           const LossWeights& weights) {
  cfg.validate();
  check_coefficients(cache.size(), init_c);
  AdamHyper hyper;
  hyper.learning_rate = cfg.learning_rate;
  AdamState state = make_adam_state(init_c.size(), hyper);

  FitResult out;
  std::vector<double> c = std::move(init_c);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0;; ++it) {
    const CombinationGradient g = combination_loss_gradient(cache, c, coeffs, grid, boundary, weights);
    const double gn = norm2(g.gradient);
    if (!std::isfinite(g.terms.total) || !std::isfinite(gn)) {
      std::vector<double> last = out.c.empty() ? c : out.c;
      throw FitDiverged("coefficient fit diverged at iteration " + std::to_string(it) +
                            ", last finite c = " + describe(last),
                        std::move(last));
    }
    out.history.push_back(g.terms.total);
    out.iterations = it;
    if (g.terms.total <= best) {
      best = g.terms.total;
      out.c = c;
      out.loss = g.terms;
      out.gradient_norm = gn;
    }
    if (g.terms.total < cfg.loss_threshold) {
      out.stop = FitStop::kThreshold;
      break;
    }
    if (gn < cfg.gradient_tolerance) {
      out.stop = FitStop::kGradient;
      break;
    }
    if (it >= cfg.max_iterations) {
      out.stop = FitStop::kMaxIterations;
      break;
    }
    adam_step(c, g.gradient, state);
  }
  return out;
}

void GreedyConfig::validate() const {
  if (max_bases < 1) throw Error(ErrorCode::kInvalidConfig, "max_bases must be >= 1");
  if (!(stop_loss > 0.0)) throw Error(ErrorCode::kInvalidConfig, "stop_loss must be > 0");
  if (!(seed_rate >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "seed_rate must be >= 0");
  validate_architecture(layer_sizes);
}

std::vector<NetworkParams> ReducedBasisModel::basis_params() const {
  std::vector<NetworkParams> out;
  out.reserve(bases.size());
  for (const auto& b : bases) out.push_back(b.params);
  return out;
}

const CandidateFit* ReducedBasisModel::find_candidate(double rate) const {
  for (const auto& c : candidates) {
    if (same_rate(c.rate, rate)) return &c;
  }
  return nullptr;
}

namespace {

CandidateFit to_candidate(double rate, const FitResult& fit, const FitConfig& cfg) {
  CandidateFit out;
  out.rate = rate;
  out.c = fit.c;
  out.loss = fit.loss;
  out.gradient_norm = fit.gradient_norm;
  out.hit_max_iterations = fit.stop == FitStop::kMaxIterations &&
                           !(fit.gradient_norm < cfg.gradient_tolerance);
  return out;
}

// Final per-candidate table: bases get their unit vector, everything else
// its latest fit.
void finalize(ReducedBasisModel& model, const std::vector<CandidateFit>& latest,
              const BasisCache& cache, const ParametricProblem& problem) {
  model.candidates.clear();
  for (std::size_t i = 0; i < model.candidate_rates.size(); ++i) {
    const double rate = model.candidate_rates[i];
    std::ptrdiff_t basis = -1;
    for (std::size_t p = 0; p < model.bases.size(); ++p) {
      if (same_rate(model.bases[p].bit_rate, rate)) basis = static_cast<std::ptrdiff_t>(p);
    }
    if (basis >= 0) {
      CandidateFit c;
      c.rate = rate;
      c.is_basis = true;
      c.c.assign(model.bases.size(), 0.0);
      c.c[static_cast<std::size_t>(basis)] = 1.0;
      c.loss = combination_loss(cache, c.c, problem.coefficients(rate), problem.grid,
                                problem.boundary, problem.weights);
      model.candidates.push_back(std::move(c));
    } else {
      CandidateFit c = latest[i];
      c.rate = rate;
      if (c.c.size() < model.bases.size()) {
        // never fitted against the newest bases (aborted run)
        c.c.resize(model.bases.size(), 0.0);
      }
      model.candidates.push_back(std::move(c));
    }
  }
}

}  // namespace

ReducedBasisModel greedy_train(std::vector<double> candidate_rates,
                               const ParametricProblem& problem, const GreedyConfig& cfg,
                               const TrainConfig& train_cfg, const FitConfig& fit_cfg,
                               const GreedyHooks& hooks) {
  cfg.validate();
  train_cfg.validate();
  fit_cfg.validate();
  check_problem(problem.grid, problem.boundary);
  if (!problem.coefficients) throw Error(ErrorCode::kInvalidConfig, "problem has no coefficient map");
  if (candidate_rates.empty()) throw Error(ErrorCode::kInvalidConfig, "no candidate rates");
  for (double r : candidate_rates) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw Error(ErrorCode::kInvalidParameter, "candidate rates must be finite and > 0");
    }
  }
  std::sort(candidate_rates.begin(), candidate_rates.end());
  candidate_rates.erase(std::unique(candidate_rates.begin(), candidate_rates.end(), same_rate),
                        candidate_rates.end());

  std::size_t seed_index = 0;
  if (cfg.seed_rate > 0.0) {
    const auto it = std::find_if(candidate_rates.begin(), candidate_rates.end(),
                                 [&](double r) { return same_rate(r, cfg.seed_rate); });
    if (it == candidate_rates.end()) {
      throw Error(ErrorCode::kInvalidConfig, "seed_rate is not a candidate rate");
    }
    seed_index = static_cast<std::size_t>(it - candidate_rates.begin());
  }

  ReducedBasisModel model;
  model.candidate_rates = candidate_rates;
  const std::size_t n = candidate_rates.size();
  std::vector<bool> is_basis(n, false);
  std::vector<CandidateFit> latest(n);
  BasisCache cache;
  TrainHooks train_hooks = hooks.train;
  train_hooks.resume.reset();

  auto add_basis = [&](std::size_t index, std::size_t round) {
    const double rate = candidate_rates[index];
    NetworkParams init = init_network(cfg.layer_sizes, cfg.seed + round);
    try {
      model.bases.push_back(train_basis(std::move(init), problem.coefficients(rate),
                                        problem.grid, problem.boundary, train_cfg,
                                        train_hooks));
    } catch (const TrainingDiverged& err) {
      finalize(model, latest, cache, problem);
      std::ostringstream msg;
      msg << "greedy round " << round << " aborted: basis at " << rate << " b/s: " << err.what();
      throw GreedyAborted(msg.str(), std::move(model));
    }
    cache.add(model.bases.back().params, problem.grid);
    is_basis[index] = true;
    if (hooks.on_basis) hooks.on_basis(model.bases.back(), round);
  };

  add_basis(seed_index, 0);
  model.selection_history.push_back({0, candidate_rates[seed_index],
                                     std::numeric_limits<double>::infinity()});

  while (true) {
    RoundTable table;
    table.n_bases = model.bases.size();
    const std::size_t n_bases = model.bases.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (is_basis[i]) continue;
      std::vector<double> start = latest[i].c;
      if (start.empty()) {
        start.assign(n_bases, 1.0 / static_cast<double>(n_bases));
      } else {
        start.resize(n_bases, 0.0);
      }
      const double rate = candidate_rates[i];
      FitResult fit;
      try {
        fit = fit_coefficients(cache, problem.coefficients(rate), problem.grid,
                               problem.boundary, std::move(start), fit_cfg, problem.weights);
      } catch (const FitDiverged& err) {
        finalize(model, latest, cache, problem);
        throw GreedyAborted(std::string("coefficient fit failed: ") + err.what(), std::move(model));
      }
      latest[i] = to_candidate(rate, fit, fit_cfg);
      table.entries.push_back(latest[i]);
    }
    model.rounds.push_back(table);
    if (hooks.on_round) hooks.on_round(table);
    if (table.entries.empty()) break;

    // argmax; strict comparison keeps the lowest rate on ties
    std::size_t worst = 0;
    for (std::size_t k = 1; k < table.entries.size(); ++k) {
      if (table.entries[k].loss.total > table.entries[worst].loss.total) worst = k;
    }
    const double worst_loss = table.entries[worst].loss.total;
    if (model.bases.size() >= cfg.max_bases || worst_loss < cfg.stop_loss) break;

    const double rate = table.entries[worst].rate;
    const auto index = static_cast<std::size_t>(
        std::find_if(candidate_rates.begin(), candidate_rates.end(),
                     [&](double r) { return same_rate(r, rate); }) -
        candidate_rates.begin());
    const std::size_t round = model.bases.size();
    model.selection_history.push_back({round, rate, worst_loss});
    add_basis(index, round);
  }
  finalize(model, latest, cache, problem);
  return model;
}

Prediction predict(const ReducedBasisModel& model, const ParametricProblem& problem,
                   double rate, const FitConfig& fit_cfg, bool use_cache) {
  if (model.bases.empty() || model.candidate_rates.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "model has no bases");
  }
  const double lo = model.candidate_rates.front();
  const double hi = model.candidate_rates.back();
  if (!(rate >= lo * (1.0 - 1e-12) && rate <= hi * (1.0 + 1e-12))) {
    std::ostringstream msg;
    msg << "bit rate " << rate << " b/s outside the trained range [" << lo << ", " << hi << "]";
    throw Error(ErrorCode::kOutOfRange, msg.str());
  }
  check_problem(problem.grid, problem.boundary);
  const std::vector<NetworkParams> params = model.basis_params();
  const BasisCache cache = build_cache(params, problem.grid);
  const NlseCoefficients coeffs = problem.coefficients(rate);
  const std::size_t n_bases = params.size();

  Prediction out;
  const CandidateFit* stored = model.find_candidate(rate);
  if (use_cache && stored != nullptr && stored->c.size() == n_bases) {
    out.c = stored->c;
    out.cached = true;
    out.loss = combination_loss(cache, out.c, coeffs, problem.grid, problem.boundary,
                                problem.weights);
  } else {
    std::vector<std::vector<double>> starts;
    starts.emplace_back(n_bases, 1.0 / static_cast<double>(n_bases));
    const CandidateFit* nearest = nullptr;
    for (const auto& c : model.candidates) {
      if (c.c.size() != n_bases) continue;
      if (nearest == nullptr || std::abs(c.rate - rate) < std::abs(nearest->rate - rate)) {
        nearest = &c;
      }
    }
    if (nearest != nullptr) starts.push_back(nearest->c);
    for (std::size_t p = 0; p < n_bases; ++p) {
      if (same_rate(model.bases[p].bit_rate, rate)) {
        starts.emplace_back(n_bases, 0.0);
        starts.back()[p] = 1.0;
      }
    }
    bool have = false;
    for (auto& start : starts) {
      FitResult fit = fit_coefficients(cache, coeffs, problem.grid, problem.boundary,
                                       std::move(start), fit_cfg, problem.weights);
      if (!have || fit.loss.total < out.loss.total) {
        out.c = std::move(fit.c);
        out.loss = fit.loss;
        have = true;
      }
    }
  }
  const std::vector<DerivativeBundle> s = combine(cache, out.c);
  out.field = GriddedField(problem.grid);
  for (std::size_t k = 0; k < s.size(); ++k) {
    out.field.real_part[k] = s[k].value[0];
    out.field.imag_part[k] = s[k].value[1];
  }
  return out;
}

namespace {

using nlohmann::json;

json terms_json(const LossTerms& t) {
  return {{"total", t.total}, {"residual", t.residual}, {"boundary", t.boundary}};
}

LossTerms terms_from(const json& j) {
  return {j.at("total").get<double>(), j.at("residual").get<double>(),
          j.at("boundary").get<double>()};
}

json candidate_json(const CandidateFit& c) {
  return {{"rate", c.rate},
          {"c", c.c},
          {"loss", terms_json(c.loss)},
          {"is_basis", c.is_basis},
          {"hit_max_iterations", c.hit_max_iterations},
          {"gradient_norm", c.gradient_norm}};
}

CandidateFit candidate_from(const json& j) {
  CandidateFit c;
  c.rate = j.at("rate").get<double>();
  c.c = j.at("c").get<std::vector<double>>();
  c.loss = terms_from(j.at("loss"));
  c.is_basis = j.at("is_basis").get<bool>();
  c.hit_max_iterations = j.at("hit_max_iterations").get<bool>();
  c.gradient_norm = j.at("gradient_norm").get<double>();
  return c;
}

std::string basis_file(std::size_t k) {
  std::ostringstream s;
  s << "basis_" << std::setw(2) << std::setfill('0') << k << ".ckpt";
  return s.str();
}

}  // namespace

void save_model(const ReducedBasisModel& model, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  json manifest;
  manifest["format"] = "fiberpinn-model";
  manifest["version"] = 1;
  manifest["candidate_rates"] = model.candidate_rates;
  json bases = json::array();
  for (std::size_t k = 0; k < model.bases.size(); ++k) {
    const TrainedBasis& b = model.bases[k];
    save_checkpoint(dir / basis_file(k), {b.params, b.adam, b.bit_rate});
    bases.push_back({{"rate", b.bit_rate},
                     {"checkpoint", basis_file(k)},
                     {"final_loss", b.final_loss},
                     {"epochs_run", b.epochs_run}});
  }
  manifest["bases"] = bases;
  json candidates = json::array();
  for (const auto& c : model.candidates) candidates.push_back(candidate_json(c));
  manifest["candidates"] = candidates;
  json history = json::array();
  for (const auto& s : model.selection_history) {
    history.push_back({{"round", s.round},
                       {"rate", s.rate},
                       {"worst_loss", std::isfinite(s.worst_loss) ? json(s.worst_loss) : json()}});
  }
  manifest["selection_history"] = history;
  json rounds = json::array();
  for (const auto& r : model.rounds) {
    json entries = json::array();
    for (const auto& c : r.entries) entries.push_back(candidate_json(c));
    rounds.push_back({{"n_bases", r.n_bases}, {"entries", entries}});
  }
  manifest["rounds"] = rounds;

  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / "manifest.json").string());
}

ReducedBasisModel load_model(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + (dir / "manifest.json").string());
  ReducedBasisModel model;
  try {
    const json manifest = json::parse(in);
    if (manifest.at("format").get<std::string>() != "fiberpinn-model" ||
        manifest.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kIo, "unsupported model manifest");
    }
    model.candidate_rates = manifest.at("candidate_rates").get<std::vector<double>>();
    for (const auto& b : manifest.at("bases")) {
      const Checkpoint ck = load_checkpoint(dir / b.at("checkpoint").get<std::string>());
      TrainedBasis basis;
      basis.bit_rate = b.at("rate").get<double>();
      basis.params = ck.params;
      basis.adam = ck.adam;
      basis.final_loss = b.at("final_loss").get<double>();
      basis.epochs_run = b.at("epochs_run").get<std::size_t>();
      model.bases.push_back(std::move(basis));
    }
    for (const auto& c : manifest.at("candidates")) model.candidates.push_back(candidate_from(c));
    for (const auto& s : manifest.at("selection_history")) {
      const json& w = s.at("worst_loss");
      model.selection_history.push_back(
          {s.at("round").get<std::size_t>(), s.at("rate").get<double>(),
           w.is_null() ? std::numeric_limits<double>::infinity() : w.get<double>()});
    }
    for (const auto& r : manifest.at("rounds")) {
      RoundTable t;
      t.n_bases = r.at("n_bases").get<std::size_t>();
      for (const auto& c : r.at("entries")) t.entries.push_back(candidate_from(c));
      model.rounds.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, "malformed model manifest: " + std::string(e.what()));
  }
  return model;
}

}  // namespace fiberpinn
