// fiberpinn: batch front-end for signals, split-step references, basis
// training, greedy reduced-basis runs, prediction sweeps and MAC tables.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "fiberpinn/artifacts.hpp"
#include "fiberpinn/checkpoint.hpp"
#include "fiberpinn/complexity.hpp"
#include "fiberpinn/csv.hpp"
#include "fiberpinn/error.hpp"
#include "fiberpinn/reduced_basis.hpp"
#include "fiberpinn/run_config.hpp"
#include "fiberpinn/ssfm.hpp"
#include "fiberpinn/trainer.hpp"

namespace fs = std::filesystem;
using namespace fiberpinn;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

RunConfig resolve(const Common& c) {
  RunConfig cfg = load_config(c.config_path, c.overrides);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  cfg.validate_all();
  return cfg;
}

fs::path prepare_output(const RunConfig& cfg) {
  const fs::path out(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out.string() + ": " + ec.message());
  std::ofstream echo(out / "resolved_config.json");
  echo << to_json(cfg).dump(2) << '\n';
  if (!echo) throw Error(ErrorCode::kIo, "cannot write " + (out / "resolved_config.json").string());
  return out;
}

std::function<void(const EpochReport&)> progress(double rate) {
  return [rate](const EpochReport& r) {
    if (rate > 0.0) std::fprintf(stderr, "  [%.4g Gb/s]", rate * 1e-9);
    std::fprintf(stderr, "  epoch %zu  loss %.4e  (residual %.3e, boundary %.3e)\n", r.epoch,
                 r.terms.total, r.terms.residual, r.terms.boundary);
  };
}

int cmd_signal(const RunConfig& cfg) {
  const fs::path out = prepare_output(cfg);
  const Grid grid = training_grid(cfg);
  const auto f = launch_waveform(cfg);
  const double t_max = kappa2(cfg) / cfg.train.bit_rate;
  std::vector<bool> initial(grid.n_t(), false);
  for (std::size_t i : grid.initial_indices) initial[i] = true;
  CsvWriter csv(out / "signal.csv", {"t", "time_s", "f", "is_initial"});
  for (std::size_t i = 0; i < grid.n_t(); ++i) {
    const double t = grid.t_nodes[i];
    csv.row({t, t * t_max, f(t), initial[i] ? 1.0 : 0.0});
  }
  csv.close();
  std::cout << "wrote " << (out / "signal.csv").string() << " (" << grid.n_t() << " samples)\n";
  return 0;
}

int cmd_ssfm(const RunConfig& cfg, double rate) {
  const fs::path out = prepare_output(cfg);
  const Grid grid = validation_grid(cfg);
  const GriddedField field = reference_on_validation_grid(cfg, rate);
  const NlseCoefficients coeffs = coefficients(cfg, rate);
  const double residual = nlse_residual_fd(field, coeffs, grid);
  double power = 0.0;
  for (std::size_t k = 0; k < field.real_part.size(); ++k) {
    power += field.real_part[k] * field.real_part[k] + field.imag_part[k] * field.imag_part[k];
  }
  power /= static_cast<double>(field.real_part.size());
  write_field_csv(out / "ssfm_field.csv", field, grid);

  const EquationTerms e = coeffs.terms();
  nlohmann::json report = {{"bit_rate", rate},
                           {"mean_squared_residual", residual},
                           {"mean_power", power},
                           {"relative_residual", residual / power},
                           {"terms",
                            {{"zeta", e.zeta},
                             {"damping", e.damping},
                             {"dispersion", e.dispersion},
                             {"third_order", e.third_order},
                             {"kerr", e.kerr}}}};
  std::ofstream(out / "ssfm_report.json") << report.dump(2) << '\n';
  std::printf("rate %.6g b/s: mean |r|^2 = %.6e, mean |s|^2 = %.6e, ratio = %.6e\n", rate,
              residual, power, residual / power);
  return 0;
}

int cmd_train_basis(const RunConfig& cfg, double rate, const std::string& resume) {
  const fs::path out = prepare_output(cfg);
  const fs::path dir = out / "basis";
  fs::create_directories(dir);
  const ParametricProblem problem = parametric_problem(cfg);
  NetworkParams init = init_network(cfg.layer_sizes, cfg.seed);
  TrainHooks hooks;
  if (!resume.empty()) {
    Checkpoint ck = load_checkpoint(resume);
    if (ck.params.layer_sizes != cfg.layer_sizes) {
      throw Error(ErrorCode::kInvalidConfig, "checkpoint architecture differs from layer_sizes");
    }
    init = std::move(ck.params);
    hooks.resume = std::move(ck.adam);
  }
  const auto log = progress(rate);
  hooks.on_log = [&](const EpochReport& r) {
    log(r);
    save_checkpoint(dir / "latest.ckpt", {*r.params, *r.adam, rate});
  };
  TrainedBasis basis;
  try {
    basis = train_basis(std::move(init), problem.coefficients(rate), problem.grid,
                        problem.boundary, train_config(cfg), hooks);
  } catch (const TrainingDiverged& e) {
    save_checkpoint(dir / "diverged.ckpt", {e.last_finite(), e.last_state(), rate});
    throw;
  }
  write_training_log(dir / "training_log.csv", basis);

  ReducedBasisModel model;
  model.candidate_rates = {rate};
  CandidateFit self;
  self.rate = rate;
  self.c = {1.0};
  self.is_basis = true;
  self.loss = pinn_loss(basis.params, problem.coefficients(rate), problem.grid, problem.boundary,
                        problem.weights);
  model.candidates = {self};
  model.selection_history = {{0, rate, std::numeric_limits<double>::infinity()}};
  model.rounds = {{1, {}}};
  model.bases.push_back(std::move(basis));
  save_model(model, dir);
  std::printf("basis at %.6g b/s: %zu epochs, final loss %.6e -> %s\n", rate,
              model.bases[0].epochs_run, model.bases[0].final_loss, dir.string().c_str());
  return 0;
}

int cmd_greedy(const RunConfig& cfg) {
  const fs::path out = prepare_output(cfg);
  const ParametricProblem problem = parametric_problem(cfg);
  GreedyHooks hooks;
  hooks.on_basis = [](const TrainedBasis& b, std::size_t round) {
    std::fprintf(stderr, "round %zu: basis at %.6g b/s, %zu epochs, loss %.4e\n", round,
                 b.bit_rate, b.epochs_run, b.final_loss);
  };
  hooks.on_round = [](const RoundTable& t) {
    double worst = 0.0, rate = 0.0;
    for (const auto& e : t.entries) {
      if (e.loss.total > worst) worst = e.loss.total, rate = e.rate;
    }
    if (!t.entries.empty()) {
      std::fprintf(stderr, "  %zu bases: worst remaining loss %.4e at %.6g b/s\n", t.n_bases,
                   worst, rate);
    }
  };
  const TrainConfig tcfg = train_config(cfg);
  if (tcfg.log_every > 0) hooks.train.on_log = progress(0.0);
  ReducedBasisModel model;
  try {
    model = greedy_train(sweep_rates(cfg), problem, greedy_config(cfg), tcfg, cfg.fit, hooks);
  } catch (const GreedyAborted& e) {
    save_model(e.partial(), out / "model_partial");
    write_greedy_tables(out, e.partial());
    throw;
  }
  save_model(model, out / "model");
  write_greedy_tables(out, model);
  double worst = 0.0;
  for (const auto& c : model.candidates) worst = std::max(worst, c.loss.total);
  std::printf("%zu bases over %zu candidates; worst candidate loss %.6e -> %s\n",
              model.bases.size(), model.candidates.size(), worst, (out / "model").string().c_str());
  return 0;
}

fs::path model_dir(const RunConfig& cfg, const std::string& given) {
  return given.empty() ? fs::path(cfg.output_dir) / "model" : fs::path(given);
}

int cmd_predict(const RunConfig& cfg, const std::string& model_path, bool refit,
                const std::vector<double>& rates) {
  const ReducedBasisModel model = load_model(model_dir(cfg, model_path));
  const fs::path out = prepare_output(cfg);
  const ParametricProblem problem = parametric_problem(cfg);
  const std::vector<double>& targets = rates.empty() ? model.candidate_rates : rates;
  CsvWriter csv(out / "predictions.csv", {"rate", "loss", "is_basis"});
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const Prediction p = predict(model, problem, targets[k], cfg.fit, !refit);
    const CandidateFit* stored = model.find_candidate(targets[k]);
    csv.row({targets[k], p.loss.total, stored && stored->is_basis ? 1.0 : 0.0});
    if (!rates.empty()) {
      char name[48];
      std::snprintf(name, sizeof name, "predicted_field_%02zu.csv", k);
      write_field_csv(out / name, p.field, problem.grid);
    }
  }
  csv.close();
  std::cout << "wrote " << (out / "predictions.csv").string() << " (" << targets.size()
            << " rates)\n";
  return 0;
}

int cmd_complexity(const RunConfig& cfg) {
  const fs::path out = prepare_output(cfg);
  const ComplexityParams& p = cfg.complexity;
  if (!p.warning().empty()) std::cerr << "warning: " << p.warning() << '\n';
  const auto rows = comparison_table(p, cfg.complexity_distances);
  CsvWriter csv(out / "complexity.csv", {"distance_m", "c_ssfm", "c_f", "c_pf"});
  for (const auto& r : rows) csv.row({r.distance, r.c_ssfm, r.c_f, r.c_pf});
  csv.close();
  std::printf("C_F = %.17g, C_PF = %.17g, C_PF / C_F = %.6f (N_b / T = %.6f)\n",
              mac_pinn_per_rate_family(p), mac_parameterized(p),
              mac_parameterized(p) / mac_pinn_per_rate_family(p),
              static_cast<double>(p.n_bases) / static_cast<double>(p.n_rates));
  return 0;
}

int cmd_validate(const RunConfig& cfg, const std::string& model_path) {
  const ReducedBasisModel model = load_model(model_dir(cfg, model_path));
  const fs::path out = prepare_output(cfg);
  const ParametricProblem problem = parametric_problem(cfg);
  const Grid vgrid = validation_grid(cfg);
  const std::vector<NetworkParams> bases = model.basis_params();
  CsvWriter csv(out / "validation.csv", {"rate", "relative_l2", "loss", "is_basis"});
  double worst = 0.0;
  for (double rate : validation_rates(cfg)) {
    const Prediction p = predict(model, problem, rate, cfg.fit);
    const GriddedField pred = evaluate_combination(bases, p.c, vgrid);
    const double l2 = relative_l2(pred, reference_on_validation_grid(cfg, rate));
    const CandidateFit* stored = model.find_candidate(rate);
    csv.row({rate, l2, p.loss.total, stored && stored->is_basis ? 1.0 : 0.0});
    std::printf("rate %.6g b/s: relative L2 %.6e, loss %.6e\n", rate, l2, p.loss.total);
    worst = std::max(worst, l2);
  }
  csv.close();
  std::printf("worst relative L2 %.6e\n", worst);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parameterized PINN fiber model: reference solver, training and evaluation"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "JSON run configuration");
  app.add_option("--out", common.out_dir, "output directory (overrides output_dir)");
  app.add_option("--seed", common.seed, "master seed (overrides seed)");
  app.add_option("--set", common.overrides, "dotted-key override, e.g. train.max_epochs=500")
      ->allow_extra_args(false);

  double rate = 0.0;
  std::string resume, model_path;
  bool refit = false;
  std::vector<double> rates;

  auto* signal = app.add_subcommand("signal", "write the normalized launch waveform");
  auto* ssfm = app.add_subcommand("ssfm", "split-step reference, normalized export, residual report");
  ssfm->add_option("--rate", rate, "bit rate in b/s (default train.bit_rate)");
  auto* train = app.add_subcommand("train-basis", "train a single-rate network");
  train->add_option("--rate", rate, "bit rate in b/s (default train.bit_rate)");
  train->add_option("--resume", resume, "checkpoint to continue from");
  auto* greedy = app.add_subcommand("greedy", "greedy reduced-basis training over the sweep");
  auto* pred = app.add_subcommand("predict", "losses (and fields) of a trained model");
  pred->add_option("--model", model_path, "model directory (default <out>/model)");
  pred->add_flag("--refit", refit, "refit coefficients instead of using stored fits");
  pred->add_option("--rate", rates, "rates to predict; fields are written for these");
  auto* cplx = app.add_subcommand("complexity", "MAC comparison table");
  auto* val = app.add_subcommand("validate", "relative L2 of predictions against split-step");
  val->add_option("--model", model_path, "model directory (default <out>/model)");
  for (auto* sub : {signal, ssfm, train, greedy, pred, cplx, val}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const RunConfig cfg = resolve(common);
    const double r = rate > 0.0 ? rate : cfg.train.bit_rate;
    if (signal->parsed()) return cmd_signal(cfg);
    if (ssfm->parsed()) return cmd_ssfm(cfg, r);
    if (train->parsed()) return cmd_train_basis(cfg, r, resume);
    if (greedy->parsed()) return cmd_greedy(cfg);
    if (pred->parsed()) return cmd_predict(cfg, model_path, refit, rates);
    if (cplx->parsed()) return cmd_complexity(cfg);
    if (val->parsed()) return cmd_validate(cfg, model_path);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return e.code() == ErrorCode::kDivergence ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
