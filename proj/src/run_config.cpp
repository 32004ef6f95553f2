#include "fiberpinn/run_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fiberpinn/error.hpp"
#include "fiberpinn/fft.hpp"

namespace fiberpinn {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); }

// Recursive overlay; every key of src must exist in dst.
void overlay(json& dst, const json& src, const std::string& where) {
  if (!src.is_object()) bad("expected an object at '" + where + "'");
  for (auto it = src.begin(); it != src.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!dst.contains(it.key())) bad("unknown config key '" + key + "'");
    json& slot = dst[it.key()];
    if (slot.is_object()) {
      overlay(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

template <class T>
T read(const json& j, const char* section, const char* key) {
  const json& v = section ? j.at(section).at(key) : j.at(key);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    bad(std::string("config key '") + (section ? std::string(section) + "." : "") + key +
        "' has the wrong type");
  }
}

}  // namespace

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["fiber"] = {{"alpha", c.fiber.alpha}, {"beta2", c.fiber.beta2}, {"beta3", c.fiber.beta3},
                {"n2", c.fiber.n2},       {"a_eff", c.fiber.a_eff}, {"lambda_c", c.fiber.lambda_c},
                {"length", c.fiber.length}};
  j["signal"] = {{"shape", c.signal.shape},
                 {"n_bits", c.signal.n_bits},
                 {"pattern_seed", c.signal.pattern_seed},
                 {"pattern", c.signal.pattern},
                 {"edge_fraction", c.signal.edge_fraction},
                 {"gaussian_width", c.signal.gaussian_width},
                 {"peak_power", c.signal.peak_power},
                 {"kappa2", c.signal.kappa2}};
  j["grid"] = {{"n_t", c.grid.n_t}, {"n_zeta", c.grid.n_zeta}, {"n_initial", c.grid.n_initial}};
  j["layer_sizes"] = c.layer_sizes;
  j["train"] = {{"bit_rate", c.train.bit_rate},
                {"max_epochs", c.train.max_epochs},
                {"loss_threshold", c.train.loss_threshold},
                {"log_every", c.train.log_every},
                {"learning_rate", c.train.learning_rate},
                {"beta_a", c.train.beta_a},
                {"beta_b", c.train.beta_b},
                {"epsilon", c.train.epsilon},
                {"residual_weight", c.train.residual_weight},
                {"boundary_weight", c.train.boundary_weight},
                {"batch_size", c.train.batch_size}};
  j["fit"] = {{"max_iterations", c.fit.max_iterations},
              {"learning_rate", c.fit.learning_rate},
              {"loss_threshold", c.fit.loss_threshold},
              {"gradient_tolerance", c.fit.gradient_tolerance}};
  j["greedy"] = {{"max_bases", c.greedy.max_bases},
                 {"stop_loss", c.greedy.stop_loss},
                 {"seed_rate", c.greedy.seed_rate}};
  j["sweep"] = {{"min_rate", c.sweep.min_rate},
                {"max_rate", c.sweep.max_rate},
                {"count", c.sweep.count}};
  j["ssfm"] = {{"step_length", c.ssfm.step_length}, {"pad_factor", c.ssfm.pad_factor}};
  j["validate"] = {{"rates", c.validate.rates},
                   {"n_t", c.validate.n_t},
                   {"n_zeta", c.validate.n_zeta}};
  const ComplexityParams& p = c.complexity;
  j["complexity"] = {{"n_rates", p.n_rates},
                     {"m_t", p.m_t},
                     {"m_zeta", p.m_zeta},
                     {"l_unit", p.l_unit},
                     {"hidden_layers", p.hidden_layers},
                     {"neurons", p.neurons},
                     {"n_bases", p.n_bases},
                     {"n_dispersion", p.n_dispersion},
                     {"n_nonlinear", p.n_nonlinear},
                     {"distances", c.complexity_distances}};
  return j;
}

RunConfig config_from_json(const json& src) {
  json j = to_json(RunConfig{});
  overlay(j, src, "");

  RunConfig c;
  c.seed = read<std::uint64_t>(j, nullptr, "seed");
  c.output_dir = read<std::string>(j, nullptr, "output_dir");
  c.fiber.alpha = read<double>(j, "fiber", "alpha");
  c.fiber.beta2 = read<double>(j, "fiber", "beta2");
  c.fiber.beta3 = read<double>(j, "fiber", "beta3");
  c.fiber.n2 = read<double>(j, "fiber", "n2");
  c.fiber.a_eff = read<double>(j, "fiber", "a_eff");
  c.fiber.lambda_c = read<double>(j, "fiber", "lambda_c");
  c.fiber.length = read<double>(j, "fiber", "length");
  c.signal.shape = read<std::string>(j, "signal", "shape");
  c.signal.n_bits = read<std::size_t>(j, "signal", "n_bits");
  c.signal.pattern_seed = read<std::uint64_t>(j, "signal", "pattern_seed");
  c.signal.pattern = read<std::vector<int>>(j, "signal", "pattern");
  c.signal.edge_fraction = read<double>(j, "signal", "edge_fraction");
  c.signal.gaussian_width = read<double>(j, "signal", "gaussian_width");
  c.signal.peak_power = read<double>(j, "signal", "peak_power");
  c.signal.kappa2 = read<double>(j, "signal", "kappa2");
  c.grid.n_t = read<std::size_t>(j, "grid", "n_t");
  c.grid.n_zeta = read<std::size_t>(j, "grid", "n_zeta");
  c.grid.n_initial = read<std::size_t>(j, "grid", "n_initial");
  c.layer_sizes = read<std::vector<std::size_t>>(j, nullptr, "layer_sizes");
  c.train.bit_rate = read<double>(j, "train", "bit_rate");
  c.train.max_epochs = read<std::size_t>(j, "train", "max_epochs");
  c.train.loss_threshold = read<double>(j, "train", "loss_threshold");
  c.train.log_every = read<std::size_t>(j, "train", "log_every");
  c.train.learning_rate = read<double>(j, "train", "learning_rate");
  c.train.beta_a = read<double>(j, "train", "beta_a");
  c.train.beta_b = read<double>(j, "train", "beta_b");
  c.train.epsilon = read<double>(j, "train", "epsilon");
  c.train.residual_weight = read<double>(j, "train", "residual_weight");
  c.train.boundary_weight = read<double>(j, "train", "boundary_weight");
  c.train.batch_size = read<std::size_t>(j, "train", "batch_size");
  c.fit.max_iterations = read<std::size_t>(j, "fit", "max_iterations");
  c.fit.learning_rate = read<double>(j, "fit", "learning_rate");
  c.fit.loss_threshold = read<double>(j, "fit", "loss_threshold");
  c.fit.gradient_tolerance = read<double>(j, "fit", "gradient_tolerance");
  c.greedy.max_bases = read<std::size_t>(j, "greedy", "max_bases");
  c.greedy.stop_loss = read<double>(j, "greedy", "stop_loss");
  c.greedy.seed_rate = read<double>(j, "greedy", "seed_rate");
  c.sweep.min_rate = read<double>(j, "sweep", "min_rate");
  c.sweep.max_rate = read<double>(j, "sweep", "max_rate");
  c.sweep.count = read<std::size_t>(j, "sweep", "count");
  c.ssfm.step_length = read<double>(j, "ssfm", "step_length");
  c.ssfm.pad_factor = read<std::size_t>(j, "ssfm", "pad_factor");
  c.validate.rates = read<std::vector<double>>(j, "validate", "rates");
  c.validate.n_t = read<std::size_t>(j, "validate", "n_t");
  c.validate.n_zeta = read<std::size_t>(j, "validate", "n_zeta");
  ComplexityParams& p = c.complexity;
  p.n_rates = read<std::size_t>(j, "complexity", "n_rates");
  p.m_t = read<std::size_t>(j, "complexity", "m_t");
  p.m_zeta = read<std::size_t>(j, "complexity", "m_zeta");
  p.l_unit = read<double>(j, "complexity", "l_unit");
  p.hidden_layers = read<std::size_t>(j, "complexity", "hidden_layers");
  p.neurons = read<std::size_t>(j, "complexity", "neurons");
  p.n_bases = read<std::size_t>(j, "complexity", "n_bases");
  p.n_dispersion = read<double>(j, "complexity", "n_dispersion");
  p.n_nonlinear = read<double>(j, "complexity", "n_nonlinear");
  c.complexity_distances = read<std::vector<double>>(j, "complexity", "distances");
  p.l_max = c.fiber.length;
  c.validate_all();
  return c;
}

void RunConfig::validate_all() const {
  if (!(fiber.length > 0.0)) bad("fiber.length must be > 0");
  if (!(fiber.a_eff > 0.0) || !(fiber.lambda_c > 0.0)) bad("fiber.a_eff and fiber.lambda_c must be > 0");
  if (fiber.beta2 == 0.0) bad("fiber.beta2 must be nonzero");
  if (signal.shape != "ook" && signal.shape != "gaussian") {
    bad("signal.shape must be \"ook\" or \"gaussian\"");
  }
  if (signal.pattern.empty() && signal.n_bits < 1) bad("signal.n_bits must be >= 1");
  for (int b : signal.pattern) {
    if (b != 0 && b != 1) bad("signal.pattern bits must be 0 or 1");
  }
  if (!(signal.edge_fraction >= 0.0 && signal.edge_fraction <= 1.0)) {
    bad("signal.edge_fraction must lie in [0, 1]");
  }
  if (!(signal.gaussian_width > 0.0)) bad("signal.gaussian_width must be > 0");
  if (!(signal.peak_power > 0.0)) bad("signal.peak_power must be > 0");
  if (!(signal.kappa2 >= 0.0)) bad("signal.kappa2 must be >= 0");
  if (grid.n_t < 2 || grid.n_zeta < 2 || grid.n_initial < 1 || grid.n_initial > grid.n_t) {
    bad("grid needs n_t >= 2, n_zeta >= 2 and 1 <= n_initial <= n_t");
  }
  try {
    validate_architecture(layer_sizes);
  } catch (const Error& e) {
    bad(std::string("layer_sizes: ") + e.what());
  }
  if (!(train.bit_rate > 0.0)) bad("train.bit_rate must be > 0");
  if (!(sweep.min_rate > 0.0) || !(sweep.max_rate >= sweep.min_rate) || sweep.count < 1) {
    bad("sweep needs 0 < min_rate <= max_rate and count >= 1");
  }
  if (!(ssfm.step_length > 0.0) || ssfm.pad_factor < 1) {
    bad("ssfm needs step_length > 0 and pad_factor >= 1");
  }
  if (validate.n_t < 5 || !is_power_of_two(validate.n_t - 1) ||
      !is_power_of_two(ssfm.pad_factor) || validate.n_zeta < 3) {
    bad("validate needs n_t - 1 a power of two (n_t >= 5), n_zeta >= 3 and a power-of-two "
        "ssfm.pad_factor");
  }
  for (double r : validate.rates) {
    if (!(r > 0.0)) bad("validate.rates must be > 0");
  }
  if (complexity_distances.empty()) bad("complexity.distances must not be empty");
  train_config(*this).validate();
  fit.validate();
  greedy_config(*this).validate();
  complexity.validate();
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) bad("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &j;
  std::stringstream path(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(path, part, '.')) parts.push_back(part);
  const json defaults = to_json(RunConfig{});
  const json* known = &defaults;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (!known->is_object() || !known->contains(parts[k])) bad("unknown config key '" + key + "'");
    known = &(*known)[parts[k]];
    if (k + 1 < parts.size()) {
      if (!node->contains(parts[k])) (*node)[parts[k]] = json::object();
      node = &(*node)[parts[k]];
    }
  }
  if (known->is_object()) bad("config key '" + key + "' is a section, not a value");
  (*node)[parts.back()] = value;
}

RunConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
  json j = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
    j = json::parse(in, nullptr, false);
    if (j.is_discarded()) bad("config " + path.string() + " is not valid JSON");
  }
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j);
}

FiberParams fiber_params(const RunConfig& cfg) {
  return derive_fiber_params(cfg.fiber.alpha, cfg.fiber.beta2, cfg.fiber.beta3, cfg.fiber.n2,
                             cfg.fiber.a_eff, cfg.fiber.lambda_c);
}

std::vector<int> bit_pattern(const RunConfig& cfg) {
  if (!cfg.signal.pattern.empty()) return cfg.signal.pattern;
  return pseudo_random_pattern(cfg.signal.n_bits, cfg.signal.pattern_seed);
}

double kappa2(const RunConfig& cfg) {
  if (cfg.signal.kappa2 > 0.0) return cfg.signal.kappa2;
  return 0.5 * static_cast<double>(bit_pattern(cfg).size());
}

std::function<double(double)> launch_waveform(const RunConfig& cfg) {
  if (cfg.signal.shape == "gaussian") {
    const double w = cfg.signal.gaussian_width;
    return [w](double t) { return gaussian_waveform(w, t); };
  }
  const std::vector<int> bits = bit_pattern(cfg);
  const double edge = cfg.signal.edge_fraction;
  return [bits, edge](double t) { return ook_waveform(bits, edge, t); };
}

Grid training_grid(const RunConfig& cfg) {
  return build_grid(cfg.grid.n_t, cfg.grid.n_zeta, cfg.grid.n_initial);
}

Grid validation_grid(const RunConfig& cfg) {
  return build_grid(cfg.validate.n_t, cfg.validate.n_zeta, cfg.validate.n_t);
}

SignalSpec signal_spec(const RunConfig& cfg, double bit_rate) {
  SignalSpec s;
  s.bit_rate = bit_rate;
  s.peak_power = cfg.signal.peak_power;
  s.pattern = bit_pattern(cfg);
  s.edge_fraction = cfg.signal.edge_fraction;
  return s;
}

NormalizationMap normalization(const RunConfig& cfg, double bit_rate) {
  return compute_normalization(fiber_params(cfg), signal_spec(cfg, bit_rate), cfg.fiber.length,
                               kappa2(cfg) / bit_rate);
}

NlseCoefficients coefficients(const RunConfig& cfg, double bit_rate) {
  return compute_coefficients(normalization(cfg, bit_rate), fiber_params(cfg), bit_rate);
}

ParametricProblem parametric_problem(const RunConfig& cfg) {
  ParametricProblem p;
  p.coefficients = [cfg](double rate) { return coefficients(cfg, rate); };
  p.grid = training_grid(cfg);
  const auto f = launch_waveform(cfg);
  for (std::size_t i : p.grid.initial_indices) p.boundary.push_back(f(p.grid.t_nodes[i]));
  p.weights = {cfg.train.residual_weight, cfg.train.boundary_weight};
  return p;
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig t;
  t.max_epochs = cfg.train.max_epochs;
  t.loss_threshold = cfg.train.loss_threshold;
  t.log_every = cfg.train.log_every;
  t.weights = {cfg.train.residual_weight, cfg.train.boundary_weight};
  t.adam = {cfg.train.learning_rate, cfg.train.beta_a, cfg.train.beta_b, cfg.train.epsilon};
  t.batch_size = cfg.train.batch_size;
  t.batch_seed = cfg.seed;
  return t;
}

GreedyConfig greedy_config(const RunConfig& cfg) {
  GreedyConfig g;
  g.max_bases = cfg.greedy.max_bases;
  g.stop_loss = cfg.greedy.stop_loss;
  g.seed_rate = cfg.greedy.seed_rate;
  g.layer_sizes = cfg.layer_sizes;
  g.seed = cfg.seed;
  return g;
}

std::vector<double> sweep_rates(const RunConfig& cfg) {
  const auto& s = cfg.sweep;
  if (s.count == 1) return {s.min_rate};
  std::vector<double> r(s.count);
  const double step = (s.max_rate - s.min_rate) / static_cast<double>(s.count - 1);
  for (std::size_t k = 0; k < s.count; ++k) r[k] = s.min_rate + static_cast<double>(k) * step;
  r.back() = s.max_rate;
  return r;
}

std::vector<double> validation_rates(const RunConfig& cfg) {
  if (!cfg.validate.rates.empty()) return cfg.validate.rates;
  const auto r = sweep_rates(cfg);
  std::vector<double> out{r.front()};
  if (r.size() > 2) out.push_back(r[r.size() / 2]);
  if (r.size() > 1) out.push_back(r.back());
  return out;
}

GriddedField reference_on_validation_grid(const RunConfig& cfg, double bit_rate) {
  const Grid grid = validation_grid(cfg);
  const NormalizationMap map = normalization(cfg, bit_rate);
  const SsfmConfig scfg = aligned_ssfm_config(map, grid, cfg.ssfm.pad_factor, cfg.ssfm.step_length);
  return reference_field(launch_waveform(cfg), fiber_params(cfg), map, grid, scfg);
}

}  // namespace fiberpinn
