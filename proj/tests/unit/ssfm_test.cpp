#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "fiberpinn/error.hpp"
#include "fiberpinn/fft.hpp"
#include "fiberpinn/physical_model.hpp"
#include "fiberpinn/ssfm.hpp"

namespace fp = fiberpinn;
using cd = std::complex<double>;

namespace {

fp::FiberParams fiber_with(double alpha, double beta2, double beta3, double n2) {
  return fp::derive_fiber_params(alpha, beta2, beta3, n2, 8e-11, 1.55e-6);
}

fp::SsfmConfig config(std::size_t n, double window, double step) {
  fp::SsfmConfig c;
  c.n_time_samples = n;
  c.window = window;
  c.step_length = step;
  return c;
}

std::vector<cd> gaussian_launch(const fp::SsfmConfig& c, double t0, double p0) {
  std::vector<cd> a;
  for (double t : fp::sample_times(c)) a.emplace_back(std::sqrt(p0) * std::exp(-t * t / (2 * t0 * t0)));
  return a;
}

double rms_width(const std::vector<cd>& a, const std::vector<double>& t) {
  double m0 = 0, m1 = 0, m2 = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double p = std::norm(a[j]);
    m0 += p;
    m1 += p * t[j];
    m2 += p * t[j] * t[j];
  }
  return std::sqrt(m2 / m0 - (m1 / m0) * (m1 / m0));
}

double mean_power(const fp::GriddedField& f) {
  double s = 0;
  for (std::size_t k = 0; k < f.real_part.size(); ++k) {
    s += f.real_part[k] * f.real_part[k] + f.imag_part[k] * f.imag_part[k];
  }
  return s / static_cast<double>(f.real_part.size());
}

struct Setup {
  fp::FiberParams fiber;
  fp::NormalizationMap map;
  fp::NlseCoefficients coeffs;
};

Setup setup_at(double rate, double kappa2, const fp::FiberParams& fiber) {
  fp::SignalSpec s;
  s.bit_rate = rate;
  s.pattern = {0, 1, 1, 0};
  Setup out{fiber, {}, {}};
  out.map = fp::compute_normalization(fiber, s, 1e5, kappa2 / rate);
  out.coeffs = fp::compute_coefficients(out.map, fiber, rate);
  return out;
}

// Residual of an SSFM solution on (n_t, n_zeta) and on the 2x refined grid.
std::pair<double, double> residual_ratio_pair(const Setup& su,
                                              const std::function<double(double)>& w,
                                              std::size_t n_t, std::size_t n_zeta,
                                              double* power = nullptr) {
  double out[2];
  for (int level = 0; level < 2; ++level) {
    const std::size_t nt = (n_t - 1) * (level + 1) + 1;
    const std::size_t nz = (n_zeta - 1) * (level + 1) + 1;
    const fp::Grid g = fp::build_grid(nt, nz, 1);
    const double dz = su.map.l_max / static_cast<double>(nz - 1);
    const fp::SsfmConfig cfg = fp::aligned_ssfm_config(su.map, g, 4, dz / 2.0);
    const fp::GriddedField f = fp::reference_field(w, su.fiber, su.map, g, cfg);
    const double p = mean_power(f);
    if (power) *power = p;
    out[level] = fp::nlse_residual_fd(f, su.coeffs, g) / p;
  }
  return {out[0], out[1]};
}

}  // namespace

TEST(Fft, RoundTrip) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (std::size_t len : {8u, 64u, 1024u}) {
    std::vector<cd> x(len);
    for (auto& v : x) v = {n(rng), n(rng)};
    auto y = x;
    fp::FftPlan plan(len);
    plan.forward(y);
    plan.inverse(y);
    double num = 0, den = 0;
    for (std::size_t k = 0; k < len; ++k) {
      num += std::norm(y[k] - x[k]);
      den += std::norm(x[k]);
    }
    EXPECT_LT(std::sqrt(num / den), 1e-12);
  }
}

TEST(Fft, ForwardSignConvention) {
  const std::size_t n = 16;
  std::vector<cd> x(n);
  for (std::size_t j = 0; j < n; ++j) x[j] = std::polar(1.0, 2 * fp::kPi * 3 * j / n);
  fp::FftPlan(n).forward(x);
  EXPECT_NEAR(std::abs(x[3]), 16.0, 1e-12);
  EXPECT_NEAR(std::abs(x[13]), 0.0, 1e-12);
  const auto w = fp::angular_frequencies(n, 0.5);
  EXPECT_NEAR(w[1], 2 * fp::kPi / 8.0, 1e-15);
  EXPECT_NEAR(w[8], -fp::kPi / 0.5, 1e-12);
}

TEST(Ssfm, RejectsNonPowerOfTwoSamples) {
  const auto c = config(1000, 1e-9, 100.0);
  std::vector<cd> launch(1000, 1.0);
  try {
    fp::propagate(launch, fiber_with(0, 0, 0, 0), 1e3, c, {});
    FAIL();
  } catch (const fp::Error& e) {
    EXPECT_EQ(e.code(), fp::ErrorCode::kInvalidConfig);
  }
}

TEST(Ssfm, DivergenceNamesStep) {
  const auto c = config(64, 1e-9, 100.0);
  std::vector<cd> launch(64, 1.0);
  launch[5] = cd(std::numeric_limits<double>::quiet_NaN(), 0.0);
  try {
    fp::propagate(launch, fiber_with(0, -2e-26, 0, 2.6e-20), 1e3, c, {});
    FAIL();
  } catch (const fp::Error& e) {
    EXPECT_EQ(e.code(), fp::ErrorCode::kDivergence);
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos);
  }
}

TEST(Ssfm, AttenuationOnly) {
  const auto c = config(256, 1e-9, 100.0);
  std::vector<cd> launch = gaussian_launch(c, 5e-11, 1e-2);
  const auto ev = fp::propagate(launch, fiber_with(4.605e-5, 0, 0, 0), 1e4, c, {});
  const double expected = std::exp(-4.605e-5 * 1e4 / 2);
  EXPECT_NEAR(expected, 0.7944, 1e-4);
  // Far-tail samples are dominated by transform rounding of the peak; the
  // closed form is checked wherever the launch is above 1e-3 of its peak.
  for (std::size_t j = 0; j < launch.size(); ++j) {
    if (std::abs(launch[j]) < 1e-3 * std::sqrt(1e-2)) continue;
    EXPECT_NEAR(std::abs(ev.snapshots.back().field[j]) / std::abs(launch[j]), expected,
                1e-10 * expected);
  }
}

TEST(Ssfm, AttenuationOfConstantLaunchAtEverySample) {
  const auto c = config(256, 1e-9, 100.0);
  std::vector<cd> launch(256, cd(0.06, -0.08));
  const auto ev = fp::propagate(launch, fiber_with(4.605e-5, 0, 0, 0), 1e4, c, {});
  const double expected = std::exp(-4.605e-5 * 1e4 / 2);
  for (const cd& a : ev.snapshots.back().field) EXPECT_NEAR(std::abs(a) / 0.1, expected, 1e-10 * expected);
}

TEST(Ssfm, SelfPhaseModulationOfConstantPower) {
  const double p0 = 1e-2;
  const auto c = config(64, 1e-9, 250.0);
  std::vector<cd> launch(64, std::sqrt(p0));
  const auto f = fiber_with(0, 0, 0, 2.6e-20);
  const double z = 1e5;
  const auto ev = fp::propagate(launch, f, z, c, {});
  const double expected = f.gamma * p0 * z;
  for (const cd& a : ev.snapshots.back().field) {
    EXPECT_NEAR(std::arg(a), expected, 1e-6 * expected);
    EXPECT_NEAR(std::abs(a), std::sqrt(p0), 1e-14);
  }
}

TEST(Ssfm, GaussianBroadensBySqrtTwoAtDispersionLength) {
  const double t0 = 1e-11;
  const double beta2 = -2e-26;
  const double l_d = t0 * t0 / std::abs(beta2);
  const auto c = config(4096, 80 * t0, 50.0);
  const auto launch = gaussian_launch(c, t0, 1e-2);
  const auto ev = fp::propagate(launch, fiber_with(0, beta2, 0, 0), l_d, c, {});
  const auto t = fp::sample_times(c);
  const double ratio = rms_width(ev.snapshots.back().field, t) / rms_width(launch, t);
  EXPECT_NEAR(ratio, std::sqrt(2.0), 1e-3 * std::sqrt(2.0));
}

TEST(Ssfm, EnergyConservedWithoutLoss) {
  const auto c = config(2048, 4e-10, 100.0);
  const auto launch = gaussian_launch(c, 2e-11, 1e-2);
  const auto ev = fp::propagate(launch, fiber_with(0, -2e-26, -2e-38, 2.6e-20), 1e5, c, {});
  const double e0 = fp::field_energy(launch, c.dt());
  const double e1 = fp::field_energy(ev.snapshots.back().field, c.dt());
  EXPECT_LT(std::abs(e1 - e0) / e0, 1e-8);
}

TEST(Ssfm, SymmetricSplittingIsSecondOrder) {
  const auto c0 = config(1024, 4e-10, 1.0);
  const auto launch = gaussian_launch(c0, 3e-11, 0.05);
  const auto f = fp::standard_single_mode_fiber();
  const double z = 5e4;
  auto run = [&](double h) {
    auto c = c0;
    c.step_length = h;
    return fp::propagate(launch, f, z, c, {}).snapshots.back().field;
  };
  auto dev = [](const std::vector<cd>& a, const std::vector<cd>& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::norm(a[k] - b[k]);
    return std::sqrt(s);
  };
  const double h = 5e3;
  const auto ref = run(h / 8);
  const double ratio = dev(run(h), ref) / dev(run(h / 2), ref);
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.6);
}

TEST(Ssfm, SimpleSplittingIsFirstOrder) {
  auto c0 = config(1024, 4e-10, 1.0);
  c0.scheme = fp::SplitScheme::kSimple;
  const auto launch = gaussian_launch(c0, 3e-11, 0.05);
  const auto f = fp::standard_single_mode_fiber();
  auto run = [&](double h) {
    auto c = c0;
    c.step_length = h;
    return fp::propagate(launch, f, 5e4, c, {}).snapshots.back().field;
  };
  auto dev = [](const std::vector<cd>& a, const std::vector<cd>& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::norm(a[k] - b[k]);
    return std::sqrt(s);
  };
  const auto ref = run(5e3 / 8);
  const double ratio = dev(run(5e3), ref) / dev(run(5e3 / 2), ref);
  EXPECT_GT(ratio, 1.8);
  EXPECT_LT(ratio, 2.6);
}

TEST(Ssfm, LinearRegimeIsAdditive) {
  const auto c = config(512, 4e-10, 500.0);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  std::vector<cd> a(512), b(512), sum(512);
  for (std::size_t k = 0; k < 512; ++k) {
    a[k] = {n(rng), n(rng)};
    b[k] = {n(rng), n(rng)};
    sum[k] = a[k] + b[k];
  }
  const auto f = fiber_with(4.605e-5, -2e-26, -2e-38, 0.0);
  const auto ra = fp::propagate(a, f, 2e4, c, {}).snapshots.back().field;
  const auto rb = fp::propagate(b, f, 2e4, c, {}).snapshots.back().field;
  const auto rs = fp::propagate(sum, f, 2e4, c, {}).snapshots.back().field;
  double num = 0, den = 0;
  for (std::size_t k = 0; k < 512; ++k) {
    num += std::norm(rs[k] - ra[k] - rb[k]);
    den += std::norm(rs[k]);
  }
  EXPECT_LT(std::sqrt(num / den), 1e-13);
}

TEST(Ssfm, SnapshotsLandExactly) {
  const auto c = config(64, 1e-9, 300.0);
  std::vector<cd> launch(64, 0.1);
  const std::vector<double> stops{1000.0, 250.0, 1000.0};
  const auto ev = fp::propagate(launch, fiber_with(0, 0, 0, 0), 1300.0, c, stops);
  ASSERT_EQ(ev.snapshots.size(), 4u);
  EXPECT_EQ(ev.snapshots[0].z, 0.0);
  EXPECT_EQ(ev.snapshots[1].z, 250.0);
  EXPECT_EQ(ev.snapshots[2].z, 1000.0);
  EXPECT_EQ(ev.snapshots[3].z, 1300.0);
  EXPECT_EQ(ev.snapshots[0].field, launch);
}

TEST(Normalize, ZeroFieldStaysZero) {
  const auto su = setup_at(10e9, 2.0, fp::standard_single_mode_fiber());
  const auto g = fp::build_grid(33, 5, 4);
  const auto cfg = fp::aligned_ssfm_config(su.map, g, 2, 5e3);
  const auto f = fp::reference_field([](double) { return 0.0; }, su.fiber, su.map, g, cfg);
  EXPECT_EQ(f.max_amplitude(), 0.0);
}

TEST(Normalize, PeakAmplitudeOneAtLaunch) {
  const auto su = setup_at(10e9, 2.0, fp::standard_single_mode_fiber());
  const auto g = fp::build_grid(33, 5, 4);
  const auto cfg = fp::aligned_ssfm_config(su.map, g, 2, 5e3);
  const auto f = fp::reference_field([](double t) { return fp::gaussian_waveform(0.25, t); },
                                     su.fiber, su.map, g, cfg);
  EXPECT_NEAR(f.at(16, 0).real(), 1.0, 1e-15);
  double peak0 = 0;
  for (std::size_t i = 0; i < g.n_t(); ++i) peak0 = std::max(peak0, std::abs(f.at(i, 0)));
  EXPECT_NEAR(peak0, 1.0, 1e-15);
}

TEST(Normalize, AttenuationSurvivesNormalization) {
  const auto fiber = fiber_with(4.605e-5, -2e-26, 0, 0);
  auto su = setup_at(10e9, 2.0, fiber);
  su.fiber.beta2 = 0.0;  // propagate attenuation only; the map keeps its L_D
  const auto g = fp::build_grid(33, 5, 4);
  const auto cfg = fp::aligned_ssfm_config(su.map, g, 2, 5e3);
  const auto f = fp::reference_field([](double t) { return fp::gaussian_waveform(0.25, t); },
                                     su.fiber, su.map, g, cfg);
  EXPECT_NEAR(std::abs(f.at(16, 4)), std::exp(-4.605e-5 * 1e5 / 2), 1e-12);
}

TEST(Normalize, CoverageErrors) {
  const auto su = setup_at(10e9, 2.0, fp::standard_single_mode_fiber());
  const auto g = fp::build_grid(33, 5, 4);
  auto cfg = config(64, su.map.t_max, 1e3);  // window covers only half of [-T_max, T_max]
  std::vector<cd> launch(64, 0.0);
  const auto ev = fp::propagate(launch, su.fiber, su.map.l_max, cfg, std::vector<double>{2.5e4, 5e4, 7.5e4});
  try {
    fp::to_normalized(ev, su.map, g);
    FAIL();
  } catch (const fp::Error& e) {
    EXPECT_EQ(e.code(), fp::ErrorCode::kCoverage);
  }
  cfg.window = 4 * su.map.t_max;
  const auto ev2 = fp::propagate(launch, su.fiber, su.map.l_max, cfg, std::vector<double>{5e4});
  try {
    fp::to_normalized(ev2, su.map, g);
    FAIL();
  } catch (const fp::Error& e) {
    EXPECT_EQ(e.code(), fp::ErrorCode::kCoverage);
  }
}

TEST(Normalize, InterpolatesBetweenSamples) {
  fp::FieldEvolution ev;
  ev.t_start = -2.0;
  ev.dt = 1.0;
  ev.snapshots.push_back({0.0, {0.0, 1.0, 3.0, 5.0, 7.0}});
  ev.snapshots.push_back({1.0, {0.0, 1.0, 3.0, 5.0, 7.0}});
  fp::NormalizationMap m;
  m.l_max = 1.0;
  m.t_max = 1.5;
  m.p0 = 4.0;
  const auto g = fp::Grid::from_nodes({-1.0, 0.0, 1.0}, {0.0, 1.0}, {0});
  const auto f = fp::to_normalized(ev, m, g);
  // T = -1.5 -> halfway between samples 0 and 1; T = 1.5 -> halfway 3..4.
  EXPECT_NEAR(f.at(0, 0).real(), 0.25, 1e-15);
  EXPECT_NEAR(f.at(1, 0).real(), 1.5, 1e-15);
  EXPECT_NEAR(f.at(2, 1).real(), 3.0, 1e-15);
}

TEST(Residual, ZeroFieldHasZeroResidual) {
  const auto su = setup_at(10e9, 2.0, fp::standard_single_mode_fiber());
  const auto g = fp::build_grid(16, 5, 2);
  EXPECT_EQ(fp::nlse_residual_fd(fp::GriddedField(g), su.coeffs, g), 0.0);
}

TEST(Residual, ConstantFieldClosedForm) {
  const auto su = setup_at(10e9, 2.0, fp::standard_single_mode_fiber());
  const auto g = fp::build_grid(16, 5, 2);
  fp::GriddedField f(g);
  for (auto& v : f.real_part) v = 1.0;
  const auto& c = su.coeffs;
  const double expected = c.kappa1 * c.kappa1 * (c.a2 * c.a2 + c.a5 * c.a5);
  EXPECT_NEAR(fp::nlse_residual_fd(f, c, g), expected, 1e-12 * expected);
}

TEST(Residual, RejectsSmallOrNonUniformGrids) {
  const auto su = setup_at(10e9, 2.0, fp::standard_single_mode_fiber());
  const auto g = fp::build_grid(5, 5, 2);
  EXPECT_THROW(fp::nlse_residual_fd(fp::GriddedField(g), su.coeffs, g), fp::Error);
  const auto g2 = fp::build_grid(8, 2, 2);
  EXPECT_THROW(fp::nlse_residual_fd(fp::GriddedField(g2), su.coeffs, g2), fp::Error);
  const auto g3 = fp::Grid::from_nodes({-1, -0.9, -0.5, 0, 0.2, 0.5, 1}, {0, 0.5, 1}, {0});
  EXPECT_THROW(fp::nlse_residual_fd(fp::GriddedField(g3), su.coeffs, g3), fp::Error);
}

TEST(Residual, OokSolutionAtLowRates) {
  const std::vector<int> bits{0, 1, 1, 0};
  const auto w = [&](double t) { return fp::ook_waveform(bits, 0.5, t); };
  for (double rate : {2e9, 10e9}) {
    const auto su = setup_at(rate, 2.0, fp::standard_single_mode_fiber());
    const auto [coarse, fine] = residual_ratio_pair(su, w, 129, 129);
    EXPECT_LT(coarse, 1e-2) << rate;
    EXPECT_LT(fine, coarse) << rate;
  }
}

TEST(Residual, ThirdOrderSignIsPinned) {
  // Large third-order dispersion: the residual with the derived a4 is small,
  // the one with a flipped a4 is not.
  auto fiber = fp::standard_single_mode_fiber();
  fiber.beta3 *= 200.0;
  const auto su = setup_at(50e9, 4.0, fiber);
  ASSERT_GT(std::abs(su.coeffs.terms().third_order), 0.5 * std::abs(su.coeffs.terms().dispersion));
  const auto g = fp::build_grid(257, 513, 1);
  const auto cfg = fp::aligned_ssfm_config(su.map, g, 4, su.map.l_max / 1024.0);
  const auto f = fp::reference_field([](double t) { return fp::gaussian_waveform(0.25, t); },
                                     su.fiber, su.map, g, cfg);
  auto flipped = su.coeffs;
  flipped.a4 = -flipped.a4;
  const double good = fp::nlse_residual_fd(f, su.coeffs, g);
  const double bad = fp::nlse_residual_fd(f, flipped, g);
  EXPECT_LT(good * 100.0, bad);
}
