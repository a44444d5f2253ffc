#include <gtest/gtest.h>

#include <random>

#include "dielscope/probe_cal.hpp"
#include "dielscope/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dielscope;

namespace {

GroundTruth clean_truth(std::size_t n_points = 201) {
  GroundTruth t = GroundTruth::builtin();
  t.noise_sigma_gamma = 0.0;
  t.acquisition.n_points = n_points;
  return t;
}

Complex debye(double es, double ei, double tau_ps, double f_hz) {
  const double wt = 2.0 * M_PI * f_hz * tau_ps * 1e-12;
  // (es - ei) / (1 + j wt) = (es - ei)(1 - j wt) / (1 + wt^2)
  return {ei + (es - ei) / (1.0 + wt * wt), -(es - ei) * wt / (1.0 + wt * wt)};
}

}  // namespace

TEST(ReferenceLiquids, WaterAndMethanolMatchOracle) {
  const Complex w = reference_permittivity(StandardKind::water(), 2.45e9);
  EXPECT_LT(rel_err(w.real(), oracles::kWater2p45Real), 1e-13);
  EXPECT_LT(rel_err(-w.imag(), oracles::kWater2p45Loss), 1e-13);
  const Complex m = reference_permittivity(StandardKind::methanol(), 2.45e9);
  EXPECT_LT(rel_err(m.real(), oracles::kMethanol2p45Real), 1e-13);
  EXPECT_LT(rel_err(-m.imag(), oracles::kMethanol2p45Loss), 1e-13);
  EXPECT_EQ(reference_permittivity(StandardKind::air(), 10e9), Complex(1.0, 0.0));
}

TEST(ReferenceLiquids, TemperatureCoefficients) {
  // 20 C: eps_s 78.36 + 0.36*5, tau 8.27 + 0.2*5 ps.
  const Complex w = reference_permittivity(StandardKind::water(20.0), 5e9);
  const Complex want = debye(80.16, 5.2, 9.27, 5e9);
  EXPECT_NEAR(w.real(), want.real(), 1e-12);
  EXPECT_NEAR(w.imag(), want.imag(), 1e-12);
  const Complex m = reference_permittivity(StandardKind::methanol(35.0), 5e9);
  const Complex wantm = debye(32.50 - 1.9, 5.60, 48.4 - 9.0, 5e9);
  EXPECT_NEAR(m.real(), wantm.real(), 1e-12);
  EXPECT_NEAR(m.imag(), wantm.imag(), 1e-12);
}

TEST(ReferenceLiquids, ValidityLimits) {
  EXPECT_DIELSCOPE_ERROR(StandardKind::water(45.0), "probe_cal.bad_temperature");
  EXPECT_DIELSCOPE_ERROR(StandardKind::methanol(5.0), "probe_cal.bad_temperature");
  EXPECT_DIELSCOPE_ERROR(reference_permittivity(StandardKind::water(), 60e9), "probe_cal.out_of_validity");
  EXPECT_DIELSCOPE_ERROR(reference_permittivity(StandardKind::short_circuit(), 1e9), "probe_cal.no_reference");
}

TEST(ReferenceLiquids, DataFileMatchesBuiltin) {
  const ReferenceLiquids f = ReferenceLiquids::load(std::string(DIELSCOPE_DATA_DIR) + "/reference_liquids.txt");
  const ReferenceLiquids& b = ReferenceLiquids::builtin();
  for (double fr : {0.5e9, 2.45e9, 26.5e9}) {
    EXPECT_EQ(f.water.evaluate(fr, 25.0), b.water.evaluate(fr, 25.0));
    EXPECT_EQ(f.methanol.evaluate(fr, 30.0), b.methanol.evaluate(fr, 30.0));
  }
  EXPECT_FALSE(b.water.source.empty());
  EXPECT_FALSE(b.methanol.source.empty());
}

TEST(StandardType, StringRoundTrip) {
  for (StandardType t : {StandardType::Air, StandardType::Short, StandardType::Water, StandardType::Methanol})
    EXPECT_EQ(parse_standard_type(to_string(t)), t);
  EXPECT_DIELSCOPE_ERROR(parse_standard_type("saline"), "probe_cal.unknown_standard");
}

TEST(SolveCalibration, RecoversProbeCoefficients) {
  const GroundTruth t = clean_truth();
  const FrequencyGrid grid = t.acquisition.grid();
  const CalibrationModel cal = solve_calibration(synth_standards(t, grid));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const BilinearCoeffs want = t.probe.coefficients(grid[i]);
    const BilinearCoeffs got = cal.coeffs(i);
    EXPECT_LT(std::abs(got.a - want.a) / std::abs(want.a), 1e-9);
    EXPECT_LT(std::abs(got.b - want.b) / std::abs(want.b), 1e-9);
    EXPECT_LT(std::abs(got.c - want.c) / std::abs(want.c), 1e-9);
    EXPECT_LT(cal.residual()[i], 1e-9);
  }
  EXPECT_FALSE(cal.has_drift_correction());
}

TEST(SolveCalibration, IndependentOfStandardOrder) {
  const GroundTruth t = clean_truth(51);
  auto standards = synth_standards(t, t.acquisition.grid());
  const CalibrationModel ref = solve_calibration(standards);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    std::shuffle(standards.begin(), standards.end(), rng);
    EXPECT_EQ(solve_calibration(standards), ref);
  }
}

TEST(SolveCalibration, OverdeterminedLeastSquares) {
  GroundTruth t = clean_truth(51);
  const FrequencyGrid grid = t.acquisition.grid();
  auto standards = synth_standards(t, grid);
  std::vector<Complex> g(grid.size());
  const StandardKind warm = StandardKind::water(35.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    g[i] = t.probe.coefficients(grid[i]).to_reflection(reference_permittivity(warm, grid[i]));
  standards.push_back({warm, ReflectionSweep(grid, g)});
  const CalibrationModel cal = solve_calibration(standards);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_LT(cal.residual()[i], 1e-8);

  // Noise makes the extra standard disagree; the residual reports it.
  t.noise_sigma_gamma = 1e-3;
  auto noisy = synth_standards(t, grid);
  noisy.push_back(standards.back());
  const CalibrationModel ncal = solve_calibration(noisy);
  EXPECT_GT(*std::max_element(ncal.residual().begin(), ncal.residual().end()), 1e-4);
}

TEST(SolveCalibration, Errors) {
  const GroundTruth t = clean_truth(11);
  const FrequencyGrid grid = t.acquisition.grid();
  auto standards = synth_standards(t, grid);
  EXPECT_DIELSCOPE_ERROR(solve_calibration(std::vector<StandardMeasurement>{}), "probe_cal.missing_standard");
  auto no_methanol = standards;
  no_methanol.pop_back();
  EXPECT_DIELSCOPE_ERROR(solve_calibration(no_methanol), "probe_cal.missing_standard");

  auto same = standards;
  for (auto& s : same)
    if (s.kind.has_finite_permittivity()) s.sweep = standards.front().sweep;
  EXPECT_DIELSCOPE_ERROR(solve_calibration(same), "probe_cal.degenerate");

  auto mixed = standards;
  mixed.back().sweep = ReflectionSweep(FrequencyGrid::linear(1e9, 2e9, 11), std::vector<Complex>(11, 0.1));
  EXPECT_DIELSCOPE_ERROR(solve_calibration(mixed), "probe_cal.grid_mismatch");
}

TEST(InvertReflection, RoundTripProperty) {
  const GroundTruth t = clean_truth(101);
  const FrequencyGrid grid = t.acquisition.grid();
  const CalibrationModel cal = solve_calibration(synth_standards(t, grid));
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> dc(1.0, 90.0), lf(0.0, 60.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Complex> g(grid.size());
    std::vector<Complex> eps(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      eps[i] = {dc(rng), -lf(rng)};
      g[i] = t.probe.coefficients(grid[i]).to_reflection(eps[i]);
    }
    const PermittivitySpectrum s = invert_reflection(cal, ReflectionSweep(grid, g));
    for (std::size_t i = 0; i < grid.size(); ++i)
      EXPECT_LT(std::abs(s.complex_at(i) - eps[i]) / std::abs(eps[i]), 1e-9);
  }
}

TEST(InvertReflection, PoleIsFlaggedAndZeroed) {
  const GroundTruth t = clean_truth(21);
  const FrequencyGrid grid = t.acquisition.grid();
  const auto standards = synth_standards(t, grid);
  const CalibrationModel cal = solve_calibration(standards);
  const StandardMeasurement& shrt = standards[1];
  ASSERT_EQ(shrt.kind.type, StandardType::Short);
  const PermittivitySpectrum s = invert_reflection(cal, shrt.sweep);
  EXPECT_EQ(s.count_flagged(kBilinearPole), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(s.complex_at(i), Complex(0.0, 0.0));
  EXPECT_DIELSCOPE_ERROR(invert_reflection(cal, ReflectionSweep(FrequencyGrid::linear(1e9, 2e9, 21),
                                                                std::vector<Complex>(21, 0.0))),
                         "probe_cal.grid_mismatch");
}

TEST(ValidateCalibration, CheckStandardResidual) {
  const GroundTruth t = clean_truth(41);
  const FrequencyGrid grid = t.acquisition.grid();
  const CalibrationModel cal = solve_calibration(synth_standards(t, grid));
  std::vector<Complex> g(grid.size());
  const StandardKind check = StandardKind::methanol(18.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    g[i] = t.probe.coefficients(grid[i]).to_reflection(reference_permittivity(check, grid[i]));
  const auto r = validate_calibration(cal, {check, ReflectionSweep(grid, g)});
  EXPECT_LT(r.max, 1e-9);
  EXPECT_LE(r.rms, r.max);
  EXPECT_DIELSCOPE_ERROR(validate_calibration(cal, {StandardKind::short_circuit(), ReflectionSweep(grid, g)}),
                         "probe_cal.no_reference");
}

TEST(DriftCorrect, RecoversDriftFactor) {
  const GroundTruth t = clean_truth(41);
  const FrequencyGrid grid = t.acquisition.grid();
  const auto standards = synth_standards(t, grid);
  const CalibrationModel cal = solve_calibration(standards);
  std::vector<Complex> post(grid.size());
  const Complex d = std::polar(0.98, 0.1);
  for (std::size_t i = 0; i < grid.size(); ++i) post[i] = standards[1].sweep[i] * d;
  const CalibrationModel corrected = drift_correct(cal, {StandardKind::short_circuit(), ReflectionSweep(grid, post)});
  EXPECT_TRUE(corrected.has_drift_correction());
  const DriftReport r = drift_report(corrected);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(r.magnitude[i], 0.98, 1e-12);
    EXPECT_NEAR(r.phase_rad[i], 0.1, 1e-12);
  }
  EXPECT_DIELSCOPE_ERROR(drift_correct(cal, {StandardKind::air(), ReflectionSweep(grid, post)}),
                         "probe_cal.not_a_short");
}

TEST(CalibrationModel, RejectsDegenerateCoefficients) {
  const FrequencyGrid g({1e9, 2e9});
  const std::vector<Complex> one(2, 1.0);
  EXPECT_DIELSCOPE_ERROR(CalibrationModel(g, one, one, one, one, {0.0, 0.0}), "probe_cal.degenerate");
  EXPECT_DIELSCOPE_ERROR(CalibrationModel(g, one, {1.0}, one, one, {0.0, 0.0}), "probe_cal.length_mismatch");
}
