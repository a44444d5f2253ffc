#include <gtest/gtest.h>

#include <random>

#include "dielscope/colecole.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dielscope;

namespace {

PermittivitySpectrum with_noise(const PermittivitySpectrum& s, double level, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> dc(s.size()), lf(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    dc[i] = s.dielectric_constant()[i] * (1.0 + level * n01(rng));
    lf[i] = s.loss_factor()[i] * (1.0 + level * n01(rng));
  }
  return PermittivitySpectrum(s.grid(), dc, lf);
}

}  // namespace

TEST(ColeColeModel, SpotValuesMatchOracle) {
  const ColeColeParams p = oracles::reference_two_pole();
  for (const auto& spot : oracles::kTwoPoleSpots) {
    const Complex e = colecole::evaluate_at(p, spot.f_hz);
    EXPECT_LT(rel_err(e.real(), spot.real), 1e-13) << spot.f_hz;
    EXPECT_LT(rel_err(-e.imag(), spot.loss), 1e-13) << spot.f_hz;
  }
}

TEST(ColeColeModel, DebyeLimitAndStaticTerms) {
  // alpha = 0 is a Debye pole: eps_inf + d/(1 + j w tau).
  const ColeColeParams p{3.0, {{20.0, 1e-11, 0.0}}, 0.0};
  const double f = 5e9, wt = 2.0 * M_PI * f * 1e-11;
  const Complex e = colecole::evaluate_at(p, f);
  EXPECT_NEAR(e.real(), 3.0 + 20.0 / (1.0 + wt * wt), 1e-12);
  EXPECT_NEAR(-e.imag(), 20.0 * wt / (1.0 + wt * wt), 1e-12);
  // No poles: constant eps' plus conductivity loss.
  const ColeColeParams c{7.0, {}, 1.0};
  const Complex ec = colecole::evaluate_at(c, 2.45e9);
  EXPECT_DOUBLE_EQ(ec.real(), 7.0);
  EXPECT_LT(rel_err(loss_factor_to_conductivity(-ec.imag(), 2.45e9), 1.0), 1e-14);
}

TEST(ColeColeModel, PassivityProperty) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uf(0.5e9, 26.5e9);
  for (int k = 0; k < 2000; ++k) {
    const ColeColeParams p = oracles::random_params(rng, 1 + static_cast<std::size_t>(k % 4));
    const Complex e = colecole::evaluate_at(p, uf(rng));
    EXPECT_GE(-e.imag(), 0.0);
    EXPECT_GE(e.real(), p.eps_inf - 1e-12);
  }
}

TEST(ColeColeModel, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> uf(0.5e9, 26.5e9);
  for (int k = 0; k < 50; ++k) {
    const ColeColeParams p = oracles::random_params(rng, 1 + static_cast<std::size_t>(k % 3));
    EXPECT_LT(oracles::jacobian_fd_mismatch(p, uf(rng)), 1e-5);
  }
}

TEST(ColeColeParams, Validation) {
  EXPECT_DIELSCOPE_ERROR((ColeColeParams{0.5, {}, 0.0}).validate(), "colecole.invalid_params");
  EXPECT_DIELSCOPE_ERROR((ColeColeParams{4.0, {{-1.0, 1e-11, 0.1}}, 0.0}).validate(), "colecole.invalid_params");
  EXPECT_DIELSCOPE_ERROR((ColeColeParams{4.0, {{1.0, 0.0, 0.1}}, 0.0}).validate(), "colecole.invalid_params");
  EXPECT_DIELSCOPE_ERROR((ColeColeParams{4.0, {{1.0, 1e-11, 1.0}}, 0.0}).validate(), "colecole.invalid_params");
  EXPECT_DIELSCOPE_ERROR((ColeColeParams{4.0, {}, -1.0}).validate(), "colecole.invalid_params");
}

TEST(ColeColeParams, PackUnpackRoundTrip) {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 100; ++k) {
    const ColeColeParams p = oracles::random_params(rng, static_cast<std::size_t>(k % 4));
    const ColeColeParams q = colecole::unpack(colecole::pack(p));
    ASSERT_EQ(q.poles.size(), p.poles.size());
    EXPECT_EQ(q.eps_inf, p.eps_inf);
    EXPECT_EQ(q.sigma_s, p.sigma_s);
    for (std::size_t m = 0; m < p.poles.size(); ++m) EXPECT_LT(rel_err(q.poles[m].tau_s, p.poles[m].tau_s), 1e-13);
  }
}

TEST(ColeColeParams, SectionRoundTripIsExact) {
  std::mt19937_64 rng(24);
  for (int k = 0; k < 50; ++k) {
    const ColeColeParams p = oracles::random_params(rng, static_cast<std::size_t>(k % 4));
    ParamDocument doc;
    doc.format = kColeColeFormat;
    doc.version = 1;
    params_to_section(p, doc.add_section("model"));
    EXPECT_EQ(load_colecole_params(parse_params(render_params(doc))), p);
  }
}

TEST(ColeColeParams, CanonicalInitialMatchesDataFile) {
  const ColeColeParams file = load_colecole_params(load_params(std::string(DIELSCOPE_DATA_DIR) + "/colecole_init.txt"));
  EXPECT_EQ(file, canonical_initial_params());
  EXPECT_EQ(file.poles.size(), 2u);
  EXPECT_DIELSCOPE_ERROR(params_from_section(parse_params("[m]\neps_inf = 4\npole1 = 1, 2\n").section("m")),
                         "params.malformed");
}

TEST(ColeColeFit, NoiseFreeOnePoleRecovery) {
  const ColeColeParams truth{5.0, {{40.0, 2e-11, 0.15}}, 1.2};
  const PermittivitySpectrum s = evaluate(truth, FrequencyGrid::linear(0.5e9, 26.5e9, 201));
  const FitResult r = fit(s, 1);
  EXPECT_LT(r.objective, 1e-20);
  EXPECT_LT(rel_err(r.params.eps_inf, 5.0), 1e-6);
  EXPECT_LT(rel_err(r.params.poles[0].delta_eps, 40.0), 1e-6);
  EXPECT_LT(rel_err(r.params.poles[0].tau_s, 2e-11), 1e-6);
  EXPECT_LT(rel_err(r.params.poles[0].alpha, 0.15), 1e-6);
  EXPECT_LT(rel_err(r.params.sigma_s, 1.2), 1e-6);
  EXPECT_LT(r.rms_rel_error_dc, 1e-9);
  EXPECT_LT(r.rms_rel_error_lf, 1e-9);
  EXPECT_EQ(r.solution.size(), 5u);
}

TEST(ColeColeFit, DeterministicForFixedSeed) {
  const PermittivitySpectrum s =
      with_noise(evaluate(oracles::reference_two_pole(), FrequencyGrid::linear(0.5e9, 26.5e9, 151)), 0.01, 3);
  FitConfig cfg;
  cfg.n_starts = 6;
  cfg.rng_seed = 99;
  const FitResult a = fit(s, 2, cfg);
  const FitResult b = fit(s, 2, cfg);
  EXPECT_EQ(a, b);
  EXPECT_GE(a.start_index, 0);
  EXPECT_LT(a.start_index, 6);
}

TEST(ColeColeFit, ObjectiveHistoryNonIncreasing) {
  const PermittivitySpectrum s =
      with_noise(evaluate(oracles::reference_two_pole(), FrequencyGrid::linear(0.5e9, 26.5e9, 151)), 0.02, 4);
  const FitResult r = fit(s, 2);
  ASSERT_FALSE(r.objective_history.empty());
  for (std::size_t k = 1; k < r.objective_history.size(); ++k)
    EXPECT_LE(r.objective_history[k], r.objective_history[k - 1]);
  EXPECT_DOUBLE_EQ(r.objective_history.back(), r.objective);
}

TEST(ColeColeFit, RespectsBounds) {
  const ColeColeParams truth{4.0, {{30.0, 1e-11, 0.6}}, 0.5};
  const PermittivitySpectrum s = evaluate(truth, FrequencyGrid::linear(0.5e9, 26.5e9, 101));
  const FitResult r = fit(s, 1);
  const FitBounds b;
  EXPECT_LE(r.params.poles[0].alpha, b.alpha_hi);
  EXPECT_GE(r.params.poles[0].alpha, b.alpha_lo);
  EXPECT_GT(r.objective, 0.0);
}

TEST(ColeColeFit, SkipsPoleFlaggedPoints) {
  const FrequencyGrid g = FrequencyGrid::linear(0.5e9, 26.5e9, 101);
  const PermittivitySpectrum clean = evaluate(oracles::reference_two_pole(), g);
  std::vector<double> dc(clean.dielectric_constant().begin(), clean.dielectric_constant().end());
  std::vector<double> lf(clean.loss_factor().begin(), clean.loss_factor().end());
  std::vector<std::uint8_t> flags(g.size(), kPointOk);
  for (std::size_t i = 10; i < 20; ++i) {
    dc[i] = 0.0;
    lf[i] = 0.0;
    flags[i] = kBilinearPole;
  }
  const FitResult r = fit(PermittivitySpectrum(g, dc, lf, flags), 2);
  EXPECT_LT(r.objective, 1e-16);
}

TEST(ColeColeFit, AbsoluteWeighting) {
  const PermittivitySpectrum s = evaluate(oracles::reference_two_pole(), FrequencyGrid::linear(0.5e9, 26.5e9, 101));
  FitConfig cfg;
  cfg.weighting = Weighting::Absolute;
  EXPECT_LT(fit(s, 2, cfg).objective, 1e-14);
}

TEST(ColeColeFit, Errors) {
  const PermittivitySpectrum s = evaluate(oracles::reference_two_pole(), FrequencyGrid::linear(1e9, 2e9, 9));
  EXPECT_DIELSCOPE_ERROR(fit(s, 2), "colecole.too_few_points");
  FitConfig cfg;
  cfg.n_starts = 0;
  EXPECT_DIELSCOPE_ERROR(fit(s, 1, cfg), "colecole.invalid_config");
  cfg = {};
  cfg.bounds.alpha_hi = 1.5;
  EXPECT_DIELSCOPE_ERROR(fit(s, 1, cfg), "colecole.invalid_bounds");
}

TEST(ComparePoleCounts, NonIncreasingProperty) {
  std::mt19937_64 rng(25);
  const FrequencyGrid g = FrequencyGrid::linear(0.5e9, 26.5e9, 81);
  FitConfig cfg;
  cfg.n_starts = 3;
  for (int trial = 0; trial < 6; ++trial) {
    const ColeColeParams p = oracles::random_params(rng, 1 + static_cast<std::size_t>(trial % 3));
    const auto rows = compare_pole_counts(with_noise(evaluate(p, g), 0.03, 100 + static_cast<std::uint64_t>(trial)), 3, cfg);
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t k = 0; k < rows.size(); ++k) EXPECT_EQ(rows[k].m_poles, k + 1);
    for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_LE(rows[k].objective, rows[k - 1].objective);
  }
  EXPECT_DIELSCOPE_ERROR(compare_pole_counts(evaluate(oracles::reference_two_pole(), g), 0), "colecole.invalid_config");
}
