#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "dielscope/dielscope.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dielscope;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "dielscope_campaign_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

Session small_session() {
  GroundTruth t = GroundTruth::builtin();
  t.acquisition.n_points = 31;
  t.noise_sigma_gamma = 2e-3;
  return synth_campaign(t);
}

}  // namespace

TEST(Touchstone, FormatsMatchHandConversions) { EXPECT_LT(oracles::touchstone_format_mismatch(), 1e-12); }

TEST(Touchstone, HeaderCommentsAndDefaults) {
  const auto d = parse_touchstone("! probe in air\n!second\n# MHz S RI R 75\n100 0.1 0.2 ! trailing\n200 0.3 0.4\n");
  EXPECT_EQ(d.comments.size(), 3u);
  EXPECT_EQ(d.format, TouchstoneFormat::RI);
  EXPECT_EQ(d.resistance_ohm, 75.0);
  EXPECT_EQ(d.sweep.grid()[1], 200e6);
  EXPECT_EQ(d.sweep[1], Complex(0.3, 0.4));
  // An empty option line means GHz, MA, R 50.
  const auto e = parse_touchstone("#\n1 1 90\n2 1 0\n");
  EXPECT_EQ(e.sweep.grid()[0], 1e9);
  EXPECT_NEAR(e.sweep[0].imag(), 1.0, 1e-15);
}

TEST(Touchstone, Errors) {
  EXPECT_DIELSCOPE_ERROR(parse_touchstone("1 0 0\n"), "campaign.malformed_touchstone");
  EXPECT_DIELSCOPE_ERROR(parse_touchstone("# GHz S RI\n1 0 x\n2 0 0\n"), "campaign.malformed_touchstone");
  EXPECT_DIELSCOPE_ERROR(parse_touchstone("# GHz S RI\n1 0\n"), "campaign.malformed_touchstone");
  EXPECT_DIELSCOPE_ERROR(parse_touchstone("# GHz S RI\n1 0 0 0 0 0 0 0 0\n"), "campaign.multiport_touchstone");
  EXPECT_DIELSCOPE_ERROR(parse_touchstone("# GHz Y RI\n1 0 0\n2 0 0\n"), "campaign.malformed_touchstone");
  EXPECT_DIELSCOPE_ERROR(parse_touchstone("# GHz S RI\n2 0 0\n1 0 0\n"), "campaign.non_monotone");
  EXPECT_DIELSCOPE_ERROR(parse_touchstone(""), "campaign.malformed_touchstone");
}

TEST(Touchstone, RenderParseRoundTripProperty) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const FrequencyGrid g = FrequencyGrid::linear(0.5e9 + 1e6 * trial, 26.5e9, 17 + static_cast<std::size_t>(trial));
    std::vector<Complex> v(g.size());
    for (auto& c : v) c = {u(rng), u(rng)};
    const ReflectionSweep s(g, v);
    EXPECT_EQ(parse_touchstone(render_touchstone(s)).sweep, s);
  }
  const FrequencyGrid g({1e9, 2e9});
  const ReflectionSweep s(g, {Complex(0.1, 0.2), Complex(0.3, 0.4)});
  const std::string path = temp_path("rt.s1p");
  export_touchstone(s, path, std::vector<std::string>{"test"});
  EXPECT_EQ(import_touchstone(path), s);
  EXPECT_EQ(read_touchstone(path).comments.front(), "test");
}

TEST(SpectrumCsv, RoundTripIsIdentity) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(1.0, 90.0);
  for (int trial = 0; trial < 20; ++trial) {
    const FrequencyGrid g = FrequencyGrid::linear(0.5e9, 26.5e9, 11 + static_cast<std::size_t>(trial));
    std::vector<double> dc(g.size()), lf(g.size());
    for (auto& x : dc) x = u(rng);
    for (auto& x : lf) x = u(rng) / 3.0;
    const PermittivitySpectrum s(g, dc, lf);
    EXPECT_EQ(parse_spectrum_csv(render_spectrum_csv(s)), s);
  }
}

TEST(SpectrumCsv, ColumnOrderAndErrors) {
  const auto s = parse_spectrum_csv("# note\neps_imag_lossfactor,extra,f_hz,eps_real\n10,x,1e9,50\n12,y,2e9,48\n");
  EXPECT_EQ(s.grid()[1], 2e9);
  EXPECT_EQ(s.dielectric_constant()[0], 50.0);
  EXPECT_EQ(s.loss_factor()[1], 12.0);
  EXPECT_DIELSCOPE_ERROR(parse_spectrum_csv("f_hz,eps_real\n1,2\n"), "campaign.missing_columns");
  EXPECT_DIELSCOPE_ERROR(parse_spectrum_csv(""), "campaign.missing_columns");
  EXPECT_DIELSCOPE_ERROR(parse_spectrum_csv("f_hz,eps_real,eps_imag_lossfactor\n1e9,a,1\n2e9,1,1\n"),
                         "campaign.bad_csv_cell");
  EXPECT_DIELSCOPE_ERROR(parse_spectrum_csv("f_hz,eps_real,eps_imag_lossfactor\n1e9,1\n"), "campaign.bad_csv_row");
  EXPECT_DIELSCOPE_ERROR(parse_spectrum_csv("f_hz,eps_real,eps_imag_lossfactor\n2e9,1,1\n1e9,1,1\n"),
                         "campaign.non_monotone");
}

TEST(Session, JsonRoundTripIsIdentity) {
  const Session s = small_session();
  EXPECT_EQ(session_from_text(session_to_text(s)), s);
  const std::string path = temp_path("session.json");
  save_session(s, path);
  EXPECT_EQ(load_session(path), s);
}

TEST(Session, MixedProvenanceRoundTrip) {
  Session s;
  s.session_id = "mixed";
  const FrequencyGrid g({1e9, 2e9, 3e9});
  MeasurementPoint raw{"p1", TissueStatus::Healthy, Scenario::InVivo, std::nullopt, "a", Provenance::RawReflection,
                       {ReflectionSweep(g, {0.1, Complex(0.2, -0.1), 0.3})}, {}};
  MeasurementPoint ext{"p1", TissueStatus::Tumor, Scenario::InVivo, TumorStage::T4a, "b",
                       Provenance::ExternalPermittivity, {}, {PermittivitySpectrum(g, {50, 49, 48}, {20, 21, 22})}};
  s.points = {raw, ext};
  EXPECT_EQ(session_from_text(session_to_text(s)), s);
}

TEST(Session, DocumentErrors) {
  const std::string text = session_to_text(small_session());
  auto j = nlohmann::json::parse(text);
  j["schema_version"] = 2;
  EXPECT_DIELSCOPE_ERROR(session_from_text(j.dump()), "campaign.version_mismatch");
  j["schema_version"] = 1;
  j["format"] = "something-else";
  EXPECT_DIELSCOPE_ERROR(session_from_text(j.dump()), "campaign.wrong_format");
  EXPECT_DIELSCOPE_ERROR(session_from_text("{not json"), "campaign.corrupt_document");
  auto k = nlohmann::json::parse(text);
  k["points"][0].erase("location");
  EXPECT_DIELSCOPE_ERROR(session_from_text(k.dump()), "campaign.corrupt_document");
  auto g = nlohmann::json::parse(text);
  g["points"][0]["grid_hz"][1] = 0.0;
  EXPECT_DIELSCOPE_ERROR(session_from_text(g.dump()), "campaign.corrupt_document");
  EXPECT_DIELSCOPE_ERROR(load_session(temp_path("missing.json")), "io.open_failed");
}

TEST(Session, Validation) {
  Session s = small_session();
  s.points.push_back(s.points.front());
  EXPECT_DIELSCOPE_ERROR(s.validate(), "campaign.duplicate_point");
  Session t = small_session();
  for (auto& p : t.points)
    if (p.status == TissueStatus::Tumor) {
      p.stage.reset();
      break;
    }
  EXPECT_DIELSCOPE_ERROR(session_to_text(t), "campaign.invalid_point");
}

TEST(CalibrationDocument, RoundTripIsIdentity) {
  GroundTruth t = GroundTruth::builtin();
  t.acquisition.n_points = 41;
  t.noise_sigma_gamma = 1e-3;
  const FrequencyGrid g = t.acquisition.grid();
  const auto standards = synth_standards(t, g);
  const CalibrationModel cal = solve_calibration(standards);
  EXPECT_EQ(calibration_from_text(calibration_to_text(cal)), cal);
  std::vector<Complex> post(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) post[i] = standards[1].sweep[i] * 0.97;
  const CalibrationModel drifted = drift_correct(cal, {StandardKind::short_circuit(), ReflectionSweep(g, post)});
  const std::string path = temp_path("cal.json");
  save_calibration(drifted, path);
  EXPECT_EQ(load_calibration(path), drifted);
  EXPECT_DIELSCOPE_ERROR(calibration_from_text(session_to_text(small_session())), "campaign.wrong_format");
}

TEST(ParamsFile, ParsesSectionsQuotesAndComments) {
  const ParamDocument d = parse_params(
      "# header\nformat = x\nversion = 3\n\n[a]\nk = 1.5  # trailing\ns = \"with # hash\"\n[b]\nn = 4\n");
  EXPECT_EQ(d.format, "x");
  EXPECT_EQ(d.version, 3);
  EXPECT_EQ(d.section("a").get_double("k"), 1.5);
  EXPECT_EQ(d.section("a").get_string("s"), "with # hash");
  EXPECT_EQ(d.section("b").get_int("n"), 4);
  EXPECT_EQ(d.section("b").get_double("absent", 7.0), 7.0);
  EXPECT_NO_THROW(d.require("x", 3));
  EXPECT_DIELSCOPE_ERROR(d.require("y", 3), "params.wrong_format");
  EXPECT_DIELSCOPE_ERROR(d.require("x", 1), "params.version_mismatch");
  EXPECT_DIELSCOPE_ERROR(d.section("c"), "params.missing_section");
  EXPECT_DIELSCOPE_ERROR(d.section("a").get_double("s"), "params.bad_number");
  EXPECT_DIELSCOPE_ERROR(d.section("a").get_int("k"), "params.bad_integer");
  EXPECT_DIELSCOPE_ERROR(d.section("a").get_string("zz"), "params.missing_key");
  EXPECT_DIELSCOPE_ERROR(parse_params("[open\n"), "params.malformed");
  EXPECT_DIELSCOPE_ERROR(parse_params("novalue\n"), "params.malformed");
}

TEST(ParamsFile, RenderParseRoundTrip) {
  ParamDocument d;
  d.format = "f";
  d.version = 1;
  auto& s = d.add_section("x");
  s.set("a", 0.1);
  s.set("b", std::string("two words"));
  s.set("c", std::string(""));
  const ParamDocument e = parse_params(render_params(d));
  EXPECT_EQ(e.section("x").get_double("a"), 0.1);
  EXPECT_EQ(e.section("x").get_string("b"), "two words");
  EXPECT_EQ(e.section("x").get_string("c"), "");
}

TEST(Defaults, EmbeddedTextMatchesDataFiles) {
  const std::string dir = DIELSCOPE_DATA_DIR;
  EXPECT_EQ(read_text_file(dir + "/reference_liquids.txt"), defaults::kReferenceLiquidsText);
  EXPECT_EQ(read_text_file(dir + "/colecole_init.txt"), defaults::kColeColeInitText);
  EXPECT_EQ(read_text_file(dir + "/synthetic_truth.txt"), defaults::kSyntheticTruthText);
}
