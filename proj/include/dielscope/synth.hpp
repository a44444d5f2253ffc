#pragma once

// Synthetic campaigns with known ground truth. Tissue spectra come from
// Cole-Cole parameters, are pushed through a forward probe model (the inverse
// of the bilinear calibration map) and receive additive complex Gaussian
// noise on the reflection coefficient. All randomness derives from one seed.

#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "dielscope/colecole.hpp"
#include "dielscope/contrast.hpp"
#include "dielscope/defaults.hpp"
#include "dielscope/params_file.hpp"
#include "dielscope/probe_cal.hpp"
#include "dielscope/report.hpp"
#include "dielscope/session.hpp"

namespace dielscope {

/// Capacitive aperture behind a lossy, delayed cable:
///   Gamma_aperture = (1 - y) / (1 + y),  y = j w c0z0 eps
///   Gamma_measured = cable_gain * exp(-j w cable_delay) * Gamma_aperture
struct ProbeForwardModel {
  double c0z0_s = 1.0e-12;
  double cable_gain = 0.95;
  double cable_delay_s = 1.5e-10;

  /// Bilinear coefficients that invert this model exactly.
  BilinearCoeffs coefficients(double f_hz) const {
    const double omega = kTwoPi * f_hz;
    const Complex k{0.0, omega * c0z0_s};
    const Complex cable = cable_gain * std::exp(Complex{0.0, -omega * cable_delay_s});
    return {-1.0 / (k * cable), 1.0 / k, 1.0 / cable};
  }
};

struct PatientPlanEntry {
  Scenario scenario = Scenario::ExVivo;
  TumorStage stage = TumorStage::T3;
  std::size_t n_patients = 0;
};

struct GroundTruth {
  AcquisitionConfig acquisition;
  ProbeForwardModel probe;
  double noise_sigma_gamma = 0.0;  // per real/imaginary component
  std::uint64_t rng_seed = 1;
  std::size_t points_per_tissue = 2;
  std::vector<PatientPlanEntry> plan;
  /// Tissue parameters keyed by (scenario, stage, status).
  std::map<std::tuple<Scenario, TumorStage, TissueStatus>, ColeColeParams> tissues;

  const ColeColeParams& tissue(Scenario sc, TumorStage st, TissueStatus status) const {
    const auto it = tissues.find({sc, st, status});
    if (it == tissues.end())
      detail::fail("synth", "missing_tissue", std::string("no ground truth for ") + to_string(sc) + "." +
                                                  to_string(st) + "." + to_string(status));
    return it->second;
  }

  void set_all(TissueStatus status, const ColeColeParams& p) {
    for (Scenario sc : {Scenario::ExVivo, Scenario::InVivo})
      for (TumorStage st : {TumorStage::T3, TumorStage::T4a, TumorStage::T4b}) tissues[{sc, st, status}] = p;
  }

  std::size_t n_patients(Scenario sc) const {
    std::size_t n = 0;
    for (const auto& e : plan)
      if (e.scenario == sc) n += e.n_patients;
    return n;
  }

  void validate() const {
    acquisition.validate();
    if (!(noise_sigma_gamma >= 0.0)) detail::fail("synth", "invalid_truth", "noise_sigma_gamma must be >= 0");
    if (points_per_tissue < 1) detail::fail("synth", "invalid_truth", "points_per_tissue must be >= 1");
    for (const auto& [key, p] : tissues) p.validate();
  }

  static GroundTruth from_document(const ParamDocument& doc) {
    doc.require("dielscope-synthetic-truth", 1);
    GroundTruth t;
    if (const auto* a = doc.find_section("acquisition")) {
      t.acquisition.f_start_hz = a->get_double("f_start_hz", t.acquisition.f_start_hz);
      t.acquisition.f_stop_hz = a->get_double("f_stop_hz", t.acquisition.f_stop_hz);
      if (a->has("n_points")) t.acquisition.n_points = static_cast<std::size_t>(a->get_int("n_points"));
      if (a->has("n_sweeps")) t.acquisition.n_sweeps = static_cast<std::size_t>(a->get_int("n_sweeps"));
    }
    if (const auto* n = doc.find_section("noise")) {
      t.noise_sigma_gamma = n->get_double("sigma_gamma", 0.0);
      if (n->has("rng_seed")) t.rng_seed = static_cast<std::uint64_t>(n->get_int("rng_seed"));
    }
    if (const auto* p = doc.find_section("probe")) {
      t.probe.c0z0_s = p->get_double("c0z0_s", t.probe.c0z0_s);
      t.probe.cable_gain = p->get_double("cable_gain", t.probe.cable_gain);
      t.probe.cable_delay_s = p->get_double("cable_delay_s", t.probe.cable_delay_s);
    }
    const ParamSection& plan = doc.section("plan");
    if (plan.has("points_per_tissue")) t.points_per_tissue = static_cast<std::size_t>(plan.get_int("points_per_tissue"));
    for (Scenario sc : {Scenario::ExVivo, Scenario::InVivo})
      for (TumorStage st : {TumorStage::T3, TumorStage::T4a, TumorStage::T4b}) {
        const std::string key = std::string(to_string(sc)) + "_" + to_string(st);
        if (plan.has(key)) t.plan.push_back({sc, st, static_cast<std::size_t>(plan.get_int(key))});
      }

    for (Scenario sc : {Scenario::ExVivo, Scenario::InVivo})
      for (TumorStage st : {TumorStage::T3, TumorStage::T4a, TumorStage::T4b})
        for (TissueStatus status : {TissueStatus::Healthy, TissueStatus::Tumor}) {
          const std::string exact = std::string(to_string(sc)) + "." + to_string(st) + "." + to_string(status);
          const ParamSection* s = doc.find_section(exact);
          if (!s) s = &doc.section(std::string("default.") + to_string(status));
          t.tissues[{sc, st, status}] = params_from_section(*s);
        }
    t.validate();
    return t;
  }

  static GroundTruth load(const std::string& path) { return from_document(load_params(path)); }

  static GroundTruth builtin() { return from_document(parse_params(defaults::kSyntheticTruthText)); }
};

namespace synth_detail {

/// Independent stream per (seed, tag...) so generation order never matters.
inline std::mt19937_64 stream(std::uint64_t seed, std::initializer_list<std::uint32_t> tags) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  words.insert(words.end(), tags.begin(), tags.end());
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

inline std::uint32_t hash_id(std::string_view s) {
  std::uint32_t h = 2166136261u;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

inline ReflectionSweep forward_sweep(const ProbeForwardModel& probe, const FrequencyGrid& grid,
                                     const PermittivitySpectrum& tissue, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Complex> g(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    g[i] = probe.coefficients(grid[i]).to_reflection(tissue.complex_at(i));
    if (sigma > 0.0) g[i] += Complex{sigma * noise(rng), sigma * noise(rng)};
  }
  return ReflectionSweep(grid, std::move(g));
}

}  // namespace synth_detail

/// Air, short, water and methanol (25 C) as the probe model would report them.
/// The short sits at the pole of the bilinear map, Gamma = -1/C.
inline std::vector<StandardMeasurement> synth_standards(const GroundTruth& truth, const FrequencyGrid& grid,
                                                        const ReferenceLiquids& liquids = ReferenceLiquids::builtin()) {
  auto rng = synth_detail::stream(truth.rng_seed, {0x5717u});
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sigma = truth.noise_sigma_gamma;
  std::vector<StandardMeasurement> out;
  for (const StandardKind kind : {StandardKind::air(), StandardKind::short_circuit(), StandardKind::water(25.0),
                                  StandardKind::methanol(25.0)}) {
    std::vector<Complex> g(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const BilinearCoeffs bc = truth.probe.coefficients(grid[i]);
      if (kind.type == StandardType::Short) {
        g[i] = -1.0 / bc.c;
      } else {
        const Complex eps = reference_permittivity(kind, grid[i], liquids);
        const Complex denom = bc.a - bc.c * eps;
        if (std::abs(denom) < kBilinearPoleThreshold)
          detail::fail("synth", "degenerate_standard", std::string(to_string(kind.type)) + " maps to infinity");
        g[i] = bc.to_reflection(eps);
      }
      if (sigma > 0.0) g[i] += Complex{sigma * noise(rng), sigma * noise(rng)};
    }
    out.push_back({kind, ReflectionSweep(grid, std::move(g))});
  }
  return out;
}

/// Tumor and healthy points for one patient, each with n_sweeps noisy sweeps.
inline std::vector<MeasurementPoint> synth_patient(const GroundTruth& truth, const std::string& patient_id,
                                                   TumorStage stage, Scenario scenario,
                                                   std::size_t n_points_per_tissue, const FrequencyGrid& grid) {
  std::vector<MeasurementPoint> points;
  for (TissueStatus status : {TissueStatus::Healthy, TissueStatus::Tumor}) {
    const PermittivitySpectrum tissue = evaluate(truth.tissue(scenario, stage, status), grid);
    for (std::size_t loc = 0; loc < n_points_per_tissue; ++loc) {
      auto rng = synth_detail::stream(truth.rng_seed, {synth_detail::hash_id(patient_id),
                                                        static_cast<std::uint32_t>(status),
                                                        static_cast<std::uint32_t>(loc)});
      MeasurementPoint p;
      p.patient_id = patient_id;
      p.status = status;
      p.scenario = scenario;
      p.stage = stage;
      p.location_label = "loc" + std::to_string(loc + 1);
      p.provenance = Provenance::RawReflection;
      for (std::size_t s = 0; s < truth.acquisition.n_sweeps; ++s)
        p.raw_sweeps.push_back(synth_detail::forward_sweep(truth.probe, grid, tissue, truth.noise_sigma_gamma, rng));
      points.push_back(std::move(p));
    }
  }
  return points;
}

inline std::string synth_patient_id(Scenario sc, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%s%02zu", sc == Scenario::ExVivo ? "ex" : "in", index);
  return buf;
}

/// Complete session following the truth's patient plan.
inline Session synth_campaign(const GroundTruth& truth) {
  truth.validate();
  if (truth.plan.empty()) detail::fail("synth", "empty_plan", "patient plan is empty");
  const FrequencyGrid grid = truth.acquisition.grid();
  Session s;
  s.session_id = "synthetic-" + std::to_string(truth.rng_seed);
  s.acquisition = truth.acquisition;
  std::map<Scenario, std::size_t> counter;
  for (const auto& entry : truth.plan)
    for (std::size_t k = 0; k < entry.n_patients; ++k) {
      const std::string id = synth_patient_id(entry.scenario, ++counter[entry.scenario]);
      for (auto& p : synth_patient(truth, id, entry.stage, entry.scenario, truth.points_per_tissue, grid))
        s.points.push_back(std::move(p));
    }
  return s;
}

/// Group differences computed directly from the truth models, through the
/// same equal-weight mean and cubic fit as the measured pipeline.
inline std::vector<std::pair<GroupKey, std::vector<SpotValue>>> truth_group_spots(
    const GroundTruth& truth, std::span<const double> freqs_ghz) {
  const FrequencyGrid grid = truth.acquisition.grid();
  std::vector<std::pair<GroupKey, std::vector<SpotValue>>> out;
  for (const GroupKey& key : report_groups()) {
    std::vector<DifferenceCurve> curves;
    for (const auto& e : truth.plan) {
      if (e.scenario != key.scenario || (key.stage && *key.stage != e.stage)) continue;
      const PermittivitySpectrum tumor = evaluate(truth.tissue(e.scenario, e.stage, TissueStatus::Tumor), grid);
      const PermittivitySpectrum healthy = evaluate(truth.tissue(e.scenario, e.stage, TissueStatus::Healthy), grid);
      const DifferenceCurve d = patient_difference(std::span(&tumor, 1), std::span(&healthy, 1));
      for (std::size_t k = 0; k < e.n_patients; ++k) curves.push_back(d);
    }
    if (curves.empty()) continue;
    out.emplace_back(key, spot_values(group_mean_difference(curves).fit, freqs_ghz));
  }
  return out;
}

}  // namespace dielscope
