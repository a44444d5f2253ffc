#pragma once

// Campaign processing: per-point spectra, per-patient tumor/healthy
// differences, equal-weight group means by scenario and tumor stage, cubic
// fits and spot values, plus group-mean Cole-Cole models for plotting.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dielscope/colecole.hpp"
#include "dielscope/contrast.hpp"
#include "dielscope/probe_cal.hpp"
#include "dielscope/session.hpp"
#include "dielscope/spectra.hpp"
#include "dielscope/spectrum_csv.hpp"

namespace dielscope {

/// A group is one scenario and either one stage or all stages.
struct GroupKey {
  Scenario scenario = Scenario::ExVivo;
  std::optional<TumorStage> stage;  // nullopt: all stages

  std::string stage_label() const { return stage ? to_string(*stage) : "All"; }
  std::string file_stem() const { return std::string(to_string(scenario)) + "_" + stage_label(); }

  friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

/// Overall rows first, then stage rows, each ex vivo before in vivo.
inline std::vector<GroupKey> report_groups() {
  std::vector<GroupKey> keys;
  for (Scenario s : {Scenario::ExVivo, Scenario::InVivo}) keys.push_back({s, std::nullopt});
  for (Scenario s : {Scenario::ExVivo, Scenario::InVivo})
    for (TumorStage t : {TumorStage::T3, TumorStage::T4a, TumorStage::T4b}) keys.push_back({s, t});
  return keys;
}

struct PatientContrast {
  std::string patient_id;
  Scenario scenario = Scenario::ExVivo;
  TumorStage stage = TumorStage::T3;
  PermittivitySpectrum tumor_mean;
  PermittivitySpectrum healthy_mean;
  DifferenceCurve difference;
  CubicFit fit;  // per-patient diagnostic; not used for aggregation
};

struct GroupModel {
  TissueStatus status = TissueStatus::Healthy;
  PermittivitySpectrum mean_spectrum;
  std::optional<FitResult> cole_cole;
};

struct GroupReport {
  GroupKey key;
  std::vector<std::string> patient_ids;  // ascending
  bool skipped = false;
  std::string warning;
  bool small_sample = false;
  GroupDifference difference;
  std::vector<SpotValue> spots;
  std::vector<GroupModel> models;  // healthy, tumor

  std::size_t n_patients() const { return patient_ids.size(); }
};

struct ReportOptions {
  std::vector<double> freqs_ghz{kDefaultSpotFrequenciesGHz.begin(), kDefaultSpotFrequenciesGHz.end()};
  bool fit_models = false;
  std::size_t m_poles = 2;
  FitConfig fit_config;
  // Analysis band: curves are cut to it before fitting; spot values must lie in it.
  double band_lo_ghz = kBandLowGHz;
  double band_hi_ghz = kBandHighGHz;
};

struct Report {
  std::vector<double> freqs_ghz;
  std::vector<PatientContrast> patients;  // ordered by (scenario, patient id)
  std::vector<GroupReport> groups;
  std::vector<std::string> warnings;
};

namespace detail {

inline PermittivitySpectrum point_spectrum(const MeasurementPoint& p, const CalibrationModel* cal) {
  if (p.provenance == Provenance::ExternalPermittivity) return mean_spectra(p.spectra);
  if (!cal) fail("campaign", "missing_calibration", "raw reflection points need a calibration");
  return invert_reflection(*cal, average_sweeps(p.raw_sweeps));
}

inline std::vector<const MeasurementPoint*> sorted_points(const Session& s) {
  std::vector<const MeasurementPoint*> v;
  for (const auto& p : s.points) v.push_back(&p);
  std::sort(v.begin(), v.end(), [](const MeasurementPoint* a, const MeasurementPoint* b) {
    return std::make_tuple(static_cast<int>(a->scenario), a->patient_id, static_cast<int>(a->status),
                           a->location_label) < std::make_tuple(static_cast<int>(b->scenario), b->patient_id,
                                                               static_cast<int>(b->status), b->location_label);
  });
  return v;
}

template <typename T, typename GridOf, typename Resample>
std::vector<T> on_common_grid(std::vector<T> items, GridOf grid_of, Resample resample_fn) {
  if (items.empty()) return items;
  const FrequencyGrid target = grid_of(items.front());
  for (auto& it : items)
    if (!(grid_of(it) == target)) it = resample_fn(it, target);
  return items;
}

inline DifferenceCurve restrict_curve(const DifferenceCurve& c, double lo_hz, double hi_hz) {
  DifferenceCurve out;
  std::vector<double> f;
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    if (c.grid[i] < lo_hz * (1.0 - 1e-12) || c.grid[i] > hi_hz * (1.0 + 1e-12)) continue;
    f.push_back(c.grid[i]);
    out.delta_dc.push_back(c.delta_dc[i]);
    out.delta_lf.push_back(c.delta_lf[i]);
  }
  if (f.size() < 2) fail("spectra", "out_of_range", "band keeps fewer than 2 frequency points");
  if (f.size() == c.grid.size()) return c;
  out.grid = FrequencyGrid(std::move(f));
  return out;
}

inline DifferenceCurve resample_curve(const DifferenceCurve& c, const FrequencyGrid& target) {
  DifferenceCurve out{target, std::vector<double>(target.size()), std::vector<double>(target.size())};
  if (target.front() < c.grid.front() || target.back() > c.grid.back())
    fail("contrast", "out_of_range", "cannot resample difference curve outside its band");
  for (std::size_t i = 0; i < target.size(); ++i) {
    out.delta_dc[i] = interp_linear(c.grid.points(), c.delta_dc, target[i]);
    out.delta_lf[i] = interp_linear(c.grid.points(), c.delta_lf, target[i]);
  }
  return out;
}

}  // namespace detail

/// Full pipeline from session points to group contrast rows. Output does not
/// depend on the order of points in the session.
inline Report generate_report(const Session& session, const CalibrationModel* cal, const ReportOptions& opt = {}) {
  session.validate();
  if (!(opt.band_lo_ghz > 0.0 && opt.band_hi_ghz > opt.band_lo_ghz))
    detail::fail("contrast", "invalid_input", "analysis band needs 0 < lo < hi");
  const double lo_hz = opt.band_lo_ghz * kHzPerGHz, hi_hz = opt.band_hi_ghz * kHzPerGHz;
  Report report;
  report.freqs_ghz = opt.freqs_ghz;

  struct PatientAccum {
    Scenario scenario;
    std::optional<TumorStage> stage;
    std::vector<PermittivitySpectrum> tumor, healthy;
  };
  std::map<std::pair<int, std::string>, PatientAccum> patients;

  for (const MeasurementPoint* p : detail::sorted_points(session)) {
    auto& acc = patients[{static_cast<int>(p->scenario), p->patient_id}];
    acc.scenario = p->scenario;
    if (p->stage) {
      if (acc.stage && *acc.stage != *p->stage)
        detail::fail("campaign", "inconsistent_stage", "patient " + p->patient_id + " has conflicting stages");
      acc.stage = p->stage;
    }
    PermittivitySpectrum s = detail::point_spectrum(*p, cal);
    (p->status == TissueStatus::Tumor ? acc.tumor : acc.healthy).push_back(std::move(s));
  }

  for (auto& [key, acc] : patients) {
    const std::string& id = key.second;
    if (acc.tumor.empty() || acc.healthy.empty()) {
      report.warnings.push_back("patient " + id + " lacks " + (acc.tumor.empty() ? "tumor" : "healthy") +
                                " measurements; excluded");
      continue;
    }
    if (!acc.stage) {
      report.warnings.push_back("patient " + id + " has no tumor stage; excluded");
      continue;
    }
    PatientContrast pc;
    pc.patient_id = id;
    pc.scenario = acc.scenario;
    pc.stage = *acc.stage;
    pc.tumor_mean = restrict_band(mean_spectra(acc.tumor), lo_hz, hi_hz);
    pc.healthy_mean = restrict_band(mean_spectra(acc.healthy), lo_hz, hi_hz);
    pc.difference = detail::restrict_curve(patient_difference(acc.tumor, acc.healthy), lo_hz, hi_hz);
    pc.fit = fit_cubic(pc.difference);
    report.patients.push_back(std::move(pc));
  }

  for (const GroupKey& key : report_groups()) {
    GroupReport g;
    g.key = key;
    std::vector<const PatientContrast*> members;
    for (const auto& pc : report.patients)
      if (pc.scenario == key.scenario && (!key.stage || pc.stage == *key.stage)) members.push_back(&pc);

    if (members.empty()) {
      g.skipped = true;
      g.warning = "no patient with both tumor and healthy measurements";
      report.groups.push_back(std::move(g));
      continue;
    }

    std::vector<DifferenceCurve> curves;
    std::vector<PermittivitySpectrum> tumor_means, healthy_means;
    for (const auto* pc : members) {
      g.patient_ids.push_back(pc->patient_id);
      curves.push_back(pc->difference);
      tumor_means.push_back(pc->tumor_mean);
      healthy_means.push_back(pc->healthy_mean);
    }
    curves = detail::on_common_grid(
        std::move(curves), [](const DifferenceCurve& c) { return c.grid; }, detail::resample_curve);
    auto grid_of = [](const PermittivitySpectrum& s) { return s.grid(); };
    auto resample_spectrum = [](const PermittivitySpectrum& s, const FrequencyGrid& t) { return resample(s, t); };
    tumor_means = detail::on_common_grid(std::move(tumor_means), grid_of, resample_spectrum);
    healthy_means = detail::on_common_grid(std::move(healthy_means), grid_of, resample_spectrum);

    g.small_sample = members.size() == 1;
    g.difference = group_mean_difference(curves);
    g.spots = spot_values(g.difference.fit, opt.freqs_ghz, opt.band_lo_ghz, opt.band_hi_ghz);

    for (TissueStatus st : {TissueStatus::Healthy, TissueStatus::Tumor}) {
      GroupModel m;
      m.status = st;
      m.mean_spectrum = mean_spectra(st == TissueStatus::Tumor ? tumor_means : healthy_means);
      if (opt.fit_models) m.cole_cole = fit(m.mean_spectrum, opt.m_poles, opt.fit_config);
      g.models.push_back(std::move(m));
    }
    report.groups.push_back(std::move(g));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Formatting

/// Two decimals, rounded half away from zero. Negative values that round to
/// zero keep their sign ("-0.00").
inline std::string format_two_decimals(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", std::signbit(v) ? -std::fabs(r) : r);
  return buf;
}

/// "d', d'', d', d'', ..." over the spot frequencies.
inline std::string format_spot_values(std::span<const SpotValue> spots) {
  std::string out;
  for (const auto& s : spots) {
    if (!out.empty()) out += ", ";
    out += format_two_decimals(s.delta_dc) + ", " + format_two_decimals(s.delta_lf);
  }
  return out;
}

namespace detail {

inline std::string format_ghz(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", f);
  return buf;
}

}  // namespace detail

enum class ReportFormat { Table, Csv };

inline std::string render_report(const Report& r, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::Csv) {
    out += "scenario,stage,n_patients";
    for (double f : r.freqs_ghz) {
      const std::string fs = detail::format_ghz(f);
      out += ",d_eps_real_" + fs + "GHz,d_loss_factor_" + fs + "GHz";
    }
    out += ",note\n";
    for (const auto& g : r.groups) {
      out += std::string(display_name(g.key.scenario)) + "," + g.key.stage_label() + "," +
             std::to_string(g.n_patients());
      if (g.skipped) {
        for (std::size_t i = 0; i < 2 * r.freqs_ghz.size(); ++i) out += ",";
        out += ",skipped: " + g.warning + "\n";
        continue;
      }
      for (const auto& s : g.spots) out += "," + format_two_decimals(s.delta_dc) + "," + format_two_decimals(s.delta_lf);
      out += g.small_sample ? ",single patient\n" : ",\n";
    }
    return out;
  }

  out += "# Tumor minus healthy permittivity difference (fitted group mean)\n";
  out += "# Scenario | Stage | Patients |";
  for (std::size_t i = 0; i < r.freqs_ghz.size(); ++i) {
    const std::string fs = detail::format_ghz(r.freqs_ghz[i]);
    out += std::string(i ? "," : "") + " d_eps' " + fs + " GHz, d_eps'' " + fs + " GHz";
  }
  out += "\n";
  for (const auto& g : r.groups) {
    out += std::string(display_name(g.key.scenario)) + " | " + g.key.stage_label() + " | ";
    if (g.skipped) {
      out += "0 | skipped: " + g.warning + "\n";
      continue;
    }
    out += std::to_string(g.n_patients()) + (g.small_sample ? "*" : "") + " | " + format_spot_values(g.spots) + "\n";
  }
  if (std::any_of(r.groups.begin(), r.groups.end(), [](const GroupReport& g) { return g.small_sample; }))
    out += "# * single-patient group\n";
  for (const auto& w : r.warnings) out += "# warning: " + w + "\n";
  return out;
}

/// Per-patient and per-group difference curves at full precision.
inline std::string render_differences_csv(const Report& r) {
  std::string out = "kind,scenario,stage,patient_id,f_hz,delta_eps_real,delta_loss_factor\n";
  auto row = [&out](const std::string& kind, Scenario sc, const std::string& stage, const std::string& id,
                    const DifferenceCurve& c) {
    for (std::size_t i = 0; i < c.grid.size(); ++i)
      out += kind + "," + to_string(sc) + "," + stage + "," + id + "," + detail::format_full(c.grid[i]) + "," +
             detail::format_full(c.delta_dc[i]) + "," + detail::format_full(c.delta_lf[i]) + "\n";
  };
  for (const auto& p : r.patients) row("patient", p.scenario, to_string(p.stage), p.patient_id, p.difference);
  for (const auto& g : r.groups)
    if (!g.skipped) row("group", g.key.scenario, g.key.stage_label(), "", g.difference.mean_curve);
  return out;
}

inline constexpr const char* kPlotDataHeader = "f_hz,mean_eps_real,mean_loss_factor,model_eps_real,model_loss_factor";

inline std::string render_plot_data(const GroupModel& m) {
  if (!m.cole_cole) detail::fail("campaign", "missing_model", "group model has no Cole-Cole fit");
  const PermittivitySpectrum model = evaluate(m.cole_cole->params, m.mean_spectrum.grid());
  std::string out = std::string(kPlotDataHeader) + "\n";
  for (std::size_t i = 0; i < model.size(); ++i)
    out += detail::format_full(model.grid()[i]) + "," + detail::format_full(m.mean_spectrum.dielectric_constant()[i]) +
           "," + detail::format_full(m.mean_spectrum.loss_factor()[i]) + "," +
           detail::format_full(model.dielectric_constant()[i]) + "," + detail::format_full(model.loss_factor()[i]) +
           "\n";
  return out;
}

/// Writes one five-column file per (group, tissue status); returns the paths.
inline std::vector<std::string> emit_plot_data(const Session& session, const CalibrationModel* cal,
                                               const std::string& dir, ReportOptions opt = {}) {
  opt.fit_models = true;
  const Report r = generate_report(session, cal, opt);
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (const auto& g : r.groups) {
    if (g.skipped) continue;
    for (const auto& m : g.models) {
      const std::string path =
          (std::filesystem::path(dir) / (g.key.file_stem() + "_" + to_string(m.status) + ".csv")).string();
      write_text_file(path, render_plot_data(m));
      paths.push_back(path);
    }
  }
  return paths;
}

}  // namespace dielscope
