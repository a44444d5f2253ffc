#pragma once

// dielscope command-line front end. `run` is separate from main() so tests can
// drive subcommands in-process.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dielscope/dielscope.hpp"

namespace dielscope::cli {

namespace detail {

using dielscope::detail::fail;

struct Band {
  double lo_ghz = kBandLowGHz;
  double hi_ghz = kBandHighGHz;
};

inline Band parse_band(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) fail("cli", "bad_band", "--band expects <lo_ghz>:<hi_ghz>");
  Band b;
  try {
    b.lo_ghz = std::stod(text.substr(0, colon));
    b.hi_ghz = std::stod(text.substr(colon + 1));
  } catch (const std::exception&) {
    fail("cli", "bad_band", "--band expects numeric <lo_ghz>:<hi_ghz>");
  }
  if (!(b.lo_ghz > 0.0 && b.hi_ghz > b.lo_ghz)) fail("cli", "bad_band", "--band needs 0 < lo < hi");
  return b;
}

inline std::vector<double> parse_freqs(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      fail("cli", "bad_freqs", "--freqs expects a comma-separated list of GHz values");
    }
  }
  if (out.empty()) fail("cli", "bad_freqs", "--freqs is empty");
  return out;
}

inline PermittivitySpectrum restrict_band(const PermittivitySpectrum& s, const Band& band) {
  return dielscope::restrict_band(s, band.lo_ghz * kHzPerGHz, band.hi_ghz * kHzPerGHz);
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_text_file(path, text);
}

inline std::optional<CalibrationModel> maybe_calibration(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_calibration(path);
}

}  // namespace detail

/// Runs one subcommand. Returns the process exit status; failures print a
/// single `error: <module>.<code>: <message>` line on `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dielscope: open-ended probe dielectric spectroscopy pipeline", "dielscope"};
  app.require_subcommand(1);

  std::string band_text, freqs_text, format_text = "table";
  std::size_t poles = 2;
  std::uint64_t seed = 1;
  int starts = 16;

  auto add_fit_flags = [&](CLI::App* sub) {
    sub->add_option("--poles", poles, "Cole-Cole pole count")->check(CLI::Range(0, 8));
    sub->add_option("--seed", seed, "random seed for multi-start fitting");
    sub->add_option("--starts", starts, "number of multi-start runs")->check(CLI::PositiveNumber);
  };

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "solve a probe calibration from standards (.s1p)");
  std::string air, shrt, water, methanol, liquids_path, preset, post_short, cal_out;
  double water_temp = 25.0, methanol_temp = 25.0;
  auto* o_air = calibrate->add_option("--air", air, "air standard sweep")->check(CLI::ExistingFile);
  auto* o_short = calibrate->add_option("--short", shrt, "short standard sweep")->check(CLI::ExistingFile);
  auto* o_water = calibrate->add_option("--water", water, "water standard sweep")->check(CLI::ExistingFile);
  auto* o_meth = calibrate->add_option("--methanol", methanol, "methanol standard sweep")->check(CLI::ExistingFile);
  calibrate->add_option("--water-temp", water_temp, "water temperature in C")->check(CLI::Range(10.0, 40.0));
  calibrate->add_option("--methanol-temp", methanol_temp, "methanol temperature in C")->check(CLI::Range(10.0, 40.0));
  calibrate->add_option("--liquids", liquids_path, "reference liquid parameter file")->check(CLI::ExistingFile);
  auto* o_preset = calibrate->add_option("--preset", preset, "pre-set calibration to drift-correct")
                       ->check(CLI::ExistingFile);
  auto* o_post = calibrate->add_option("--post-short", post_short, "short measured after the session")
                     ->check(CLI::ExistingFile);
  calibrate->add_option("--out", cal_out, "calibration output file")->required();
  o_preset->needs(o_post);
  o_post->needs(o_preset);
  for (auto* o : {o_air, o_water, o_meth}) {
    o_preset->excludes(o);
  }
  o_post->excludes(o_short);

  // invert
  auto* invert = app.add_subcommand("invert", "invert reflection sweeps to a permittivity spectrum");
  std::string cal_path, invert_out;
  std::vector<std::string> sweeps;
  invert->add_option("--cal", cal_path, "calibration file")->required()->check(CLI::ExistingFile);
  invert->add_option("sweeps", sweeps, "sweeps of one point (.s1p), averaged before inversion")
      ->required()
      ->check(CLI::ExistingFile);
  invert->add_option("--out", invert_out, "spectrum CSV output (default stdout)");
  invert->add_option("--band", band_text, "keep <lo_ghz>:<hi_ghz>");

  // fit
  auto* fitcmd = app.add_subcommand("fit", "fit a Cole-Cole model to a spectrum CSV");
  std::string fit_in, fit_out, model_out, weighting = "relative";
  fitcmd->add_option("--in", fit_in, "spectrum CSV")->required()->check(CLI::ExistingFile);
  fitcmd->add_option("--out", fit_out, "parameter file output (default stdout)");
  fitcmd->add_option("--model-out", model_out, "model spectrum CSV output");
  fitcmd->add_option("--band", band_text, "fit only <lo_ghz>:<hi_ghz>");
  fitcmd->add_option("--weighting", weighting, "relative or absolute")
      ->check(CLI::IsMember({"relative", "absolute"}));
  add_fit_flags(fitcmd);

  // diff / report / plotdata share session inputs
  std::string session_path, session_out, plot_dir;
  auto add_session_flags = [&](CLI::App* sub) {
    sub->add_option("--session", session_path, "session document")->required()->check(CLI::ExistingFile);
    sub->add_option("--cal", cal_path, "calibration file (needed for raw reflection points)")
        ->check(CLI::ExistingFile);
  };
  auto* diff = app.add_subcommand("diff", "per-patient and group difference curves (CSV)");
  add_session_flags(diff);
  diff->add_option("--band", band_text, "analysis band <lo_ghz>:<hi_ghz>");
  diff->add_option("--out", session_out, "CSV output (default stdout)");

  auto* report = app.add_subcommand("report", "tumor-healthy difference table at spot frequencies");
  add_session_flags(report);
  report->add_option("--out", session_out, "output file (default stdout)");
  report->add_option("--freqs", freqs_text, "spot frequencies in GHz (default 2.45,12.5,18)");
  report->add_option("--format", format_text, "csv or table")->check(CLI::IsMember({"csv", "table"}));
  report->add_option("--band", band_text, "analysis band <lo_ghz>:<hi_ghz>");

  auto* plotdata = app.add_subcommand("plotdata", "group mean spectra with Cole-Cole models, one CSV per group");
  add_session_flags(plotdata);
  plotdata->add_option("--band", band_text, "analysis band <lo_ghz>:<hi_ghz>");
  plotdata->add_option("--out-dir", plot_dir, "output directory")->required();
  add_fit_flags(plotdata);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic campaign session");
  std::string truth_path, standards_dir;
  std::optional<std::uint64_t> synth_seed;
  std::optional<double> noise;
  synth->add_option("--truth", truth_path, "ground-truth parameter file (default: built-in)")
      ->check(CLI::ExistingFile);
  synth->add_option("--out", session_out, "session output")->required();
  synth->add_option("--cal-out", cal_out, "calibration solved from the synthetic standards");
  synth->add_option("--standards-dir", standards_dir, "also write the standards as .s1p files");
  synth->add_option("--seed", synth_seed, "override the truth file seed");
  synth->add_option("--noise", noise, "override reflection noise sigma")->check(CLI::NonNegativeNumber);

  // pendepth
  auto* pendepth = app.add_subcommand("pendepth", "plane-wave penetration depth of a spectrum");
  std::string pd_in, pd_out;
  pendepth->add_option("--in", pd_in, "spectrum CSV")->required()->check(CLI::ExistingFile);
  pendepth->add_option("--out", pd_out, "CSV output (default stdout)");
  pendepth->add_option("--band", band_text, "keep <lo_ghz>:<hi_ghz>");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: cli." << e.get_name() << ": " << msg << "\n";
    return 2;
  }

  try {
    const bool has_band = !band_text.empty();
    const detail::Band band = has_band ? detail::parse_band(band_text) : detail::Band{};
    FitConfig fit_cfg;
    fit_cfg.rng_seed = seed;
    fit_cfg.n_starts = starts;
    fit_cfg.weighting = weighting == "absolute" ? Weighting::Absolute : Weighting::Relative;

    if (calibrate->parsed()) {
      const ReferenceLiquids liquids =
          liquids_path.empty() ? ReferenceLiquids::builtin() : ReferenceLiquids::load(liquids_path);
      CalibrationModel cal;
      if (!preset.empty()) {
        cal = drift_correct(load_calibration(preset), {StandardKind::short_circuit(), import_touchstone(post_short)});
        const DriftReport dr = drift_report(cal);
        const auto [lo, hi] = std::minmax_element(dr.magnitude.begin(), dr.magnitude.end());
        out << "drift |d| range: " << *lo << " .. " << *hi << "\n";
      } else {
        if (air.empty() || shrt.empty() || water.empty() || methanol.empty())
          detail::fail("cli", "missing_standard", "calibrate needs --air, --short, --water and --methanol");
        const std::vector<StandardMeasurement> standards{
            {StandardKind::air(), import_touchstone(air)},
            {StandardKind::short_circuit(), import_touchstone(shrt)},
            {StandardKind::water(water_temp), import_touchstone(water)},
            {StandardKind::methanol(methanol_temp), import_touchstone(methanol)}};
        cal = solve_calibration(standards, liquids);
        out << "max calibration residual: " << *std::max_element(cal.residual().begin(), cal.residual().end())
            << "\n";
      }
      save_calibration(cal, cal_out);
      return 0;
    }

    if (invert->parsed()) {
      const CalibrationModel cal = load_calibration(cal_path);
      std::vector<ReflectionSweep> loaded;
      for (const auto& p : sweeps) loaded.push_back(import_touchstone(p));
      PermittivitySpectrum s = invert_reflection(cal, average_sweeps(loaded));
      if (has_band) s = detail::restrict_band(s, band);
      if (const auto poles_hit = s.count_flagged(kBilinearPole))
        err << "warning: " << poles_hit << " point(s) at a pole of the calibration map were zeroed\n";
      detail::emit(render_spectrum_csv(s), invert_out, out);
      return 0;
    }

    if (fitcmd->parsed()) {
      PermittivitySpectrum s = import_csv_spectrum(fit_in);
      if (has_band) s = detail::restrict_band(s, band);
      const FitResult r = fit(s, poles, fit_cfg);
      ParamDocument doc;
      doc.format = kColeColeFormat;
      doc.version = 1;
      params_to_section(r.params, doc.add_section("model"));
      ParamSection& info = doc.add_section("fit");
      info.set("objective", r.objective);
      info.set("rms_rel_error_dc", r.rms_rel_error_dc);
      info.set("rms_rel_error_lf", r.rms_rel_error_lf);
      info.set("converged", std::string(r.converged ? "true" : "false"));
      info.set("iterations", static_cast<double>(r.iterations));
      info.set("start_index", static_cast<double>(r.start_index));
      info.set("weighting", weighting);
      info.set("rng_seed", static_cast<double>(seed));
      info.set("n_starts", static_cast<double>(starts));
      detail::emit(render_params(doc), fit_out, out);
      if (!model_out.empty()) export_csv_spectrum(evaluate(r.params, s.grid()), model_out);
      return 0;
    }

    if (diff->parsed() || report->parsed() || plotdata->parsed()) {
      const Session session = load_session(session_path);
      const auto cal = detail::maybe_calibration(cal_path);
      const CalibrationModel* cal_ptr = cal ? &*cal : nullptr;
      ReportOptions ropt;
      if (!freqs_text.empty()) ropt.freqs_ghz = detail::parse_freqs(freqs_text);
      ropt.m_poles = poles;
      ropt.band_lo_ghz = band.lo_ghz;
      ropt.band_hi_ghz = band.hi_ghz;
      ropt.fit_config = fit_cfg;

      if (plotdata->parsed()) {
        const auto paths = emit_plot_data(session, cal_ptr, plot_dir, ropt);
        for (const auto& p : paths) out << p << "\n";
        return 0;
      }
      const Report r = generate_report(session, cal_ptr, ropt);
      if (diff->parsed())
        detail::emit(render_differences_csv(r), session_out, out);
      else
        detail::emit(render_report(r, format_text == "csv" ? ReportFormat::Csv : ReportFormat::Table), session_out,
                     out);
      return 0;
    }

    if (synth->parsed()) {
      GroundTruth truth = truth_path.empty() ? GroundTruth::builtin() : GroundTruth::load(truth_path);
      if (synth_seed) truth.rng_seed = *synth_seed;
      if (noise) truth.noise_sigma_gamma = *noise;
      const FrequencyGrid grid = truth.acquisition.grid();
      Session session = synth_campaign(truth);
      if (!cal_out.empty() || !standards_dir.empty()) {
        const auto standards = synth_standards(truth, grid);
        if (!standards_dir.empty()) {
          std::filesystem::create_directories(standards_dir);
          for (const auto& s : standards)
            export_touchstone(s.sweep, (std::filesystem::path(standards_dir) / (std::string(to_string(s.kind.type)) +
                                                                                 ".s1p")).string(),
                              std::vector<std::string>{std::string("synthetic ") + to_string(s.kind.type) +
                                                       " standard"});
        }
        if (!cal_out.empty()) {
          save_calibration(solve_calibration(standards), cal_out);
          session.calibration_ref = cal_out;
        }
      }
      save_session(session, session_out);
      out << "wrote " << session.points.size() << " points (" << session.count_points(Scenario::ExVivo)
          << " ex vivo, " << session.count_points(Scenario::InVivo) << " in vivo)\n";
      return 0;
    }

    if (pendepth->parsed()) {
      PermittivitySpectrum s = import_csv_spectrum(pd_in);
      if (has_band) s = detail::restrict_band(s, band);
      std::string text = "f_hz,depth_m\n";
      std::size_t invalid = 0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double dc = s.dielectric_constant()[i], lf = s.loss_factor()[i];
        std::string depth;
        if (dc >= 1.0 && lf >= 0.0) {
          depth = dielscope::detail::format_full(penetration_depth(dc, lf, s.grid()[i]));
        } else {
          depth = "nan";
          ++invalid;
        }
        text += dielscope::detail::format_full(s.grid()[i]) + "," + depth + "\n";
      }
      if (invalid) err << "warning: " << invalid << " nonphysical point(s) written as nan\n";
      detail::emit(text, pd_out, out);
      return 0;
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << e.qualified_code() << ": " << msg << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal.unexpected: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace dielscope::cli
