#pragma once

// Campaign data model and its JSON documents (sessions and calibrations).
// Both documents carry an explicit schema version; a mismatch is an error.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "dielscope/contrast.hpp"
#include "dielscope/params_file.hpp"
#include "dielscope/probe_cal.hpp"
#include "dielscope/spectra.hpp"

namespace dielscope {

enum class Provenance { RawReflection, ExternalPermittivity };

inline const char* to_string(Provenance p) {
  return p == Provenance::RawReflection ? "raw_reflection" : "external_permittivity";
}

inline Provenance parse_provenance(std::string_view s) {
  if (s == "raw_reflection") return Provenance::RawReflection;
  if (s == "external_permittivity") return Provenance::ExternalPermittivity;
  detail::fail("campaign", "bad_provenance", "unknown provenance '" + std::string(s) + "'");
}

/// One probe location on one tissue of one patient.
struct MeasurementPoint {
  std::string patient_id;
  TissueStatus status = TissueStatus::Healthy;
  Scenario scenario = Scenario::ExVivo;
  std::optional<TumorStage> stage;
  std::string location_label;
  Provenance provenance = Provenance::RawReflection;
  std::vector<ReflectionSweep> raw_sweeps;       // used when provenance is raw_reflection
  std::vector<PermittivitySpectrum> spectra;     // used when provenance is external_permittivity

  void validate() const {
    if (patient_id.empty()) detail::fail("campaign", "invalid_point", "measurement point needs a patient id");
    if (provenance == Provenance::RawReflection && raw_sweeps.empty())
      detail::fail("campaign", "invalid_point", patient_id + "/" + location_label + ": no reflection sweeps");
    if (provenance == Provenance::ExternalPermittivity && spectra.empty())
      detail::fail("campaign", "invalid_point", patient_id + "/" + location_label + ": no permittivity spectra");
    if (status == TissueStatus::Tumor && !stage)
      detail::fail("campaign", "invalid_point", patient_id + "/" + location_label + ": tumor point without stage");
  }

  auto identity() const { return std::tie(patient_id, location_label, status); }

  friend bool operator==(const MeasurementPoint&, const MeasurementPoint&) = default;
};

inline constexpr int kSessionSchemaVersion = 1;

struct Session {
  std::string session_id;
  AcquisitionConfig acquisition;
  std::string calibration_ref;
  std::vector<MeasurementPoint> points;
  int schema_version = kSessionSchemaVersion;

  void validate() const {
    std::set<std::tuple<std::string, std::string, int>> seen;
    for (const auto& p : points) {
      p.validate();
      if (!seen.emplace(p.patient_id, p.location_label, static_cast<int>(p.status)).second)
        detail::fail("campaign", "duplicate_point",
                     "duplicate point " + p.patient_id + "/" + p.location_label + "/" + to_string(p.status));
    }
  }

  std::size_t count_points(Scenario s) const {
    return static_cast<std::size_t>(
        std::count_if(points.begin(), points.end(), [s](const MeasurementPoint& p) { return p.scenario == s; }));
  }

  friend bool operator==(const Session&, const Session&) = default;
};

// ---------------------------------------------------------------------------
// JSON encoding

namespace detail {

using nlohmann::json;

inline json grid_to_json(const FrequencyGrid& g) { return json(std::vector<double>(g.begin(), g.end())); }

inline FrequencyGrid grid_from_json(const json& j) { return FrequencyGrid(j.get<std::vector<double>>()); }

inline json complex_to_json(std::span<const Complex> v) {
  std::vector<double> re, im;
  re.reserve(v.size());
  im.reserve(v.size());
  for (Complex c : v) {
    re.push_back(c.real());
    im.push_back(c.imag());
  }
  return json{{"re", re}, {"im", im}};
}

inline std::vector<Complex> complex_from_json(const json& j) {
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (re.size() != im.size()) fail("campaign", "corrupt_document", "complex array parts differ in length");
  std::vector<Complex> out(re.size());
  for (std::size_t i = 0; i < re.size(); ++i) out[i] = {re[i], im[i]};
  return out;
}

inline json point_to_json(const MeasurementPoint& p) {
  json j;
  j["patient_id"] = p.patient_id;
  j["status"] = to_string(p.status);
  j["scenario"] = to_string(p.scenario);
  j["stage"] = p.stage ? json(to_string(*p.stage)) : json(nullptr);
  j["location"] = p.location_label;
  j["provenance"] = to_string(p.provenance);
  const FrequencyGrid* grid = nullptr;
  if (!p.raw_sweeps.empty()) grid = &p.raw_sweeps.front().grid();
  else if (!p.spectra.empty()) grid = &p.spectra.front().grid();
  j["grid_hz"] = grid ? grid_to_json(*grid) : json::array();
  j["sweeps"] = json::array();
  for (const auto& s : p.raw_sweeps) {
    if (!(s.grid() == *grid)) fail("campaign", "grid_mismatch", "sweeps of one point must share a grid");
    j["sweeps"].push_back(complex_to_json(s.gamma()));
  }
  j["spectra"] = json::array();
  for (const auto& s : p.spectra) {
    if (!(s.grid() == *grid)) fail("campaign", "grid_mismatch", "spectra of one point must share a grid");
    j["spectra"].push_back(json{{"eps_real", std::vector<double>(s.dielectric_constant().begin(),
                                                                   s.dielectric_constant().end())},
                                {"loss_factor", std::vector<double>(s.loss_factor().begin(), s.loss_factor().end())}});
  }
  return j;
}

inline MeasurementPoint point_from_json(const json& j) {
  MeasurementPoint p;
  p.patient_id = j.at("patient_id").get<std::string>();
  p.status = parse_tissue_status(j.at("status").get<std::string>());
  p.scenario = parse_scenario(j.at("scenario").get<std::string>());
  if (!j.at("stage").is_null()) p.stage = parse_tumor_stage(j.at("stage").get<std::string>());
  p.location_label = j.at("location").get<std::string>();
  p.provenance = parse_provenance(j.at("provenance").get<std::string>());
  const auto& sweeps = j.at("sweeps");
  const auto& spectra = j.at("spectra");
  if (!sweeps.empty() || !spectra.empty()) {
    const FrequencyGrid grid = grid_from_json(j.at("grid_hz"));
    for (const auto& s : sweeps) p.raw_sweeps.emplace_back(grid, complex_from_json(s));
    for (const auto& s : spectra)
      p.spectra.emplace_back(grid, s.at("eps_real").get<std::vector<double>>(),
                             s.at("loss_factor").get<std::vector<double>>());
  }
  return p;
}

inline json acquisition_to_json(const AcquisitionConfig& a) {
  return json{{"f_start_hz", a.f_start_hz},         {"f_stop_hz", a.f_stop_hz}, {"n_points", a.n_points},
              {"if_bandwidth_hz", a.if_bandwidth_hz}, {"power_dbm", a.power_dbm}, {"n_sweeps", a.n_sweeps}};
}

inline AcquisitionConfig acquisition_from_json(const json& j) {
  AcquisitionConfig a;
  a.f_start_hz = j.at("f_start_hz").get<double>();
  a.f_stop_hz = j.at("f_stop_hz").get<double>();
  a.n_points = j.at("n_points").get<std::size_t>();
  a.if_bandwidth_hz = j.at("if_bandwidth_hz").get<double>();
  a.power_dbm = j.at("power_dbm").get<double>();
  a.n_sweeps = j.at("n_sweeps").get<std::size_t>();
  a.validate();
  return a;
}

/// Parses `text` and checks format tag and schema version; wraps JSON errors.
template <typename Fn>
auto decode_document(std::string_view text, const char* format, int version, Fn&& body) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail("campaign", "corrupt_document", std::string("unparseable document: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != format)
      fail("campaign", "wrong_format", std::string("document is not a ") + format);
    const int v = j.at("schema_version").get<int>();
    if (v != version)
      fail("campaign", "version_mismatch",
           "schema_version " + std::to_string(v) + " is not supported (expected " + std::to_string(version) + ")");
    return body(j);
  } catch (const json::exception& e) {
    fail("campaign", "corrupt_document", std::string("malformed document: ") + e.what());
  } catch (const Error& e) {
    if (e.module() == "campaign") throw;
    fail("campaign", "corrupt_document", std::string("invalid document content: ") + e.what());
  }
}

}  // namespace detail

inline constexpr const char* kSessionFormat = "dielscope-session";

inline std::string session_to_text(const Session& s) {
  s.validate();
  nlohmann::json j;
  j["format"] = kSessionFormat;
  j["schema_version"] = s.schema_version;
  j["session_id"] = s.session_id;
  j["calibration_ref"] = s.calibration_ref;
  j["acquisition"] = detail::acquisition_to_json(s.acquisition);
  j["points"] = nlohmann::json::array();
  for (const auto& p : s.points) j["points"].push_back(detail::point_to_json(p));
  return j.dump(1) + "\n";
}

inline Session session_from_text(std::string_view text) {
  return detail::decode_document(text, kSessionFormat, kSessionSchemaVersion, [](const nlohmann::json& j) {
    Session s;
    s.schema_version = j.at("schema_version").get<int>();
    s.session_id = j.at("session_id").get<std::string>();
    s.calibration_ref = j.at("calibration_ref").get<std::string>();
    s.acquisition = detail::acquisition_from_json(j.at("acquisition"));
    for (const auto& p : j.at("points")) s.points.push_back(detail::point_from_json(p));
    s.validate();
    return s;
  });
}

inline void save_session(const Session& s, const std::string& path) { write_text_file(path, session_to_text(s)); }

inline Session load_session(const std::string& path) { return session_from_text(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Calibration documents

inline constexpr const char* kCalibrationFormat = "dielscope-calibration";
inline constexpr int kCalibrationSchemaVersion = 1;

inline std::string calibration_to_text(const CalibrationModel& cal) {
  nlohmann::json j;
  j["format"] = kCalibrationFormat;
  j["schema_version"] = kCalibrationSchemaVersion;
  j["model"] = "bilinear: eps = (A*gamma + B) / (1 + C*gamma), gamma divided by drift first";
  j["grid_hz"] = detail::grid_to_json(cal.grid());
  j["coeff_a"] = detail::complex_to_json(cal.coeff_a());
  j["coeff_b"] = detail::complex_to_json(cal.coeff_b());
  j["coeff_c"] = detail::complex_to_json(cal.coeff_c());
  j["short_reference"] = detail::complex_to_json(cal.short_reference());
  j["drift"] = detail::complex_to_json(cal.drift());
  j["residual"] = std::vector<double>(cal.residual().begin(), cal.residual().end());
  return j.dump(1) + "\n";
}

inline CalibrationModel calibration_from_text(std::string_view text) {
  return detail::decode_document(text, kCalibrationFormat, kCalibrationSchemaVersion, [](const nlohmann::json& j) {
    return CalibrationModel(detail::grid_from_json(j.at("grid_hz")), detail::complex_from_json(j.at("coeff_a")),
                            detail::complex_from_json(j.at("coeff_b")), detail::complex_from_json(j.at("coeff_c")),
                            detail::complex_from_json(j.at("short_reference")),
                            j.at("residual").get<std::vector<double>>(), detail::complex_from_json(j.at("drift")));
  });
}

inline void save_calibration(const CalibrationModel& cal, const std::string& path) {
  write_text_file(path, calibration_to_text(cal));
}

inline CalibrationModel load_calibration(const std::string& path) {
  return calibration_from_text(read_text_file(path));
}

}  // namespace dielscope
