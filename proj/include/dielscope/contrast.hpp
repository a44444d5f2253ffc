#pragma once

// Tumor-minus-healthy contrast: per-patient difference curves, cubic fits in
// frequency (GHz), equal-weight group means and spot-frequency values.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dielscope/spectra.hpp"

namespace dielscope {

enum class TissueStatus { Healthy, Tumor };
enum class TumorStage { T3, T4a, T4b };  // ordered lowest to highest
enum class Scenario { ExVivo, InVivo };

inline const char* to_string(TissueStatus s) { return s == TissueStatus::Healthy ? "healthy" : "tumor"; }

inline const char* to_string(TumorStage s) {
  switch (s) {
    case TumorStage::T3: return "T3";
    case TumorStage::T4a: return "T4a";
    case TumorStage::T4b: return "T4b";
  }
  return "?";
}

inline const char* to_string(Scenario s) { return s == Scenario::ExVivo ? "exvivo" : "invivo"; }

/// Display label as printed in report tables.
inline const char* display_name(Scenario s) { return s == Scenario::ExVivo ? "Ex vivo" : "In vivo"; }

inline TissueStatus parse_tissue_status(std::string_view s) {
  if (s == "healthy") return TissueStatus::Healthy;
  if (s == "tumor") return TissueStatus::Tumor;
  detail::fail("contrast", "bad_status", "unknown tissue status '" + std::string(s) + "'");
}

inline TumorStage parse_tumor_stage(std::string_view s) {
  if (s == "T3") return TumorStage::T3;
  if (s == "T4a") return TumorStage::T4a;
  if (s == "T4b") return TumorStage::T4b;
  detail::fail("contrast", "bad_stage", "unknown tumor stage '" + std::string(s) + "'");
}

inline Scenario parse_scenario(std::string_view s) {
  if (s == "exvivo") return Scenario::ExVivo;
  if (s == "invivo") return Scenario::InVivo;
  detail::fail("contrast", "bad_scenario", "unknown scenario '" + std::string(s) + "'");
}

struct DifferenceCurve {
  FrequencyGrid grid;
  std::vector<double> delta_dc;
  std::vector<double> delta_lf;

  void validate() const {
    if (delta_dc.size() != grid.size() || delta_lf.size() != grid.size())
      detail::fail("contrast", "length_mismatch", "difference arrays must match grid length");
  }

  friend bool operator==(const DifferenceCurve&, const DifferenceCurve&) = default;
};

/// Cubic polynomials c0 + c1 f + c2 f^2 + c3 f^3 with f in GHz.
struct CubicFit {
  std::array<double, 4> coeffs_dc{};
  std::array<double, 4> coeffs_lf{};
  double rms_residual_dc = 0.0;
  double rms_residual_lf = 0.0;

  friend bool operator==(const CubicFit&, const CubicFit&) = default;
};

struct SpotValue {
  double f_ghz = 0.0;
  double delta_dc = 0.0;
  double delta_lf = 0.0;
};

inline constexpr std::array<double, 3> kDefaultSpotFrequenciesGHz{2.45, 12.5, 18.0};
inline constexpr double kBandLowGHz = 0.5;
inline constexpr double kBandHighGHz = 26.5;

/// mean(tumor) - mean(healthy), separately for eps' and eps''.
inline DifferenceCurve patient_difference(std::span<const PermittivitySpectrum> tumor_spectra,
                                          std::span<const PermittivitySpectrum> healthy_spectra) {
  if (tumor_spectra.empty() || healthy_spectra.empty())
    detail::fail("contrast", "empty_side", "patient difference needs tumor and healthy spectra");
  const PermittivitySpectrum tumor = mean_spectra(tumor_spectra);
  const PermittivitySpectrum healthy = mean_spectra(healthy_spectra);
  if (!(tumor.grid() == healthy.grid()))
    detail::fail("contrast", "grid_mismatch", "tumor and healthy spectra must share one grid");
  DifferenceCurve d{tumor.grid(), std::vector<double>(tumor.size()), std::vector<double>(tumor.size())};
  for (std::size_t i = 0; i < tumor.size(); ++i) {
    d.delta_dc[i] = tumor.dielectric_constant()[i] - healthy.dielectric_constant()[i];
    d.delta_lf[i] = tumor.loss_factor()[i] - healthy.loss_factor()[i];
  }
  return d;
}

inline double eval_cubic(const std::array<double, 4>& c, double f_ghz) {
  return ((c[3] * f_ghz + c[2]) * f_ghz + c[1]) * f_ghz + c[0];
}

/// Ordinary least squares cubic in f (GHz), fitted to eps' and eps'' differences.
inline CubicFit fit_cubic(const DifferenceCurve& curve) {
  curve.validate();
  const auto n = static_cast<Eigen::Index>(curve.grid.size());
  if (n < 4) detail::fail("contrast", "too_few_points", "cubic fit needs at least 4 points");

  // Centered and scaled abscissa for conditioning; mapped back to powers of f below.
  const double f_lo = curve.grid.front() / kHzPerGHz;
  const double f_hi = curve.grid.back() / kHzPerGHz;
  const double center = 0.5 * (f_lo + f_hi);
  const double half = 0.5 * (f_hi - f_lo);
  Eigen::MatrixXd v(n, 4);
  Eigen::MatrixXd rhs(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (curve.grid[static_cast<std::size_t>(i)] / kHzPerGHz - center) / half;
    v(i, 0) = 1.0;
    v(i, 1) = u;
    v(i, 2) = u * u;
    v(i, 3) = u * u * u;
    rhs(i, 0) = curve.delta_dc[static_cast<std::size_t>(i)];
    rhs(i, 1) = curve.delta_lf[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd sol = v.colPivHouseholderQr().solve(rhs);

  // p(u) with u = (f - c)/h  ->  coefficients in f.
  auto to_f = [&](const Eigen::VectorXd& b) {
    const double s = 1.0 / half;
    const double c = center;
    std::array<double, 4> out{};
    const double b0 = b(0), b1 = b(1) * s, b2 = b(2) * s * s, b3 = b(3) * s * s * s;
    out[0] = b0 - b1 * c + b2 * c * c - b3 * c * c * c;
    out[1] = b1 - 2.0 * b2 * c + 3.0 * b3 * c * c;
    out[2] = b2 - 3.0 * b3 * c;
    out[3] = b3;
    return out;
  };

  CubicFit fit;
  fit.coeffs_dc = to_f(sol.col(0));
  fit.coeffs_lf = to_f(sol.col(1));
  const Eigen::MatrixXd resid = v * sol - rhs;
  fit.rms_residual_dc = std::sqrt(resid.col(0).squaredNorm() / static_cast<double>(n));
  fit.rms_residual_lf = std::sqrt(resid.col(1).squaredNorm() / static_cast<double>(n));
  return fit;
}

struct GroupDifference {
  DifferenceCurve mean_curve;
  CubicFit fit;
};

/// Unweighted mean over patients, then a cubic fit of that mean.
inline GroupDifference group_mean_difference(std::span<const DifferenceCurve> per_patient) {
  if (per_patient.empty()) detail::fail("contrast", "empty_input", "group mean needs at least one patient");
  const FrequencyGrid& grid = per_patient.front().grid;
  for (const auto& c : per_patient) {
    c.validate();
    if (!(c.grid == grid)) detail::fail("contrast", "grid_mismatch", "patient curves must share one grid");
  }
  DifferenceCurve mean{grid, std::vector<double>(grid.size()), std::vector<double>(grid.size())};
  const double n = static_cast<double>(per_patient.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sdc = 0.0, slf = 0.0;
    for (const auto& c : per_patient) {
      sdc += c.delta_dc[i];
      slf += c.delta_lf[i];
    }
    mean.delta_dc[i] = sdc / n;
    mean.delta_lf[i] = slf / n;
  }
  if (per_patient.size() == 1) mean = per_patient.front();
  CubicFit fit = fit_cubic(mean);
  return {std::move(mean), fit};
}

/// Evaluates a fitted difference at report frequencies; values are unrounded.
inline std::vector<SpotValue> spot_values(const CubicFit& fit, std::span<const double> freqs_ghz,
                                          double band_lo_ghz = kBandLowGHz, double band_hi_ghz = kBandHighGHz) {
  std::vector<SpotValue> out;
  out.reserve(freqs_ghz.size());
  for (double f : freqs_ghz) {
    if (!(f >= band_lo_ghz && f <= band_hi_ghz))
      detail::fail("contrast", "out_of_band", "spot frequency " + std::to_string(f) + " GHz is outside the band");
    out.push_back({f, eval_cubic(fit.coeffs_dc, f), eval_cubic(fit.coeffs_lf, f)});
  }
  return out;
}

/// Plane-wave 1/e field penetration depth in metres; +inf for a lossless medium.
inline double penetration_depth(double dielectric_constant, double loss_factor, double f_hz) {
  if (!(dielectric_constant >= 1.0) || !(loss_factor >= 0.0) || !(f_hz > 0.0) ||
      !std::isfinite(dielectric_constant) || !std::isfinite(loss_factor) || !std::isfinite(f_hz))
    detail::fail("contrast", "invalid_input", "penetration depth needs dc >= 1, lf >= 0, f > 0");
  if (loss_factor == 0.0) return std::numeric_limits<double>::infinity();
  const double ratio = loss_factor / dielectric_constant;
  // sqrt(1 + r^2) - 1 computed without cancellation for small r.
  const double excess = ratio * ratio / (std::sqrt(1.0 + ratio * ratio) + 1.0);
  const double attenuation = (kTwoPi * f_hz / kSpeedOfLight) * std::sqrt(0.5 * dielectric_constant * excess);
  return 1.0 / attenuation;
}

}  // namespace dielscope
