#pragma once

// Open-ended coaxial probe calibration.
//
// Per frequency the measured reflection Gamma maps to relative permittivity
// through a bilinear (Moebius) transform
//
//     eps(Gamma) = (A Gamma + B) / (1 + C Gamma)
//
// whose three complex coefficients are solved from standards of known
// permittivity (air, water, methanol). The short circuit is not part of the
// solve; its reflection is stored as the reference for drift correction when
// a pre-set calibration is reconciled with post-session standards.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dielscope/defaults.hpp"
#include "dielscope/params_file.hpp"
#include "dielscope/spectra.hpp"

namespace dielscope {

enum class StandardType { Air, Short, Water, Methanol };

inline const char* to_string(StandardType t) {
  switch (t) {
    case StandardType::Air: return "air";
    case StandardType::Short: return "short";
    case StandardType::Water: return "water";
    case StandardType::Methanol: return "methanol";
  }
  return "?";
}

inline StandardType parse_standard_type(std::string_view s) {
  if (s == "air") return StandardType::Air;
  if (s == "short") return StandardType::Short;
  if (s == "water") return StandardType::Water;
  if (s == "methanol") return StandardType::Methanol;
  detail::fail("probe_cal", "unknown_standard", "unknown standard '" + std::string(s) + "'");
}

/// Calibration standard; liquids carry their temperature.
struct StandardKind {
  StandardType type = StandardType::Air;
  double temperature_c = 25.0;

  static StandardKind air() { return {StandardType::Air, 25.0}; }
  static StandardKind short_circuit() { return {StandardType::Short, 25.0}; }
  static StandardKind water(double t_c = 25.0) { return checked({StandardType::Water, t_c}); }
  static StandardKind methanol(double t_c = 25.0) { return checked({StandardType::Methanol, t_c}); }

  bool is_liquid() const { return type == StandardType::Water || type == StandardType::Methanol; }
  bool has_finite_permittivity() const { return type != StandardType::Short; }

  void validate() const {
    if (is_liquid() && !(temperature_c >= 10.0 && temperature_c <= 40.0))
      detail::fail("probe_cal", "bad_temperature", "liquid standard temperature must lie in [10, 40] C");
  }

  friend bool operator==(const StandardKind&, const StandardKind&) = default;

 private:
  static StandardKind checked(StandardKind k) {
    k.validate();
    return k;
  }
};

/// Single-pole Debye description of a reference liquid, linear in temperature.
struct ReferenceLiquidModel {
  std::string name;
  double reference_temp_c = 25.0;
  double eps_static = 0.0;
  double eps_inf = 1.0;
  double tau_ps = 1.0;
  double d_eps_static_dt = 0.0;
  double d_eps_inf_dt = 0.0;
  double d_tau_ps_dt = 0.0;
  std::string source;

  /// Debye parameters (eps_static, eps_inf, tau_ps) at the given temperature.
  std::array<double, 3> at_temperature(double t_c) const {
    const double dt = t_c - reference_temp_c;
    const std::array<double, 3> p{eps_static + d_eps_static_dt * dt, eps_inf + d_eps_inf_dt * dt,
                                  tau_ps + d_tau_ps_dt * dt};
    if (!(p[0] > p[1] && p[1] >= 1.0 && p[2] > 0.0))
      detail::fail("probe_cal", "bad_liquid_model", name + ": requires eps_static > eps_inf >= 1 and tau > 0");
    return p;
  }

  Complex evaluate(double f_hz, double t_c) const {
    const auto [es, ei, tau_ps] = at_temperature(t_c);
    const Complex jwt{0.0, kTwoPi * f_hz * tau_ps * 1e-12};
    return ei + (es - ei) / (1.0 + jwt);
  }
};

struct ReferenceLiquids {
  ReferenceLiquidModel water;
  ReferenceLiquidModel methanol;

  static ReferenceLiquids from_document(const ParamDocument& doc) {
    doc.require("dielscope-reference-liquids", 1);
    auto read = [&doc](const char* name) {
      const ParamSection& s = doc.section(name);
      ReferenceLiquidModel m;
      m.name = name;
      m.reference_temp_c = s.get_double("reference_temp_c", 25.0);
      m.eps_static = s.get_double("eps_static");
      m.eps_inf = s.get_double("eps_inf");
      m.tau_ps = s.get_double("tau_ps");
      m.d_eps_static_dt = s.get_double("d_eps_static_dt", 0.0);
      m.d_eps_inf_dt = s.get_double("d_eps_inf_dt", 0.0);
      m.d_tau_ps_dt = s.get_double("d_tau_ps_dt", 0.0);
      m.source = s.get_string("source");
      m.at_temperature(m.reference_temp_c);
      return m;
    };
    return {read("water"), read("methanol")};
  }

  static ReferenceLiquids load(const std::string& path) { return from_document(load_params(path)); }

  static const ReferenceLiquids& builtin() {
    static const ReferenceLiquids liquids = from_document(parse_params(defaults::kReferenceLiquidsText));
    return liquids;
  }
};

inline constexpr double kReferenceMinHz = 0.1e9;
inline constexpr double kReferenceMaxHz = 50e9;

/// Known permittivity of a finite-permittivity standard (eps' - j eps'').
inline Complex reference_permittivity(const StandardKind& kind, double f_hz,
                                      const ReferenceLiquids& liquids = ReferenceLiquids::builtin()) {
  if (kind.type == StandardType::Short)
    detail::fail("probe_cal", "no_reference", "the short standard has no finite permittivity");
  if (!(f_hz >= kReferenceMinHz && f_hz <= kReferenceMaxHz))
    detail::fail("probe_cal", "out_of_validity", "reference permittivity is defined for 0.1-50 GHz only");
  kind.validate();
  switch (kind.type) {
    case StandardType::Air: return {1.0, -0.0};
    case StandardType::Water: return liquids.water.evaluate(f_hz, kind.temperature_c);
    case StandardType::Methanol: return liquids.methanol.evaluate(f_hz, kind.temperature_c);
    case StandardType::Short: break;
  }
  return {};
}

struct StandardMeasurement {
  StandardKind kind;
  ReflectionSweep sweep;  // already sweep-averaged
};

/// Bilinear coefficients of one frequency point.
struct BilinearCoeffs {
  Complex a, b, c;

  Complex to_permittivity(Complex gamma) const { return (a * gamma + b) / (1.0 + c * gamma); }
  /// Inverse map: the reflection a standard of permittivity `eps` produces.
  Complex to_reflection(Complex eps) const { return (eps - b) / (a - c * eps); }
  Complex denominator(Complex gamma) const { return 1.0 + c * gamma; }
  double determinant_magnitude() const { return std::abs(a - b * c); }
};

inline constexpr double kBilinearPoleThreshold = 1e-12;
inline constexpr double kDegenerateDeterminant = 1e-12;
inline constexpr double kConditionLimit = 1e10;

class CalibrationModel {
 public:
  CalibrationModel() = default;

  CalibrationModel(FrequencyGrid grid, std::vector<Complex> a, std::vector<Complex> b, std::vector<Complex> c,
                   std::vector<Complex> short_reference, std::vector<double> residual,
                   std::vector<Complex> drift = {})
      : grid_(std::move(grid)),
        a_(std::move(a)),
        b_(std::move(b)),
        c_(std::move(c)),
        short_ref_(std::move(short_reference)),
        residual_(std::move(residual)),
        drift_(std::move(drift)) {
    const std::size_t n = grid_.size();
    if (drift_.empty()) drift_.assign(n, Complex{1.0, 0.0});
    if (a_.size() != n || b_.size() != n || c_.size() != n || short_ref_.size() != n || residual_.size() != n ||
        drift_.size() != n)
      detail::fail("probe_cal", "length_mismatch", "calibration arrays must match grid length");
    for (std::size_t i = 0; i < n; ++i)
      if (!(coeffs(i).determinant_magnitude() > kDegenerateDeterminant))
        detail::fail("probe_cal", "degenerate", "bilinear map degenerate at " + std::to_string(grid_[i]) + " Hz");
  }

  const FrequencyGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.size(); }
  BilinearCoeffs coeffs(std::size_t i) const { return {a_[i], b_[i], c_[i]}; }
  std::span<const Complex> coeff_a() const noexcept { return a_; }
  std::span<const Complex> coeff_b() const noexcept { return b_; }
  std::span<const Complex> coeff_c() const noexcept { return c_; }
  std::span<const Complex> short_reference() const noexcept { return short_ref_; }
  std::span<const double> residual() const noexcept { return residual_; }
  /// Multiplicative drift d(f); measured Gamma is divided by it before the map.
  std::span<const Complex> drift() const noexcept { return drift_; }

  bool has_drift_correction() const {
    return std::any_of(drift_.begin(), drift_.end(), [](Complex d) { return d != Complex{1.0, 0.0}; });
  }

  CalibrationModel with_drift(std::vector<Complex> drift) const {
    CalibrationModel out = *this;
    if (drift.size() != size()) detail::fail("probe_cal", "length_mismatch", "drift array must match grid length");
    out.drift_ = std::move(drift);
    return out;
  }

  friend bool operator==(const CalibrationModel&, const CalibrationModel&) = default;

 private:
  FrequencyGrid grid_;
  std::vector<Complex> a_, b_, c_;
  std::vector<Complex> short_ref_;
  std::vector<double> residual_;
  std::vector<Complex> drift_;
};

namespace detail {

inline int standard_rank(StandardType t) { return static_cast<int>(t); }

/// Canonical order so the solve does not depend on how the list was supplied.
inline std::vector<const StandardMeasurement*> canonical_order(std::span<const StandardMeasurement> standards) {
  std::vector<const StandardMeasurement*> order;
  order.reserve(standards.size());
  for (const auto& s : standards) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const StandardMeasurement* x, const StandardMeasurement* y) {
    if (x->kind.type != y->kind.type) return standard_rank(x->kind.type) < standard_rank(y->kind.type);
    if (x->kind.temperature_c != y->kind.temperature_c) return x->kind.temperature_c < y->kind.temperature_c;
    const auto gx = x->sweep.gamma();
    const auto gy = y->sweep.gamma();
    return std::lexicographical_compare(gx.begin(), gx.end(), gy.begin(), gy.end(), [](Complex p, Complex q) {
      return p.real() != q.real() ? p.real() < q.real() : p.imag() < q.imag();
    });
  });
  return order;
}

}  // namespace detail

/// Solves the per-frequency bilinear coefficients from the supplied standards.
/// Exactly three finite-permittivity standards give an exact solve; more give
/// a least-squares solution.
inline CalibrationModel solve_calibration(std::span<const StandardMeasurement> standards,
                                          const ReferenceLiquids& liquids = ReferenceLiquids::builtin()) {
  if (standards.empty()) detail::fail("probe_cal", "missing_standard", "no calibration standards supplied");
  const FrequencyGrid& grid = standards.front().sweep.grid();
  for (const auto& s : standards) {
    if (!(s.sweep.grid() == grid))
      detail::fail("probe_cal", "grid_mismatch", "all standards must share one grid");
    s.kind.validate();
  }

  auto has = [&](StandardType t) {
    return std::any_of(standards.begin(), standards.end(), [t](const auto& s) { return s.kind.type == t; });
  };
  for (StandardType t : {StandardType::Air, StandardType::Short, StandardType::Water, StandardType::Methanol})
    if (!has(t)) detail::fail("probe_cal", "missing_standard", std::string("missing standard: ") + to_string(t));

  const auto ordered = detail::canonical_order(standards);
  std::vector<const StandardMeasurement*> finite;
  const StandardMeasurement* short_std = nullptr;
  for (const auto* s : ordered) {
    if (s->kind.has_finite_permittivity())
      finite.push_back(s);
    else if (!short_std)
      short_std = s;
  }

  const std::size_t n = grid.size();
  const auto rows = static_cast<Eigen::Index>(finite.size());
  std::vector<Complex> a(n), b(n), c(n), short_ref(n);
  std::vector<double> residual(n);

  Eigen::MatrixXcd m(rows, 3);
  Eigen::VectorXcd rhs(rows);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = grid[i];
    std::vector<Complex> eps_ref(finite.size());
    for (Eigen::Index k = 0; k < rows; ++k) {
      const auto& st = *finite[static_cast<std::size_t>(k)];
      const Complex g = st.sweep[i];
      const Complex e = reference_permittivity(st.kind, f, liquids);
      eps_ref[static_cast<std::size_t>(k)] = e;
      m(k, 0) = g;
      m(k, 1) = 1.0;
      m(k, 2) = -e * g;
      rhs(k) = e;
    }

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || sv(0) / smin > kConditionLimit)
      detail::fail("probe_cal", "degenerate",
                   "calibration system is ill-conditioned at " + std::to_string(f) + " Hz (standards too similar)");
    Eigen::Vector3cd x;
    if (rows == 3)
      x = m.fullPivLu().solve(rhs);
    else
      x = svd.solve(rhs);

    const BilinearCoeffs bc{x(0), x(1), x(2)};
    if (!(bc.determinant_magnitude() > kDegenerateDeterminant))
      detail::fail("probe_cal", "degenerate", "solved bilinear map is degenerate at " + std::to_string(f) + " Hz");
    a[i] = bc.a;
    b[i] = bc.b;
    c[i] = bc.c;
    short_ref[i] = short_std->sweep[i];

    double worst = 0.0;
    for (std::size_t k = 0; k < finite.size(); ++k)
      worst = std::max(worst, std::abs(bc.to_permittivity(finite[k]->sweep[i]) - eps_ref[k]));
    residual[i] = worst;
  }
  return CalibrationModel(grid, std::move(a), std::move(b), std::move(c), std::move(short_ref), std::move(residual));
}

/// Applies the calibration (and any drift correction) to a measured sweep.
/// Points at a pole of the bilinear map are flagged and hold zeros.
inline PermittivitySpectrum invert_reflection(const CalibrationModel& cal, const ReflectionSweep& sweep) {
  if (!(sweep.grid() == cal.grid()))
    detail::fail("probe_cal", "grid_mismatch", "sweep grid differs from calibration grid");
  const std::size_t n = cal.size();
  std::vector<double> dc(n), lf(n);
  std::vector<std::uint8_t> flags = sweep.flags();
  const auto drift = cal.drift();
  for (std::size_t i = 0; i < n; ++i) {
    const Complex g = sweep[i] / drift[i];
    const BilinearCoeffs bc = cal.coeffs(i);
    if (std::abs(bc.denominator(g)) < kBilinearPoleThreshold) {
      flags[i] |= kBilinearPole;
      continue;
    }
    const Complex eps = bc.to_permittivity(g);
    dc[i] = eps.real();
    lf[i] = -eps.imag();
  }
  return PermittivitySpectrum(cal.grid(), std::move(dc), std::move(lf), std::move(flags));
}

struct DriftReport {
  std::vector<double> magnitude;
  std::vector<double> phase_rad;
};

inline DriftReport drift_report(const CalibrationModel& cal) {
  DriftReport r;
  for (Complex d : cal.drift()) {
    r.magnitude.push_back(std::abs(d));
    r.phase_rad.push_back(std::arg(d));
  }
  return r;
}

/// Reconciles a pre-set calibration with a short measured after the session:
/// d(f) = Gamma_short,post / Gamma_short,ref.
inline CalibrationModel drift_correct(const CalibrationModel& cal, const StandardMeasurement& post_short) {
  if (post_short.kind.type != StandardType::Short)
    detail::fail("probe_cal", "not_a_short", "drift correction needs a short-circuit measurement");
  if (!(post_short.sweep.grid() == cal.grid()))
    detail::fail("probe_cal", "grid_mismatch", "post-calibration short grid differs from calibration grid");
  std::vector<Complex> drift(cal.size());
  const auto ref = cal.short_reference();
  for (std::size_t i = 0; i < cal.size(); ++i) {
    if (std::abs(ref[i]) < kBilinearPoleThreshold)
      detail::fail("probe_cal", "zero_short_reference", "stored short reference vanishes at " +
                                                             std::to_string(cal.grid()[i]) + " Hz");
    drift[i] = post_short.sweep[i] / ref[i];
  }
  return cal.with_drift(std::move(drift));
}

struct CalibrationResidualReport {
  std::vector<double> residual;
  double max = 0.0;
  double rms = 0.0;
};

/// |invert(check) - reference(check)| per frequency.
inline CalibrationResidualReport validate_calibration(const CalibrationModel& cal, const StandardMeasurement& check,
                                                      const ReferenceLiquids& liquids = ReferenceLiquids::builtin()) {
  if (!check.kind.has_finite_permittivity())
    detail::fail("probe_cal", "no_reference", "validation standard must have a finite permittivity");
  const PermittivitySpectrum s = invert_reflection(cal, check.sweep);
  CalibrationResidualReport r;
  r.residual.resize(cal.size());
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < cal.size(); ++i) {
    const Complex ref = reference_permittivity(check.kind, cal.grid()[i], liquids);
    const double d = std::abs(s.complex_at(i) - ref);
    r.residual[i] = d;
    r.max = std::max(r.max, d);
    sum_sq += d * d;
  }
  r.rms = std::sqrt(sum_sq / static_cast<double>(cal.size()));
  return r;
}

}  // namespace dielscope
