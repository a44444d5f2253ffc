#pragma once

// Frequency grids, permittivity spectra, reflection sweeps and the small set of
// pointwise operations shared by every stage of the pipeline.
//
// Sign convention: eps_r = eps' - j eps''. The loss factor eps'' is stored as a
// positive number; the minus sign is applied only where complex values are formed.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dielscope/constants.hpp"
#include "dielscope/error.hpp"

namespace dielscope {

using Complex = std::complex<double>;

/// Strictly increasing, positive frequencies in Hz (at least two points).
class FrequencyGrid {
 public:
  FrequencyGrid() = default;

  explicit FrequencyGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) detail::fail("spectra", "grid_too_short", "frequency grid needs at least 2 points");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!std::isfinite(points_[i]) || points_[i] <= 0.0)
        detail::fail("spectra", "grid_nonpositive", "frequency grid points must be finite and > 0");
      if (i > 0 && !(points_[i] > points_[i - 1]))
        detail::fail("spectra", "grid_not_increasing", "frequency grid must be strictly increasing");
    }
  }

  /// Evenly spaced points, endpoints included.
  static FrequencyGrid linear(double f_start_hz, double f_stop_hz, std::size_t n_points) {
    if (n_points < 2) detail::fail("spectra", "grid_too_short", "frequency grid needs at least 2 points");
    std::vector<double> pts(n_points);
    const double span = f_stop_hz - f_start_hz;
    const double denom = static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i)
      pts[i] = f_start_hz + span * (static_cast<double>(i) / denom);
    pts.back() = f_stop_hz;
    return FrequencyGrid(std::move(pts));
  }

  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }
  std::span<const double> points() const noexcept { return points_; }
  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  /// Exact value equality; grids in one campaign come from one configured sweep.
  friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;

 private:
  std::vector<double> points_;
};

/// Per-point provenance bits.
enum PointFlag : std::uint8_t {
  kPointOk = 0,
  kNonphysical = 1,   // eps' < 1 or eps'' < 0
  kBilinearPole = 2,  // |1 + C*Gamma| below threshold; stored values are 0
  kOverRange = 4,     // |Gamma| > 1 + ripple tolerance
};

class PermittivitySpectrum {
 public:
  PermittivitySpectrum() = default;

  PermittivitySpectrum(FrequencyGrid grid, std::vector<double> dielectric_constant,
                       std::vector<double> loss_factor, std::vector<std::uint8_t> extra_flags = {})
      : grid_(std::move(grid)),
        dc_(std::move(dielectric_constant)),
        lf_(std::move(loss_factor)),
        flags_(grid_.size(), kPointOk) {
    if (dc_.size() != grid_.size() || lf_.size() != grid_.size())
      detail::fail("spectra", "length_mismatch", "spectrum arrays must match grid length");
    if (!extra_flags.empty() && extra_flags.size() != grid_.size())
      detail::fail("spectra", "length_mismatch", "flag array must match grid length");
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (!std::isfinite(dc_[i]) || !std::isfinite(lf_[i]))
        detail::fail("spectra", "non_finite", "spectrum values must be finite");
      std::uint8_t fl = extra_flags.empty() ? std::uint8_t{kPointOk} : extra_flags[i];
      fl &= static_cast<std::uint8_t>(~kNonphysical);
      if (dc_[i] < 1.0 || lf_[i] < 0.0) fl |= kNonphysical;
      flags_[i] = fl;
    }
  }

  const FrequencyGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.size(); }
  std::span<const double> dielectric_constant() const noexcept { return dc_; }
  std::span<const double> loss_factor() const noexcept { return lf_; }
  std::span<const std::uint8_t> flags() const noexcept { return flags_; }

  /// eps' - j eps''
  Complex complex_at(std::size_t i) const { return {dc_[i], -lf_[i]}; }

  std::size_t count_flagged(std::uint8_t mask) const {
    return static_cast<std::size_t>(
        std::count_if(flags_.begin(), flags_.end(), [mask](std::uint8_t f) { return (f & mask) != 0; }));
  }

  friend bool operator==(const PermittivitySpectrum&, const PermittivitySpectrum&) = default;

 private:
  FrequencyGrid grid_;
  std::vector<double> dc_;
  std::vector<double> lf_;
  std::vector<std::uint8_t> flags_;
};

inline constexpr double kGammaRippleTolerance = 0.05;

class ReflectionSweep {
 public:
  ReflectionSweep() = default;

  ReflectionSweep(FrequencyGrid grid, std::vector<Complex> gamma)
      : grid_(std::move(grid)), gamma_(std::move(gamma)) {
    if (gamma_.size() != grid_.size())
      detail::fail("spectra", "length_mismatch", "reflection array must match grid length");
    for (const auto& g : gamma_)
      if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
        detail::fail("spectra", "non_finite", "reflection values must be finite");
  }

  const FrequencyGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.size(); }
  std::span<const Complex> gamma() const noexcept { return gamma_; }
  Complex operator[](std::size_t i) const { return gamma_[i]; }

  /// Points whose magnitude exceeds 1 + ripple tolerance.
  std::vector<std::uint8_t> flags() const {
    std::vector<std::uint8_t> out(gamma_.size(), kPointOk);
    for (std::size_t i = 0; i < gamma_.size(); ++i)
      if (std::abs(gamma_[i]) > 1.0 + kGammaRippleTolerance) out[i] = kOverRange;
    return out;
  }

  friend bool operator==(const ReflectionSweep&, const ReflectionSweep&) = default;

 private:
  FrequencyGrid grid_;
  std::vector<Complex> gamma_;
};

/// VNA acquisition settings. Defaults follow the clinical campaign setup.
struct AcquisitionConfig {
  double f_start_hz = 0.5e9;
  double f_stop_hz = 26.5e9;
  std::size_t n_points = 1601;
  double if_bandwidth_hz = 3e3;
  double power_dbm = -15.0;
  std::size_t n_sweeps = 3;

  static AcquisitionConfig ex_vivo() { return {}; }
  static AcquisitionConfig in_vivo() {
    AcquisitionConfig c;
    c.n_points = 401;
    return c;
  }

  void validate() const {
    if (n_sweeps < 1) detail::fail("spectra", "bad_config", "n_sweeps must be >= 1");
    if (!(f_start_hz < f_stop_hz)) detail::fail("spectra", "bad_config", "f_start_hz must be < f_stop_hz");
    if (n_points < 2) detail::fail("spectra", "bad_config", "n_points must be >= 2");
  }

  FrequencyGrid grid() const {
    validate();
    return FrequencyGrid::linear(f_start_hz, f_stop_hz, n_points);
  }

  friend bool operator==(const AcquisitionConfig&, const AcquisitionConfig&) = default;
};

/// Complex mean of repeated sweeps, point by point.
inline ReflectionSweep average_sweeps(std::span<const ReflectionSweep> sweeps) {
  if (sweeps.empty()) detail::fail("spectra", "empty_input", "average_sweeps needs at least one sweep");
  const FrequencyGrid& grid = sweeps.front().grid();
  for (const auto& s : sweeps)
    if (!(s.grid() == grid)) detail::fail("spectra", "grid_mismatch", "sweeps must share one grid");
  if (sweeps.size() == 1) return sweeps.front();

  const double n = static_cast<double>(sweeps.size());
  std::vector<Complex> mean(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Complex acc{0.0, 0.0};
    for (const auto& s : sweeps) acc += s[i];
    mean[i] = acc / n;
  }
  return ReflectionSweep(grid, std::move(mean));
}

/// Pointwise arithmetic mean of eps' and eps'' separately.
inline PermittivitySpectrum mean_spectra(std::span<const PermittivitySpectrum> spectra) {
  if (spectra.empty()) detail::fail("spectra", "empty_input", "mean_spectra needs at least one spectrum");
  const FrequencyGrid& grid = spectra.front().grid();
  for (const auto& s : spectra)
    if (!(s.grid() == grid)) detail::fail("spectra", "grid_mismatch", "spectra must share one grid");
  if (spectra.size() == 1) return spectra.front();

  const double n = static_cast<double>(spectra.size());
  std::vector<double> dc(grid.size()), lf(grid.size());
  std::vector<std::uint8_t> flags(grid.size(), kPointOk);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sdc = 0.0, slf = 0.0;
    for (const auto& s : spectra) {
      sdc += s.dielectric_constant()[i];
      slf += s.loss_factor()[i];
      flags[i] |= s.flags()[i];
    }
    dc[i] = sdc / n;
    lf[i] = slf / n;
  }
  return PermittivitySpectrum(grid, std::move(dc), std::move(lf), std::move(flags));
}

namespace detail {

/// Linear interpolation of `values` (on `src`) at `f`; exact at source nodes.
inline double interp_linear(std::span<const double> src, std::span<const double> values, double f) {
  const auto it = std::lower_bound(src.begin(), src.end(), f);
  const auto hi = static_cast<std::size_t>(it - src.begin());
  if (hi < src.size() && src[hi] == f) return values[hi];
  const std::size_t lo = hi - 1;
  const double t = (f - src[lo]) / (src[hi] - src[lo]);
  return values[lo] + t * (values[hi] - values[lo]);
}

}  // namespace detail

/// Linear interpolation onto `target`; no extrapolation.
inline PermittivitySpectrum resample(const PermittivitySpectrum& spectrum, const FrequencyGrid& target) {
  const FrequencyGrid& src = spectrum.grid();
  if (src == target) return spectrum;
  if (target.front() < src.front() || target.back() > src.back())
    detail::fail("spectra", "out_of_range", "resample target lies outside the source band");

  std::vector<double> dc(target.size()), lf(target.size());
  std::vector<std::uint8_t> flags(target.size(), kPointOk);
  const auto sp = src.points();
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double f = target[i];
    dc[i] = detail::interp_linear(sp, spectrum.dielectric_constant(), f);
    lf[i] = detail::interp_linear(sp, spectrum.loss_factor(), f);
    const auto it = std::lower_bound(sp.begin(), sp.end(), f);
    const auto hi = static_cast<std::size_t>(it - sp.begin());
    flags[i] = spectrum.flags()[hi];
    if (sp[hi] != f) flags[i] |= spectrum.flags()[hi - 1];
  }
  return PermittivitySpectrum(target, std::move(dc), std::move(lf), std::move(flags));
}

/// Points with lo_hz <= f <= hi_hz (relative slack of 1e-12 at both ends).
inline PermittivitySpectrum restrict_band(const PermittivitySpectrum& s, double lo_hz, double hi_hz) {
  std::vector<double> f, dc, lf;
  std::vector<std::uint8_t> flags;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.grid()[i] < lo_hz * (1.0 - 1e-12) || s.grid()[i] > hi_hz * (1.0 + 1e-12)) continue;
    f.push_back(s.grid()[i]);
    dc.push_back(s.dielectric_constant()[i]);
    lf.push_back(s.loss_factor()[i]);
    flags.push_back(s.flags()[i]);
  }
  if (f.size() < 2) detail::fail("spectra", "out_of_range", "band keeps fewer than 2 frequency points");
  if (f.size() == s.size()) return s;
  return PermittivitySpectrum(FrequencyGrid(std::move(f)), std::move(dc), std::move(lf), std::move(flags));
}

/// sigma = 2 pi f eps0 eps''
inline double loss_factor_to_conductivity(double loss_factor, double f_hz) {
  if (!(f_hz > 0.0)) detail::fail("spectra", "bad_frequency", "frequency must be > 0");
  return kTwoPi * f_hz * kVacuumPermittivity * loss_factor;
}

inline double conductivity_to_loss_factor(double sigma, double f_hz) {
  if (!(f_hz > 0.0)) detail::fail("spectra", "bad_frequency", "frequency must be > 0");
  return sigma / (kTwoPi * f_hz * kVacuumPermittivity);
}

}  // namespace dielscope
