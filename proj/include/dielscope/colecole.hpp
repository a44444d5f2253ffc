#pragma once

// Multi-pole Cole-Cole dispersion with static conductivity:
//
//   eps(f) = eps_inf + sum_m d_eps_m / (1 + (j w tau_m)^(1 - alpha_m)) + sigma_s / (j w eps0)
//
// and its bounded least-squares fit to a measured spectrum.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dielscope/defaults.hpp"
#include "dielscope/lm.hpp"
#include "dielscope/params_file.hpp"
#include "dielscope/spectra.hpp"

namespace dielscope {

struct ColeColePole {
  double delta_eps = 0.0;
  double tau_s = 1e-11;
  double alpha = 0.0;

  friend bool operator==(const ColeColePole&, const ColeColePole&) = default;
};

struct ColeColeParams {
  double eps_inf = 1.0;
  std::vector<ColeColePole> poles;
  double sigma_s = 0.0;

  void validate() const {
    auto bad = [](const std::string& what) { detail::fail("colecole", "invalid_params", what); };
    if (!(eps_inf >= 1.0)) bad("eps_inf must be >= 1");
    if (!(sigma_s >= 0.0) || !std::isfinite(sigma_s)) bad("sigma_s must be >= 0");
    for (const auto& p : poles) {
      if (!(p.delta_eps >= 0.0) || !std::isfinite(p.delta_eps)) bad("delta_eps must be >= 0");
      if (!(p.tau_s > 0.0) || !std::isfinite(p.tau_s)) bad("tau_s must be > 0");
      if (!(p.alpha >= 0.0 && p.alpha < 1.0)) bad("alpha must lie in [0, 1)");
    }
  }

  /// Copy with poles ordered by relaxation time.
  ColeColeParams sorted_by_tau() const {
    ColeColeParams out = *this;
    std::stable_sort(out.poles.begin(), out.poles.end(),
                     [](const ColeColePole& a, const ColeColePole& b) { return a.tau_s < b.tau_s; });
    return out;
  }

  friend bool operator==(const ColeColeParams&, const ColeColeParams&) = default;
};

namespace colecole {

inline Complex pole_term(const ColeColePole& p, double omega) {
  // Principal branch: log(j w tau) = ln(w tau) + j pi/2 for w tau > 0.
  const Complex log_jwt{std::log(omega * p.tau_s), std::numbers::pi / 2.0};
  const Complex z = std::exp((1.0 - p.alpha) * log_jwt);
  return p.delta_eps / (1.0 + z);
}

inline Complex conductivity_term(double sigma_s, double omega) {
  return Complex{0.0, -sigma_s / (omega * kVacuumPermittivity)};
}

/// eps' - j eps'' at one frequency.
inline Complex evaluate_at(const ColeColeParams& params, double f_hz) {
  const double omega = kTwoPi * f_hz;
  Complex eps{params.eps_inf, 0.0};
  for (const auto& p : params.poles) eps += pole_term(p, omega);
  eps += conductivity_term(params.sigma_s, omega);
  return eps;
}

}  // namespace colecole

inline PermittivitySpectrum evaluate(const ColeColeParams& params, const FrequencyGrid& grid) {
  params.validate();
  std::vector<double> dc(grid.size()), lf(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Complex e = colecole::evaluate_at(params, grid[i]);
    dc[i] = e.real();
    lf[i] = -e.imag();
  }
  return PermittivitySpectrum(grid, std::move(dc), std::move(lf));
}

enum class Weighting { Absolute, Relative };

/// Box limits applied during fitting.
struct FitBounds {
  double eps_inf_lo = 1.0, eps_inf_hi = 100.0;
  double delta_eps_lo = 0.0, delta_eps_hi = 1000.0;
  double tau_lo_s = 1e-13, tau_hi_s = 1e-8;
  double alpha_lo = 0.0, alpha_hi = 0.3;
  double sigma_lo = 0.0, sigma_hi = 50.0;

  void validate() const {
    auto bad = [](const std::string& what) { detail::fail("colecole", "invalid_bounds", what); };
    if (!(eps_inf_lo >= 1.0 && eps_inf_hi > eps_inf_lo)) bad("eps_inf bounds must satisfy 1 <= lo < hi");
    if (!(delta_eps_lo >= 0.0 && delta_eps_hi > delta_eps_lo)) bad("delta_eps bounds must satisfy 0 <= lo < hi");
    if (!(tau_lo_s > 0.0 && tau_hi_s > tau_lo_s)) bad("tau bounds must satisfy 0 < lo < hi");
    if (!(alpha_lo >= 0.0 && alpha_hi > alpha_lo && alpha_hi < 1.0)) bad("alpha bounds must satisfy 0 <= lo < hi < 1");
    if (!(sigma_lo >= 0.0 && sigma_hi > sigma_lo)) bad("sigma bounds must satisfy 0 <= lo < hi");
  }
};

struct FitConfig {
  int max_iterations = 500;
  double convergence_tol = 1e-12;
  int n_starts = 16;
  FitBounds bounds;
  Weighting weighting = Weighting::Relative;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (max_iterations < 1) detail::fail("colecole", "invalid_config", "max_iterations must be >= 1");
    if (n_starts < 1) detail::fail("colecole", "invalid_config", "n_starts must be >= 1");
    bounds.validate();
  }
};

struct FitResult {
  ColeColeParams params;
  double objective = 0.0;
  double rms_rel_error_dc = 0.0;  // relative to |eps_meas|
  double rms_rel_error_lf = 0.0;  // relative to |eps_meas|
  bool converged = false;
  int iterations = 0;
  int start_index = 0;
  std::vector<Complex> residuals;        // model - measured, per frequency
  std::vector<double> objective_history;  // accepted steps of the winning start
  std::vector<double> solution;           // optimizer coordinates of params (ln tau)

  friend bool operator==(const FitResult&, const FitResult&) = default;
};

// ---------------------------------------------------------------------------
// Parameter files

inline ColeColeParams params_from_section(const ParamSection& s) {
  ColeColeParams p;
  p.eps_inf = s.get_double("eps_inf");
  p.sigma_s = s.get_double("sigma_s", 0.0);
  for (int m = 1;; ++m) {
    const std::string key = "pole" + std::to_string(m);
    if (!s.has(key)) break;
    std::vector<double> vals;
    std::stringstream ss(s.get_string(key));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        vals.push_back(std::stod(std::string(detail::trim(tok))));
      } catch (const std::exception&) {
        detail::fail("params", "bad_number", "[" + s.name + "] " + key + " is not a numeric triple");
      }
    }
    if (vals.size() != 3)
      detail::fail("params", "malformed", "[" + s.name + "] " + key + " must be 'delta_eps, tau_s, alpha'");
    p.poles.push_back({vals[0], vals[1], vals[2]});
  }
  p.validate();
  return p;
}

inline void params_to_section(const ColeColeParams& p, ParamSection& s) {
  s.set("eps_inf", p.eps_inf);
  s.set("sigma_s", p.sigma_s);
  for (std::size_t m = 0; m < p.poles.size(); ++m) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g, %.17g, %.17g", p.poles[m].delta_eps, p.poles[m].tau_s, p.poles[m].alpha);
    s.set("pole" + std::to_string(m + 1), std::string(buf));
  }
}

inline constexpr const char* kColeColeFormat = "dielscope-colecole-params";

inline ColeColeParams load_colecole_params(const ParamDocument& doc) {
  doc.require(kColeColeFormat, 1);
  return params_from_section(doc.section("model"));
}

inline const ColeColeParams& canonical_initial_params() {
  static const ColeColeParams p = load_colecole_params(parse_params(defaults::kColeColeInitText));
  return p;
}

// ---------------------------------------------------------------------------
// Fitting

namespace colecole {

/// Optimizer parameter layout: [eps_inf, (d_eps, ln tau, alpha) x M, sigma_s].
inline Eigen::Index parameter_count(std::size_t m_poles) { return static_cast<Eigen::Index>(2 + 3 * m_poles); }

inline Eigen::VectorXd pack(const ColeColeParams& p) {
  Eigen::VectorXd x(parameter_count(p.poles.size()));
  x(0) = p.eps_inf;
  for (std::size_t m = 0; m < p.poles.size(); ++m) {
    const auto k = static_cast<Eigen::Index>(1 + 3 * m);
    x(k) = p.poles[m].delta_eps;
    x(k + 1) = std::log(p.poles[m].tau_s);
    x(k + 2) = p.poles[m].alpha;
  }
  x(x.size() - 1) = p.sigma_s;
  return x;
}

inline ColeColeParams unpack(const Eigen::VectorXd& x) {
  ColeColeParams p;
  const auto m_poles = static_cast<std::size_t>((x.size() - 2) / 3);
  p.eps_inf = x(0);
  for (std::size_t m = 0; m < m_poles; ++m) {
    const auto k = static_cast<Eigen::Index>(1 + 3 * m);
    p.poles.push_back({x(k), std::exp(x(k + 1)), x(k + 2)});
  }
  p.sigma_s = x(x.size() - 1);
  return p;
}

/// Complex model value and its derivatives with respect to the packed parameters.
inline Complex model_jacobian(const Eigen::VectorXd& x, double f_hz, Eigen::VectorXcd* dmodel) {
  const double omega = kTwoPi * f_hz;
  const auto m_poles = (x.size() - 2) / 3;
  if (dmodel) dmodel->resize(x.size());
  Complex eps{x(0), 0.0};
  if (dmodel) (*dmodel)(0) = 1.0;
  for (Eigen::Index m = 0; m < m_poles; ++m) {
    const Eigen::Index k = 1 + 3 * m;
    const double d_eps = x(k);
    const double ln_tau = x(k + 1);
    const double alpha = x(k + 2);
    const Complex log_jwt{std::log(omega) + ln_tau, std::numbers::pi / 2.0};
    const Complex z = std::exp((1.0 - alpha) * log_jwt);
    const Complex inv = 1.0 / (1.0 + z);
    eps += d_eps * inv;
    if (dmodel) {
      const Complex common = d_eps * z * inv * inv;
      (*dmodel)(k) = inv;
      (*dmodel)(k + 1) = -(1.0 - alpha) * common;
      (*dmodel)(k + 2) = log_jwt * common;
    }
  }
  const double cond = 1.0 / (omega * kVacuumPermittivity);
  eps += Complex{0.0, -x(x.size() - 1) * cond};
  if (dmodel) (*dmodel)(x.size() - 1) = Complex{0.0, -cond};
  return eps;
}

/// Weighted complex residual problem for the LM driver.
class FitProblem {
 public:
  FitProblem(const PermittivitySpectrum& data, std::size_t m_poles, Weighting weighting) : m_poles_(m_poles) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.flags()[i] & kBilinearPole) continue;
      const Complex e = data.complex_at(i);
      const double mag2 = std::norm(e);
      if (weighting == Weighting::Relative && !(mag2 > 0.0)) continue;
      freqs_.push_back(data.grid()[i]);
      meas_.push_back(e);
      sqrt_w_.push_back(weighting == Weighting::Relative ? 1.0 / std::sqrt(mag2) : 1.0);
    }
  }

  Eigen::Index parameter_count() const { return colecole::parameter_count(m_poles_); }
  std::size_t point_count() const { return freqs_.size(); }

  void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const {
    const auto n = static_cast<Eigen::Index>(freqs_.size());
    r.resize(2 * n);
    if (jac) jac->resize(2 * n, x.size());
    Eigen::VectorXcd d;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const Complex model = model_jacobian(x, freqs_[u], jac ? &d : nullptr);
      const Complex res = sqrt_w_[u] * (model - meas_[u]);
      r(2 * i) = res.real();
      r(2 * i + 1) = res.imag();
      if (jac) {
        for (Eigen::Index k = 0; k < x.size(); ++k) {
          (*jac)(2 * i, k) = sqrt_w_[u] * d(k).real();
          (*jac)(2 * i + 1, k) = sqrt_w_[u] * d(k).imag();
        }
      }
    }
  }

 private:
  std::size_t m_poles_;
  std::vector<double> freqs_;
  std::vector<Complex> meas_;
  std::vector<double> sqrt_w_;
};

inline void bounds_vectors(const FitBounds& b, std::size_t m_poles, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  const Eigen::Index n = parameter_count(m_poles);
  lo.resize(n);
  hi.resize(n);
  lo(0) = b.eps_inf_lo;
  hi(0) = b.eps_inf_hi;
  for (std::size_t m = 0; m < m_poles; ++m) {
    const auto k = static_cast<Eigen::Index>(1 + 3 * m);
    lo(k) = b.delta_eps_lo;
    hi(k) = b.delta_eps_hi;
    lo(k + 1) = std::log(b.tau_lo_s);
    hi(k + 1) = std::log(b.tau_hi_s);
    lo(k + 2) = b.alpha_lo;
    hi(k + 2) = b.alpha_hi;
  }
  lo(n - 1) = b.sigma_lo;
  hi(n - 1) = b.sigma_hi;
}

/// Deterministic list of starting points: canonical set, a dispersion-free
/// baseline, then random draws (log-uniform tau, uniform d_eps in [1, 80]).
inline std::vector<ColeColeParams> starting_points(const PermittivitySpectrum& data, std::size_t m_poles,
                                                   const FitConfig& cfg) {
  std::vector<ColeColeParams> starts;
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double ln_tau_lo = std::log(0.1e-12), ln_tau_hi = std::log(10e-9);
  auto random_pole = [&] {
    ColeColePole p;
    p.delta_eps = 1.0 + 79.0 * unit(rng);
    p.tau_s = std::exp(ln_tau_lo + (ln_tau_hi - ln_tau_lo) * unit(rng));
    p.alpha = cfg.bounds.alpha_lo + (cfg.bounds.alpha_hi - cfg.bounds.alpha_lo) * unit(rng);
    return p;
  };

  ColeColeParams canonical = canonical_initial_params();
  canonical.poles.resize(std::min(canonical.poles.size(), m_poles));
  while (canonical.poles.size() < m_poles) canonical.poles.push_back(random_pole());
  starts.push_back(canonical);

  if (cfg.n_starts >= 2) {
    ColeColeParams flat;
    double hi_dc = 1.0;
    for (double v : data.dielectric_constant()) hi_dc = std::max(hi_dc, v);
    flat.eps_inf = hi_dc;
    for (std::size_t m = 0; m < m_poles; ++m) {
      const double t = (static_cast<double>(m) + 1.0) / (static_cast<double>(m_poles) + 1.0);
      flat.poles.push_back({0.0, std::exp(ln_tau_lo + (ln_tau_hi - ln_tau_lo) * t), cfg.bounds.alpha_lo});
    }
    flat.sigma_s = 0.0;
    starts.push_back(flat);
  }

  while (starts.size() < static_cast<std::size_t>(cfg.n_starts)) {
    ColeColeParams p;
    p.eps_inf = 1.0 + 9.0 * unit(rng);
    for (std::size_t m = 0; m < m_poles; ++m) p.poles.push_back(random_pole());
    std::sort(p.poles.begin(), p.poles.end(),
              [](const ColeColePole& a, const ColeColePole& b) { return a.tau_s < b.tau_s; });
    p.sigma_s = 2.0 * unit(rng);
    starts.push_back(std::move(p));
  }
  return starts;
}

inline FitResult finish(const PermittivitySpectrum& data, const lm::Result& best, int start_index) {
  FitResult out;
  out.params = unpack(best.x);
  out.objective = best.objective;
  out.converged = best.converged;
  out.iterations = best.iterations;
  out.start_index = start_index;
  out.objective_history = best.history;
  out.solution.assign(best.x.data(), best.x.data() + best.x.size());
  out.residuals.resize(data.size());
  double sdc = 0.0, slf = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Complex meas = data.complex_at(i);
    const Complex model = model_jacobian(best.x, data.grid()[i], nullptr);
    out.residuals[i] = model - meas;
    const double mag = std::abs(meas);
    if (!(mag > 0.0) || (data.flags()[i] & kBilinearPole)) continue;
    sdc += std::pow((model.real() - meas.real()) / mag, 2);
    slf += std::pow((-model.imag() + meas.imag()) / mag, 2);
    ++used;
  }
  if (used > 0) {
    out.rms_rel_error_dc = std::sqrt(sdc / static_cast<double>(used));
    out.rms_rel_error_lf = std::sqrt(slf / static_cast<double>(used));
  }
  return out;
}

/// Runs LM from each start; lowest objective wins, ties go to the earlier start.
inline FitResult fit_from_starts(const PermittivitySpectrum& data, std::size_t m_poles, const FitConfig& cfg,
                                 const std::vector<Eigen::VectorXd>& starts) {
  const FitProblem problem(data, m_poles, cfg.weighting);
  if (problem.point_count() < 4 + 3 * m_poles)
    detail::fail("colecole", "too_few_points",
                 "fit with " + std::to_string(m_poles) + " poles needs at least " + std::to_string(4 + 3 * m_poles) +
                     " usable frequency points");
  Eigen::VectorXd lo, hi;
  bounds_vectors(cfg.bounds, m_poles, lo, hi);
  lm::Options opt;
  opt.max_iterations = cfg.max_iterations;
  opt.relative_tolerance = cfg.convergence_tol;

  lm::Result best;
  int best_index = -1;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    lm::Result r = lm::minimize(problem, starts[s], lo, hi, opt);
    if (best_index < 0 || r.objective < best.objective) {
      best = std::move(r);
      best_index = static_cast<int>(s);
    }
  }
  return finish(data, best, best_index);
}

}  // namespace colecole

/// Least-squares Cole-Cole fit with `m_poles` poles, best of cfg.n_starts starts.
inline FitResult fit(const PermittivitySpectrum& spectrum, std::size_t m_poles, const FitConfig& cfg = {}) {
  cfg.validate();
  std::vector<Eigen::VectorXd> starts;
  for (const auto& p : colecole::starting_points(spectrum, m_poles, cfg)) starts.push_back(colecole::pack(p));
  return colecole::fit_from_starts(spectrum, m_poles, cfg, starts);
}

struct PoleCountRow {
  std::size_t m_poles = 0;
  double objective = 0.0;
  double rms_rel_error_dc = 0.0;
  double rms_rel_error_lf = 0.0;
  bool converged = false;
  FitResult fit;
};

/// Fits M = 1..m_max. Each M+1 fit also starts from the M solution with an
/// appended zero-amplitude pole, so the best objective never increases with M.
inline std::vector<PoleCountRow> compare_pole_counts(const PermittivitySpectrum& spectrum, std::size_t m_max,
                                                     const FitConfig& cfg = {}) {
  if (m_max < 1) detail::fail("colecole", "invalid_config", "m_max must be >= 1");
  cfg.validate();
  std::vector<PoleCountRow> table;
  for (std::size_t m = 1; m <= m_max; ++m) {
    std::vector<Eigen::VectorXd> starts;
    if (!table.empty()) {
      // Reuse the previous optimizer coordinates exactly; the zero pole is
      // inserted before sigma_s and contributes an exact zero.
      const auto& prev = table.back().fit.solution;
      Eigen::VectorXd warm(colecole::parameter_count(m));
      for (std::size_t k = 0; k + 1 < prev.size(); ++k) warm(static_cast<Eigen::Index>(k)) = prev[k];
      const auto z = static_cast<Eigen::Index>(prev.size() - 1);
      warm(z) = 0.0;
      warm(z + 1) = 0.5 * (std::log(cfg.bounds.tau_lo_s) + std::log(cfg.bounds.tau_hi_s));
      warm(z + 2) = cfg.bounds.alpha_lo;
      warm(z + 3) = prev.back();
      starts.push_back(std::move(warm));
    }
    for (const auto& p : colecole::starting_points(spectrum, m, cfg)) starts.push_back(colecole::pack(p));
    FitResult r = colecole::fit_from_starts(spectrum, m, cfg, starts);
    table.push_back({m, r.objective, r.rms_rel_error_dc, r.rms_rel_error_lf, r.converged, std::move(r)});
  }
  return table;
}

}  // namespace dielscope
