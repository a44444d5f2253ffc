#pragma once

// Bound-constrained Levenberg-Marquardt for small dense problems.
//
// The problem type supplies
//
//     Eigen::Index parameter_count() const;
//     void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const;
//
// and the optimizer minimizes r(x)^T r(x) subject to lo <= x <= hi. Steps are
// projected onto the box; parameters sitting on a bound whose gradient points
// outward are frozen for that iteration so the remaining ones move freely.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace dielscope::lm {

struct Options {
  int max_iterations = 500;
  double relative_tolerance = 1e-12;  // stop when an accepted step improves less than this
  double absolute_floor = 1e-32;      // objective considered exactly fitted
  double initial_damping = 1e-3;
  double max_damping = 1e16;
};

struct Result {
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // objective after each accepted step (first entry: start)
};

template <typename Problem>
Result minimize(const Problem& problem, Eigen::VectorXd x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                const Options& opt = {}) {
  const Eigen::Index n = problem.parameter_count();
  x = x.cwiseMax(lo).cwiseMin(hi);

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  problem.evaluate(x, r, &jac);
  double obj = r.squaredNorm();

  Result out;
  out.history.push_back(obj);
  double damping = opt.initial_damping;

  Eigen::VectorXd r_try;
  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it + 1;
    if (!(obj > opt.absolute_floor)) {
      out.converged = true;
      break;
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;

    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool pinned_lo = x(i) <= lo(i) && grad(i) > 0.0;
      const bool pinned_hi = x(i) >= hi(i) && grad(i) < 0.0;
      if (!pinned_lo && !pinned_hi) free.push_back(i);
    }
    if (free.empty()) {
      out.converged = true;
      break;
    }

    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd h(nf, nf);
    Eigen::VectorXd g(nf);
    double diag_max = 0.0;
    for (Eigen::Index a = 0; a < nf; ++a) {
      g(a) = grad(free[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < nf; ++b)
        h(a, b) = jtj(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
      diag_max = std::max(diag_max, h(a, a));
    }
    const double diag_floor = std::max(diag_max * 1e-14, std::numeric_limits<double>::min());

    bool accepted = false;
    while (damping <= opt.max_damping) {
      Eigen::MatrixXd damped = h;
      for (Eigen::Index a = 0; a < nf; ++a) damped(a, a) += damping * std::max(h(a, a), diag_floor);
      const Eigen::VectorXd step = damped.ldlt().solve(-g);

      Eigen::VectorXd x_try = x;
      for (Eigen::Index a = 0; a < nf; ++a) {
        const Eigen::Index i = free[static_cast<std::size_t>(a)];
        x_try(i) = std::clamp(x(i) + step(a), lo(i), hi(i));
      }
      if (!step.allFinite() || x_try == x) {
        damping *= 10.0;
        continue;
      }

      problem.evaluate(x_try, r_try, nullptr);
      const double obj_try = r_try.squaredNorm();
      if (std::isfinite(obj_try) && obj_try < obj) {
        const double rel = (obj - obj_try) / obj;
        x = x_try;
        obj = obj_try;
        problem.evaluate(x, r, &jac);
        out.history.push_back(obj);
        damping = std::max(damping * 0.1, 1e-15);
        accepted = true;
        if (rel < opt.relative_tolerance) out.converged = true;
        break;
      }
      damping *= 10.0;
    }

    if (!accepted) {
      // No descent possible at any damping: a stationary point of the bounded problem.
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }

  out.x = x;
  out.objective = obj;
  return out;
}

}  // namespace dielscope::lm
