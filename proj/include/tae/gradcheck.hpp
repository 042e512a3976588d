#pragma once

// Central finite-difference verification for tape gradients.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "tae/tensor.hpp"

namespace tae {

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool finite = true;
  bool pass = false;
};

namespace detail {

// Relative error with a floor so near-zero gradients compare absolutely.
inline double rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
  return std::abs(analytic - numeric) / denom;
}

inline void check_fd_step(double h) {
  if (!(h >= 1e-6 && h <= 1e-3)) {
    throw std::invalid_argument("grad_check: step h must lie in [1e-6, 1e-3]");
  }
}

}  // namespace detail

// Checks d f / d point for a scalar-valued tensor function against central
// differences over every coordinate of `point`.
inline GradCheckReport grad_check(const std::function<Tensor(const Tensor&, Tape&)>& f,
                                  const Tensor& point, double h = 1e-5, double tol = 1e-4) {
  detail::check_fd_step(h);
  GradCheckReport report;

  Tensor x = point.clone();
  Tape tape;
  Tensor y = f(x, tape);
  if (y.size() != 1) throw std::invalid_argument("grad_check: f must return a scalar");
  if (!std::isfinite(y.value())) {
    report.finite = false;
    return report;
  }
  tape.backward(y);
  x.ensure_grad();
  const double* analytic = x.grad_data();

  auto eval = [&](const Tensor& at) {
    Tape t;
    return f(at, t).value();
  };

  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor hi = point.clone();
    Tensor lo = point.clone();
    hi[i] += h;
    lo[i] -= h;
    const double fp = eval(hi);
    const double fm = eval(lo);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      report.finite = false;
      return report;
    }
    const double numeric = (fp - fm) / (2.0 * h);
    report.max_rel_error = std::max(report.max_rel_error, detail::rel_error(analytic[i], numeric));
  }
  report.pass = report.finite && report.max_rel_error <= tol;
  return report;
}

// Same check for a parameter tensor embedded in a larger computation.
// loss_fn must rebuild the graph from the parameter's current values on
// each call; only the sampled coordinates are perturbed.
inline GradCheckReport grad_check_param(const std::function<Tensor(Tape&)>& loss_fn, Tensor param,
                                        const std::vector<std::size_t>& coords, double h = 1e-5,
                                        double tol = 1e-4) {
  detail::check_fd_step(h);
  GradCheckReport report;

  param.zero_grad();
  Tape tape;
  Tensor y = loss_fn(tape);
  if (y.size() != 1) throw std::invalid_argument("grad_check_param: loss must be a scalar");
  if (!std::isfinite(y.value())) {
    report.finite = false;
    return report;
  }
  tape.backward(y);
  param.ensure_grad();
  std::vector<double> analytic(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) analytic[i] = param.grad_data()[coords[i]];

  auto eval = [&]() {
    Tape t;
    return loss_fn(t).value();
  };

  for (std::size_t i = 0; i < coords.size(); ++i) {
    const std::size_t c = coords[i];
    if (c >= param.size()) throw std::invalid_argument("grad_check_param: coordinate out of range");
    const double saved = param[c];
    param[c] = saved + h;
    const double fp = eval();
    param[c] = saved - h;
    const double fm = eval();
    param[c] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      report.finite = false;
      return report;
    }
    const double numeric = (fp - fm) / (2.0 * h);
    report.max_rel_error = std::max(report.max_rel_error, detail::rel_error(analytic[i], numeric));
  }
  report.pass = report.finite && report.max_rel_error <= tol;
  return report;
}

}  // namespace tae
