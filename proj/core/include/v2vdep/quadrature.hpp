#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace v2vdep::quad {

// Raised when neither the adaptive rule nor the Simpson fallback reaches the
// requested tolerance; carries the error estimate that was achieved.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double value, double achieved_error)
      : std::runtime_error(what), value_(value), achieved_error_(achieved_error) {}
  double value() const { return value_; }
  double achieved_error() const { return achieved_error_; }

 private:
  double value_;
  double achieved_error_;
};

struct QuadOptions {
  double abs_tol = 1e-10;
  // Guards integrals whose magnitude makes the absolute target unreachable
  // in double precision; the effective tolerance is
  // max(abs_tol, |first estimate| * rel_tol).
  double rel_tol = 1e-12;
  int max_intervals = 4096;
  // The starting interval is pre-split this many times so features well
  // inside it cannot slip between the nodes of a single panel.
  int initial_intervals = 6;
};

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long evaluations = 0;
  bool converged = true;
};

namespace detail {

// 15-point Kronrod abscissae/weights with the embedded 7-point Gauss rule.
inline constexpr double kGkNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kGaussWeights[4] = {0.129484966168870, 0.279705391489277,
                                            0.381830050505119, 0.417959183673469};

template <class F>
std::pair<double, double> gk15_panel(F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double kronrod = 0.0;
  double gauss = 0.0;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kGkNodes[i];
    const double sum = f(mid - dx) + f(mid + dx);
    kronrod += kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[(i - 1) / 2] * sum;
  }
  const double fc = f(mid);
  kronrod += kKronrodWeights[7] * fc;
  gauss += kGaussWeights[3] * fc;
  kronrod *= half;
  gauss *= half;
  // QUADPACK-style rescaled difference as the error estimate.
  const double diff = std::fabs(kronrod - gauss);
  const double err = diff * std::min(1.0, std::pow(200.0 * diff / std::max(std::fabs(kronrod), 1e-300), 1.5)) + diff * 1e-14;
  return {kronrod, std::max(err, std::fabs(kronrod) * 1e-15)};
}

template <class F>
QuadResult composite_simpson(F& f, double a, double b, double abs_tol, long max_panels) {
  long n = 1024;
  double prev = 0.0;
  bool have_prev = false;
  QuadResult out;
  while (n <= max_panels) {
    const double h = (b - a) / static_cast<double>(n);
    double odd = 0.0;
    double even = 0.0;
    for (long k = 1; k < n; ++k) {
      const double x = a + h * static_cast<double>(k);
      if (k % 2 == 1)
        odd += f(x);
      else
        even += f(x);
    }
    const double s = h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
    out.evaluations += n + 1;
    if (have_prev) {
      const double diff = std::fabs(s - prev) / 15.0;
      if (diff <= abs_tol) {
        out.value = s;
        out.error_estimate = diff;
        out.converged = true;
        return out;
      }
      out.error_estimate = diff;
    }
    prev = s;
    have_prev = true;
    n *= 2;
  }
  out.value = prev;
  out.converged = false;
  return out;
}

}  // namespace detail

// Adaptive bisection with the GK15 rule. Intervals are accepted once their
// error estimate fits the length-proportional share of the absolute budget.
// When the interval budget runs out the whole range is re-integrated by a
// doubling composite Simpson rule before giving up.
template <class F>
QuadResult adaptive_gk15(F&& f, double a, double b, const QuadOptions& opt = {}) {
  QuadResult out;
  if (a == b) return out;

  struct Interval {
    double a, b, value, error;
  };
  auto panel = [&](double lo, double hi) {
    auto [v, e] = detail::gk15_panel(f, lo, hi);
    out.evaluations += 15;
    return Interval{lo, hi, v, e};
  };

  const double total_len = b - a;
  const int first = std::max(1, opt.initial_intervals);
  std::vector<Interval> work;
  double rough = 0.0;
  for (int k = 0; k < first; ++k) {
    const double lo = a + total_len * static_cast<double>(k) / first;
    const double hi = k + 1 == first ? b : a + total_len * static_cast<double>(k + 1) / first;
    work.push_back(panel(lo, hi));
    rough += work.back().value;
  }
  const double tol = std::max(opt.abs_tol, std::fabs(rough) * opt.rel_tol);

  double value = 0.0;
  double error = 0.0;
  int used = first;
  while (!work.empty()) {
    Interval iv = work.back();
    work.pop_back();
    const double share = tol * ((iv.b - iv.a) / total_len);
    if (iv.error <= share || used >= opt.max_intervals) {
      value += iv.value;
      error += iv.error;
      continue;
    }
    const double mid = 0.5 * (iv.a + iv.b);
    work.push_back(panel(iv.a, mid));
    work.push_back(panel(mid, iv.b));
    ++used;
  }
  out.value = value;
  out.error_estimate = error;
  if (error <= std::max(tol, std::fabs(value) * opt.rel_tol)) return out;

  QuadResult simpson = detail::composite_simpson(f, a, b, tol, 1L << 22);
  simpson.evaluations += out.evaluations;
  if (simpson.converged) return simpson;
  throw QuadratureError("quadrature did not converge to requested tolerance",
                        simpson.value, simpson.error_estimate);
}

}  // namespace v2vdep::quad
