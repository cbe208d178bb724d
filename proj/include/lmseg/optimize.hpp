#pragma once

// Limited-memory quasi-Newton minimization. With l1 > 0 the method runs in
// orthant-wise mode (pseudo-gradient, orthant projection in the line
// search) and minimizes f(x) + l1 * |x|_1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <numeric>
#include <vector>

#include "lmseg/error.hpp"

namespace lmseg {

struct LbfgsOptions {
  size_t history = 10;
  size_t max_iterations = 500;
  /// Stop when |f_prev - f| / max(1, |f|) falls below this.
  double tolerance = 1e-6;
  double l1 = 0.0;
  /// Called after every iteration with (iteration, objective, gradient norm).
  std::function<void(size_t, double, double)> on_iteration;
};

struct LbfgsResult {
  double objective = 0.0;
  size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void pseudo_gradient(const std::vector<double>& x,
                            const std::vector<double>& g, double l1,
                            std::vector<double>& pg) {
  pg.resize(x.size());
  if (l1 == 0.0) {
    pg = g;
    return;
  }
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0) {
      pg[i] = g[i] - l1;
    } else if (x[i] > 0) {
      pg[i] = g[i] + l1;
    } else if (g[i] + l1 < 0) {
      pg[i] = g[i] + l1;
    } else if (g[i] - l1 > 0) {
      pg[i] = g[i] - l1;
    } else {
      pg[i] = 0.0;
    }
  }
}

inline double l1_norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

}  // namespace detail

/// Minimizes `f`, which returns the smooth objective at x and writes its
/// gradient into g. `x` holds the start point on entry and the solution on
/// exit.
template <typename Objective>
LbfgsResult minimize(Objective&& f, std::vector<double>& x,
                     const LbfgsOptions& opt = {}) {
  using detail::dot;
  const size_t n = x.size();
  const double l1 = opt.l1;
  std::vector<double> g(n), pg(n), d(n), x_new(n), g_new(n);
  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;

  double fx = f(x, g);
  if (!std::isfinite(fx)) throw NumericError("objective is not finite at start");
  double Fx = fx + l1 * detail::l1_norm(x);
  LbfgsResult res;
  res.objective = Fx;
  if (n == 0) {
    res.converged = true;
    return res;
  }

  for (size_t iter = 1; iter <= opt.max_iterations; ++iter) {
    detail::pseudo_gradient(x, g, l1, pg);
    const double gnorm = std::sqrt(dot(pg, pg));
    if (gnorm <= 1e-12) {
      res.converged = true;
      break;
    }

    // Two-loop recursion: d = -H pg.
    d = pg;
    std::vector<double> alpha(S.size());
    for (size_t k = S.size(); k-- > 0;) {
      alpha[k] = rho[k] * dot(S[k], d);
      for (size_t i = 0; i < n; ++i) d[i] -= alpha[k] * Y[k][i];
    }
    double gamma = S.empty() ? 1.0 / gnorm : dot(S.back(), Y.back()) /
                                                  dot(Y.back(), Y.back());
    for (double& v : d) v *= gamma;
    for (size_t k = 0; k < S.size(); ++k) {
      double beta = rho[k] * dot(Y[k], d);
      for (size_t i = 0; i < n; ++i) d[i] += S[k][i] * (alpha[k] - beta);
    }
    for (double& v : d) v = -v;
    if (l1 > 0.0) {
      for (size_t i = 0; i < n; ++i) {
        if (d[i] * pg[i] >= 0) d[i] = 0.0;
      }
    }
    double slope = dot(d, pg);
    if (slope >= 0) {
      // Not a descent direction; restart from steepest descent.
      S.clear();
      Y.clear();
      rho.clear();
      for (size_t i = 0; i < n; ++i) d[i] = -pg[i] / gnorm;
      slope = dot(d, pg);
    }

    // Backtracking line search (Armijo), projected onto the orthant of x
    // in L1 mode.
    double step = 1.0;
    double f_new = 0.0, F_new = 0.0;
    bool accepted = false;
    for (int trial = 0; trial < 60; ++trial) {
      for (size_t i = 0; i < n; ++i) {
        x_new[i] = x[i] + step * d[i];
        if (l1 > 0.0) {
          double orthant = x[i] != 0.0 ? x[i] : -pg[i];
          if (x_new[i] * orthant <= 0) x_new[i] = 0.0;
        }
      }
      f_new = f(x_new, g_new);
      F_new = f_new + l1 * detail::l1_norm(x_new);
      double decrease = 0.0;
      for (size_t i = 0; i < n; ++i) decrease += pg[i] * (x_new[i] - x[i]);
      if (std::isfinite(F_new) && F_new <= Fx + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> s(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (S.size() > opt.history) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }

    const double rel = std::abs(Fx - F_new) / std::max(1.0, std::abs(F_new));
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    Fx = F_new;
    res.iterations = iter;
    res.objective = Fx;
    if (opt.on_iteration) {
      detail::pseudo_gradient(x, g, l1, pg);
      opt.on_iteration(iter, Fx, std::sqrt(dot(pg, pg)));
    }
    if (rel < opt.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.objective = Fx;
  return res;
}

}  // namespace lmseg
