//------------------------------------------------------------------------------
//
//   Copyright 2026 The Timeboost Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include "timeboost/core/errors.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace timeboost::econ {

namespace detail {

template <class F>
double simpson_step(F const &f, double a, double fa, double b, double fb, double m, double fm, double whole,
                    double tol, int depth)
{
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left  = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance `tol`.
template <class F>
double integrate(F const &f, double a, double b, double tol = 1e-10, int max_depth = 50)
{
  if (a == b) return 0.0;
  double m  = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

/// Same, but splits [a, b] into `panels` equal pieces first (helps with sharply varying integrands).
template <class F>
double integrate_panels(F const &f, double a, double b, int panels, double tol = 1e-10)
{
  double sum = 0.0;
  double h   = (b - a) / panels;
  for (int i = 0; i < panels; ++i) sum += integrate(f, a + i * h, a + (i + 1) * h, tol / panels);
  return sum;
}

template <std::size_t N>
using State = std::array<double, N>;

/// Classic fourth-order Runge-Kutta from x0 to x1 with fixed step `h`.
/// Calls `observe(x, y)` at x0 and after every step.
template <std::size_t N, class Rhs, class Observe>
State<N> rk4(Rhs const &rhs, double x0, State<N> y, double x1, double h, Observe const &observe)
{
  auto axpy = [](State<N> const &base, State<N> const &k, double s) {
    State<N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = base[i] + s * k[i];
    return out;
  };
  observe(x0, y);
  int steps = static_cast<int>(std::ceil((x1 - x0) / h - 1e-9));
  if (steps < 1) steps = 1;
  double step = (x1 - x0) / steps;
  double x    = x0;
  for (int i = 0; i < steps; ++i)
  {
    State<N> k1 = rhs(x, y);
    State<N> k2 = rhs(x + 0.5 * step, axpy(y, k1, 0.5 * step));
    State<N> k3 = rhs(x + 0.5 * step, axpy(y, k2, 0.5 * step));
    State<N> k4 = rhs(x + step, axpy(y, k3, step));
    for (std::size_t j = 0; j < N; ++j) y[j] += step / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    x = (i + 1 == steps) ? x1 : x0 + (i + 1) * step;
    observe(x, y);
  }
  return y;
}

/// Bisection on a bracketing interval; f(lo) and f(hi) must differ in sign.
template <class F>
double bisect(F const &f, double lo, double hi, double xtol = 1e-14, int max_iter = 200)
{
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0) == (fhi < 0)) throw SolverFailure("root is not bracketed");
  for (int i = 0; i < max_iter && std::abs(hi - lo) > xtol * (1.0 + std::abs(lo)); ++i)
  {
    double mid  = 0.5 * (lo + hi);
    double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if ((fmid < 0) == (flo < 0))
    {
      lo  = mid;
      flo = fmid;
    }
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Solves g(x) = target for an increasing g on (lo, hi), growing `lo` downward when
/// the bracket is too narrow. Used to invert cost functions.
template <class F>
double invert_increasing(F const &g, double target, double lo, double hi, double xtol = 1e-14)
{
  auto f = [&](double x) { return g(x) - target; };
  for (int i = 0; i < 200 && f(lo) > 0; ++i) lo = lo < 0 ? lo * 2.0 : lo - 1.0;
  if (f(lo) > 0 || f(hi) < 0) throw SolverFailure("cannot bracket inverse");
  return bisect(f, lo, hi, xtol);
}

}  // namespace timeboost::econ
