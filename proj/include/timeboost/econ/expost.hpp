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

#include "timeboost/econ/valuation.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace timeboost::econ {

struct LatencyChoice
{
  double delay = 0.0;  ///< +inf for the zero type
  double spend = 0.0;

  bool waits_forever() const
  {
    return std::isinf(delay);
  }
};

/// Latency-only equilibrium with n players and uniform valuations: t(v) = n / ((n-1) v^n).
inline LatencyChoice expost_latency_only(double v, int n)
{
  if (n < 2) throw OutOfDomain("need at least two players");
  if (v < 0.0 || v > 1.0) throw OutOfDomain("valuation must lie in [0, 1]");
  if (v == 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
  double spend = (n - 1.0) / n * std::pow(v, n);
  return {1.0 / spend, spend};
}

/// Cheapest spend (bid + latency at cost 1/t) that yields score s = g m/(m+1) - t.
inline double signal_cost(double s, double g)
{
  if (!(g > 0.0)) throw OutOfDomain("g must be positive");
  if (s >= g) throw OutOfDomain("score must be below g");
  double rg = std::sqrt(g);
  if (s > -rg) return (1.0 + 2.0 * rg + s) / (g - s);
  return -1.0 / s;
}

/// d signal_cost / ds.
inline double signal_cost_derivative(double s, double g)
{
  if (s >= g) throw OutOfDomain("score must be below g");
  double rg = std::sqrt(g);
  if (s > -rg) return (1.0 + rg) * (1.0 + rg) / ((g - s) * (g - s));
  return 1.0 / (s * s);
}

struct SignalSplit
{
  double bid   = 0.0;  ///< m
  double delay = 0.0;  ///< t
};

/// Cost-minimising split of score s into a bid and a delay.
inline SignalSplit expost_optimal_split(double s, double g)
{
  if (!(g > 0.0)) throw OutOfDomain("g must be positive");
  if (s >= g) throw OutOfDomain("score must be below g");
  double m = std::max(0.0, (s + std::sqrt(g)) / (g - s));
  return {m, g * m / (m + 1.0) - s};
}

/// Lowest type that bids a positive amount: solves equilibrium_cost(u) = 1/sqrt(g).
/// For uniform valuations u = (n / ((n-1) sqrt g))^(1/n).
inline double marginal_type(double g, int n, ValuationModel const &model = ValuationModel::uniform())
{
  if (!(g > 0.0)) throw OutOfDomain("g must be positive");
  if (n < 2) throw OutOfDomain("need at least two players");
  double target = 1.0 / std::sqrt(g);
  if (model.is_uniform()) return std::pow(n / ((n - 1.0) * std::sqrt(g)), 1.0 / n);
  if (model.equilibrium_cost(1.0, n) <= target) return 1.0;
  return bisect([&](double v) { return model.equilibrium_cost(v, n) - target; }, 0.0, 1.0, 1e-15);
}

struct CurvePoint
{
  double v             = 0.0;
  double s             = 0.0;  ///< score
  double m             = 0.0;  ///< bid
  double latency_spend = 0.0;  ///< 1 / t
  double total_cost    = 0.0;  ///< m + 1 / t
};

struct EquilibriumCurve
{
  double                  g        = 0.0;
  int                     n        = 2;
  double                  marginal = 1.0;  ///< u
  std::vector<CurvePoint> points;
};

struct ExpostOptions
{
  double step      = 1e-3;  ///< RK4 step on the valuation grid
  int    substeps  = 1;     ///< extra RK4 steps between grid points
};

namespace detail {

inline CurvePoint make_point(double v, double s, double g)
{
  CurvePoint p;
  p.v = v;
  p.s = s;
  if (std::isinf(s))
  {
    p.latency_spend = 0.0;
    p.total_cost    = 0.0;
    return p;
  }
  auto split      = expost_optimal_split(s, g);
  p.m             = split.bid;
  p.latency_spend = 1.0 / split.delay;
  p.total_cost    = p.m + p.latency_spend;
  return p;
}

}  // namespace detail

/// Ex-post equilibrium score function with both technologies available.
///
/// Types below the marginal type u use latency only, s(v) = -1 / equilibrium_cost(v).
/// Above u the first-order condition c'(s) s'(v) = (n-1) v f(v) F(v)^(n-2) is integrated
/// with RK4 from s(u) = -sqrt(g).
inline EquilibriumCurve expost_equilibrium(double g, int n, ExpostOptions opt = {},
                                           ValuationModel const &model = ValuationModel::uniform())
{
  if (!(g > 1.0)) throw OutOfDomain("g must exceed 1");
  if (n < 2) throw OutOfDomain("need at least two players");
  if (!(opt.step > 0.0 && opt.step <= 0.5)) throw InvalidInput("grid step must lie in (0, 0.5]");

  EquilibriumCurve curve;
  curve.g        = g;
  curve.n        = n;
  curve.marginal = marginal_type(g, n, model);
  double const u = curve.marginal;

  int const grid = static_cast<int>(std::lround(1.0 / opt.step));
  for (int i = 0; i <= grid; ++i)
  {
    double v = static_cast<double>(i) / grid;
    if (v >= u) break;
    double cost = model.equilibrium_cost(v, n);
    double s    = cost > 0.0 ? -1.0 / cost : -std::numeric_limits<double>::infinity();
    curve.points.push_back(detail::make_point(v, s, g));
  }
  if (u >= 1.0) return curve;

  auto rhs = [&](double v, State<1> const &y) -> State<1> {
    return {model.equilibrium_cost_rate(v, n) / signal_cost_derivative(y[0], g)};
  };

  // integrate from u to the next grid node, then node to node
  int    first_node = static_cast<int>(std::ceil(u * grid - 1e-12));
  double x          = u;
  State<1> y{-std::sqrt(g)};
  curve.points.push_back(detail::make_point(u, y[0], g));
  double h = opt.step / std::max(1, opt.substeps);
  for (int i = first_node; i <= grid; ++i)
  {
    double node = static_cast<double>(i) / grid;
    if (node <= x) continue;
    y = rk4<1>(rhs, x, y, node, h, [](double, State<1> const &) {});
    x = node;
    curve.points.push_back(detail::make_point(node, y[0], g));
  }
  return curve;
}

struct BiddingShare
{
  double bid_share     = 0.0;  ///< b(g): expected bid spend per player
  double latency_share = 0.0;  ///< expected latency spend per player
  double marginal      = 1.0;
  bool   no_bidding    = false;
};

/// Splits expected equilibrium spend into bids and latency by integrating m(v) f(v)
/// and f(v)/t(v) alongside the score ODE.
inline BiddingShare bidding_share(double g, int n, ExpostOptions opt = {},
                                  ValuationModel const &model = ValuationModel::uniform())
{
  if (!(g > 0.0)) throw OutOfDomain("g must be positive");
  if (n < 2) throw OutOfDomain("need at least two players");

  BiddingShare out;
  out.marginal = marginal_type(g, n, model);
  double const u = out.marginal;

  // latency-only types below u
  out.latency_share =
      integrate([&](double v) { return model.equilibrium_cost(v, n) * model.pdf(v); }, 0.0, std::min(u, 1.0), 1e-13);
  if (u >= 1.0)
  {
    out.no_bidding = true;
    return out;
  }

  auto rhs = [&](double v, State<3> const &y) -> State<3> {
    auto split = expost_optimal_split(y[0], g);
    return {model.equilibrium_cost_rate(v, n) / signal_cost_derivative(y[0], g), split.bid * model.pdf(v),
            model.pdf(v) / split.delay};
  };
  State<3> y{-std::sqrt(g), 0.0, 0.0};
  y = rk4<3>(rhs, u, y, 1.0, opt.step / std::max(1, opt.substeps), [](double, State<3> const &) {});
  out.bid_share = y[1];
  out.latency_share += y[2];
  return out;
}

}  // namespace timeboost::econ
