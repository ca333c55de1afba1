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

#include "timeboost/econ/numeric.hpp"

#include <cmath>
#include <vector>

namespace timeboost::econ {

/// Bidding signal of type v when both bidders have equal latency (uniform valuations).
inline double full_separation_bid(double v, double g)
{
  if (!(g > 0.0)) throw OutOfDomain("g must be positive");
  if (v < 0.0 || v > 1.0) throw OutOfDomain("valuation must lie in [0, 1]");
  return g * v * v / (2.0 + v * v);
}

/// Inverse of full_separation_bid: the type that sends signal pi.
inline double full_separation_valuation(double pi, double g)
{
  if (pi < 0.0 || pi >= g) throw OutOfDomain("signal must lie in [0, g)");
  return std::sqrt(2.0 * pi / (g - pi));
}

struct PartialSeparationPoint
{
  double v       = 0.0;
  double pi1     = 0.0;  ///< bid boost of the low-latency bidder
  double pi2     = 0.0;  ///< bid boost of the high-latency bidder
  double signal1 = 0.0;  ///< pi1 - t1 with t2 normalised to 0, i.e. pi1 + delta
  double signal2 = 0.0;  ///< pi2 - t2 = pi2
};

/// Equilibrium of the interim bidding game when bidder 1 arrives `delta` seconds before bidder 2.
///
/// Both bidders abstain below the threshold sqrt(delta / (g - delta)). Above it, the
/// inverse bid functions are
///   v1(pi) = threshold * exp(int_0^pi       g / (g - p - delta)^2 / D(p) dp)
///   v2(pi) = threshold * exp(int_0^(pi-delta) g / (g - p)^2 / D(p) dp)
/// with D(p) = p / (g - p) + (p + delta) / (g - p - delta).
class PartialSeparation
{
public:
  PartialSeparation(double g, double delta, double tol = 1e-12)
    : g_(g)
    , delta_(delta)
    , tol_(tol)
  {
    if (!(g > 0.0)) throw OutOfDomain("g must be positive");
    if (!(delta > 0.0)) throw OutOfDomain("latency gap must be positive");
    if (delta >= g) throw OutOfDomain("latency gap must be smaller than g");
    threshold_ = std::sqrt(delta / (g - delta));
  }

  double g() const noexcept
  {
    return g_;
  }

  double delta() const noexcept
  {
    return delta_;
  }

  double threshold() const noexcept
  {
    return threshold_;
  }

  double payoff_sum(double p) const
  {
    return p / (g_ - p) + (p + delta_) / (g_ - p - delta_);
  }

  /// Valuation of bidder 1 that bids pi, for pi in [0, g - delta).
  double v1(double pi) const
  {
    if (pi < 0.0 || pi >= g_ - delta_) throw OutOfDomain("bidder 1 signal outside [0, g - delta)");
    auto f = [this](double p) { return g_ / ((g_ - p - delta_) * (g_ - p - delta_)) / payoff_sum(p); };
    return threshold_ * std::exp(integrate(f, 0.0, pi, tol_));
  }

  /// Valuation of bidder 2 that bids pi, for pi in [delta, g).
  double v2(double pi) const
  {
    if (pi < delta_ || pi >= g_) throw OutOfDomain("bidder 2 signal outside [delta, g)");
    double upper = std::min(pi - delta_, g_ - delta_);
    auto   f     = [this](double p) {
      double s = payoff_sum(p);
      return std::isfinite(s) ? g_ / ((g_ - p) * (g_ - p)) / s : 0.0;
    };
    return threshold_ * std::exp(integrate(f, 0.0, upper, tol_));
  }

  /// Bid of bidder 1 with valuation v (0 below the threshold).
  double pi1(double v) const
  {
    if (v <= threshold_) return 0.0;
    double hi = g_ - delta_;
    double lo = 0.0;
    // v1 blows up as pi -> g - delta, so a bracket always exists
    double probe = hi - (hi - lo) * 1e-3;
    while (v1(probe) < v) probe = hi - (hi - probe) * 1e-3;
    return bisect([&](double p) { return v1(p) - v; }, lo, probe, 1e-13);
  }

  /// Bid of bidder 2 with valuation v (0 below the threshold, delta at it).
  double pi2(double v) const
  {
    if (v < threshold_) return 0.0;
    if (v == threshold_) return delta_;
    double top = v2(std::nextafter(g_, 0.0));
    if (v > top) throw OutOfDomain("valuation exceeds the range of bidder 2's signals");
    return bisect([&](double p) { return v2(p) - v; }, delta_, std::nextafter(g_, 0.0), 1e-13);
  }

  /// Samples both bid functions on `points` equally spaced valuations from the threshold to 1.
  std::vector<PartialSeparationPoint> curve(int points) const
  {
    std::vector<PartialSeparationPoint> out;
    if (points < 2) points = 2;
    for (int i = 0; i < points; ++i)
    {
      double                 v = threshold_ + (1.0 - threshold_) * i / (points - 1);
      PartialSeparationPoint p;
      p.v       = v;
      p.pi1     = pi1(v);
      p.pi2     = pi2(v);
      p.signal1 = p.pi1 + delta_;
      p.signal2 = p.pi2;
      out.push_back(p);
    }
    return out;
  }

private:
  double g_;
  double delta_;
  double tol_;
  double threshold_ = 0.0;
};

inline PartialSeparation partial_separation_solve(double g, double delta)
{
  return PartialSeparation(g, delta);
}

}  // namespace timeboost::econ
