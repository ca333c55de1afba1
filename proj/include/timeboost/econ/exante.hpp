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

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

namespace timeboost::econ {

/// CDF over latency spend: an atom at 0, uniform density on (0, upper), and an atom at `upper`.
struct MixedStrategy
{
  double atom_zero  = 0.0;
  double density    = 0.0;
  double upper      = 0.0;
  double atom_upper = 0.0;

  double cdf(double x) const
  {
    if (x < 0.0) return 0.0;
    if (x >= upper) return 1.0;
    return atom_zero + density * x;
  }

  /// P(X < x)
  double cdf_below(double x) const
  {
    if (x <= 0.0) return 0.0;
    if (x > upper) return 1.0;
    return atom_zero + density * x;
  }

  double mass_at(double x) const
  {
    double m = 0.0;
    if (x == 0.0) m += atom_zero;
    if (x == upper) m += atom_upper;
    return m;
  }

  double continuous_mass() const
  {
    return density * upper;
  }

  double mean() const
  {
    return density * upper * upper / 2.0 + atom_upper * upper;
  }

  template <class Rng>
  double sample(Rng &rng) const
  {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (u < atom_zero) return 0.0;
    if (u < atom_zero + continuous_mass()) return (u - atom_zero) / density;
    return upper;
  }
};

/// Symmetric mixed equilibrium of the pure latency race: spend uniform on (0, E[V]).
inline MixedStrategy exante_latency_mixed_eq(ValuationModel const &model)
{
  double ev = model.mean();
  if (!(ev > 0.0) || !std::isfinite(ev)) throw OutOfDomain("expected valuation must be finite and positive");
  return MixedStrategy{0.0, 1.0 / ev, ev, 0.0};
}

struct BudgetEquilibrium
{
  MixedStrategy weak;
  MixedStrategy strong;
  double        weak_payoff   = 0.0;
  double        strong_payoff = 0.0;
};

/// Latency race where the weak player can spend at most b1 < E[V] and the strong one b2 > b1.
inline BudgetEquilibrium exante_budget_eq(double b1, double b2, ValuationModel const &model)
{
  double ev = model.mean();
  if (!(ev > 0.0)) throw OutOfDomain("expected valuation must be positive");
  if (!(b1 > 0.0)) throw OutOfDomain("weak budget must be positive");
  if (b1 >= ev) throw OutOfDomain("weak budget must be below the expected valuation");
  if (!(b2 > b1)) throw OutOfDomain("strong budget must exceed the weak budget");

  BudgetEquilibrium eq;
  eq.weak          = MixedStrategy{(ev - b1) / ev, 1.0 / ev, b1, 0.0};
  eq.strong        = MixedStrategy{0.0, 1.0 / ev, b1, 1.0 - b1 / ev};
  eq.weak_payoff   = 0.0;
  eq.strong_payoff = ev - b1;
  return eq;
}

/// Expected payoff of spending x against `opponent` for a prize worth `prize`; ties split evenly.
inline double contest_payoff(double x, MixedStrategy const &opponent, double prize)
{
  return prize * (opponent.cdf_below(x) + 0.5 * opponent.mass_at(x)) - x;
}

struct DeviationReport
{
  double worst_gain     = -INFINITY;  ///< max over deviations of (simulated payoff - equilibrium payoff)
  double worst_margin   = -INFINITY;  ///< max over deviations of (gain - 3 SE)
  double deviation      = 0.0;        ///< spend at which the margin is largest
  double standard_error = 0.0;

  bool ok() const
  {
    return worst_margin <= 1e-9;  // rounding in payoffs at exact ties
  }
};

/// Monte Carlo check that no pure spend in `deviations` beats `equilibrium_payoff` against
/// `opponent` by more than three standard errors.
inline DeviationReport deviation_sweep(MixedStrategy const &opponent, double prize, double equilibrium_payoff,
                                       std::vector<double> const &deviations, int trials, std::uint64_t seed)
{
  std::mt19937_64     rng(seed);
  std::vector<double> draws(static_cast<std::size_t>(trials));
  for (auto &d : draws) d = opponent.sample(rng);

  DeviationReport report;
  for (double x : deviations)
  {
    double sum = 0.0, sum_sq = 0.0;
    for (double y : draws)
    {
      double win    = x > y ? 1.0 : (x == y ? 0.5 : 0.0);
      double payoff = prize * win - x;
      sum += payoff;
      sum_sq += payoff * payoff;
    }
    double mean   = sum / trials;
    double var    = std::max(0.0, sum_sq / trials - mean * mean);
    double se     = std::sqrt(var / trials);
    double gain   = mean - equilibrium_payoff;
    double margin = gain - 3.0 * se;
    report.worst_gain = std::max(report.worst_gain, gain);
    if (margin > report.worst_margin)
    {
      report.worst_margin   = margin;
      report.deviation      = x;
      report.standard_error = se;
    }
  }
  return report;
}

}  // namespace timeboost::econ
