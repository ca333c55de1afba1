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

#include "timeboost/econ/expost.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace timeboost::econ {

/// A signalling technology: producing score s costs C(s). C must be increasing on (lo, hi).
struct SignalTech
{
  std::string                   name;
  std::function<double(double)> cost;
  std::function<double(double)> marginal;
  double                        lo = -std::numeric_limits<double>::infinity();
  double                        hi = std::numeric_limits<double>::infinity();

  /// Time-boost bidding combined with 1/t latency (c = 1).
  static SignalTech time_boost(double g)
  {
    return {"time_boost", [g](double s) { return signal_cost(s, g); },
            [g](double s) { return signal_cost_derivative(s, g); }, -std::numeric_limits<double>::infinity(), g};
  }

  /// Latency only: score -t at cost 1/t.
  static SignalTech latency_only()
  {
    return {"latency_only", [](double s) { return -1.0 / s; }, [](double s) { return 1.0 / (s * s); },
            -std::numeric_limits<double>::infinity(), 0.0};
  }

  /// C(s) = s + k on s > -k.
  static SignalTech shifted_linear(double k)
  {
    return {"shifted_linear", [k](double s) { return s + k; }, [](double) { return 1.0; }, -k,
            std::numeric_limits<double>::infinity()};
  }
};

struct RevenueEquivalence
{
  double max_deviation  = 0.0;  ///< max |C(s(v)) - equilibrium cost(v)| on the grid
  double expected_spend = 0.0;  ///< per player
  double total_spend    = 0.0;  ///< all n players
};

/// Score a type-v player sends under technology `tech`: solves C(s) = equilibrium_cost(v).
inline double equilibrium_score(SignalTech const &tech, double v, int n,
                                 ValuationModel const &model = ValuationModel::uniform())
{
  double target = model.equilibrium_cost(v, n);
  if (!(target > 0.0)) throw OutOfDomain("zero type has no finite equilibrium score");

  // finite bracket strictly inside the domain
  double hi = std::isfinite(tech.hi) ? std::nextafter(tech.hi, -INFINITY) : 1.0;
  for (int i = 0; i < 200 && tech.cost(hi) < target; ++i)
  {
    if (std::isfinite(tech.hi)) throw SolverFailure(tech.name + ": cost never reaches the target");
    hi = hi * 2.0 + 1.0;
  }
  double lo = std::isfinite(tech.lo) ? tech.lo : std::min(-1.0, hi - 1.0);
  if (!std::isfinite(tech.lo))
    for (int i = 0; i < 2000 && tech.cost(lo) > target; ++i) lo *= 2.0;
  double flo = tech.cost(lo) - target;
  double fhi = tech.cost(hi) - target;
  if (!(flo <= 0.0 && fhi >= 0.0)) throw SolverFailure(tech.name + ": cost is not invertible at this level");
  return bisect([&](double s) { return tech.cost(s) - target; }, lo, hi, 1e-16);
}

/// Solves the equilibrium of an arbitrary technology pointwise and measures its spend.
inline RevenueEquivalence revenue_equivalence_check(SignalTech const &tech, int n, int grid = 1000,
                                                    ValuationModel const &model = ValuationModel::uniform())
{
  if (n < 2) throw OutOfDomain("need at least two players");
  if (grid < 2) throw InvalidInput("grid needs at least two points");

  RevenueEquivalence out;
  for (int i = 1; i <= grid; ++i)
  {
    double v = static_cast<double>(i) / grid;
    double s = equilibrium_score(tech, v, n, model);
    out.max_deviation = std::max(out.max_deviation, std::abs(tech.cost(s) - model.equilibrium_cost(v, n)));
  }
  auto spend = [&](double v) {
    if (v <= 0.0) return 0.0;
    return tech.cost(equilibrium_score(tech, v, n, model)) * model.pdf(v);
  };
  out.expected_spend = integrate(spend, 0.0, 1.0, 1e-10);
  out.total_spend    = n * out.expected_spend;
  return out;
}

}  // namespace timeboost::econ
