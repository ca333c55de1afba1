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

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace timeboost::econ {

/// Distribution of a player's private valuation on [0, 1].
class ValuationModel
{
public:
  using Fn = std::function<double(double)>;

  ValuationModel(std::string name, Fn cdf, Fn pdf, Fn quantile, double mean)
    : name_(std::move(name))
    , cdf_(std::move(cdf))
    , pdf_(std::move(pdf))
    , quantile_(std::move(quantile))
    , mean_(mean)
  {}

  static ValuationModel uniform()
  {
    ValuationModel m(
        "uniform", [](double x) { return std::clamp(x, 0.0, 1.0); },
        [](double x) { return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0; }, [](double u) { return u; }, 0.5);
    m.uniform_ = true;
    return m;
  }

  /// F(x) = x^k on [0, 1].
  static ValuationModel power(double k)
  {
    if (!(k > 0.0)) throw InvalidInput("power model needs k > 0");
    return ValuationModel(
        "power", [k](double x) { return std::pow(std::clamp(x, 0.0, 1.0), k); },
        [k](double x) { return (x > 0.0 && x <= 1.0) ? k * std::pow(x, k - 1.0) : 0.0; },
        [k](double u) { return std::pow(u, 1.0 / k); }, k / (k + 1.0));
  }

  /// All mass at v0 (used to exercise the degenerate-input paths).
  static ValuationModel point_mass(double v0)
  {
    return ValuationModel(
        "point_mass", [v0](double x) { return x >= v0 ? 1.0 : 0.0; }, [](double) { return 0.0; },
        [v0](double) { return v0; }, v0);
  }

  std::string const &name() const noexcept
  {
    return name_;
  }

  bool is_uniform() const noexcept
  {
    return uniform_;
  }

  double cdf(double x) const
  {
    return cdf_(x);
  }

  double pdf(double x) const
  {
    return pdf_(x);
  }

  double mean() const noexcept
  {
    return mean_;
  }

  template <class Rng>
  double sample(Rng &rng) const
  {
    return quantile_(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  }

  /// Expected payment of type v in any symmetric separating equilibrium with n players:
  /// integral over [0, v] of (n-1) x f(x) F(x)^(n-2).
  double equilibrium_cost(double v, int n) const
  {
    if (n < 2) return 0.0;
    if (v <= 0.0) return 0.0;
    if (uniform_) return (n - 1.0) / n * std::pow(std::min(v, 1.0), n);
    auto integrand = [&](double x) { return (n - 1.0) * x * pdf(x) * std::pow(cdf(x), n - 2.0); };
    return integrate(integrand, 0.0, std::min(v, 1.0), 1e-12);
  }

  /// Density of the equilibrium cost in v: (n-1) v f(v) F(v)^(n-2).
  double equilibrium_cost_rate(double v, int n) const
  {
    if (n < 2) return 0.0;
    return (n - 1.0) * v * pdf(v) * std::pow(cdf(v), n - 2.0);
  }

private:
  std::string name_;
  Fn          cdf_;
  Fn          pdf_;
  Fn          quantile_;
  double      mean_;
  bool        uniform_ = false;
};

/// Latency technology: spend needed to reach the sequencer `t` after the opportunity.
struct LatencyTech
{
  std::function<double(double)> cost    = [](double t) { return 1.0 / t; };
  std::function<double(double)> inverse = [](double spend) { return 1.0 / spend; };
};

}  // namespace timeboost::econ
