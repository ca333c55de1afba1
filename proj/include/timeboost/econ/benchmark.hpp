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
#include "timeboost/score/score.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace timeboost::econ {

/// Draws a bid for the continuous-policy side of the block comparison.
using BidSampler = std::function<double(std::mt19937_64 &)>;

inline BidSampler zero_bids()
{
  return [](std::mt19937_64 &) { return 0.0; };
}

inline BidSampler exponential_bids(double mean)
{
  return [mean](std::mt19937_64 &rng) { return std::exponential_distribution<double>(1.0 / mean)(rng); };
}

struct BlockComparison
{
  double exclusion_window       = 0.0;  ///< share of the block in which the slower party cannot compete
  double ethereum_window        = 0.0;  ///< same quantity for 12 s blocks
  double latency_factor         = 0.0;  ///< 12 / g
  double batch_avg_delay        = 0.0;
  double batch_delay_se         = 0.0;
  double continuous_avg_delay   = 0.0;
  std::size_t trials            = 0;
};

/// Block-to-block auctions with block length g versus continuous time-boost ordering.
inline BlockComparison block_auction_compare(double g, double s1, double s2, BidSampler const &bids,
                                             std::size_t trials, std::uint64_t seed, double c = 1.0)
{
  if (!(g > 0.0)) throw OutOfDomain("g must be positive");
  if (s1 < 0.0 || s2 < s1) throw OutOfDomain("latencies must satisfy 0 <= s1 <= s2");
  if (s2 >= g) throw OutOfDomain("latencies must be below g");
  if (trials == 0) throw InvalidInput("need at least one trial");

  BlockComparison out;
  out.exclusion_window = (s2 - s1) / g;
  out.ethereum_window  = (s2 - s1) / 12.0;
  out.latency_factor   = 12.0 / g;
  out.trials           = trials;

  std::mt19937_64                        rng(seed);
  double const                           horizon = 1000.0 * g;
  std::uniform_real_distribution<double> arrival(0.0, horizon);
  ScoreParams const                      params{g, c};

  double sum = 0.0, sum_sq = 0.0, cont = 0.0;
  for (std::size_t i = 0; i < trials; ++i)
  {
    double t     = arrival(rng);
    double close = std::ceil(t / g) * g;
    double delay = close - t;
    sum += delay;
    sum_sq += delay * delay;
    cont += params.g - time_boost(bids(rng), params);
  }
  double n             = static_cast<double>(trials);
  out.batch_avg_delay  = sum / n;
  out.batch_delay_se   = std::sqrt(std::max(0.0, sum_sq / n - out.batch_avg_delay * out.batch_avg_delay) / n);
  out.continuous_avg_delay = cont / n;
  return out;
}

struct PayoffEquivalence
{
  double allpay     = 0.0;  ///< mean payoff per player, all-pay format
  double firstprice = 0.0;  ///< mean payoff per player, winner-pays format
  double se_allpay  = 0.0;
  double se_firstprice = 0.0;
  double se_diff    = 0.0;  ///< standard error of the paired difference
  std::size_t trials = 0;

  bool equivalent(double k = 3.0) const
  {
    return std::abs(allpay - firstprice) <= k * se_diff + 1e-15;
  }
};

/// Winner-pays bid of type v: expected highest rival valuation given it is below v.
inline double first_price_bid(double v, int n, ValuationModel const &model)
{
  if (n < 2 || v <= 0.0) return 0.0;
  if (model.is_uniform()) return (n - 1.0) / n * v;
  double fv = std::pow(model.cdf(v), n - 1.0);
  if (fv <= 0.0) return 0.0;
  return v - integrate([&](double x) { return std::pow(model.cdf(x), n - 1.0); }, 0.0, v, 1e-12) / fv;
}

/// Simulates player 1's payoff in the all-pay and winner-pays formats at their symmetric
/// equilibria, with the same valuation draws for both.
inline PayoffEquivalence payoff_equivalence_mc(ValuationModel const &model, int n, std::size_t trials,
                                               std::uint64_t seed)
{
  if (n < 1) throw OutOfDomain("need at least one player");
  if (trials == 0) throw InvalidInput("need at least one trial");

  std::mt19937_64 rng(seed);
  double          sa = 0, sa2 = 0, sf = 0, sf2 = 0, sd = 0, sd2 = 0;
  for (std::size_t i = 0; i < trials; ++i)
  {
    double v1       = model.sample(rng);
    double best_rival = -1.0;
    for (int j = 1; j < n; ++j) best_rival = std::max(best_rival, model.sample(rng));
    bool   wins     = v1 > best_rival;
    double allpay   = (wins ? v1 : 0.0) - model.equilibrium_cost(v1, n);
    double fp       = wins ? v1 - first_price_bid(v1, n, model) : 0.0;
    double d        = allpay - fp;
    sa += allpay;
    sa2 += allpay * allpay;
    sf += fp;
    sf2 += fp * fp;
    sd += d;
    sd2 += d * d;
  }
  double            k  = static_cast<double>(trials);
  auto              se = [k](double s, double s2) {
    double mean = s / k;
    return std::sqrt(std::max(0.0, s2 / k - mean * mean) / k);
  };
  PayoffEquivalence out;
  out.allpay        = sa / k;
  out.firstprice    = sf / k;
  out.se_allpay     = se(sa, sa2);
  out.se_firstprice = se(sf, sf2);
  out.se_diff       = se(sd, sd2);
  out.trials        = trials;
  return out;
}

}  // namespace timeboost::econ
