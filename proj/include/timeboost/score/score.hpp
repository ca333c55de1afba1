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

#include "timeboost/core/bytes.hpp"
#include "timeboost/core/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace timeboost {

using Micros = std::chrono::microseconds;

inline double to_seconds(Micros t) noexcept
{
  return static_cast<double>(t.count()) * 1e-6;
}

inline Micros from_seconds(double s)
{
  if (!std::isfinite(s)) throw InvalidInput("timestamp must be finite");
  return Micros{std::llround(s * 1e6)};
}

/// Parameters of the time-boost function g*b/(b+c).
struct ScoreParams
{
  double g = 0.5;  ///< maximum boost, seconds
  double c = 1.0;  ///< bid at which half the maximum boost is reached

  void validate() const
  {
    if (!(g > 0.0) || !std::isfinite(g)) throw InvalidInput("g must be a positive finite number");
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidInput("c must be a positive finite number");
  }
};

/// A transaction as seen by the ordering policy. Times are integer microseconds so
/// that ordering keys never drift; bids are abstract token amounts.
struct Transaction
{
  std::string id;
  Micros      t{0};
  double      bid = 0.0;
  Bytes       payload;

  Transaction() = default;

  Transaction(std::string id_, Micros t_, double bid_, Bytes payload_ = {})
    : id(std::move(id_))
    , t(t_)
    , bid(bid_)
    , payload(std::move(payload_))
  {
    validate();
  }

  void validate() const
  {
    if (t.count() < 0) throw InvalidInput("transaction " + id + ": arrival time must be >= 0");
    if (!(bid >= 0.0) || !std::isfinite(bid))
      throw InvalidInput("transaction " + id + ": bid must be a finite non-negative number");
  }

  double arrival_seconds() const noexcept
  {
    return to_seconds(t);
  }
};

/// Seconds of priority bought with bid `b`. Lies in [0, g).
inline double time_boost(double b, ScoreParams const &p)
{
  if (!(b >= 0.0) || std::isnan(b)) throw InvalidInput("bid must be >= 0");
  if (std::isinf(b)) throw InvalidInput("bid must be finite");
  return p.g * b / (b + p.c);
}

inline double score(Transaction const &tx, ScoreParams const &p)
{
  return time_boost(tx.bid, p) - tx.arrival_seconds();
}

/// Earliest time at which no later arrival can outscore `tx`.
inline double release_time(Transaction const &tx, ScoreParams const &p)
{
  return tx.arrival_seconds() + (p.g - time_boost(tx.bid, p));
}

/// Strict weak "goes first" relation: higher score, then earlier arrival, then smaller id.
struct ScoreOrder
{
  ScoreParams params;

  bool operator()(Transaction const &a, Transaction const &b) const
  {
    double sa = score(a, params);
    double sb = score(b, params);
    if (sa != sb) return sa > sb;
    if (a.t != b.t) return a.t < b.t;
    return a.id < b.id;
  }
};

/// Score-based ordering of a finite set of transactions.
inline std::vector<Transaction> order(std::span<Transaction const> txs, ScoreParams const &p)
{
  p.validate();
  std::vector<Transaction> out(txs.begin(), txs.end());
  for (auto const &tx : out) tx.validate();
  std::stable_sort(out.begin(), out.end(), ScoreOrder{p});
  return out;
}

}  // namespace timeboost
