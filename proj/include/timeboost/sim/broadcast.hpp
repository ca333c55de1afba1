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

#include "timeboost/committee/messages.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace timeboost::sim {

/// Totally ordered broadcast channel with per-receiver delays.
///
/// Every message gets one global index. Each receiver delivers indices 0, 1, 2, ... in order, at
/// non-decreasing times, so receivers differ only in when they see the shared sequence.
class AtomicBroadcast
{
public:
  struct Entry
  {
    committee::SequencerId  sender;
    committee::BroadcastMsg msg;
    std::int64_t            t_us;
  };

  struct Delivery
  {
    committee::SequencerId to;
    std::uint64_t          index;
    std::int64_t           at_us;
  };

  AtomicBroadcast(std::size_t n, std::int64_t min_delay_us, std::int64_t max_delay_us)
    : delay_(min_delay_us, max_delay_us)
    , recv_(n)
  {
  }

  /// Appends `msg` to the global order and schedules it at every connected receiver.
  std::vector<Delivery> publish(committee::SequencerId sender, committee::BroadcastMsg msg, std::int64_t now_us,
                                std::mt19937_64 &rng)
  {
    log_.push_back({sender, std::move(msg), now_us});
    std::uint64_t         k = log_.size() - 1;
    std::vector<Delivery> out;
    for (committee::SequencerId j = 0; j < recv_.size(); ++j)
      if (recv_[j].connected) out.push_back(schedule(j, k, rng));
    return out;
  }

  /// True exactly when `index` is the next message for `to`; advances its cursor.
  bool accept(committee::SequencerId to, std::uint64_t index)
  {
    auto &r = recv_[to];
    if (!r.connected || index != r.cursor) return false;
    ++r.cursor;
    return true;
  }

  /// Stops scheduling to `to`; already scheduled deliveries must be discarded by the caller.
  void disconnect(committee::SequencerId to)
  {
    recv_[to].connected = false;
  }

  /// Reconnects `to` and schedules its whole backlog from where it stopped.
  std::vector<Delivery> resume(committee::SequencerId to, std::int64_t now_us, std::mt19937_64 &rng)
  {
    auto &r      = recv_[to];
    r.connected  = true;
    r.last_us    = std::max(r.last_us, now_us);
    std::vector<Delivery> out;
    for (std::uint64_t k = r.cursor; k < log_.size(); ++k) out.push_back(schedule(to, k, rng));
    return out;
  }

  /// Reconnects `to` with an empty backlog, as a replica that starts from scratch.
  void resume_fresh(committee::SequencerId to, std::int64_t now_us)
  {
    auto &r     = recv_[to];
    r.connected = true;
    r.cursor    = log_.size();
    r.last_us   = std::max(r.last_us, now_us);
  }

  Entry const &entry(std::uint64_t index) const
  {
    return log_.at(index);
  }

  std::size_t size() const noexcept
  {
    return log_.size();
  }

  std::uint64_t delivered(committee::SequencerId to) const
  {
    return recv_[to].cursor;
  }

private:
  struct Receiver
  {
    bool          connected = true;
    std::uint64_t cursor    = 0;
    std::int64_t  last_us   = 0;
  };

  Delivery schedule(committee::SequencerId to, std::uint64_t k, std::mt19937_64 &rng)
  {
    auto &r   = recv_[to];
    r.last_us = std::max(r.last_us, log_[k].t_us + delay_(rng));
    return {to, k, r.last_us};
  }

  std::uniform_int_distribution<std::int64_t> delay_;
  std::vector<Receiver>                       recv_;
  std::vector<Entry>                          log_;
};

}  // namespace timeboost::sim
