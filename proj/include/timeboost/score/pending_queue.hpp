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

#include "timeboost/score/score.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <unordered_set>
#include <vector>

namespace timeboost {

/// Centralized time-boost sequencer.
///
/// Pending transactions sit in a binary max-heap keyed by score (ties by arrival,
/// then id). `emit(now)` releases every transaction whose release time has passed,
/// best score first. Because a transaction arriving after `now` scores strictly
/// below anything released at `now`, emission is final.
///
/// Any number of threads may call `push`; `emit` must be driven by a single consumer.
class PendingQueue
{
public:
  struct Entry
  {
    Transaction tx;
    double      score   = 0.0;
    double      release = 0.0;
  };

  explicit PendingQueue(ScoreParams params = {})
    : params_(params)
  {
    params_.validate();
  }

  ScoreParams const &params() const noexcept
  {
    return params_;
  }

  void push(Transaction tx)
  {
    tx.validate();
    Entry e{std::move(tx), 0.0, 0.0};
    e.score   = score(e.tx, params_);
    e.release = release_time(e.tx, params_);

    std::lock_guard lock(mutex_);
    if (clock_ && e.tx.t < *clock_)
      throw ContractViolation("transaction " + e.tx.id + " arrives before the last emission clock");
    if (!seen_.insert(e.tx.id).second) throw DuplicateTransaction("duplicate transaction id " + e.tx.id);
    max_arrival_ = std::max(max_arrival_, e.tx.t);
    heap_.push_back(std::move(e));
    std::push_heap(heap_.begin(), heap_.end(), Less{&comparisons_});
  }

  /// Releases, in decreasing score order, all pending transactions with release time <= now.
  std::vector<Transaction> emit(Micros now)
  {
    std::lock_guard lock(mutex_);
    if (clock_ && now < *clock_) throw ContractViolation("emission clock moved backwards");
    if (!heap_.empty() && max_arrival_ > now)
      throw ContractViolation("emission clock precedes a pending arrival");
    clock_ = now;

    double const              now_s = to_seconds(now);
    std::vector<Transaction>  out;
    while (!heap_.empty() && heap_.front().release <= now_s)
    {
      std::pop_heap(heap_.begin(), heap_.end(), Less{&comparisons_});
      out.push_back(std::move(heap_.back().tx));
      heap_.pop_back();
    }
    emitted_ += out.size();
    return out;
  }

  /// Releases everything regardless of release time (end of stream).
  std::vector<Transaction> drain()
  {
    std::lock_guard lock(mutex_);
    std::vector<Transaction> out;
    while (!heap_.empty())
    {
      std::pop_heap(heap_.begin(), heap_.end(), Less{&comparisons_});
      out.push_back(std::move(heap_.back().tx));
      heap_.pop_back();
    }
    emitted_ += out.size();
    return out;
  }

  std::size_t size() const
  {
    std::lock_guard lock(mutex_);
    return heap_.size();
  }

  bool empty() const
  {
    return size() == 0;
  }

  std::size_t emitted() const
  {
    std::lock_guard lock(mutex_);
    return emitted_;
  }

  /// Best pending entry, if any.
  std::optional<Entry> peek() const
  {
    std::lock_guard lock(mutex_);
    if (heap_.empty()) return std::nullopt;
    return heap_.front();
  }

  /// Number of key comparisons performed so far.
  std::uint64_t comparisons() const noexcept
  {
    return comparisons_.load(std::memory_order_relaxed);
  }

private:
  // Heap "less": a is below b when b should be emitted first.
  struct Less
  {
    std::atomic<std::uint64_t> *counter;

    bool operator()(Entry const &a, Entry const &b) const
    {
      counter->fetch_add(1, std::memory_order_relaxed);
      if (a.score != b.score) return a.score < b.score;
      if (a.tx.t != b.tx.t) return a.tx.t > b.tx.t;
      return a.tx.id > b.tx.id;
    }
  };

  ScoreParams                     params_;
  mutable std::mutex              mutex_;
  std::vector<Entry>              heap_;
  std::unordered_set<std::string> seen_;
  std::optional<Micros>           clock_;
  Micros                          max_arrival_{std::numeric_limits<Micros::rep>::min()};
  std::size_t                     emitted_ = 0;
  std::atomic<std::uint64_t>      comparisons_{0};
};

}  // namespace timeboost
