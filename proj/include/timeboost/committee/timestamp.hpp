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

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace timeboost::committee {

using SequencerId = std::uint32_t;

/// (t, id, seq), totally ordered lexicographically. t is milliseconds.
struct TimestampTriple
{
  std::int64_t t   = 0;
  SequencerId  id  = 0;
  std::uint64_t seq = 0;

  auto operator<=>(TimestampTriple const &) const = default;

  void encode(ByteWriter &w) const
  {
    w.i64(t).u32(id).u64(seq);
  }

  static TimestampTriple decode(ByteReader &r)
  {
    TimestampTriple ts;
    ts.t   = r.i64();
    ts.id  = r.u32();
    ts.seq = r.u64();
    return ts;
  }

  std::string str() const
  {
    return "(" + std::to_string(t) + "," + std::to_string(id) + "," + std::to_string(seq) + ")";
  }
};

/// Issues strictly increasing triples for one sequencer.
class LocalClock
{
public:
  explicit LocalClock(SequencerId id)
    : id_(id)
  {}

  /// Next triple at local time `now_ms`. Same millisecond bumps seq.
  TimestampTriple issue(std::int64_t now_ms)
  {
    if (last_ && now_ms < last_->t)
      throw ContractViolation("clock regression: " + std::to_string(now_ms) + " < " + std::to_string(last_->t));
    TimestampTriple next{now_ms, id_, 0};
    if (last_ && now_ms == last_->t) next.seq = last_->seq + 1;
    last_ = next;
    return next;
  }

  /// Fixed time, increasing seq: what a sequencer that never advances its clock emits.
  TimestampTriple issue_frozen(std::int64_t t_ms)
  {
    TimestampTriple next{t_ms, id_, 0};
    if (last_) next = TimestampTriple{std::max(t_ms, last_->t), id_, last_->seq + 1};
    last_ = next;
    return next;
  }

  std::optional<TimestampTriple> const &last() const noexcept
  {
    return last_;
  }

  SequencerId id() const noexcept
  {
    return id_;
  }

private:
  SequencerId                    id_;
  std::optional<TimestampTriple> last_;
};

}  // namespace timeboost::committee
