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

#include "timeboost/committee/block.hpp"

#include <optional>

namespace timeboost::committee {

struct BatchHeader
{
  std::uint64_t block_number  = 0;
  Digest        merkle_hash{};
  std::uint64_t delayed_count = 0;
  std::uint64_t timestamp     = 0;

  void encode(ByteWriter &w) const
  {
    w.u64(block_number).raw(merkle_hash).u64(delayed_count).u64(timestamp);
  }

  static BatchHeader decode(ByteReader &r)
  {
    BatchHeader h;
    h.block_number  = r.u64();
    h.merkle_hash   = r.fixed<32>();
    h.delayed_count = r.u64();
    h.timestamp     = r.u64();
    return h;
  }

  bool operator==(BatchHeader const &) const = default;
};

/// Header of the last block in the batch plus the compressed serialized blocks.
struct Batch
{
  BatchHeader header;
  Bytes       body;
  std::uint64_t blocks = 0;

  Digest digest() const
  {
    ByteWriter w;
    header.encode(w);
    w.var(body);
    return Hasher().update("tb-batch").update(w.bytes()).finish();
  }

  void encode(ByteWriter &w) const
  {
    header.encode(w);
    w.var(body).u64(blocks);
  }

  static Batch decode(ByteReader &r)
  {
    Batch b;
    b.header = BatchHeader::decode(r);
    b.body   = r.var();
    b.blocks = r.u64();
    return b;
  }

  bool operator==(Batch const &) const = default;
};

struct BatchLimits
{
  std::int64_t window_us = 60'000'000;  ///< close when a block's adjusted timestamp is this far past the first
  std::size_t  max_bytes = 64 * 1024;   ///< compressed body limit
};

/// In-progress batch. Deterministic given the block stream, so every honest sequencer
/// closes the same batches.
class BatchBuilder
{
public:
  /// Adds `block`; returns the batch it closed, if adding it closed one.
  std::optional<Batch> step(SequencerBlock const &block, std::int64_t tau_prime_us, std::uint64_t prev_delayed_count,
                            BatchLimits const &limits)
  {
    Bytes entry = serialize_block(block, prev_delayed_count);
    std::optional<Batch> closed;
    if (count_ > 0)
    {
      bool too_late = tau_prime_us - first_tau_prime_ > limits.window_us;
      bool too_big  = false;
      if (!too_late)
      {
        Bytes trial = raw_;
        trial.insert(trial.end(), entry.begin(), entry.end());
        too_big = compress(trial).size() > limits.max_bytes;
      }
      if (too_late || too_big) closed = flush();
    }
    if (count_ == 0) first_tau_prime_ = tau_prime_us;
    raw_.insert(raw_.end(), entry.begin(), entry.end());
    ++count_;
    last_.block_number  = block.height;
    last_.merkle_hash   = block.merkle_root;
    last_.delayed_count = block.delayed_count;
    last_.timestamp     = block.timestamp;
    return closed;
  }

  std::optional<Batch> flush()
  {
    if (count_ == 0) return std::nullopt;
    Batch b{last_, compress(raw_), count_};
    reset();
    return b;
  }

  void reset()
  {
    raw_.clear();
    count_           = 0;
    first_tau_prime_ = 0;
    last_            = {};
  }

  std::uint64_t size() const noexcept
  {
    return count_;
  }

  std::int64_t first_tau_prime() const noexcept
  {
    return first_tau_prime_;
  }

  void encode(ByteWriter &w) const
  {
    w.var(raw_).u64(count_).i64(first_tau_prime_);
    last_.encode(w);
  }

  static BatchBuilder decode(ByteReader &r)
  {
    BatchBuilder b;
    b.raw_             = r.var();
    b.count_           = r.u64();
    b.first_tau_prime_ = r.i64();
    b.last_            = BatchHeader::decode(r);
    return b;
  }

private:
  Bytes         raw_;
  std::uint64_t count_           = 0;
  std::int64_t  first_tau_prime_ = 0;
  BatchHeader   last_;
};

}  // namespace timeboost::committee
