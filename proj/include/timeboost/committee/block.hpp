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

#include "timeboost/committee/merkle.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace timeboost::committee {

/// One block of the sequencer chain; exactly one transaction. Genesis (height 0) is implicit
/// and carries no leaf, so leaf i of the Merkle tree is the block at height i + 1.
struct SequencerBlock
{
  std::uint64_t height        = 0;
  std::uint64_t delayed_count = 0;  ///< delayed-inbox messages consumed up to and including this block
  Bytes         tx;
  std::uint64_t timestamp     = 0;  ///< whole seconds
  Digest        merkle_root{};

  /// Bytes committed to by the Merkle leaf.
  Bytes leaf_data() const
  {
    ByteWriter w;
    w.u64(height).u64(delayed_count).var(tx).u64(timestamp);
    return std::move(w).take();
  }

  Digest leaf_hash() const
  {
    return merkle_leaf(leaf_data());
  }

  void encode(ByteWriter &w) const
  {
    w.u64(height).u64(delayed_count).var(tx).u64(timestamp).raw(merkle_root);
  }

  static SequencerBlock decode(ByteReader &r)
  {
    SequencerBlock b;
    b.height        = r.u64();
    b.delayed_count = r.u64();
    b.tx            = r.var();
    b.timestamp     = r.u64();
    b.merkle_root   = r.fixed<32>();
    return b;
  }

  /// What sequencers sign.
  Digest digest() const
  {
    ByteWriter w;
    encode(w);
    return Hasher().update("tb-block").update(w.bytes()).finish();
  }

  bool operator==(SequencerBlock const &) const = default;
};

/// One block in a batch body.
struct SerializedEntry
{
  bool          delayed       = false;
  std::uint64_t timestamp     = 0;
  std::uint64_t delayed_index = 0;  ///< delayed entries only
  Bytes         tx;                 ///< normal entries only

  bool operator==(SerializedEntry const &) const = default;
};

/// 0x00 || ts || u64 index for a block that consumes the next delayed message,
/// 0x01 || ts || u32 size || tx otherwise. Integers are big-endian, ts is 8 bytes.
inline void serialize_block(ByteWriter &w, SequencerBlock const &block, std::uint64_t prev_delayed_count)
{
  if (block.delayed_count == prev_delayed_count + 1)
  {
    w.u8(0).u64(block.timestamp).u64(block.delayed_count - 1);
    return;
  }
  if (block.delayed_count != prev_delayed_count)
    throw ContractViolation("delayed count must grow by at most one per block");
  if (block.tx.size() > 0xffffffffu) throw ContractViolation("transaction too large to serialize");
  w.u8(1).u64(block.timestamp).u32(static_cast<std::uint32_t>(block.tx.size())).raw(block.tx);
}

inline Bytes serialize_block(SequencerBlock const &block, std::uint64_t prev_delayed_count)
{
  ByteWriter w;
  serialize_block(w, block, prev_delayed_count);
  return std::move(w).take();
}

inline Bytes serialize_entry(SerializedEntry const &e)
{
  ByteWriter w;
  if (e.delayed) w.u8(0).u64(e.timestamp).u64(e.delayed_index);
  else w.u8(1).u64(e.timestamp).u32(static_cast<std::uint32_t>(e.tx.size())).raw(e.tx);
  return std::move(w).take();
}

inline SerializedEntry read_entry(ByteReader &r)
{
  SerializedEntry e;
  auto            kind = r.u8();
  if (kind > 1) throw ParseError("unknown block kind " + std::to_string(kind));
  e.delayed   = kind == 0;
  e.timestamp = r.u64();
  if (e.delayed) e.delayed_index = r.u64();
  else e.tx = r.var();
  return e;
}

inline std::vector<SerializedEntry> deserialize_blocks(ByteView bytes)
{
  std::vector<SerializedEntry> out;
  ByteReader                   r(bytes);
  while (!r.done()) out.push_back(read_entry(r));
  return out;
}

/// Rebuilds full blocks from serialized entries, continuing a chain of `tree.size()` blocks
/// with `delayed_count` consumed messages. `inbox(i)` returns delayed message i.
inline std::vector<SequencerBlock> reconstruct_blocks(std::vector<SerializedEntry> const &entries, MerkleTree &tree,
                                                      std::uint64_t                               delayed_count,
                                                      std::function<Bytes(std::uint64_t)> const &inbox)
{
  std::vector<SequencerBlock> out;
  for (auto const &e : entries)
  {
    SequencerBlock b;
    b.height    = tree.size() + 1;
    b.timestamp = e.timestamp;
    if (e.delayed)
    {
      if (e.delayed_index != delayed_count) throw ParseError("delayed entries must consume the inbox in order");
      b.tx            = inbox(e.delayed_index);
      b.delayed_count = ++delayed_count;
    }
    else
    {
      b.tx            = e.tx;
      b.delayed_count = delayed_count;
    }
    tree.append(b.leaf_hash());
    b.merkle_root = tree.root();
    out.push_back(std::move(b));
  }
  return out;
}

/// Deterministic PackBits-style run-length coder. A header h < 128 introduces h + 1 literal
/// bytes; h > 128 repeats the next byte 257 - h times; 128 never appears.
inline Bytes compress(ByteView in)
{
  Bytes       out;
  std::size_t i = 0;
  while (i < in.size())
  {
    std::size_t run = 1;
    while (i + run < in.size() && run < 128 && in[i + run] == in[i]) ++run;
    if (run >= 3)
    {
      out.push_back(static_cast<std::uint8_t>(257 - run));
      out.push_back(in[i]);
      i += run;
      continue;
    }
    std::size_t start = i, len = 0;
    while (i < in.size() && len < 128)
    {
      if (i + 2 < in.size() && in[i] == in[i + 1] && in[i] == in[i + 2]) break;
      ++i;
      ++len;
    }
    out.push_back(static_cast<std::uint8_t>(len - 1));
    out.insert(out.end(), in.begin() + static_cast<std::ptrdiff_t>(start), in.begin() + static_cast<std::ptrdiff_t>(i));
  }
  return out;
}

inline Bytes decompress(ByteView in)
{
  Bytes       out;
  std::size_t i = 0;
  while (i < in.size())
  {
    std::uint8_t h = in[i++];
    if (h < 128)
    {
      std::size_t n = std::size_t{h} + 1;
      if (in.size() - i < n) throw ParseError("truncated literal run");
      out.insert(out.end(), in.begin() + static_cast<std::ptrdiff_t>(i), in.begin() + static_cast<std::ptrdiff_t>(i + n));
      i += n;
    }
    else if (h > 128)
    {
      if (i >= in.size()) throw ParseError("truncated repeat run");
      out.insert(out.end(), std::size_t{257} - h, in[i++]);
    }
    else
      throw ParseError("invalid run header");
  }
  return out;
}

}  // namespace timeboost::committee
