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

#include "timeboost/committee/timestamp.hpp"
#include "timeboost/committee/transaction.hpp"

#include <variant>

namespace timeboost::committee {

using Epoch = std::uint64_t;

struct LocalTimestamp
{
  Epoch           epoch = 0;
  SequencerId     id    = 0;
  EncTx           tx;
  TimestampTriple ts;
};

struct DecryptionShare
{
  Epoch        epoch = 0;
  SequencerId  id    = 0;
  Digest       hash{};
  Bytes        share;
  std::int64_t tau_prime_us = 0;
};

struct BlockSignature
{
  Epoch       epoch = 0;
  SequencerId id    = 0;
  Digest      block{};
};

struct BatchSignature
{
  Epoch       epoch = 0;
  SequencerId id    = 0;
  Digest      batch{};
};

/// Force-include at L1 created sequencer block `block`.
struct NewEpoch
{
  std::uint64_t block = 0;
  Digest        txid{};
};

struct Recover
{
  SequencerId   id    = 0;
  std::uint64_t nonce = 0;
};

struct StateHash
{
  SequencerId   recovering = 0;
  std::uint64_t nonce      = 0;
  Digest        digest{};
};

/// Advances the sender's maximum timestamp without a transaction, so that m_i keeps
/// moving while no traffic arrives.
struct Heartbeat
{
  Epoch           epoch = 0;
  SequencerId     id    = 0;
  TimestampTriple ts;
};

using BroadcastMsg = std::variant<LocalTimestamp, DecryptionShare, BlockSignature, BatchSignature, NewEpoch, Recover,
                                  StateHash, Heartbeat>;

/// Wire tags; index + 1 of the variant alternative.
enum class MsgTag : std::uint8_t
{
  LocalTimestamp  = 1,
  DecryptionShare = 2,
  BlockSignature  = 3,
  BatchSignature  = 4,
  NewEpoch        = 5,
  Recover         = 6,
  StateHash       = 7,
  Heartbeat       = 8,
};

inline char const *msg_name(BroadcastMsg const &m)
{
  static char const *names[] = {"local_timestamp", "decryption_share", "block_signature", "batch_signature",
                                "new_epoch",       "recover",          "state_hash",      "heartbeat"};
  return names[m.index()];
}

/// u32 body length || tag || body.
inline Bytes encode_message(BroadcastMsg const &m)
{
  ByteWriter body;
  std::visit(
      [&](auto const &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LocalTimestamp>)
        {
          body.u64(x.epoch).u32(x.id);
          x.tx.encode(body);
          x.ts.encode(body);
        }
        else if constexpr (std::is_same_v<T, DecryptionShare>)
          body.u64(x.epoch).u32(x.id).raw(x.hash).var(x.share).i64(x.tau_prime_us);
        else if constexpr (std::is_same_v<T, BlockSignature>)
          body.u64(x.epoch).u32(x.id).raw(x.block);
        else if constexpr (std::is_same_v<T, BatchSignature>)
          body.u64(x.epoch).u32(x.id).raw(x.batch);
        else if constexpr (std::is_same_v<T, NewEpoch>)
          body.u64(x.block).raw(x.txid);
        else if constexpr (std::is_same_v<T, Recover>)
          body.u32(x.id).u64(x.nonce);
        else if constexpr (std::is_same_v<T, StateHash>)
          body.u32(x.recovering).u64(x.nonce).raw(x.digest);
        else if constexpr (std::is_same_v<T, Heartbeat>)
        {
          body.u64(x.epoch).u32(x.id);
          x.ts.encode(body);
        }
      },
      m);
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(body.bytes().size() + 1)).u8(static_cast<std::uint8_t>(m.index() + 1));
  w.raw(body.bytes());
  return std::move(w).take();
}

inline BroadcastMsg decode_message(ByteView bytes)
{
  ByteReader r(bytes);
  auto       len = r.u32();
  if (len != r.remaining() || len == 0) throw ParseError("message length mismatch");
  auto         tag = static_cast<MsgTag>(r.u8());
  BroadcastMsg out;
  switch (tag)
  {
  case MsgTag::LocalTimestamp: {
    LocalTimestamp x;
    x.epoch = r.u64();
    x.id    = r.u32();
    x.tx    = EncTx::decode(r);
    x.ts    = TimestampTriple::decode(r);
    out     = x;
    break;
  }
  case MsgTag::DecryptionShare: {
    DecryptionShare x;
    x.epoch        = r.u64();
    x.id           = r.u32();
    x.hash         = r.fixed<32>();
    x.share        = r.var();
    x.tau_prime_us = r.i64();
    out            = x;
    break;
  }
  case MsgTag::BlockSignature: {
    BlockSignature x;
    x.epoch = r.u64();
    x.id    = r.u32();
    x.block = r.fixed<32>();
    out     = x;
    break;
  }
  case MsgTag::BatchSignature: {
    BatchSignature x;
    x.epoch = r.u64();
    x.id    = r.u32();
    x.batch = r.fixed<32>();
    out     = x;
    break;
  }
  case MsgTag::NewEpoch: {
    NewEpoch x;
    x.block = r.u64();
    x.txid  = r.fixed<32>();
    out     = x;
    break;
  }
  case MsgTag::Recover: {
    Recover x;
    x.id    = r.u32();
    x.nonce = r.u64();
    out     = x;
    break;
  }
  case MsgTag::StateHash: {
    StateHash x;
    x.recovering = r.u32();
    x.nonce      = r.u64();
    x.digest     = r.fixed<32>();
    out          = x;
    break;
  }
  case MsgTag::Heartbeat: {
    Heartbeat x;
    x.epoch = r.u64();
    x.id    = r.u32();
    x.ts    = TimestampTriple::decode(r);
    out     = x;
    break;
  }
  default:
    throw ParseError("unknown message tag " + std::to_string(static_cast<int>(tag)));
  }
  if (!r.done()) throw ParseError("trailing bytes in message");
  return out;
}

}  // namespace timeboost::committee
