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

#include "timeboost/committee/digest.hpp"

#include <bit>
#include <cmath>
#include <optional>

namespace timeboost::committee {

/// Ciphertext scheme tag, first byte of every ciphertext.
enum class Scheme : std::uint8_t
{
  Identity  = 0,  ///< delayed-inbox message: 0x00 || u64 inbox index || message
  Threshold = 1,
};

/// A transaction as submitted: Enc(T), the declared priority fee P and H = Hash(Enc(T) || P).
struct EncTx
{
  Bytes  ciphertext;
  double fee  = 0.0;
  Digest hash{};

  static Digest compute_hash(ByteView ciphertext, double fee)
  {
    ByteWriter w;
    w.raw(ciphertext).u64(std::bit_cast<std::uint64_t>(fee));
    return sha256(w.bytes());
  }

  static EncTx make(Bytes ciphertext, double fee)
  {
    if (!(fee >= 0.0) || !std::isfinite(fee)) throw InvalidInput("priority fee must be finite and >= 0");
    EncTx e{std::move(ciphertext), fee, {}};
    e.hash = compute_hash(e.ciphertext, e.fee);
    return e;
  }

  Scheme scheme() const
  {
    if (ciphertext.empty() || ciphertext[0] > 1) throw ParseError("unknown ciphertext scheme");
    return static_cast<Scheme>(ciphertext[0]);
  }

  bool is_delayed() const
  {
    return !ciphertext.empty() && ciphertext[0] == static_cast<std::uint8_t>(Scheme::Identity);
  }

  /// Inbox index of a delayed-inbox message.
  std::uint64_t delayed_index() const
  {
    ByteReader r(ciphertext);
    if (r.u8() != 0) throw ContractViolation("not a delayed-inbox transaction");
    return r.u64();
  }

  void encode(ByteWriter &w) const
  {
    w.var(ciphertext).u64(std::bit_cast<std::uint64_t>(fee));
  }

  /// H is recomputed, never trusted from the wire.
  static EncTx decode(ByteReader &r)
  {
    EncTx e;
    e.ciphertext = r.var();
    e.fee        = std::bit_cast<double>(r.u64());
    if (!(e.fee >= 0.0) || !std::isfinite(e.fee)) throw ParseError("priority fee out of range");
    e.hash = compute_hash(e.ciphertext, e.fee);
    return e;
  }

  bool operator==(EncTx const &o) const
  {
    return hash == o.hash;
  }
};

/// Wraps an L1 delayed-inbox message; such transactions are unencrypted and carry P = 0.
inline EncTx delayed_tx(std::uint64_t index, ByteView message)
{
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(Scheme::Identity)).u64(index).raw(message);
  return EncTx::make(std::move(w).take(), 0.0);
}

/// Message bytes of a delayed-inbox ciphertext (decryption is a no-op).
inline Bytes delayed_message(EncTx const &tx)
{
  return Bytes(tx.ciphertext.begin() + 9, tx.ciphertext.end());
}

/// User transaction plaintext: "TB" || version 1 || fee (f64 bits) || var payload || 8-byte tag.
/// The tag stands in for the user's signature: the first 8 bytes of SHA-256 over the rest.
struct UserTx
{
  double fee = 0.0;
  Bytes  payload;

  Bytes encode() const
  {
    ByteWriter w;
    w.u8('T').u8('B').u8(1).u64(std::bit_cast<std::uint64_t>(fee)).var(payload);
    auto tag = sha256(w.bytes());
    w.raw(ByteView{tag.data(), 8});
    return std::move(w).take();
  }
};

enum class Validation
{
  Ok,
  Malformed,
  BadSignature,
  FeeMismatch,
};

inline char const *to_string(Validation v)
{
  switch (v)
  {
  case Validation::Ok:
    return "ok";
  case Validation::Malformed:
    return "malformed";
  case Validation::BadSignature:
    return "bad_signature";
  case Validation::FeeMismatch:
    return "fee_mismatch";
  }
  return "?";
}

/// Checks that a decrypted user transaction is well formed, signed and declares fee `p`.
inline Validation validate_plaintext(ByteView plaintext, double p)
{
  if (plaintext.size() < 3 + 8 + 4 + 8) return Validation::Malformed;
  try
  {
    ByteReader r(plaintext);
    if (r.u8() != 'T' || r.u8() != 'B' || r.u8() != 1) return Validation::Malformed;
    double fee = std::bit_cast<double>(r.u64());
    r.var();
    if (r.remaining() != 8) return Validation::Malformed;
    auto body = plaintext.first(plaintext.size() - 8);
    auto tag  = sha256(body);
    if (!std::equal(tag.begin(), tag.begin() + 8, plaintext.end() - 8)) return Validation::BadSignature;
    if (!(fee == p)) return Validation::FeeMismatch;
    return Validation::Ok;
  }
  catch (ParseError const &)
  {
    return Validation::Malformed;
  }
}

}  // namespace timeboost::committee
