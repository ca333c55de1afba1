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

#include <map>
#include <optional>

namespace timeboost::committee {

/// Threshold encryption contract: F+1 valid shares from distinct sequencers decrypt.
class ThresholdScheme
{
public:
  virtual ~ThresholdScheme() = default;

  virtual Bytes                encrypt(ByteView plaintext) const                                         = 0;
  virtual Bytes                share(SequencerId id, EncTx const &tx) const                              = 0;
  virtual bool                 verify_share(SequencerId id, EncTx const &tx, ByteView share) const       = 0;
  virtual std::optional<Bytes> combine(EncTx const &tx, std::map<SequencerId, Bytes> const &shares) const = 0;
  virtual std::size_t          threshold() const noexcept                                                = 0;
};

/// Stand-in scheme with no secrecy: the ciphertext carries the plaintext followed by an
/// 8-byte marker, and a share is a keyed tag that only the quorum rule gives meaning to.
class MockThreshold final : public ThresholdScheme
{
public:
  explicit MockThreshold(std::size_t f)
    : threshold_(f + 1)
  {}

  Bytes encrypt(ByteView plaintext) const override
  {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(Scheme::Threshold)).raw(plaintext);
    auto m = marker(plaintext);
    w.raw(ByteView{m.data(), 8});
    return std::move(w).take();
  }

  Bytes share(SequencerId id, EncTx const &tx) const override
  {
    auto tag = Hasher().update("tb-share").update(ByteView{id_bytes(id)}).update(tx.hash).finish();
    return Bytes(tag.begin(), tag.end());
  }

  bool verify_share(SequencerId id, EncTx const &tx, ByteView s) const override
  {
    auto expect = share(id, tx);
    return s.size() == expect.size() && std::equal(s.begin(), s.end(), expect.begin());
  }

  std::optional<Bytes> combine(EncTx const &tx, std::map<SequencerId, Bytes> const &shares) const override
  {
    std::size_t valid = 0;
    for (auto const &[id, s] : shares) valid += verify_share(id, tx, s) ? 1 : 0;
    if (valid < threshold_) return std::nullopt;
    ByteView c = tx.ciphertext;
    if (c.size() < 9 || c[0] != static_cast<std::uint8_t>(Scheme::Threshold)) return Bytes{};
    auto plain = c.subspan(1, c.size() - 9);
    auto m     = marker(plain);
    // a ciphertext that was not produced by encrypt() decrypts to garbage
    if (!std::equal(m.begin(), m.begin() + 8, c.end() - 8)) return Bytes{};
    return Bytes(plain.begin(), plain.end());
  }

  std::size_t threshold() const noexcept override
  {
    return threshold_;
  }

private:
  static Digest marker(ByteView plaintext)
  {
    return Hasher().update("tb-enc").update(plaintext).finish();
  }

  static std::array<std::uint8_t, 4> id_bytes(SequencerId id)
  {
    return {static_cast<std::uint8_t>(id >> 24), static_cast<std::uint8_t>(id >> 16),
            static_cast<std::uint8_t>(id >> 8), static_cast<std::uint8_t>(id)};
  }

  std::size_t threshold_;
};

/// Encrypts a user transaction and attaches the declared fee.
inline EncTx submit(ByteView plaintext, double declared_fee, ThresholdScheme const &scheme)
{
  return EncTx::make(scheme.encrypt(plaintext), declared_fee);
}

}  // namespace timeboost::committee
