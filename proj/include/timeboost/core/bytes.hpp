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

#include "timeboost/core/errors.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace timeboost {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<std::uint8_t const>;

inline std::string to_hex(ByteView bytes)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes)
  {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

inline Bytes from_hex(std::string_view hex)
{
  auto nibble = [](char ch) -> int {
    if (ch >= '0' && ch <= '9') return ch - '0';
    if (ch >= 'a' && ch <= 'f') return ch - 'a' + 10;
    if (ch >= 'A' && ch <= 'F') return ch - 'A' + 10;
    return -1;
  };
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  if (hex.size() % 2 != 0) throw ParseError("hex string has odd length");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2)
  {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw ParseError("invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

inline Bytes to_bytes(std::string_view s)
{
  return Bytes(s.begin(), s.end());
}

/// Appends fixed-width big-endian integers and length-prefixed fields.
class ByteWriter
{
public:
  ByteWriter &u8(std::uint8_t v)
  {
    buf_.push_back(v);
    return *this;
  }

  ByteWriter &u32(std::uint32_t v)
  {
    for (int shift = 24; shift >= 0; shift -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
  }

  ByteWriter &u64(std::uint64_t v)
  {
    for (int shift = 56; shift >= 0; shift -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
  }

  ByteWriter &i64(std::int64_t v)
  {
    return u64(static_cast<std::uint64_t>(v));
  }

  ByteWriter &raw(ByteView bytes)
  {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    return *this;
  }

  template <std::size_t N>
  ByteWriter &raw(std::array<std::uint8_t, N> const &bytes)
  {
    return raw(ByteView{bytes});
  }

  /// u32 length followed by the bytes.
  ByteWriter &var(ByteView bytes)
  {
    u32(static_cast<std::uint32_t>(bytes.size()));
    return raw(bytes);
  }

  ByteWriter &str(std::string_view s)
  {
    return var(ByteView{reinterpret_cast<std::uint8_t const *>(s.data()), s.size()});
  }

  Bytes const &bytes() const &
  {
    return buf_;
  }

  Bytes take() &&
  {
    return std::move(buf_);
  }

private:
  Bytes buf_;
};

/// Cursor over a byte buffer; every read is bounds checked.
class ByteReader
{
public:
  explicit ByteReader(ByteView data)
    : data_(data)
  {}

  std::uint8_t u8()
  {
    need(1);
    return data_[pos_++];
  }

  std::uint32_t u32()
  {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }

  std::uint64_t u64()
  {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }

  std::int64_t i64()
  {
    return static_cast<std::int64_t>(u64());
  }

  Bytes raw(std::size_t n)
  {
    need(n);
    Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
              data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  template <std::size_t N>
  std::array<std::uint8_t, N> fixed()
  {
    need(N);
    std::array<std::uint8_t, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = data_[pos_++];
    return out;
  }

  Bytes var()
  {
    return raw(u32());
  }

  std::string str()
  {
    auto b = var();
    return std::string(b.begin(), b.end());
  }

  bool done() const noexcept
  {
    return pos_ == data_.size();
  }

  std::size_t remaining() const noexcept
  {
    return data_.size() - pos_;
  }

private:
  void need(std::size_t n) const
  {
    if (data_.size() - pos_ < n) throw ParseError("truncated record");
  }

  ByteView    data_;
  std::size_t pos_ = 0;
};

}  // namespace timeboost
