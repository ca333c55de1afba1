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

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <string>

namespace timeboost::committee {

using Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256.
class Hasher
{
public:
  Hasher()
    : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free)
  {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256 init failed");
  }

  Hasher &update(ByteView data)
  {
    if (!data.empty()) EVP_DigestUpdate(ctx_.get(), data.data(), data.size());
    return *this;
  }

  Hasher &update(std::uint8_t byte)
  {
    return update(ByteView{&byte, 1});
  }

  Hasher &update(Digest const &d)
  {
    return update(ByteView{d});
  }

  Hasher &update(std::string_view s)
  {
    return update(ByteView{reinterpret_cast<std::uint8_t const *>(s.data()), s.size()});
  }

  Digest finish()
  {
    Digest       out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), out.data(), &len);
    return out;
  }

private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline Digest sha256(ByteView data)
{
  return Hasher().update(data).finish();
}

inline std::string to_hex(Digest const &d)
{
  return timeboost::to_hex(ByteView{d});
}

inline Digest digest_from_hex(std::string_view hex)
{
  auto bytes = from_hex(hex);
  if (bytes.size() != 32) throw ParseError("digest must be 32 bytes");
  Digest d{};
  std::copy(bytes.begin(), bytes.end(), d.begin());
  return d;
}

}  // namespace timeboost::committee
