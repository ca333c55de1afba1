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
#include <vector>

namespace timeboost::committee {

/// RFC 6962 hashing: leaves and interior nodes are domain separated.
inline Digest merkle_leaf(ByteView data)
{
  return Hasher().update(std::uint8_t{0x00}).update(data).finish();
}

inline Digest merkle_node(Digest const &left, Digest const &right)
{
  return Hasher().update(std::uint8_t{0x01}).update(left).update(right).finish();
}

inline Digest merkle_empty_root()
{
  return sha256({});
}

/// Peaks of the perfect subtrees covering the leaves so far; O(log n) space,
/// amortized O(1) hashing per append.
class MerkleAccumulator
{
public:
  struct Peak
  {
    std::uint32_t height = 0;
    Digest        hash{};
  };

  void append(Digest const &leaf_hash)
  {
    peaks_.push_back({0, leaf_hash});
    while (peaks_.size() >= 2 && peaks_[peaks_.size() - 1].height == peaks_[peaks_.size() - 2].height)
    {
      auto right = peaks_.back();
      peaks_.pop_back();
      auto &left = peaks_.back();
      left.hash  = merkle_node(left.hash, right.hash);
      ++left.height;
    }
    ++size_;
  }

  std::uint64_t size() const noexcept
  {
    return size_;
  }

  Digest root() const
  {
    if (peaks_.empty()) return merkle_empty_root();
    Digest acc = peaks_.back().hash;
    for (auto it = peaks_.rbegin() + 1; it != peaks_.rend(); ++it) acc = merkle_node(it->hash, acc);
    return acc;
  }

  std::vector<Peak> const &peaks() const noexcept
  {
    return peaks_;
  }

  void encode(ByteWriter &w) const
  {
    w.u64(size_).u32(static_cast<std::uint32_t>(peaks_.size()));
    for (auto const &p : peaks_) w.u32(p.height).raw(p.hash);
  }

  static MerkleAccumulator decode(ByteReader &r)
  {
    MerkleAccumulator acc;
    acc.size_ = r.u64();
    auto n    = r.u32();
    for (std::uint32_t i = 0; i < n; ++i)
    {
      Peak p;
      p.height = r.u32();
      p.hash   = r.fixed<32>();
      acc.peaks_.push_back(p);
    }
    std::uint64_t total = 0;
    for (auto const &p : acc.peaks_) total += std::uint64_t{1} << p.height;
    if (total != acc.size_) throw ParseError("accumulator peaks do not cover its size");
    return acc;
  }

private:
  std::vector<Peak> peaks_;
  std::uint64_t     size_ = 0;
};

/// All leaf hashes; answers inclusion and consistency proofs for any prefix size.
class MerkleTree
{
public:
  void append(Digest const &leaf_hash)
  {
    leaves_.push_back(leaf_hash);
  }

  void truncate(std::size_t n)
  {
    if (n < leaves_.size()) leaves_.resize(n);
  }

  std::size_t size() const noexcept
  {
    return leaves_.size();
  }

  Digest const &leaf(std::size_t i) const
  {
    return leaves_.at(i);
  }

  Digest root() const
  {
    return root(leaves_.size());
  }

  Digest root(std::size_t n) const
  {
    if (n > leaves_.size()) throw InvalidInput("tree size beyond leaf count");
    if (n == 0) return merkle_empty_root();
    return subtree(0, n);
  }

  /// Audit path for leaf `index` in the tree of the first `n` leaves.
  std::vector<Digest> prove(std::size_t index, std::size_t n) const
  {
    if (n > leaves_.size() || index >= n) throw InvalidInput("leaf index outside tree");
    std::vector<Digest> path;
    path_rec(index, 0, n, path);
    return path;
  }

  std::vector<Digest> prove(std::size_t index) const
  {
    return prove(index, leaves_.size());
  }

  /// Proof that the tree of the first m leaves is a prefix of the tree of the first n.
  std::vector<Digest> prove_consistency(std::size_t m, std::size_t n) const
  {
    if (n > leaves_.size() || m > n) throw InvalidInput("consistency sizes out of range");
    std::vector<Digest> proof;
    if (m == 0 || m == n) return proof;
    subproof(m, 0, n, true, proof);
    return proof;
  }

private:
  static std::size_t split(std::size_t n)
  {
    return std::bit_floor(n - 1);
  }

  Digest subtree(std::size_t lo, std::size_t hi) const
  {
    if (hi - lo == 1) return leaves_[lo];
    std::size_t k = split(hi - lo);
    return merkle_node(subtree(lo, lo + k), subtree(lo + k, hi));
  }

  void path_rec(std::size_t m, std::size_t lo, std::size_t hi, std::vector<Digest> &out) const
  {
    if (hi - lo <= 1) return;
    std::size_t k = split(hi - lo);
    if (m < k)
    {
      path_rec(m, lo, lo + k, out);
      out.push_back(subtree(lo + k, hi));
    }
    else
    {
      path_rec(m - k, lo + k, hi, out);
      out.push_back(subtree(lo, lo + k));
    }
  }

  void subproof(std::size_t m, std::size_t lo, std::size_t hi, bool whole, std::vector<Digest> &out) const
  {
    std::size_t n = hi - lo;
    if (m == n)
    {
      if (!whole) out.push_back(subtree(lo, hi));
      return;
    }
    std::size_t k = split(n);
    if (m <= k)
    {
      subproof(m, lo, lo + k, whole, out);
      out.push_back(subtree(lo + k, hi));
    }
    else
    {
      subproof(m - k, lo + k, hi, false, out);
      out.push_back(subtree(lo, lo + k));
    }
  }

  std::vector<Digest> leaves_;
};

/// Checks an audit path produced by MerkleTree::prove.
inline bool merkle_verify(Digest const &leaf_hash, std::size_t index, std::size_t n, std::vector<Digest> const &path,
                          Digest const &root)
{
  if (index >= n) return false;
  std::size_t fn = index, sn = n - 1;
  Digest      r  = leaf_hash;
  for (auto const &p : path)
  {
    if (sn == 0) return false;
    if ((fn & 1) || fn == sn)
    {
      r = merkle_node(p, r);
      if (!(fn & 1))
        while (!(fn & 1) && fn != 0)
        {
          fn >>= 1;
          sn >>= 1;
        }
    }
    else
      r = merkle_node(r, p);
    fn >>= 1;
    sn >>= 1;
  }
  return sn == 0 && r == root;
}

/// Checks that `root_m` (m leaves) commits to a prefix of `root_n` (n leaves).
inline bool merkle_verify_prefix(std::size_t m, Digest const &root_m, std::size_t n, Digest const &root_n,
                                 std::vector<Digest> const &proof)
{
  if (m > n) return false;
  if (m == n) return proof.empty() && root_m == root_n;
  if (m == 0) return proof.empty() && root_m == merkle_empty_root();
  std::vector<Digest> path = proof;
  if (std::has_single_bit(m)) path.insert(path.begin(), root_m);
  if (path.empty()) return false;
  std::size_t fn = m - 1, sn = n - 1;
  while (fn & 1)
  {
    fn >>= 1;
    sn >>= 1;
  }
  Digest fr = path[0], sr = path[0];
  for (std::size_t i = 1; i < path.size(); ++i)
  {
    auto const &c = path[i];
    if (sn == 0) return false;
    if ((fn & 1) || fn == sn)
    {
      fr = merkle_node(c, fr);
      sr = merkle_node(c, sr);
      if (!(fn & 1))
        while (!(fn & 1) && fn != 0)
        {
          fn >>= 1;
          sn >>= 1;
        }
    }
    else
      sr = merkle_node(sr, c);
    fn >>= 1;
    sn >>= 1;
  }
  return fr == root_m && sr == root_n && sn == 0;
}

}  // namespace timeboost::committee
