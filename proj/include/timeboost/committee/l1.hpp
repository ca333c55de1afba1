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

#include "timeboost/committee/batch.hpp"
#include "timeboost/committee/timestamp.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace timeboost::committee {

/// Block created by an L1 force-include transaction.
struct ForcedInclude
{
  Digest         txid{};
  SequencerBlock block;
  std::uint64_t  delayed_index = 0;
  std::int64_t   l1_time_us    = 0;
};

/// What a sequencer may ask of L1 while applying broadcasts. Answers never change once
/// given, so every replica sees the same result regardless of when it asks.
class L1View
{
public:
  virtual ~L1View() = default;

  virtual std::optional<Bytes>         delayed_message(std::uint64_t index) const              = 0;
  virtual std::optional<ForcedInclude> verify_force_include(Digest const &txid, std::uint64_t block) const = 0;
};

struct PostResult
{
  bool        accepted = false;
  std::string reason;
};

/// In-memory L1: delayed inbox, batch posting and force-includes.
class L1Stub final : public L1View
{
public:
  struct DelayedEntry
  {
    Bytes                       message;
    std::int64_t                enqueued_us = 0;
    std::optional<std::int64_t> final_us;
  };

  L1Stub(std::size_t f, std::int64_t force_threshold_us)
    : f_(f)
    , force_threshold_us_(force_threshold_us)
  {}

  std::uint64_t enqueue_delayed(Bytes message, std::int64_t now_us)
  {
    inbox_.push_back({std::move(message), now_us, std::nullopt});
    return inbox_.size() - 1;
  }

  /// Marks enqueued messages below `upto` final; returns the indices that became final.
  std::vector<std::uint64_t> finalize(std::int64_t now_us, std::uint64_t upto = UINT64_MAX)
  {
    std::vector<std::uint64_t> out;
    for (std::uint64_t i = 0; i < std::min<std::uint64_t>(upto, inbox_.size()); ++i)
      if (!inbox_[i].final_us)
      {
        inbox_[i].final_us = now_us;
        out.push_back(i);
      }
    return out;
  }

  std::optional<Bytes> delayed_message(std::uint64_t index) const override
  {
    if (index >= inbox_.size()) return std::nullopt;
    return inbox_[index].message;
  }

  std::vector<DelayedEntry> const &inbox() const noexcept
  {
    return inbox_;
  }

  /// Accepts a batch signed by F+1 distinct sequencers whose header moves forward and whose
  /// body extends the canonical chain to exactly that header.
  PostResult post_batch(Batch const &batch, std::set<SequencerId> const &signers, std::int64_t now_us)
  {
    if (signers.size() < f_ + 1) return reject("batch carries fewer than F+1 signatures");
    if (batch.header.block_number <= last_.block_number)
      return reject("block number not above the last posted header");
    if (batch.header.delayed_count < last_.delayed_count) return reject("delayed count below the last posted header");

    std::vector<SequencerBlock> blocks;
    try
    {
      auto       entries = deserialize_blocks(decompress(batch.body));
      MerkleTree trial   = tree_;
      blocks             = reconstruct_blocks(entries, trial, last_.delayed_count, [this](std::uint64_t i) {
        auto m = delayed_message(i);
        if (!m) throw ParseError("batch consumes an unknown delayed message");
        return *m;
      });
    }
    catch (std::exception const &e)
    {
      return reject(std::string("undecodable batch: ") + e.what());
    }
    if (blocks.empty()) return reject("empty batch");
    auto const &tip = blocks.back();
    if (tip.height != batch.header.block_number || tip.merkle_root != batch.header.merkle_hash ||
        tip.delayed_count != batch.header.delayed_count || tip.timestamp != batch.header.timestamp)
      return reject("batch does not extend the canonical chain");

    for (auto &b : blocks)
    {
      tree_.append(b.leaf_hash());
      canonical_.push_back(std::move(b));
    }
    last_ = batch.header;
    posted_.push_back({batch, now_us});
    return {true, ""};
  }

  /// Creates a block for the next unconsumed delayed message once it is older than the threshold.
  std::optional<ForcedInclude> force_include(std::uint64_t index, std::int64_t now_us, std::string *why = nullptr)
  {
    auto fail = [&](std::string msg) -> std::optional<ForcedInclude> {
      if (why) *why = std::move(msg);
      return std::nullopt;
    };
    if (index >= inbox_.size()) return fail("no such delayed message");
    if (index != last_.delayed_count) return fail("only the next unconsumed delayed message can be forced");
    if (now_us - inbox_[index].enqueued_us <= force_threshold_us_) return fail("delayed message is too young");

    ForcedInclude fi;
    fi.delayed_index           = index;
    fi.l1_time_us              = now_us;
    fi.block.height            = tree_.size() + 1;
    fi.block.delayed_count     = index + 1;
    fi.block.tx                = inbox_[index].message;
    std::uint64_t now_s        = static_cast<std::uint64_t>(std::max<std::int64_t>(0, now_us) / 1'000'000);
    fi.block.timestamp         = std::max(now_s, last_.timestamp);
    tree_.append(fi.block.leaf_hash());
    fi.block.merkle_root = tree_.root();
    ByteWriter w;
    w.u64(fi.block.height).u64(index).i64(now_us);
    fi.txid = Hasher().update("tb-force").update(w.bytes()).finish();

    last_ = {fi.block.height, fi.block.merkle_root, fi.block.delayed_count, fi.block.timestamp};
    canonical_.push_back(fi.block);
    forced_.emplace(fi.txid, fi);
    forced_order_.push_back(fi.txid);
    return fi;
  }

  std::optional<ForcedInclude> verify_force_include(Digest const &txid, std::uint64_t block) const override
  {
    auto it = forced_.find(txid);
    if (it == forced_.end() || it->second.block.height != block) return std::nullopt;
    return it->second;
  }

  std::vector<Digest> const &forced_order() const noexcept
  {
    return forced_order_;
  }

  ForcedInclude const &forced(Digest const &txid) const
  {
    return forced_.at(txid);
  }

  BatchHeader const &last_header() const noexcept
  {
    return last_;
  }

  std::vector<SequencerBlock> const &canonical_chain() const noexcept
  {
    return canonical_;
  }

  struct Posted
  {
    Batch        batch;
    std::int64_t time_us = 0;
  };

  std::vector<Posted> const &posted() const noexcept
  {
    return posted_;
  }

  std::vector<std::string> const &rejections() const noexcept
  {
    return rejections_;
  }

private:
  PostResult reject(std::string why)
  {
    rejections_.push_back(why);
    return {false, std::move(why)};
  }

  std::size_t                       f_;
  std::int64_t                      force_threshold_us_;
  std::vector<DelayedEntry>         inbox_;
  MerkleTree                        tree_;
  std::vector<SequencerBlock>       canonical_;
  BatchHeader                       last_;
  std::vector<Posted>               posted_;
  std::map<Digest, ForcedInclude>   forced_;
  std::vector<Digest>               forced_order_;
  std::vector<std::string>          rejections_;
};

}  // namespace timeboost::committee
