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
#include "timeboost/committee/l1.hpp"
#include "timeboost/committee/messages.hpp"
#include "timeboost/committee/threshold.hpp"
#include "timeboost/score/score.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

namespace timeboost::committee {

struct CommitteeConfig
{
  std::size_t n = 5;
  std::size_t f = 1;
  ScoreParams score;
  BatchLimits batch;

  void validate() const
  {
    if (n == 0 || n % 2 == 0) throw InvalidInput("committee size N must be odd");
    if (3 * f >= n) throw InvalidInput("F must be below N/3");
    score.validate();
    if (batch.window_us <= 0) throw InvalidInput("batch window must be positive");
    if (batch.max_bytes == 0) throw InvalidInput("batch size limit must be positive");
  }

  std::int64_t g_us() const
  {
    return std::llround(score.g * 1e6);
  }
};

/// Which clause of the consensus rule fired.
enum class ConsensusArm : std::uint8_t
{
  None   = 0,
  Median = 1,  ///< every non-assigner is already past tau
  Quorum = 2,  ///< N - F sequencers are at or past tau
};

inline char const *to_string(ConsensusArm a)
{
  switch (a)
  {
  case ConsensusArm::None: return "none";
  case ConsensusArm::Median: return "median";
  case ConsensusArm::Quorum: return "quorum";
  }
  return "?";
}

/// Adjusted consensus timestamp in microseconds: tau - pi(P).
inline std::int64_t adjusted_timestamp_us(std::int64_t tau_ms, double fee, ScoreParams const &p)
{
  // pi(P) < g must survive rounding to whole microseconds
  std::int64_t boost = std::min(std::llround(time_boost(fee, p) * 1e6), std::llround(p.g * 1e6) - 1);
  return tau_ms * 1000 - std::max<std::int64_t>(boost, 0);
}

/// Block timestamp in seconds: floor(tau' + g).
inline std::uint64_t block_timestamp(std::int64_t tau_prime_us, std::int64_t g_us)
{
  std::int64_t t = tau_prime_us + g_us;
  if (t < 0) return 0;
  return static_cast<std::uint64_t>(t / 1'000'000);
}

/// The consensus rule. tau is an assigned timestamp with exactly (N-1)/2 assigned timestamps
/// below it, and either every non-assigner's maximum is above tau or N - F maxima are at or
/// above it. `max_ts` has one slot per sequencer.
inline std::optional<std::pair<TimestampTriple, ConsensusArm>>
consensus_timestamp(std::map<SequencerId, TimestampTriple> const &stamps,
                    std::vector<std::optional<TimestampTriple>> const &max_ts, std::size_t n, std::size_t f)
{
  std::size_t const need_below = (n - 1) / 2;
  for (auto const &[who, tau] : stamps)
  {
    std::size_t below = 0;
    for (auto const &[other, ts] : stamps) below += ts < tau ? 1 : 0;
    if (below != need_below) continue;

    bool median = true;
    for (SequencerId i = 0; i < n; ++i)
      if (!stamps.count(i) && !(max_ts[i] && *max_ts[i] > tau)) median = false;
    if (median) return std::make_pair(tau, ConsensusArm::Median);

    std::size_t past = 0;
    for (SequencerId i = 0; i < n; ++i) past += (max_ts[i] && *max_ts[i] >= tau) ? 1 : 0;
    if (past + f >= n) return std::make_pair(tau, ConsensusArm::Quorum);
    return std::nullopt;
  }
  return std::nullopt;
}

/// Pending transaction record.
struct PendingTx
{
  EncTx                                  tx;
  std::map<SequencerId, TimestampTriple> stamps;
  std::optional<TimestampTriple>         consensus;
  ConsensusArm                           arm          = ConsensusArm::None;
  std::int64_t                           tau_prime_us = 0;
  std::map<SequencerId, Bytes>           shares;
  std::optional<Bytes>                   plaintext;
};

/// A block in the chain together with how its transaction got there.
struct ChainEntry
{
  SequencerBlock               block;
  Digest                       tx_hash{};
  double                       fee          = 0.0;
  std::int64_t                 tau_prime_us = 0;
  TimestampTriple              consensus;
  ConsensusArm                 arm = ConsensusArm::None;
  std::vector<TimestampTriple> stamps;  ///< local timestamps known when the block was created
  std::set<SequencerId>        signatures;
  bool                         forced = false;
  bool                         final  = false;  ///< F+1 signatures, or L1 certified
};

struct BatchEntry
{
  Batch                 batch;
  Epoch                 epoch = 0;
  std::set<SequencerId> signatures;
  bool                  signed_ = false;
};

/// Something the replica should react to after a transition.
struct Effects
{
  std::vector<Recover>       recover_requests;
  std::optional<ForcedInclude> new_epoch;
};

/// Replicated sequencer state. `apply` is a pure function of the state and the delivered
/// message (plus immutable L1 facts), so replicas fed the same sequence agree bit for bit.
class SequencerState
{
public:
  SequencerState() = default;

  SequencerState(CommitteeConfig cfg, std::shared_ptr<ThresholdScheme const> scheme, L1View const *l1)
    : cfg_(cfg)
    , scheme_(std::move(scheme))
    , l1_(l1)
    , max_ts_(cfg.n)
  {
    cfg_.validate();
    if (!scheme_) scheme_ = std::make_shared<MockThreshold>(cfg_.f);
  }

  // ------------------------------------------------------------------ accessors

  CommitteeConfig const &config() const noexcept
  {
    return cfg_;
  }

  Epoch epoch() const noexcept
  {
    return epoch_;
  }

  std::optional<TimestampTriple> const &max_ts(SequencerId i) const
  {
    return max_ts_.at(i);
  }

  std::map<Digest, PendingTx> const &pending() const noexcept
  {
    return pending_;
  }

  std::vector<ChainEntry> const &chain() const noexcept
  {
    return chain_;
  }

  std::vector<BatchEntry> const &batches() const noexcept
  {
    return batches_;
  }

  std::map<Digest, Validation> const &discarded() const noexcept
  {
    return discarded_;
  }

  bool is_included(Digest const &h) const
  {
    return included_.count(h) != 0;
  }

  std::uint64_t delayed_count() const noexcept
  {
    return chain_.empty() ? 0 : chain_.back().block.delayed_count;
  }

  MerkleAccumulator const &accumulator() const noexcept
  {
    return acc_;
  }

  MerkleTree const &tree() const noexcept
  {
    return tree_;
  }

  ThresholdScheme const &scheme() const noexcept
  {
    return *scheme_;
  }

  BatchBuilder const &open_batch() const noexcept
  {
    return batcher_;
  }

  // ------------------------------------------------------------------ transition

  /// Applies one broadcast delivered from authenticated `sender`. Invalid messages leave
  /// the state unchanged; they never throw.
  Effects apply(SequencerId sender, BroadcastMsg const &msg)
  {
    Effects fx;
    if (sender >= cfg_.n) return fx;
    std::visit(
        [&](auto const &m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, LocalTimestamp>) on_local_timestamp(sender, m);
          else if constexpr (std::is_same_v<T, Heartbeat>) on_heartbeat(sender, m);
          else if constexpr (std::is_same_v<T, DecryptionShare>) on_share(sender, m);
          else if constexpr (std::is_same_v<T, BlockSignature>) on_block_signature(sender, m);
          else if constexpr (std::is_same_v<T, BatchSignature>) on_batch_signature(sender, m);
          else if constexpr (std::is_same_v<T, NewEpoch>) fx.new_epoch = on_new_epoch(m);
          else if constexpr (std::is_same_v<T, Recover>)
          {
            if (m.id == sender) fx.recover_requests.push_back(m);
          }
        },
        msg);
    return fx;
  }

  /// Consensus timestamp of `rec` under the current maximum timestamps, if decidable.
  std::optional<std::pair<TimestampTriple, ConsensusArm>> try_consensus(PendingTx const &rec) const
  {
    return consensus_timestamp(rec.stamps, max_ts_, cfg_.n, cfg_.f);
  }

  /// Whether an honest sequencer would release its decryption share for `h` now: tau'
  /// resolved, N - F sequencers at or past tau' + g, and no undecided transaction can
  /// still obtain a smaller tau'.
  bool share_eligible(Digest const &h) const
  {
    auto it = pending_.find(h);
    if (it == pending_.end() || !it->second.consensus) return false;
    return eligible(it->second.tau_prime_us, frontier_ms());
  }

  /// Hashes of share-eligible transactions in increasing (tau', H).
  std::vector<Digest> eligible_in_order() const
  {
    std::vector<std::pair<std::int64_t, Digest>> out;
    auto                                         fr = frontier_ms();
    for (auto const &[h, rec] : pending_)
      if (rec.consensus && eligible(rec.tau_prime_us, fr)) out.emplace_back(rec.tau_prime_us, h);
    std::sort(out.begin(), out.end());
    std::vector<Digest> hashes;
    for (auto const &p : out) hashes.push_back(p.second);
    return hashes;
  }

  /// Closes the open batch; every replica must call this at the same point in the stream.
  void flush_batch()
  {
    if (auto b = batcher_.flush()) batches_.push_back({*b, epoch_, {}, false});
  }

  // ------------------------------------------------------------------ digest and snapshot

  Bytes encode() const
  {
    ByteWriter w;
    w.u8('T').u8('B').u8('S').u8(1);
    w.u32(static_cast<std::uint32_t>(cfg_.n)).u32(static_cast<std::uint32_t>(cfg_.f));
    w.u64(std::bit_cast<std::uint64_t>(cfg_.score.g)).u64(std::bit_cast<std::uint64_t>(cfg_.score.c));
    w.i64(cfg_.batch.window_us).u64(cfg_.batch.max_bytes);
    w.u64(epoch_);
    for (auto const &m : max_ts_)
    {
      w.u8(m ? 1 : 0);
      if (m) m->encode(w);
    }
    w.u32(static_cast<std::uint32_t>(pending_.size()));
    for (auto const &[h, rec] : pending_)
    {
      w.raw(h);
      rec.tx.encode(w);
      w.u32(static_cast<std::uint32_t>(rec.stamps.size()));
      for (auto const &[id, ts] : rec.stamps)
      {
        w.u32(id);
        ts.encode(w);
      }
      w.u8(rec.consensus ? 1 : 0);
      if (rec.consensus) rec.consensus->encode(w);
      w.u8(static_cast<std::uint8_t>(rec.arm)).i64(rec.tau_prime_us);
      w.u32(static_cast<std::uint32_t>(rec.shares.size()));
      for (auto const &[id, s] : rec.shares) w.u32(id).var(s);
      w.u8(rec.plaintext ? 1 : 0);
      if (rec.plaintext) w.var(*rec.plaintext);
    }
    w.u32(static_cast<std::uint32_t>(chain_.size()));
    for (auto const &e : chain_)
    {
      e.block.encode(w);
      w.raw(e.tx_hash).u64(std::bit_cast<std::uint64_t>(e.fee)).i64(e.tau_prime_us);
      e.consensus.encode(w);
      w.u8(static_cast<std::uint8_t>(e.arm));
      w.u32(static_cast<std::uint32_t>(e.stamps.size()));
      for (auto const &ts : e.stamps) ts.encode(w);
      w.u32(static_cast<std::uint32_t>(e.signatures.size()));
      for (auto id : e.signatures) w.u32(id);
      w.u8(e.forced ? 1 : 0).u8(e.final ? 1 : 0);
    }
    acc_.encode(w);
    batcher_.encode(w);
    w.u32(static_cast<std::uint32_t>(batches_.size()));
    for (auto const &b : batches_)
    {
      b.batch.encode(w);
      w.u64(b.epoch).u32(static_cast<std::uint32_t>(b.signatures.size()));
      for (auto id : b.signatures) w.u32(id);
      w.u8(b.signed_ ? 1 : 0);
    }
    w.u32(static_cast<std::uint32_t>(discarded_.size()));
    for (auto const &[h, why] : discarded_) w.raw(h).u8(static_cast<std::uint8_t>(why));
    return std::move(w).take();
  }

  static Digest digest_of(ByteView encoded)
  {
    return Hasher().update("tb-state").update(encoded).finish();
  }

  /// Binding commitment to the whole state.
  Digest digest() const
  {
    return digest_of(encode());
  }

  /// Rebuilds a state from `encode()` output; derived indices are recomputed and the
  /// accumulator is checked against the chain.
  static SequencerState decode(ByteView bytes, std::shared_ptr<ThresholdScheme const> scheme, L1View const *l1)
  {
    ByteReader r(bytes);
    if (r.u8() != 'T' || r.u8() != 'B' || r.u8() != 'S' || r.u8() != 1) throw ParseError("not a state snapshot");
    CommitteeConfig cfg;
    cfg.n               = r.u32();
    cfg.f               = r.u32();
    cfg.score.g         = std::bit_cast<double>(r.u64());
    cfg.score.c         = std::bit_cast<double>(r.u64());
    cfg.batch.window_us = r.i64();
    cfg.batch.max_bytes = r.u64();
    SequencerState s(cfg, std::move(scheme), l1);
    s.epoch_ = r.u64();
    for (auto &m : s.max_ts_)
      if (r.u8()) m = TimestampTriple::decode(r);
    auto np = r.u32();
    for (std::uint32_t i = 0; i < np; ++i)
    {
      Digest    h = r.fixed<32>();
      PendingTx rec;
      rec.tx  = EncTx::decode(r);
      auto ns = r.u32();
      for (std::uint32_t k = 0; k < ns; ++k)
      {
        auto id        = r.u32();
        rec.stamps[id] = TimestampTriple::decode(r);
      }
      if (r.u8()) rec.consensus = TimestampTriple::decode(r);
      rec.arm          = static_cast<ConsensusArm>(r.u8());
      rec.tau_prime_us = r.i64();
      auto nsh         = r.u32();
      for (std::uint32_t k = 0; k < nsh; ++k)
      {
        auto id        = r.u32();
        rec.shares[id] = r.var();
      }
      if (r.u8()) rec.plaintext = r.var();
      if (rec.tx.hash != h) throw ParseError("pending record hash mismatch");
      s.pending_.emplace(h, std::move(rec));
    }
    auto nc = r.u32();
    for (std::uint32_t i = 0; i < nc; ++i)
    {
      ChainEntry e;
      e.block        = SequencerBlock::decode(r);
      e.tx_hash      = r.fixed<32>();
      e.fee          = std::bit_cast<double>(r.u64());
      e.tau_prime_us = r.i64();
      e.consensus    = TimestampTriple::decode(r);
      e.arm          = static_cast<ConsensusArm>(r.u8());
      auto nst       = r.u32();
      for (std::uint32_t k = 0; k < nst; ++k) e.stamps.push_back(TimestampTriple::decode(r));
      auto nsig = r.u32();
      for (std::uint32_t k = 0; k < nsig; ++k) e.signatures.insert(r.u32());
      e.forced = r.u8() != 0;
      e.final  = r.u8() != 0;
      s.chain_.push_back(std::move(e));
    }
    s.acc_     = MerkleAccumulator::decode(r);
    s.batcher_ = BatchBuilder::decode(r);
    auto nb    = r.u32();
    for (std::uint32_t i = 0; i < nb; ++i)
    {
      BatchEntry b;
      b.batch   = Batch::decode(r);
      b.epoch   = r.u64();
      auto nsig = r.u32();
      for (std::uint32_t k = 0; k < nsig; ++k) b.signatures.insert(r.u32());
      b.signed_ = r.u8() != 0;
      s.batches_.push_back(std::move(b));
    }
    auto nd = r.u32();
    for (std::uint32_t i = 0; i < nd; ++i)
    {
      Digest h        = r.fixed<32>();
      s.discarded_[h] = static_cast<Validation>(r.u8());
    }
    if (!r.done()) throw ParseError("trailing bytes in state snapshot");
    s.rebuild_indices();
    if (s.tree_.root() != s.acc_.root() || s.tree_.size() != s.acc_.size())
      throw ParseError("accumulator does not match the chain");
    return s;
  }

  /// Installs the L1 view and scheme after a copy crossed a process boundary.
  void bind(std::shared_ptr<ThresholdScheme const> scheme, L1View const *l1)
  {
    scheme_ = std::move(scheme);
    l1_     = l1;
  }

private:
  // ------------------------------------------------------------------ handlers

  bool advance_max(SequencerId id, TimestampTriple const &ts)
  {
    if (max_ts_[id] && ts <= *max_ts_[id]) return false;
    max_ts_[id] = ts;
    return true;
  }

  void on_local_timestamp(SequencerId sender, LocalTimestamp const &m)
  {
    if (m.epoch != epoch_ || m.id != sender || m.ts.id != sender) return;
    if (m.tx.is_delayed())
    {
      if (!l1_) return;
      std::uint64_t idx = 0;
      try
      {
        idx = m.tx.delayed_index();
      }
      catch (ParseError const &)
      {
        return;
      }
      auto msg = l1_->delayed_message(idx);
      if (!msg || *msg != delayed_message(m.tx) || m.tx.fee != 0.0) return;
    }
    else
    {
      try
      {
        if (m.tx.scheme() != Scheme::Threshold) return;
      }
      catch (ParseError const &)
      {
        return;
      }
    }
    if (!advance_max(sender, m.ts)) return;
    Digest const &h = m.tx.hash;
    if (!included_.count(h) && !discarded_.count(h))
    {
      auto it = pending_.find(h);
      if (it == pending_.end()) it = pending_.emplace(h, PendingTx{m.tx, {}, {}, {}, 0, {}, {}}).first;
      it->second.stamps.emplace(sender, m.ts);
    }
    progress();
  }

  void on_heartbeat(SequencerId sender, Heartbeat const &m)
  {
    if (m.epoch != epoch_ || m.id != sender || m.ts.id != sender) return;
    if (advance_max(sender, m.ts)) progress();
  }

  void on_share(SequencerId sender, DecryptionShare const &m)
  {
    if (m.epoch != epoch_ || m.id != sender) return;
    auto it = pending_.find(m.hash);
    if (it == pending_.end()) return;
    auto &rec = it->second;
    if (!rec.consensus || rec.tau_prime_us != m.tau_prime_us || rec.tx.is_delayed()) return;
    if (rec.shares.count(sender) || !share_eligible(m.hash)) return;
    if (!scheme_->verify_share(sender, rec.tx, m.share)) return;
    rec.shares.emplace(sender, m.share);
    if (!rec.plaintext && rec.shares.size() >= scheme_->threshold())
    {
      auto plain = scheme_->combine(rec.tx, rec.shares);
      if (!plain) return;
      auto verdict = validate_plaintext(*plain, rec.tx.fee);
      if (verdict != Validation::Ok)
      {
        discarded_[m.hash] = verdict;
        pending_.erase(it);
      }
      else
        rec.plaintext = std::move(*plain);
      progress();
    }
  }

  void on_block_signature(SequencerId sender, BlockSignature const &m)
  {
    if (m.epoch != epoch_ || m.id != sender) return;
    auto it = block_index_.find(m.block);
    if (it == block_index_.end()) return;
    auto &e = chain_[it->second];
    if (e.forced) return;
    e.signatures.insert(sender);
    if (e.signatures.size() >= cfg_.f + 1) e.final = true;
  }

  void on_batch_signature(SequencerId sender, BatchSignature const &m)
  {
    if (m.epoch != epoch_ || m.id != sender) return;
    for (auto &b : batches_)
      if (b.epoch == epoch_ && b.batch.digest() == m.batch)
      {
        b.signatures.insert(sender);
        if (b.signatures.size() >= cfg_.f + 1) b.signed_ = true;
        return;
      }
  }

  std::optional<ForcedInclude> on_new_epoch(NewEpoch const &m)
  {
    if (m.block <= epoch_ || !l1_) return std::nullopt;
    auto forced = l1_->verify_force_include(m.txid, m.block);
    if (!forced) return std::nullopt;
    if (chain_.size() + 1 < forced->block.height) return std::nullopt;
    start_new_epoch(*forced);
    return forced;
  }

  // ------------------------------------------------------------------ epochs

  void start_new_epoch(ForcedInclude const &forced)
  {
    std::uint64_t const b = forced.block.height;
    Digest const forced_hash = delayed_tx(forced.delayed_index, forced.block.tx).hash;

    // orphans keep their order; the one that consumed the forced message is superseded
    std::vector<std::pair<ChainEntry, std::optional<std::uint64_t>>> orphans;
    for (std::size_t i = b - 1; i < chain_.size(); ++i)
    {
      auto const   &e    = chain_[i];
      std::uint64_t prev = i == 0 ? 0 : chain_[i - 1].block.delayed_count;
      std::optional<std::uint64_t> idx;
      if (e.block.delayed_count == prev + 1) idx = prev;
      if (e.tx_hash != forced_hash && idx != forced.delayed_index) orphans.emplace_back(e, idx);
    }
    chain_.resize(b - 1);
    std::erase_if(batches_, [&](BatchEntry const &x) { return x.batch.header.block_number >= b; });
    batcher_.reset();
    rebuild_indices();
    acc_ = MerkleAccumulator{};
    for (std::size_t i = 0; i < tree_.size(); ++i) acc_.append(tree_.leaf(i));

    ChainEntry fe;
    fe.block             = forced.block;
    fe.block.merkle_root = Digest{};
    fe.tx_hash           = forced_hash;
    fe.tau_prime_us      = static_cast<std::int64_t>(forced.block.timestamp) * 1'000'000;
    fe.forced            = true;
    fe.final             = true;
    append_block(std::move(fe), false);

    for (auto &[o, idx] : orphans)
    {
      std::uint64_t dc = delayed_count();
      if (idx && *idx != dc) continue;
      ChainEntry ne          = std::move(o);
      ne.block.timestamp     = forced.block.timestamp;
      ne.block.delayed_count = dc + (idx ? 1 : 0);
      ne.signatures.clear();
      ne.final = false;
      append_block(std::move(ne), true);
    }

    pending_.erase(forced_hash);
    for (auto it = pending_.begin(); it != pending_.end();)
    {
      auto &rec = it->second;
      if (rec.tx.is_delayed() && rec.tx.delayed_index() < delayed_count())
      {
        included_.emplace(it->first, 0);
        it = pending_.erase(it);
        continue;
      }
      rec.stamps.clear();
      rec.consensus.reset();
      rec.arm          = ConsensusArm::None;
      rec.tau_prime_us = 0;
      rec.shares.clear();
      rec.plaintext.reset();
      ++it;
    }
    epoch_ = b;
  }

  // ------------------------------------------------------------------ inclusion

  /// Lower bound over undecided transactions on any consensus timestamp they can still get,
  /// in milliseconds: the ((N+1)/2)-th smallest of their stamps and, for sequencers that have
  /// not stamped them, those sequencers' current maxima.
  std::int64_t frontier_ms() const
  {
    std::int64_t const lowest = std::numeric_limits<std::int64_t>::min();
    std::int64_t       bound  = std::numeric_limits<std::int64_t>::max();
    std::size_t const  k      = (cfg_.n + 1) / 2;
    std::vector<std::int64_t> v(cfg_.n);
    for (auto const &[h, rec] : pending_)
    {
      if (rec.consensus) continue;
      for (SequencerId i = 0; i < cfg_.n; ++i)
      {
        auto s = rec.stamps.find(i);
        if (s != rec.stamps.end()) v[i] = s->second.t;
        else v[i] = max_ts_[i] ? max_ts_[i]->t : lowest;
      }
      std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
      bound = std::min(bound, v[k - 1]);
    }
    return bound;
  }

  bool eligible(std::int64_t tau_prime_us, std::int64_t frontier) const
  {
    std::int64_t const release = tau_prime_us + cfg_.g_us();
    std::size_t        past    = 0;
    for (auto const &m : max_ts_) past += (m && m->t * 1000 >= release) ? 1 : 0;
    if (past < cfg_.n - cfg_.f) return false;
    if (frontier == std::numeric_limits<std::int64_t>::max()) return true;
    if (frontier == std::numeric_limits<std::int64_t>::min()) return false;
    return release < frontier * 1000;
  }

  void progress()
  {
    for (auto &[h, rec] : pending_)
      if (!rec.consensus)
        if (auto c = try_consensus(rec))
        {
          rec.consensus    = c->first;
          rec.arm          = c->second;
          rec.tau_prime_us = adjusted_timestamp_us(c->first.t, rec.tx.fee, cfg_.score);
        }

    for (;;)
    {
      PendingTx const *head = nullptr;
      Digest           head_hash{};
      for (auto const &[h, rec] : pending_)
        if (rec.consensus && (!head || std::make_pair(rec.tau_prime_us, h) < std::make_pair(head->tau_prime_us, head_hash)))
        {
          head      = &rec;
          head_hash = h;
        }
      if (!head || !eligible(head->tau_prime_us, frontier_ms())) break;

      bool  delayed = head->tx.is_delayed();
      Bytes body;
      if (delayed)
      {
        auto idx = head->tx.delayed_index();
        if (idx < delayed_count())
        {
          included_.emplace(head_hash, 0);
          pending_.erase(head_hash);
          continue;
        }
        if (idx > delayed_count())
        {
          // the inbox is consumed in order: the predecessor goes first once it is eligible
          auto pred = find_delayed(delayed_count());
          if (pred == pending_.end() || !pred->second.consensus ||
              !eligible(pred->second.tau_prime_us, frontier_ms()))
            break;
          head      = &pred->second;
          head_hash = pred->first;
        }
        body = delayed_message(head->tx);
      }
      else
      {
        if (!head->plaintext) break;
        body = *head->plaintext;
      }

      ChainEntry e;
      e.block.tx            = std::move(body);
      e.block.delayed_count = delayed_count() + (delayed ? 1 : 0);
      e.block.timestamp     = block_timestamp(head->tau_prime_us, cfg_.g_us());
      e.tx_hash             = head_hash;
      e.fee                 = head->tx.fee;
      e.tau_prime_us        = head->tau_prime_us;
      e.consensus           = *head->consensus;
      e.arm                 = head->arm;
      for (auto const &[id, ts] : head->stamps) e.stamps.push_back(ts);
      pending_.erase(head_hash);
      append_block(std::move(e), true);
    }
    maybe_close_batch();
  }

  /// Closes the open batch once no future block can fall inside its window; the result is
  /// the batch the next block would have closed.
  void maybe_close_batch()
  {
    if (batcher_.size() == 0) return;
    std::int64_t const lowest = std::numeric_limits<std::int64_t>::min();
    std::size_t const  k      = (cfg_.n + 1) / 2;
    std::vector<std::int64_t> m;
    for (auto const &x : max_ts_) m.push_back(x ? x->t : lowest);
    std::nth_element(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(k - 1), m.end());
    std::int64_t lb_ms = std::min(m[k - 1], frontier_ms());
    if (lb_ms == lowest) return;
    // smallest adjusted timestamp any later block can carry
    std::int64_t bound = lb_ms * 1000 - cfg_.g_us() + 1;
    for (auto const &[h, rec] : pending_)
      if (rec.consensus) bound = std::min(bound, rec.tau_prime_us);
    if (bound > batcher_.first_tau_prime() + cfg_.batch.window_us) flush_batch();
  }

  std::map<Digest, PendingTx>::iterator find_delayed(std::uint64_t index)
  {
    for (auto it = pending_.begin(); it != pending_.end(); ++it)
      if (it->second.tx.is_delayed() && it->second.tx.delayed_index() == index) return it;
    return pending_.end();
  }

  /// Appends with height, clamped timestamp and Merkle root filled in.
  void append_block(ChainEntry e, bool batch)
  {
    std::uint64_t prev_dc = delayed_count();
    std::uint64_t prev_ts = chain_.empty() ? 0 : chain_.back().block.timestamp;
    e.block.height        = chain_.size() + 1;
    e.block.timestamp     = std::max(e.block.timestamp, prev_ts);
    auto leaf             = e.block.leaf_hash();
    acc_.append(leaf);
    tree_.append(leaf);
    e.block.merkle_root = acc_.root();
    included_[e.tx_hash] = e.block.height;
    block_index_[e.block.digest()] = chain_.size();
    if (e.block.delayed_count == prev_dc + 1) delayed_of_[e.tx_hash] = prev_dc;
    if (batch)
      if (auto closed = batcher_.step(e.block, e.tau_prime_us, prev_dc, cfg_.batch))
        batches_.push_back({*closed, epoch_, {}, false});
    chain_.push_back(std::move(e));
  }

  void rebuild_indices()
  {
    tree_ = MerkleTree{};
    block_index_.clear();
    included_.clear();
    delayed_of_.clear();
    for (std::size_t i = 0; i < chain_.size(); ++i)
    {
      auto const &e = chain_[i];
      tree_.append(e.block.leaf_hash());
      block_index_[e.block.digest()] = i;
      included_[e.tx_hash]           = e.block.height;
      std::uint64_t prev             = i == 0 ? 0 : chain_[i - 1].block.delayed_count;
      if (e.block.delayed_count == prev + 1) delayed_of_[e.tx_hash] = prev;
    }
  }

  CommitteeConfig                        cfg_;
  std::shared_ptr<ThresholdScheme const> scheme_;
  L1View const                          *l1_ = nullptr;

  Epoch                                       epoch_ = 0;
  std::vector<std::optional<TimestampTriple>> max_ts_;
  std::map<Digest, PendingTx>                 pending_;
  std::vector<ChainEntry>                     chain_;
  MerkleAccumulator                           acc_;
  BatchBuilder                                batcher_;
  std::vector<BatchEntry>                     batches_;
  std::map<Digest, Validation>                discarded_;

  // derived from the above
  MerkleTree                      tree_;
  std::map<Digest, std::size_t>   block_index_;
  std::map<Digest, std::uint64_t> included_;
  std::map<Digest, std::uint64_t> delayed_of_;
};

}  // namespace timeboost::committee
