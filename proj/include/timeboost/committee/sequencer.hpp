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

#include "timeboost/committee/state.hpp"

#include <functional>
#include <string>
#include <string_view>

namespace timeboost::committee {

enum class Behavior : std::uint8_t
{
  Honest,
  Crashed,     ///< stops at its crash time and never returns
  Silent,      ///< follows the broadcast but never sends anything
  LowStamper,  ///< timestamps never advance past a fixed floor
  NonSigner,   ///< withholds block and batch signatures
};

inline char const *to_string(Behavior b)
{
  switch (b)
  {
  case Behavior::Honest: return "honest";
  case Behavior::Crashed: return "crashed";
  case Behavior::Silent: return "silent";
  case Behavior::LowStamper: return "low_stamper";
  case Behavior::NonSigner: return "non_signer";
  }
  return "?";
}

inline Behavior behavior_from_string(std::string_view s)
{
  if (s == "honest") return Behavior::Honest;
  if (s == "crashed") return Behavior::Crashed;
  if (s == "silent") return Behavior::Silent;
  if (s == "low_stamper") return Behavior::LowStamper;
  if (s == "non_signer") return Behavior::NonSigner;
  throw InvalidInput("unknown behavior '" + std::string(s) + "'");
}

/// Fetches a snapshot that `responder` recorded for (recovering, nonce), if it has one.
using SnapshotFetch = std::function<std::optional<Bytes>(SequencerId responder, SequencerId recovering, std::uint64_t nonce)>;

/// One committee member: the replicated state plus everything local to this sequencer
/// (its clock, what it has stamped, shared and signed, and recovery bookkeeping).
/// Every event handler returns the broadcasts to send, in order.
class Replica
{
public:
  struct Options
  {
    Behavior     behavior     = Behavior::Honest;
    std::int64_t heartbeat_ms = 10;  ///< idle interval after which m_i is refreshed
    std::int64_t floor_ms     = 0;   ///< LowStamper only
  };

  using Out = std::vector<BroadcastMsg>;

  Replica(SequencerId id, CommitteeConfig cfg, std::shared_ptr<ThresholdScheme const> scheme, L1View const *l1,
          Options opt)
    : id_(id)
    , opt_(opt)
    , scheme_(scheme)
    , l1_(l1)
    , state_(cfg, scheme, l1)
    , clock_(id)
  {}

  SequencerId id() const noexcept
  {
    return id_;
  }

  Behavior behavior() const noexcept
  {
    return opt_.behavior;
  }

  SequencerState const &state() const noexcept
  {
    return state_;
  }

  bool recovering() const noexcept
  {
    return recovering_;
  }

  bool paused() const noexcept
  {
    return paused_;
  }

  /// Own stamps in issue order, per epoch, for monotonicity and re-stamp audits.
  std::vector<std::pair<Epoch, std::vector<Digest>>> const &stamp_history() const noexcept
  {
    return history_;
  }

  // ------------------------------------------------------------------ events

  Out on_user_tx(EncTx const &tx, std::int64_t now_ms)
  {
    Out out;
    known_.emplace(tx.hash, tx);
    if (recovering_ || paused_) queue_.push_back(tx.hash);
    else stamp(tx, now_ms, out);
    return out;
  }

  /// L1 finalized delayed message `index` and this sequencer has now observed it.
  Out on_delayed_final(std::uint64_t index, Bytes const &message, std::int64_t now_ms)
  {
    return on_user_tx(delayed_tx(index, message), now_ms);
  }

  /// This sequencer observed a force-include at L1.
  Out on_force_include(ForcedInclude const &fi)
  {
    Out out;
    if (recovering_ || fi.block.height <= state_.epoch()) return out;
    send(out, NewEpoch{fi.block.height, fi.txid});
    return out;
  }

  Out on_tick(std::int64_t now_ms)
  {
    Out out;
    if (recovering_) return out;
    if (paused_)
    {
      if (now_ms <= resume_after_ms_) return out;
      paused_ = false;
      for (auto const &h : orphaned_)
        if (auto it = known_.find(h); it != known_.end()) stamp(it->second, now_ms, out);
      orphaned_.clear();
      drain_queue(now_ms, out);
    }
    bool idle = !last_sent_ms_ || now_ms - *last_sent_ms_ >= opt_.heartbeat_ms;
    if (!quiet_ && idle && opt_.behavior != Behavior::Silent)
    {
      last_sent_ms_ = now_ms;
      send(out, Heartbeat{state_.epoch(), id_, next_triple(now_ms)});
    }
    return out;
  }

  /// Stops heartbeats; used to let a run drain.
  void set_quiet(bool q) noexcept
  {
    quiet_ = q;
  }

  Out on_deliver(SequencerId sender, BroadcastMsg const &msg, std::int64_t now_ms)
  {
    Out out;
    if (recovering_)
    {
      recover_step(sender, msg, now_ms, out);
      return out;
    }
    process(sender, msg, now_ms, out, false);
    return out;
  }

  // ------------------------------------------------------------------ recovery

  /// Starts from nothing: announce a Recover and wait for F+1 matching state hashes.
  Out cold_start(std::uint64_t nonce, SnapshotFetch fetch)
  {
    Out out;
    recovering_ = true;
    recording_  = false;
    nonce_      = nonce;
    fetch_      = std::move(fetch);
    recorded_.clear();
    tallies_.clear();
    state_ = SequencerState(state_.config(), scheme_, l1_);
    send(out, Recover{id_, nonce});
    return out;
  }

  std::optional<Bytes> snapshot(SequencerId recovering, std::uint64_t nonce) const
  {
    auto it = snapshots_.find({recovering, nonce});
    if (it == snapshots_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t recovery_attempts() const noexcept
  {
    return fetch_attempts_;
  }

private:
  void send(Out &out, BroadcastMsg m)
  {
    if (opt_.behavior == Behavior::Silent) return;
    out.push_back(std::move(m));
  }

  TimestampTriple next_triple(std::int64_t now_ms)
  {
    if (opt_.behavior == Behavior::LowStamper) return clock_.issue_frozen(opt_.floor_ms);
    return clock_.issue(now_ms);
  }

  void stamp(EncTx const &tx, std::int64_t now_ms, Out &out)
  {
    if (opt_.behavior == Behavior::Silent) return;
    if (stamped_.count(tx.hash) || state_.is_included(tx.hash) || state_.discarded().count(tx.hash)) return;
    if (tx.is_delayed() && tx.delayed_index() < state_.delayed_count()) return;
    stamped_.insert(tx.hash);
    if (history_.empty() || history_.back().first != state_.epoch()) history_.emplace_back(state_.epoch(), std::vector<Digest>{});
    history_.back().second.push_back(tx.hash);
    last_sent_ms_ = now_ms;
    send(out, LocalTimestamp{state_.epoch(), id_, tx, next_triple(now_ms)});
  }

  void drain_queue(std::int64_t now_ms, Out &out)
  {
    auto q = std::move(queue_);
    queue_.clear();
    for (auto const &h : q)
      if (auto it = known_.find(h); it != known_.end()) stamp(it->second, now_ms, out);
  }

  /// Applies one delivery and reacts. During replay only own timestamps may be sent.
  void process(SequencerId sender, BroadcastMsg const &msg, std::int64_t now_ms, Out &out, bool replay)
  {
    auto fx = state_.apply(sender, msg);

    if (fx.new_epoch) enter_epoch(*fx.new_epoch);

    for (auto const &r : fx.recover_requests)
    {
      if (r.id == id_ || replay) continue;
      Bytes snap = state_.encode();
      auto  d    = SequencerState::digest_of(snap);
      snapshots_[{r.id, r.nonce}] = std::move(snap);
      send(out, StateHash{r.id, r.nonce, d});
    }

    if (auto const *lt = std::get_if<LocalTimestamp>(&msg); lt && lt->epoch == state_.epoch())
    {
      known_.emplace(lt->tx.hash, lt->tx);
      if (!stamped_.count(lt->tx.hash) && state_.pending().count(lt->tx.hash))
      {
        if (paused_) queue_.push_back(lt->tx.hash);
        else stamp(lt->tx, now_ms, out);
      }
    }

    if (replay) return;
    react(out);
  }

  /// Shares, block signatures and batch signatures owed under the current state.
  void react(Out &out)
  {
    Epoch e = state_.epoch();
    for (auto const &h : state_.eligible_in_order())
    {
      auto const &rec = state_.pending().at(h);
      if (rec.tx.is_delayed() || !shared_.insert({e, h}).second) continue;
      send(out, DecryptionShare{e, id_, h, scheme_->share(id_, rec.tx), rec.tau_prime_us});
    }
    if (opt_.behavior == Behavior::NonSigner) return;
    auto const &chain = state_.chain();
    for (std::size_t i = std::min(sign_from_, chain.size()); i < chain.size(); ++i)
    {
      if (chain[i].forced) continue;
      auto d = chain[i].block.digest();
      if (signed_blocks_.insert({e, d}).second) send(out, BlockSignature{e, id_, d});
    }
    sign_from_ = chain.size();
    for (auto const &b : state_.batches())
    {
      if (b.epoch != e) continue;
      auto d = b.batch.digest();
      if (signed_batches_.insert({e, d}).second) send(out, BatchSignature{e, id_, d});
    }
  }

  void enter_epoch(ForcedInclude const &fi)
  {
    paused_          = true;
    resume_after_ms_ = static_cast<std::int64_t>(fi.block.timestamp) * 1000;
    std::vector<Digest> prev;
    if (!history_.empty()) prev = history_.back().second;
    // own timestamps of the old epoch, in issue order, for transactions still unincluded
    orphaned_.clear();
    for (auto const &h : prev)
      if (state_.pending().count(h)) orphaned_.push_back(h);
    stamped_.clear();
    sign_from_ = std::min<std::size_t>(sign_from_, fi.block.height - 1);
  }

  void recover_step(SequencerId sender, BroadcastMsg const &msg, std::int64_t now_ms, Out &out)
  {
    if (auto const *r = std::get_if<Recover>(&msg); r && r->id == id_ && r->nonce == nonce_ && sender == id_)
    {
      recording_ = true;
      return;
    }
    if (!recording_) return;
    recorded_.emplace_back(sender, msg);
    auto const *sh = std::get_if<StateHash>(&msg);
    if (!sh || sh->recovering != id_ || sh->nonce != nonce_) return;
    auto &voters = tallies_[sh->digest];
    voters.insert(sender);
    if (voters.size() < state_.config().f + 1) return;

    for (SequencerId responder : voters)
    {
      ++fetch_attempts_;
      auto bytes = fetch_ ? fetch_(responder, id_, nonce_) : std::nullopt;
      if (!bytes || SequencerState::digest_of(*bytes) != sh->digest) continue;
      try
      {
        state_ = SequencerState::decode(*bytes, scheme_, l1_);
      }
      catch (ParseError const &)
      {
        continue;
      }
      finish_recovery(now_ms, out);
      return;
    }
  }

  void finish_recovery(std::int64_t now_ms, Out &out)
  {
    recovering_ = false;
    stamped_.clear();
    // replay everything delivered after our Recover, sending only own timestamps
    auto log = std::move(recorded_);
    recorded_.clear();
    for (auto const &[sender, m] : log) process(sender, m, now_ms, out, true);
    for (auto const &[h, rec] : state_.pending())
      if (rec.stamps.count(id_)) stamped_.insert(h);
    // what honest members already did for the recovered prefix is not repeated
    Epoch e = state_.epoch();
    for (auto const &h : state_.eligible_in_order()) shared_.insert({e, h});
    for (auto const &c : state_.chain()) signed_blocks_.insert({e, c.block.digest()});
    sign_from_ = state_.chain().size();
    for (auto const &b : state_.batches()) signed_batches_.insert({b.epoch, b.batch.digest()});
    drain_queue(now_ms, out);
  }

  SequencerId                            id_;
  Options                                opt_;
  std::shared_ptr<ThresholdScheme const> scheme_;
  L1View const                          *l1_;
  SequencerState                         state_;
  LocalClock                             clock_;

  std::map<Digest, EncTx>                            known_;
  std::set<Digest>                                   stamped_;
  std::vector<std::pair<Epoch, std::vector<Digest>>> history_;
  std::vector<Digest>                                queue_;
  std::vector<Digest>                                orphaned_;
  std::set<std::pair<Epoch, Digest>>                 shared_, signed_blocks_, signed_batches_;
  std::size_t                                        sign_from_ = 0;
  std::optional<std::int64_t>                        last_sent_ms_;
  bool                                               quiet_           = false;
  bool                                               paused_          = false;
  std::int64_t                                       resume_after_ms_ = 0;

  bool                                                       recovering_ = false;
  bool                                                       recording_  = false;
  std::uint64_t                                              nonce_      = 0;
  SnapshotFetch                                              fetch_;
  std::vector<std::pair<SequencerId, BroadcastMsg>>          recorded_;
  std::map<Digest, std::set<SequencerId>>                    tallies_;
  std::map<std::pair<SequencerId, std::uint64_t>, Bytes>     snapshots_;
  std::size_t                                                fetch_attempts_ = 0;
};

}  // namespace timeboost::committee
