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

#include "timeboost/sim/broadcast.hpp"
#include "timeboost/sim/config.hpp"

#include <nlohmann/json.hpp>

#include <ostream>
#include <queue>
#include <unordered_map>

namespace timeboost::sim {

using committee::BroadcastMsg;
using committee::Digest;
using committee::EncTx;
using committee::Replica;

/// Outcome of one submitted transaction, read from the final state of a reference replica.
struct TxRecord
{
  std::string  id;
  Digest       hash{};
  bool         delayed   = false;
  std::int64_t submit_us = 0;
  double       declared  = 0.0;  ///< P

  enum class Status
  {
    Pending,
    Included,
    Discarded,
  };
  Status                  status = Status::Pending;
  std::string             reason;  ///< discard reason
  std::uint64_t           height = 0;
  bool                    forced = false;
  std::int64_t            tau_ms = 0;
  std::int64_t            tau_prime_us = 0;
  committee::ConsensusArm arm          = committee::ConsensusArm::None;
  std::size_t             stamps       = 0;
  bool                    median_ok    = true;  ///< tau equals the median of all N stamps, when N were present
  std::optional<std::int64_t> first_include_us;

  std::optional<double> delay_s() const
  {
    if (!first_include_us) return std::nullopt;
    return static_cast<double>(*first_include_us - submit_us) / 1e6;
  }
};

inline char const *to_string(TxRecord::Status s)
{
  switch (s)
  {
  case TxRecord::Status::Pending: return "pending";
  case TxRecord::Status::Included: return "included";
  case TxRecord::Status::Discarded: return "discarded";
  }
  return "?";
}

struct EventLog
{
  std::vector<nlohmann::json> lines;
  std::vector<TxRecord>       txs;

  void write_jsonl(std::ostream &out) const
  {
    for (auto const &l : lines) out << l.dump() << '\n';
  }

  std::string jsonl() const
  {
    std::string s;
    for (auto const &l : lines) s += l.dump() + '\n';
    return s;
  }
};

/// Pairwise comparison of the committee's inclusion order with the centralized ordering
/// policy run on (consensus timestamp, declared fee).
struct DivergenceReport
{
  std::size_t compared             = 0;
  std::size_t divergences          = 0;
  std::size_t fairness_violations  = 0;  ///< pairs placed ahead of a transaction stamped g or more earlier
  std::size_t discards_without_reason = 0;
  std::string first_divergence;
};

/// Included, non-forced records in chain order are compared against `order`. Pairs whose
/// scores lie within one microsecond are ties at the committee's resolution and are skipped.
inline DivergenceReport compare_to_centralized(std::vector<TxRecord> const &txs, ScoreParams const &p)
{
  DivergenceReport r;
  std::vector<TxRecord const *> chain;
  for (auto const &t : txs)
  {
    if (t.status == TxRecord::Status::Included && !t.forced) chain.push_back(&t);
    if (t.status == TxRecord::Status::Discarded && t.reason.empty()) ++r.discards_without_reason;
  }
  std::sort(chain.begin(), chain.end(), [](auto *a, auto *b) { return a->height < b->height; });
  r.compared = chain.size();

  std::vector<Transaction> central;
  for (auto const *t : chain) central.emplace_back(t->id, Micros(t->tau_ms * 1000), t->declared);
  auto                                         ordered = order(central, p);
  std::unordered_map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < ordered.size(); ++i) rank[ordered[i].id] = i;

  std::int64_t const g_us = std::llround(p.g * 1e6);
  for (std::size_t i = 0; i < chain.size(); ++i)
    for (std::size_t j = i + 1; j < chain.size(); ++j)
    {
      auto const *a = chain[i];
      auto const *b = chain[j];
      if (a->tau_ms * 1000 >= b->tau_ms * 1000 + g_us) ++r.fairness_violations;
      if (rank[a->id] < rank[b->id]) continue;
      double sa = time_boost(a->declared, p) - static_cast<double>(a->tau_ms) / 1e3;
      double sb = time_boost(b->declared, p) - static_cast<double>(b->tau_ms) / 1e3;
      if (std::abs(sa - sb) <= 1e-6) continue;
      if (r.divergences++ == 0) r.first_divergence = a->id + " included before " + b->id;
    }
  return r;
}

struct Metrics
{
  std::size_t submitted = 0, included = 0, discarded = 0, dropped = 0;
  std::map<std::string, std::size_t> discard_reasons;
  bool                               digests_equal = false;
  std::map<SequencerId, std::string> digests;
  std::vector<SequencerId>           honest_compared;
  bool                               centralized_compared = false;
  DivergenceReport                   centralized;
  std::size_t median_checked = 0, median_mismatches = 0;
  bool        liveness = false;
  std::size_t monotonic_violations = 0, restamp_order_violations = 0;
  std::uint64_t epoch = 0;
  std::size_t   orphaned_blocks = 0, forced_blocks = 0;
  std::size_t   batches_posted = 0, batch_rejections = 0;
  std::size_t   cold_starts = 0, recovered = 0;
  std::size_t   blocks = 0;
  double        delay_min_s = 0, delay_mean_s = 0, delay_max_s = 0;
  double        delay_lo_s = 0, delay_hi_s = 0;  ///< envelope [g - 2 skew, g + overhead], less each tx's boost
  std::size_t   delay_outliers = 0;
  double        end_s = 0;

  /// First violated run invariant, or empty.
  std::string violation() const
  {
    if (!digests_equal) return "honest_state_convergence";
    if (!liveness) return "liveness";
    if (dropped != 0) return "no_dropped_transactions";
    if (centralized.divergences != 0) return "centralized_order_equivalence";
    if (centralized.fairness_violations != 0) return "g_fairness";
    if (centralized.discards_without_reason != 0) return "discard_reasons";
    if (median_mismatches != 0) return "consensus_median";
    if (monotonic_violations != 0) return "timestamp_monotonicity";
    if (restamp_order_violations != 0) return "restamp_order";
    if (recovered != cold_starts) return "recovery";
    return {};
  }

  bool ok() const
  {
    return violation().empty();
  }

  nlohmann::json to_json() const
  {
    nlohmann::json j;
    j["submitted"]       = submitted;
    j["included"]        = included;
    j["discarded"]       = discarded;
    j["dropped"]         = dropped;
    j["discard_reasons"] = discard_reasons;
    j["digests_equal"]   = digests_equal;
    nlohmann::json d     = nlohmann::json::object();
    for (auto const &[id, h] : digests) d[std::to_string(id)] = h;
    j["digests"]                 = d;
    j["honest_compared"]         = honest_compared;
    j["centralized_compared"]    = centralized_compared;
    j["centralized_pairs_txs"]   = centralized.compared;
    j["centralized_divergences"] = centralized.divergences;
    j["fairness_violations"]     = centralized.fairness_violations;
    j["median_checked"]          = median_checked;
    j["median_mismatches"]       = median_mismatches;
    j["liveness"]                = liveness;
    j["monotonic_violations"]    = monotonic_violations;
    j["restamp_order_violations"] = restamp_order_violations;
    j["epoch"]                   = epoch;
    j["orphaned_blocks"]         = orphaned_blocks;
    j["forced_blocks"]           = forced_blocks;
    j["batches_posted"]          = batches_posted;
    j["batch_rejections"]        = batch_rejections;
    j["cold_starts"]             = cold_starts;
    j["recovered"]               = recovered;
    j["blocks"]                  = blocks;
    j["delay_s"]                 = {{"min", delay_min_s}, {"mean", delay_mean_s}, {"max", delay_max_s}};
    j["delay_envelope_s"]        = {delay_lo_s, delay_hi_s};
    j["delay_outliers"]          = delay_outliers;
    j["end_s"]                   = end_s;
    auto v                       = violation();
    j["invariants_ok"]           = v.empty();
    if (!v.empty()) j["violated"] = v;
    return j;
  }
};

struct RunResult
{
  EventLog                           log;
  Metrics                            metrics;
  std::map<SequencerId, Digest>      digests;  ///< every live, recovered replica
};

/// Deterministic discrete-event run of one scenario.
class Simulator
{
public:
  explicit Simulator(SimConfig cfg)
    : cfg_(std::move(cfg))
    , rng_(cfg_.seed)
    , scheme_(std::make_shared<committee::MockThreshold>(cfg_.f))
    , l1_(cfg_.f, cfg_.force_threshold_us)
    , bcast_(cfg_.n, cfg_.bcast_min_us, cfg_.bcast_max_us)
  {
    cfg_.validate();
  }

  RunResult run()
  {
    setup();
    while (!queue_.empty())
    {
      Event e = queue_.top();
      queue_.pop();
      now_ = e.t;
      dispatch(e);
    }
    return finish();
  }

  std::vector<std::unique_ptr<Replica>> const &replicas() const noexcept
  {
    return replicas_;
  }

  committee::L1Stub const &l1() const noexcept
  {
    return l1_;
  }

private:
  enum class Kind
  {
    Deliver,
    UserArrive,
    Tick,
    DelayedSeen,
    ForceSeen,
    Script,
    Submit,
    Finalize,
    Check,
  };

  struct Event
  {
    std::int64_t  t   = 0;
    std::uint64_t seq = 0;
    Kind          kind{};
    SequencerId   r   = 0;
    std::uint64_t a   = 0;
    std::uint32_t inc = 0;

    bool operator>(Event const &o) const
    {
      return std::tie(t, seq) > std::tie(o.t, o.seq);
    }
  };

  struct SimTx
  {
    std::string   id;
    std::size_t   user      = 0;
    std::int64_t  submit_us = 0;
    double        declared  = 0.0;
    EncTx         tx;
    bool          delayed = false;
    std::uint64_t index   = 0;
    bool          observed = true;
    Bytes         message;
  };

  struct Node
  {
    bool          up          = true;
    std::uint32_t inc         = 0;
    std::int64_t  skew        = 0;
    std::size_t   chain_seen  = 0;
    std::uint64_t epoch_seen  = 0;
    bool          ever_crashed = false;
  };

  // ------------------------------------------------------------------ setup

  void push(std::int64_t t, Kind k, SequencerId r = 0, std::uint64_t a = 0, std::uint32_t inc = 0)
  {
    queue_.push(Event{t, seq_++, k, r, a, inc});
  }

  void note(nlohmann::json j)
  {
    j["t_us"] = now_;
    log_.lines.push_back(std::move(j));
  }

  Replica::Options options(SequencerId i) const
  {
    Replica::Options o;
    o.behavior     = cfg_.behaviors[i];
    o.heartbeat_ms = cfg_.heartbeat_ms;
    o.floor_ms     = cfg_.low_floor_ms;
    return o;
  }

  void setup()
  {
    std::uniform_int_distribution<std::int64_t> skew(-cfg_.skew_us, cfg_.skew_us);
    std::uniform_int_distribution<std::int64_t> phase(0, cfg_.heartbeat_ms * 1000 - 1);
    nodes_.resize(cfg_.n);
    issued_.resize(cfg_.n);
    for (SequencerId i = 0; i < cfg_.n; ++i)
    {
      replicas_.push_back(std::make_unique<Replica>(i, cfg_.committee(), scheme_, &l1_, options(i)));
      nodes_[i].skew = skew(rng_);
      if (cfg_.behaviors[i] == Behavior::Crashed)
      {
        nodes_[i].up = false;
        bcast_.disconnect(i);
        continue;
      }
      push(phase(rng_), Kind::Tick, i, 0, nodes_[i].inc);
    }
    for (std::size_t k = 0; k < cfg_.script.size(); ++k) push(cfg_.script[k].at_us, Kind::Script, 0, k);

    // workload: Poisson arrivals from start_s until duration
    auto const                             &w = cfg_.workload;
    std::exponential_distribution<double>   gap(w.rate);
    std::uniform_int_distribution<std::size_t> user(0, cfg_.users - 1);
    std::bernoulli_distribution             bad(w.bad_fee_fraction), junk(w.malformed_fraction);
    double                                  t = w.start_s;
    for (std::size_t k = 0; k < w.txs; ++k)
    {
      t += gap(rng_);
      auto at = std::llround(t * 1e6);
      if (at >= cfg_.duration_us) break;
      double bid = draw_bid(w.bids);
      ScriptEvent e;
      e.kind      = ScriptEvent::Kind::Tx;
      e.at_us     = at;
      e.user      = user(rng_);
      e.bid       = bid;
      e.malformed = junk(rng_);
      if (bad(rng_)) e.declared = bid + 1.0;
      e.payload.resize(w.payload_bytes);
      for (auto &b : e.payload) b = static_cast<std::uint8_t>(rng_());
      generated_.push_back(e);
      push(at, Kind::Submit, 0, generated_.size() - 1);
    }
    push(cfg_.duration_us, Kind::Check);
  }

  double draw_bid(BidDistribution const &d)
  {
    switch (d.kind)
    {
    case BidDistribution::Kind::Zero: return 0.0;
    case BidDistribution::Kind::Exponential: return std::exponential_distribution<double>(1.0 / d.param)(rng_);
    case BidDistribution::Kind::Uniform: return std::uniform_real_distribution<double>(0.0, d.param)(rng_);
    }
    return 0.0;
  }

  // ------------------------------------------------------------------ plumbing

  std::int64_t local_ms(SequencerId i) const
  {
    std::int64_t l = now_ + nodes_[i].skew;
    return l >= 0 ? l / 1000 : -((-l + 999) / 1000);
  }

  void broadcast(SequencerId sender, Replica::Out const &out)
  {
    for (auto const &m : out)
    {
      if (auto const *lt = std::get_if<committee::LocalTimestamp>(&m)) issued_[sender].push_back(lt->ts);
      if (auto const *hb = std::get_if<committee::Heartbeat>(&m)) issued_[sender].push_back(hb->ts);
      schedule(bcast_.publish(sender, m, now_, rng_));
    }
  }

  void schedule(std::vector<AtomicBroadcast::Delivery> const &ds)
  {
    for (auto const &d : ds) push(d.at_us, Kind::Deliver, d.to, d.index, nodes_[d.to].inc);
  }

  bool alive(Event const &e) const
  {
    return nodes_[e.r].up && nodes_[e.r].inc == e.inc;
  }

  void dispatch(Event const &e)
  {
    switch (e.kind)
    {
    case Kind::Deliver: {
      if (!alive(e) || !bcast_.accept(e.r, e.a)) return;
      auto const &entry = bcast_.entry(e.a);
      auto        out   = replicas_[e.r]->on_deliver(entry.sender, entry.msg, local_ms(e.r));
      broadcast(e.r, out);
      observe(e.r);
      return;
    }
    case Kind::UserArrive: {
      if (!nodes_[e.r].up) return;
      broadcast(e.r, replicas_[e.r]->on_user_tx(txs_[e.a].tx, local_ms(e.r)));
      return;
    }
    case Kind::Tick: {
      if (!alive(e)) return;
      broadcast(e.r, replicas_[e.r]->on_tick(local_ms(e.r)));
      if (!quiet_) push(now_ + cfg_.heartbeat_ms * 1000, Kind::Tick, e.r, 0, e.inc);
      return;
    }
    case Kind::DelayedSeen: {
      if (!nodes_[e.r].up) return;
      auto const &t = txs_[e.a];
      broadcast(e.r, replicas_[e.r]->on_delayed_final(t.index, t.message, local_ms(e.r)));
      return;
    }
    case Kind::ForceSeen: {
      if (!nodes_[e.r].up) return;
      broadcast(e.r, replicas_[e.r]->on_force_include(l1_.forced(l1_.forced_order()[e.a])));
      return;
    }
    case Kind::Script: run_script(cfg_.script[e.a]); return;
    case Kind::Submit: submit(generated_[e.a]); return;
    case Kind::Finalize: {
      auto const &t = txs_[e.a];
      l1_.finalize(now_, t.index + 1);
      if (!t.observed) return;
      for (SequencerId j = 0; j < cfg_.n; ++j) push(now_ + cfg_.l1_watch_lag_us, Kind::DelayedSeen, j, e.a);
      return;
    }
    case Kind::Check: check(); return;
    }
  }

  void submit(ScriptEvent const &e)
  {
    SimTx s;
    s.user      = e.user;
    s.submit_us = now_;
    s.declared  = e.declared.value_or(e.bid);
    Bytes plain;
    if (e.malformed) plain = e.payload;
    else plain = committee::UserTx{e.bid, e.payload}.encode();
    s.tx = committee::submit(plain, s.declared, *scheme_);
    s.id = "u" + std::to_string(txs_.size());
    txs_.push_back(s);
    note({{"event", "submit"}, {"tx", s.id}, {"user", s.user}, {"bid", e.bid}, {"declared", s.declared},
          {"hash", committee::to_hex(s.tx.hash)}});
    for (SequencerId j = 0; j < cfg_.n; ++j)
      push(now_ + cfg_.user_latency_us(s.user, j), Kind::UserArrive, j, txs_.size() - 1);
  }

  void run_script(ScriptEvent const &e)
  {
    switch (e.kind)
    {
    case ScriptEvent::Kind::Tx: submit(e); return;
    case ScriptEvent::Kind::Delayed: {
      SimTx s;
      s.delayed   = true;
      s.index     = l1_.enqueue_delayed(e.payload, now_);
      s.message   = e.payload;
      s.observed  = e.observed;
      s.submit_us = now_;
      s.tx        = committee::delayed_tx(s.index, e.payload);
      s.id        = "d" + std::to_string(s.index);
      txs_.push_back(s);
      note({{"event", "delayed"}, {"tx", s.id}, {"index", s.index}, {"observed", s.observed}});
      push(now_ + cfg_.l1_finality_us, Kind::Finalize, 0, txs_.size() - 1);
      return;
    }
    case ScriptEvent::Kind::ForceInclude: {
      std::string why;
      auto        fi = l1_.force_include(l1_.last_header().delayed_count, now_, &why);
      if (!fi)
      {
        note({{"event", "force_rejected"}, {"reason", why}});
        return;
      }
      note({{"event", "force_include"}, {"block", fi->block.height}, {"delayed_index", fi->delayed_index},
            {"txid", committee::to_hex(fi->txid)}});
      for (SequencerId j = 0; j < cfg_.n; ++j)
        push(now_ + cfg_.l1_watch_lag_us, Kind::ForceSeen, j, l1_.forced_order().size() - 1);
      return;
    }
    case ScriptEvent::Kind::Crash: {
      auto &nd = nodes_[e.replica];
      if (!nd.up) return;
      nd.up           = false;
      bcast_.disconnect(e.replica);
      nd.ever_crashed = true;
      ++nd.inc;
      note({{"event", "crash"}, {"replica", e.replica}});
      return;
    }
    case ScriptEvent::Kind::Restart: {
      auto &nd = nodes_[e.replica];
      if (nd.up) return;
      nd.up = true;
      ++nd.inc;
      note({{"event", "restart"}, {"replica", e.replica}, {"mode", e.cold ? "cold" : "warm"}});
      if (e.cold)
      {
        retired_.push_back(std::move(replicas_[e.replica]));
        replicas_[e.replica] = std::make_unique<Replica>(e.replica, cfg_.committee(), scheme_, &l1_, options(e.replica));
        bcast_.resume_fresh(e.replica, now_);
        nd.chain_seen = 0;
        nd.epoch_seen = 0;
        ++cold_starts_;
        auto fetch = [this](SequencerId responder, SequencerId rec, std::uint64_t nonce) -> std::optional<Bytes> {
          if (!nodes_[responder].up) return std::nullopt;
          return replicas_[responder]->snapshot(rec, nonce);
        };
        broadcast(e.replica, replicas_[e.replica]->cold_start(rng_(), fetch));
      }
      else
      {
        schedule(bcast_.resume(e.replica, now_, rng_));
      }
      if (!quiet_) push(now_ + cfg_.heartbeat_ms * 1000, Kind::Tick, e.replica, 0, nd.inc);
      return;
    }
    }
  }

  /// Records first inclusions, epoch entries and batch posting after a delivery.
  void observe(SequencerId j)
  {
    auto const &rep = *replicas_[j];
    if (rep.recovering() || cfg_.behaviors[j] != Behavior::Honest) return;
    auto const &st = rep.state();
    auto       &nd = nodes_[j];
    if (st.epoch() != nd.epoch_seen)
    {
      nd.epoch_seen = st.epoch();
      std::size_t kept = st.epoch() - 1;
      if (st.epoch() > epoch_noted_)
      {
        epoch_noted_ = st.epoch();
        std::size_t orphans = nd.chain_seen > kept ? nd.chain_seen - kept : 0;
        orphaned_blocks_ += orphans;
        note({{"event", "epoch"}, {"replica", j}, {"epoch", st.epoch()}, {"orphaned_blocks", orphans}});
      }
      nd.chain_seen = std::min(nd.chain_seen, kept);
    }
    auto const &chain = st.chain();
    for (std::size_t i = nd.chain_seen; i < chain.size(); ++i)
    {
      auto const &h = chain[i].tx_hash;
      if (first_include_.emplace(h, now_).second)
        note({{"event", "include"}, {"hash", committee::to_hex(h)}, {"height", chain[i].block.height}, {"replica", j}});
    }
    nd.chain_seen = chain.size();

    for (auto const &b : st.batches())
    {
      if (!b.signed_ || b.batch.header.block_number <= l1_.last_header().block_number) continue;
      auto res = l1_.post_batch(b.batch, b.signatures, now_);
      if (res.accepted)
        note({{"event", "batch_posted"}, {"block_number", b.batch.header.block_number}, {"blocks", b.batch.blocks}});
      else
        note({{"event", "batch_rejected"}, {"block_number", b.batch.header.block_number}, {"reason", res.reason}});
      break;
    }
  }

  bool resolved_everywhere() const
  {
    for (SequencerId j = 0; j < cfg_.n; ++j)
    {
      if (!nodes_[j].up) continue;
      auto const &rep = *replicas_[j];
      if (rep.recovering() || rep.paused()) return false;
      if (cfg_.behaviors[j] != Behavior::Honest) continue;
      for (auto const &t : txs_)
        if (!rep.state().is_included(t.tx.hash) && !rep.state().discarded().count(t.tx.hash)) return false;
    }
    return true;
  }

  void check()
  {
    bool scripted_left = false;
    for (auto const &e : cfg_.script) scripted_left = scripted_left || e.at_us > now_;
    if ((!scripted_left && resolved_everywhere()) || now_ >= cfg_.duration_us + cfg_.max_drain_us)
    {
      quiet_ = true;
      for (auto &r : replicas_) r->set_quiet(true);
      note({{"event", "quiesce"}});
      return;
    }
    push(now_ + 50'000, Kind::Check);
  }

  // ------------------------------------------------------------------ results

  RunResult finish()
  {
    RunResult out;
    Metrics  &m = out.metrics;
    m.end_s     = static_cast<double>(now_) / 1e6;

    std::optional<SequencerId> ref;
    std::optional<Digest>      common;
    m.digests_equal = true;
    for (SequencerId j = 0; j < cfg_.n; ++j)
    {
      if (!nodes_[j].up || replicas_[j]->recovering()) continue;
      auto d         = replicas_[j]->state().digest();
      out.digests[j] = d;
      m.digests[j]   = committee::to_hex(d);
      if (cfg_.behaviors[j] != Behavior::Honest) continue;
      m.honest_compared.push_back(j);
      if (!ref) ref = j;
      if (!common) common = d;
      else if (*common != d) m.digests_equal = false;
    }
    if (!ref) m.digests_equal = false;
    m.cold_starts = cold_starts_;
    for (SequencerId j = 0; j < cfg_.n; ++j)
      if (nodes_[j].up && !replicas_[j]->recovering() && cold_started(j) && common && out.digests.count(j) &&
          out.digests[j] == *common)
        ++m.recovered;

    if (ref) fill_records(replicas_[*ref]->state(), out.log.txs, m);
    log_.txs = out.log.txs;
    for (auto const &t : out.log.txs)
    {
      nlohmann::json j{{"event", "tx"}, {"tx", t.id}, {"status", to_string(t.status)}};
      if (t.status == TxRecord::Status::Included)
      {
        j["height"] = t.height;
        j["forced"] = t.forced;
        if (!t.forced)
        {
          j["tau_ms"]      = t.tau_ms;
          j["tau_prime_us"] = t.tau_prime_us;
        }
        if (auto d = t.delay_s()) j["delay_s"] = *d;
      }
      if (t.status == TxRecord::Status::Discarded) j["reason"] = t.reason;
      j["t_us"] = now_;
      log_.lines.push_back(j);
    }

    m.centralized_compared = m.epoch == 0;
    if (m.centralized_compared) m.centralized = compare_to_centralized(out.log.txs, cfg_.params);

    for (auto const &v : issued_)
      for (std::size_t k = 1; k < v.size(); ++k) m.monotonic_violations += v[k] <= v[k - 1] ? 1 : 0;
    for (auto const &r : replicas_) m.restamp_order_violations += restamp_violations(*r);
    for (auto const &r : retired_) m.restamp_order_violations += restamp_violations(*r);

    m.batches_posted   = l1_.posted().size();
    m.batch_rejections = l1_.rejections().size();
    m.forced_blocks    = l1_.forced_order().size();
    m.orphaned_blocks  = orphaned_blocks_;

    out.log.lines = log_.lines;
    return out;
  }

  bool cold_started(SequencerId j) const
  {
    for (auto const &e : cfg_.script)
      if (e.kind == ScriptEvent::Kind::Restart && e.cold && e.replica == j) return true;
    return false;
  }

  void fill_records(committee::SequencerState const &st, std::vector<TxRecord> &recs, Metrics &m)
  {
    std::map<Digest, committee::ChainEntry const *> by_hash;
    for (auto const &c : st.chain()) by_hash[c.tx_hash] = &c;
    m.blocks = st.chain().size();
    m.epoch  = st.epoch();

    double      sum = 0;
    std::size_t cnt = 0;
    m.delay_min_s   = std::numeric_limits<double>::infinity();
    m.delay_max_s   = 0;
    std::int64_t max_lat = 0;
    for (auto const &row : cfg_.latency_matrix_s)
      for (double x : row) max_lat = std::max<std::int64_t>(max_lat, std::llround(x * 1e6));
    m.delay_lo_s = cfg_.params.g - 2.0 * static_cast<double>(cfg_.skew_us) / 1e6;
    m.delay_hi_s = cfg_.params.g +
                   static_cast<double>(max_lat + cfg_.heartbeat_ms * 1000 + 3 * cfg_.bcast_max_us + 2 * cfg_.skew_us) / 1e6;

    for (auto const &t : txs_)
    {
      TxRecord r;
      r.id        = t.id;
      r.hash      = t.tx.hash;
      r.delayed   = t.delayed;
      r.submit_us = t.submit_us;
      r.declared  = t.declared;
      ++m.submitted;
      if (auto it = by_hash.find(t.tx.hash); it != by_hash.end())
      {
        auto const &c  = *it->second;
        r.status       = TxRecord::Status::Included;
        r.height       = c.block.height;
        r.forced       = c.forced;
        r.tau_ms       = c.consensus.t;
        r.tau_prime_us = c.tau_prime_us;
        r.arm          = c.arm;
        r.stamps       = c.stamps.size();
        if (!c.forced && c.arm == committee::ConsensusArm::Median && c.stamps.size() == cfg_.n)
        {
          auto s = c.stamps;
          std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(cfg_.n / 2), s.end());
          r.median_ok = s[cfg_.n / 2] == c.consensus;
          ++m.median_checked;
          m.median_mismatches += r.median_ok ? 0 : 1;
        }
        if (auto f = first_include_.find(t.tx.hash); f != first_include_.end()) r.first_include_us = f->second;
        ++m.included;
        if (auto d = r.delay_s(); d && !t.delayed)
        {
          sum += *d;
          ++cnt;
          m.delay_min_s = std::min(m.delay_min_s, *d);
          m.delay_max_s = std::max(m.delay_max_s, *d);
          double boost = time_boost(t.declared, cfg_.params);
          if (*d < m.delay_lo_s - boost - 1e-9 || *d > m.delay_hi_s - boost + 1e-9) ++m.delay_outliers;
        }
      }
      else if (auto d = st.discarded().find(t.tx.hash); d != st.discarded().end())
      {
        r.status = TxRecord::Status::Discarded;
        r.reason = committee::to_string(d->second);
        ++m.discarded;
        ++m.discard_reasons[r.reason];
      }
      else
        ++m.dropped;
      recs.push_back(r);
    }
    if (cnt == 0) m.delay_min_s = 0;
    m.delay_mean_s = cnt ? sum / static_cast<double>(cnt) : 0.0;
    m.liveness     = m.dropped == 0;
  }

  /// Transactions re-stamped in a later epoch must keep the relative order of their earlier stamps.
  static std::size_t restamp_violations(Replica const &r)
  {
    std::size_t bad = 0;
    auto const &h   = r.stamp_history();
    for (std::size_t e = 1; e < h.size(); ++e)
    {
      std::map<Digest, std::size_t> pos;
      for (std::size_t k = 0; k < h[e - 1].second.size(); ++k) pos[h[e - 1].second[k]] = k;
      std::optional<std::size_t> last;
      for (auto const &d : h[e].second)
      {
        auto it = pos.find(d);
        if (it == pos.end()) continue;
        if (last && it->second < *last) ++bad;
        last = it->second;
      }
    }
    return bad;
  }

  SimConfig                                   cfg_;
  std::mt19937_64                             rng_;
  std::shared_ptr<committee::MockThreshold>   scheme_;
  committee::L1Stub                           l1_;
  std::vector<std::unique_ptr<Replica>>       replicas_, retired_;
  std::vector<Node>                           nodes_;
  std::vector<std::vector<committee::TimestampTriple>> issued_;
  AtomicBroadcast                             bcast_;
  std::vector<SimTx>                          txs_;
  std::vector<ScriptEvent>                    generated_;
  std::map<Digest, std::int64_t>              first_include_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::int64_t                                now_ = 0;
  std::uint64_t                               seq_ = 0;
  bool                                        quiet_ = false;
  std::uint64_t                               epoch_noted_ = 0;
  std::size_t                                 cold_starts_ = 0;
  std::size_t                                 orphaned_blocks_ = 0;
  EventLog                                    log_;
};

/// Runs one scenario to completion.
inline RunResult run_scenario(SimConfig cfg)
{
  return Simulator(std::move(cfg)).run();
}

}  // namespace timeboost::sim
