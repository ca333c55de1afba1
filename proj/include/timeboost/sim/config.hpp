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

#include "timeboost/committee/sequencer.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace timeboost::sim {

using committee::Behavior;
using committee::SequencerId;

struct BidDistribution
{
  enum class Kind
  {
    Zero,
    Exponential,
    Uniform,
  };
  Kind   kind  = Kind::Zero;
  double param = 0.0;  ///< mean for Exponential, upper bound for Uniform
};

/// One scripted event. `at_us` is simulation time.
struct ScriptEvent
{
  enum class Kind
  {
    Tx,            ///< user submission
    Delayed,       ///< L1 delayed-inbox message
    ForceInclude,  ///< force the next unconsumed delayed message
    Crash,
    Restart,
  };
  Kind         kind  = Kind::Tx;
  std::int64_t at_us = 0;

  std::size_t user = 0;  // Tx
  double      bid  = 0.0;
  std::optional<double> declared;  ///< declared fee when it differs from the plaintext fee
  bool        malformed = false;
  Bytes       payload;   // Tx, Delayed
  bool        observed  = true;  ///< Delayed: whether sequencers ever see it finalize
  SequencerId replica   = 0;     // Crash, Restart
  bool        cold      = false;  // Restart
};

struct Workload
{
  std::size_t     txs  = 0;
  double          rate = 10.0;  ///< Poisson submissions per second
  double          start_s = 0.5;
  BidDistribution bids;
  double          bad_fee_fraction   = 0.0;
  double          malformed_fraction = 0.0;
  std::size_t     payload_bytes      = 16;
};

struct SimConfig
{
  std::string name = "scenario";
  std::size_t n    = 5;
  std::size_t f    = 1;
  ScoreParams params;
  std::uint64_t seed = 1;

  std::int64_t bcast_min_us = 5'000;  ///< per-replica delivery delay, uniform
  std::int64_t bcast_max_us = 50'000;
  std::int64_t skew_us      = 0;      ///< each replica's clock offset lies in [-skew, +skew]
  std::int64_t heartbeat_ms = 10;

  std::size_t                       users = 4;
  std::int64_t                      user_latency_min_us = 1'000;
  std::int64_t                      user_latency_max_us = 30'000;
  std::vector<std::vector<double>>  latency_matrix_s;  ///< users x sequencers; overrides the range when set

  std::vector<Behavior> behaviors;  ///< size n
  std::int64_t          low_floor_ms = 0;

  std::int64_t batch_window_us = 60'000'000;
  std::size_t  batch_max_bytes = 64 * 1024;

  std::int64_t l1_finality_us        = 1'000'000;
  std::int64_t l1_watch_lag_us       = 100'000;
  std::int64_t force_threshold_us    = 5'000'000;

  std::int64_t duration_us  = 10'000'000;  ///< no submissions after this
  std::int64_t max_drain_us = 60'000'000;  ///< give up on liveness after duration + this

  Workload                 workload;
  std::vector<ScriptEvent> script;

  committee::CommitteeConfig committee() const
  {
    committee::CommitteeConfig c;
    c.n               = n;
    c.f               = f;
    c.score           = params;
    c.batch.window_us = batch_window_us;
    c.batch.max_bytes = batch_max_bytes;
    return c;
  }

  std::size_t faulty() const
  {
    std::size_t k = 0;
    for (auto b : behaviors) k += b != Behavior::Honest ? 1 : 0;
    return k;
  }

  std::int64_t user_latency_us(std::size_t u, SequencerId s) const
  {
    return std::llround(latency_matrix_s.at(u).at(s) * 1e6);
  }

  void validate() const
  {
    committee().validate();
    if (behaviors.size() != n) throw InvalidInput("behaviors must list one entry per sequencer");
    if (faulty() > f) throw InvalidInput("more faulty sequencers than F");
    if (bcast_min_us < 0 || bcast_max_us < bcast_min_us) throw InvalidInput("broadcast delay range must be 0 <= min <= max");
    if (skew_us < 0) throw InvalidInput("clock skew must be >= 0");
    if (heartbeat_ms <= 0) throw InvalidInput("heartbeat_ms must be positive");
    if (users == 0) throw InvalidInput("need at least one user");
    if (latency_matrix_s.size() != users) throw InvalidInput("latency matrix must have one row per user");
    for (auto const &row : latency_matrix_s)
    {
      if (row.size() != n) throw InvalidInput("latency matrix rows must have one entry per sequencer");
      for (double x : row)
        if (!(x >= 0.0)) throw InvalidInput("latencies must be >= 0");
    }
    if (l1_finality_us < 0 || l1_watch_lag_us < 0 || force_threshold_us < 0) throw InvalidInput("L1 delays must be >= 0");
    if (duration_us <= 0 || max_drain_us <= 0) throw InvalidInput("duration and max_drain must be positive");
    if (workload.rate <= 0.0) throw InvalidInput("workload rate must be positive");
    for (auto const &e : script)
    {
      if (e.at_us < 0) throw InvalidInput("script times must be >= 0");
      if (e.kind == ScriptEvent::Kind::Tx && (e.user >= users || !(e.bid >= 0.0)))
        throw InvalidInput("script tx needs a valid user and a bid >= 0");
      if ((e.kind == ScriptEvent::Kind::Crash || e.kind == ScriptEvent::Kind::Restart) && e.replica >= n)
        throw InvalidInput("script replica out of range");
    }
  }
};

namespace detail {

inline std::int64_t seconds_to_us(nlohmann::json const &j, char const *key, std::int64_t fallback)
{
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw InvalidInput(std::string("'") + key + "' must be a number");
  return std::llround(j.at(key).get<double>() * 1e6);
}

inline std::int64_t ms_to_us(nlohmann::json const &j, char const *key, std::int64_t fallback)
{
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw InvalidInput(std::string("'") + key + "' must be a number");
  return std::llround(j.at(key).get<double>() * 1e3);
}

inline void reject_unknown(nlohmann::json const &j, std::initializer_list<char const *> known, std::string const &where)
{
  for (auto const &[k, v] : j.items())
  {
    bool ok = false;
    for (auto const *name : known) ok = ok || k == name;
    if (!ok) throw InvalidInput("unknown key '" + k + "' in " + where);
  }
}

inline BidDistribution parse_bids(nlohmann::json const &j)
{
  BidDistribution d;
  if (j.is_string() && j.get<std::string>() == "zero") return d;
  if (!j.is_object()) throw InvalidInput("bids must be \"zero\" or an object");
  reject_unknown(j, {"dist", "mean", "max"}, "bids");
  auto dist = j.value("dist", std::string("zero"));
  if (dist == "zero") return d;
  if (dist == "exponential")
  {
    d.kind  = BidDistribution::Kind::Exponential;
    d.param = j.value("mean", 1.0);
  }
  else if (dist == "uniform")
  {
    d.kind  = BidDistribution::Kind::Uniform;
    d.param = j.value("max", 1.0);
  }
  else
    throw InvalidInput("unknown bid distribution '" + dist + "'");
  if (!(d.param > 0.0)) throw InvalidInput("bid distribution parameter must be positive");
  return d;
}

inline ScriptEvent parse_event(nlohmann::json const &j)
{
  reject_unknown(j, {"at_s", "tx", "delayed", "observed", "force_include", "crash", "restart", "mode"}, "script event");
  ScriptEvent e;
  if (!j.contains("at_s")) throw InvalidInput("script event needs 'at_s'");
  e.at_us = seconds_to_us(j, "at_s", 0);
  if (j.contains("tx"))
  {
    auto const &t = j.at("tx");
    reject_unknown(t, {"user", "bid", "declared", "malformed", "payload"}, "script tx");
    e.kind = ScriptEvent::Kind::Tx;
    e.user = t.value("user", std::size_t{0});
    e.bid  = t.value("bid", 0.0);
    if (t.contains("declared")) e.declared = t.at("declared").get<double>();
    e.malformed = t.value("malformed", false);
    e.payload   = from_hex(t.value("payload", std::string{}));
  }
  else if (j.contains("delayed"))
  {
    e.kind     = ScriptEvent::Kind::Delayed;
    e.payload  = from_hex(j.at("delayed").get<std::string>());
    e.observed = j.value("observed", true);
  }
  else if (j.contains("force_include"))
    e.kind = ScriptEvent::Kind::ForceInclude;
  else if (j.contains("crash"))
  {
    e.kind    = ScriptEvent::Kind::Crash;
    e.replica = j.at("crash").get<SequencerId>();
  }
  else if (j.contains("restart"))
  {
    e.kind    = ScriptEvent::Kind::Restart;
    e.replica = j.at("restart").get<SequencerId>();
    auto mode = j.value("mode", std::string("warm"));
    if (mode != "warm" && mode != "cold") throw InvalidInput("restart mode must be warm or cold");
    e.cold = mode == "cold";
  }
  else
    throw InvalidInput("script event has no action");
  return e;
}

inline nlohmann::json event_to_json(ScriptEvent const &e)
{
  nlohmann::json j{{"at_s", static_cast<double>(e.at_us) / 1e6}};
  switch (e.kind)
  {
  case ScriptEvent::Kind::Tx:
    j["tx"] = {{"user", e.user}, {"bid", e.bid}, {"malformed", e.malformed}, {"payload", to_hex(e.payload)}};
    if (e.declared) j["tx"]["declared"] = *e.declared;
    break;
  case ScriptEvent::Kind::Delayed:
    j["delayed"]  = to_hex(e.payload);
    j["observed"] = e.observed;
    break;
  case ScriptEvent::Kind::ForceInclude: j["force_include"] = true; break;
  case ScriptEvent::Kind::Crash: j["crash"] = e.replica; break;
  case ScriptEvent::Kind::Restart:
    j["restart"] = e.replica;
    j["mode"]    = e.cold ? "cold" : "warm";
    break;
  }
  return j;
}

}  // namespace detail

/// Parses a scenario document. Unknown keys are rejected; omitted keys take defaults.
/// A random latency matrix is drawn from `seed` when none is given.
inline SimConfig parse_config(nlohmann::json const &j)
{
  using detail::ms_to_us;
  using detail::seconds_to_us;
  if (!j.is_object()) throw InvalidInput("scenario must be a JSON object");
  detail::reject_unknown(j,
                         {"name", "n", "f", "g", "c", "seed", "broadcast_delay_ms", "clock_skew_ms", "heartbeat_ms",
                          "users", "user_latency_ms", "latency_matrix_s", "behaviors", "low_floor_ms", "batch_window_s",
                          "batch_max_bytes", "l1", "duration_s", "max_drain_s", "workload", "script"},
                         "scenario");
  SimConfig c;
  try
  {
    c.name     = j.value("name", c.name);
    c.n        = j.value("n", c.n);
    c.f        = j.value("f", c.f);
    c.params.g = j.value("g", c.params.g);
    c.params.c = j.value("c", c.params.c);
    c.seed     = j.value("seed", c.seed);
    if (j.contains("broadcast_delay_ms"))
    {
      auto const &d = j.at("broadcast_delay_ms");
      if (!d.is_array() || d.size() != 2) throw InvalidInput("broadcast_delay_ms must be [min, max]");
      c.bcast_min_us = std::llround(d[0].get<double>() * 1e3);
      c.bcast_max_us = std::llround(d[1].get<double>() * 1e3);
    }
    c.skew_us      = ms_to_us(j, "clock_skew_ms", c.skew_us);
    c.heartbeat_ms = j.value("heartbeat_ms", c.heartbeat_ms);
    c.users        = j.value("users", c.users);
    if (j.contains("user_latency_ms"))
    {
      auto const &d = j.at("user_latency_ms");
      if (!d.is_array() || d.size() != 2) throw InvalidInput("user_latency_ms must be [min, max]");
      c.user_latency_min_us = std::llround(d[0].get<double>() * 1e3);
      c.user_latency_max_us = std::llround(d[1].get<double>() * 1e3);
      if (c.user_latency_min_us < 0 || c.user_latency_max_us < c.user_latency_min_us)
        throw InvalidInput("user_latency_ms must satisfy 0 <= min <= max");
    }
    if (j.contains("latency_matrix_s")) c.latency_matrix_s = j.at("latency_matrix_s").get<std::vector<std::vector<double>>>();
    c.behaviors.assign(c.n, Behavior::Honest);
    if (j.contains("behaviors"))
    {
      auto const &b = j.at("behaviors");
      if (b.is_array())
      {
        if (b.size() != c.n) throw InvalidInput("behaviors must list one entry per sequencer");
        for (std::size_t i = 0; i < c.n; ++i) c.behaviors[i] = committee::behavior_from_string(b[i].get<std::string>());
      }
      else if (b.is_object())
        for (auto const &[k, v] : b.items())
        {
          auto idx = std::stoul(k);
          if (idx >= c.n) throw InvalidInput("behavior index " + k + " out of range");
          c.behaviors[idx] = committee::behavior_from_string(v.get<std::string>());
        }
      else
        throw InvalidInput("behaviors must be an array or an object");
    }
    c.low_floor_ms    = j.value("low_floor_ms", c.low_floor_ms);
    c.batch_window_us = seconds_to_us(j, "batch_window_s", c.batch_window_us);
    c.batch_max_bytes = j.value("batch_max_bytes", c.batch_max_bytes);
    if (j.contains("l1"))
    {
      auto const &l = j.at("l1");
      detail::reject_unknown(l, {"finality_s", "watch_lag_ms", "force_threshold_s"}, "l1");
      c.l1_finality_us     = seconds_to_us(l, "finality_s", c.l1_finality_us);
      c.l1_watch_lag_us    = ms_to_us(l, "watch_lag_ms", c.l1_watch_lag_us);
      c.force_threshold_us = seconds_to_us(l, "force_threshold_s", c.force_threshold_us);
    }
    c.duration_us  = seconds_to_us(j, "duration_s", c.duration_us);
    c.max_drain_us = seconds_to_us(j, "max_drain_s", c.max_drain_us);
    if (j.contains("workload"))
    {
      auto const &w = j.at("workload");
      detail::reject_unknown(w, {"txs", "rate_per_s", "start_s", "bids", "bad_fee_fraction", "malformed_fraction", "payload_bytes"},
                             "workload");
      c.workload.txs                = w.value("txs", c.workload.txs);
      c.workload.rate               = w.value("rate_per_s", c.workload.rate);
      c.workload.start_s            = w.value("start_s", c.workload.start_s);
      c.workload.bad_fee_fraction   = w.value("bad_fee_fraction", 0.0);
      c.workload.malformed_fraction = w.value("malformed_fraction", 0.0);
      c.workload.payload_bytes      = w.value("payload_bytes", c.workload.payload_bytes);
      if (w.contains("bids")) c.workload.bids = detail::parse_bids(w.at("bids"));
    }
    if (j.contains("script"))
      for (auto const &e : j.at("script")) c.script.push_back(detail::parse_event(e));
  }
  catch (nlohmann::json::exception const &e)
  {
    throw InvalidInput(std::string("scenario schema error: ") + e.what());
  }

  if (c.latency_matrix_s.empty())
  {
    std::mt19937_64                             rng(c.seed ^ 0x5eed1a7e);
    std::uniform_int_distribution<std::int64_t> lat(c.user_latency_min_us, c.user_latency_max_us);
    c.latency_matrix_s.assign(c.users, std::vector<double>(c.n));
    for (auto &row : c.latency_matrix_s)
      for (auto &x : row) x = static_cast<double>(lat(rng)) / 1e6;
  }
  c.validate();
  return c;
}

inline SimConfig load_config(std::string const &path)
{
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open scenario '" + path + "'");
  nlohmann::json j;
  try
  {
    in >> j;
  }
  catch (nlohmann::json::parse_error const &e)
  {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what(), 0);
  }
  return parse_config(j);
}

/// Resolved configuration, for printing.
inline nlohmann::json to_json(SimConfig const &c)
{
  nlohmann::json j;
  j["name"]               = c.name;
  j["n"]                  = c.n;
  j["f"]                  = c.f;
  j["g"]                  = c.params.g;
  j["c"]                  = c.params.c;
  j["seed"]               = c.seed;
  j["broadcast_delay_ms"] = {c.bcast_min_us / 1e3, c.bcast_max_us / 1e3};
  j["clock_skew_ms"]      = c.skew_us / 1e3;
  j["heartbeat_ms"]       = c.heartbeat_ms;
  j["users"]              = c.users;
  j["latency_matrix_s"]   = c.latency_matrix_s;
  std::vector<std::string> b;
  for (auto x : c.behaviors) b.emplace_back(committee::to_string(x));
  j["behaviors"]       = b;
  j["low_floor_ms"]    = c.low_floor_ms;
  j["batch_window_s"]  = c.batch_window_us / 1e6;
  j["batch_max_bytes"] = c.batch_max_bytes;
  j["l1"] = {{"finality_s", c.l1_finality_us / 1e6}, {"watch_lag_ms", c.l1_watch_lag_us / 1e3},
             {"force_threshold_s", c.force_threshold_us / 1e6}};
  j["duration_s"]  = c.duration_us / 1e6;
  j["max_drain_s"] = c.max_drain_us / 1e6;
  j["workload"]    = {{"txs", c.workload.txs},
                      {"rate_per_s", c.workload.rate},
                      {"start_s", c.workload.start_s},
                      {"bad_fee_fraction", c.workload.bad_fee_fraction},
                      {"malformed_fraction", c.workload.malformed_fraction},
                      {"payload_bytes", c.workload.payload_bytes}};
  auto const &bd = c.workload.bids;
  switch (bd.kind)
  {
  case BidDistribution::Kind::Zero: j["workload"]["bids"] = "zero"; break;
  case BidDistribution::Kind::Exponential: j["workload"]["bids"] = {{"dist", "exponential"}, {"mean", bd.param}}; break;
  case BidDistribution::Kind::Uniform: j["workload"]["bids"] = {{"dist", "uniform"}, {"max", bd.param}}; break;
  }
  j["script"] = nlohmann::json::array();
  for (auto const &e : c.script) j["script"].push_back(detail::event_to_json(e));
  return j;
}

}  // namespace timeboost::sim
