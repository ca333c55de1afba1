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

#include "timeboost/score/pending_queue.hpp"

#include <nlohmann/json.hpp>

#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

namespace timeboost {

/// One line of the input file: {"id": str, "t": seconds, "bid": number, "payload": hex}.
inline Transaction parse_transaction_line(std::string const &line, std::size_t line_no)
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(line);
  }
  catch (nlohmann::json::parse_error const &e)
  {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError("expected a JSON object", line_no);

  auto require = [&](char const *key) -> nlohmann::json const & {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'", line_no);
    return *it;
  };

  auto const &id  = require("id");
  auto const &t   = require("t");
  auto const &bid = require("bid");
  if (!id.is_string()) throw ParseError("'id' must be a string", line_no);
  if (!t.is_number()) throw ParseError("'t' must be a number", line_no);
  if (!bid.is_number()) throw ParseError("'bid' must be a number", line_no);

  Bytes payload;
  if (auto it = j.find("payload"); it != j.end())
  {
    if (!it->is_string()) throw ParseError("'payload' must be a hex string", line_no);
    try
    {
      payload = from_hex(it->get<std::string>());
    }
    catch (ParseError const &e)
    {
      throw ParseError(e.what(), line_no);
    }
  }

  try
  {
    return Transaction(id.get<std::string>(), from_seconds(t.get<double>()), bid.get<double>(),
                       std::move(payload));
  }
  catch (InvalidInput const &e)
  {
    throw ParseError(e.what(), line_no);
  }
}

inline std::vector<Transaction> read_transactions(std::istream &in)
{
  std::vector<Transaction>        out;
  std::unordered_set<std::string> ids;
  std::string                     line;
  std::size_t                     line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto tx = parse_transaction_line(line, line_no);
    if (!ids.insert(tx.id).second) throw ParseError("duplicate id '" + tx.id + "'", line_no);
    out.push_back(std::move(tx));
  }
  return out;
}

struct FeedEntry
{
  std::string id;
  double      score        = 0.0;
  double      release_time = 0.0;
  std::size_t position     = 0;
};

/// Replays arrivals through the streaming sequencer and returns the published feed.
inline std::vector<FeedEntry> sequence_feed(std::vector<Transaction> txs, ScoreParams const &p)
{
  std::stable_sort(txs.begin(), txs.end(),
                   [](Transaction const &a, Transaction const &b) { return a.t < b.t; });

  PendingQueue           queue(p);
  std::vector<FeedEntry> feed;
  auto                   publish = [&](std::vector<Transaction> const &released) {
    for (auto const &tx : released)
      feed.push_back({tx.id, score(tx, p), release_time(tx, p), feed.size()});
  };

  for (auto &tx : txs)
  {
    Micros at = tx.t;
    publish(queue.emit(at));
    queue.push(std::move(tx));
  }
  publish(queue.drain());
  return feed;
}

inline void write_feed(std::ostream &out, std::vector<FeedEntry> const &feed)
{
  for (auto const &e : feed)
  {
    nlohmann::json j = {
        {"id", e.id}, {"score", e.score}, {"release_time", e.release_time}, {"position", e.position}};
    out << j.dump() << '\n';
  }
}

}  // namespace timeboost
