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

#include "timeboost/econ/benchmark.hpp"
#include "timeboost/econ/expost.hpp"
#include "timeboost/econ/revenue.hpp"
#include "timeboost/econ/separation.hpp"
#include "timeboost/score/jsonl.hpp"
#include "timeboost/sim/simulator.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

using namespace timeboost;

constexpr int kOk        = 0;
constexpr int kViolation = 1;
constexpr int kUsage     = 2;

/// Where a subcommand writes its result; stdout unless --out is given.
class Output
{
public:
  explicit Output(std::string const &path)
  {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw InvalidInput("cannot open '" + path + "' for writing");
  }

  std::ostream &stream()
  {
    return file_.is_open() ? static_cast<std::ostream &>(file_) : std::cout;
  }

private:
  std::ofstream file_;
};

/// Every run prints its resolved configuration to stderr as one JSON line.
void print_config(char const *command, nlohmann::json cfg)
{
  cfg["command"] = command;
  std::cerr << "config " << cfg.dump() << '\n';
}

struct Csv
{
  std::ostream &out;

  explicit Csv(std::ostream &o)
    : out(o)
  {
    out << std::setprecision(12);
  }

  template <class... T>
  void row(T const &...cols)
  {
    std::size_t i = 0;
    ((out << (i++ ? "," : "") << cols), ...);
    out << '\n';
  }
};

std::vector<double> parse_list(std::string const &s, char const *what)
{
  std::vector<double> out;
  std::stringstream   in(s);
  std::string         item;
  while (std::getline(in, item, ','))
  {
    std::size_t used = 0;
    double      x    = 0.0;
    try
    {
      x = std::stod(item, &used);
    }
    catch (std::exception const &)
    {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InvalidInput(std::string("bad number '") + item + "' in " + what);
    out.push_back(x);
  }
  if (out.empty()) throw InvalidInput(std::string(what) + " is empty");
  return out;
}

// ------------------------------------------------------------------ sequence

struct SequenceArgs
{
  std::string input, out;
  double      g = 0.5, c = 1.0;
};

int cmd_sequence(SequenceArgs const &a)
{
  ScoreParams p{a.g, a.c};
  p.validate();
  print_config("sequence", {{"input", a.input}, {"g", p.g}, {"c", p.c}, {"out", a.out}});
  std::ifstream in(a.input);
  if (!in) throw InvalidInput("cannot read '" + a.input + "'");
  auto   feed = sequence_feed(read_transactions(in), p);
  Output out(a.out);
  write_feed(out.stream(), feed);
  return kOk;
}

// ------------------------------------------------------------------ sim

struct SimArgs
{
  std::string                  config, out, log, csv;
  std::optional<double>        g, c;
  std::optional<std::size_t>   n, f;
  std::optional<std::uint64_t> seed;
};

int cmd_sim(SimArgs const &a)
{
  std::ifstream in(a.config);
  if (!in) throw InvalidInput("cannot read '" + a.config + "'");
  nlohmann::json doc;
  try
  {
    doc = nlohmann::json::parse(in);
  }
  catch (nlohmann::json::parse_error const &e)
  {
    throw InvalidInput(a.config + ": " + e.what());
  }
  if (a.g) doc["g"] = *a.g;
  if (a.c) doc["c"] = *a.c;
  if (a.n) doc["n"] = *a.n;
  if (a.f) doc["f"] = *a.f;
  if (a.seed) doc["seed"] = *a.seed;
  auto cfg = sim::parse_config(doc);
  print_config("sim", sim::to_json(cfg));

  auto result = sim::run_scenario(cfg);
  if (!a.log.empty())
  {
    Output log(a.log);
    result.log.write_jsonl(log.stream());
  }
  if (!a.csv.empty())
  {
    Output file(a.csv);
    Csv    csv(file.stream());
    csv.row("id", "status", "reason", "height", "forced", "submit_s", "bid", "tau_s", "tau_prime_s", "arm", "delay_s");
    for (auto const &t : result.log.txs)
    {
      auto delay = t.delay_s();
      csv.row(t.id, sim::to_string(t.status), t.reason, t.height, t.forced ? 1 : 0, t.submit_us / 1e6, t.declared,
              t.tau_ms / 1e3, t.tau_prime_us / 1e6, committee::to_string(t.arm), delay ? std::to_string(*delay) : "");
    }
  }
  Output out(a.out);
  out.stream() << result.metrics.to_json().dump(2) << '\n';
  if (!result.metrics.ok())
  {
    std::cerr << "invariant violated: " << result.metrics.violation() << '\n';
    return kViolation;
  }
  return kOk;
}

// ------------------------------------------------------------------ econ

struct EconArgs
{
  std::string   task, out;
  double        g = 10.0, delta = 0.1, step = 1e-3;
  int           n = 2, points = 101;
  std::string   g_list = "1000,10000,100000,1000000", n_list = "2,3,5";
  std::size_t   trials = 1'000'000;
  std::uint64_t seed   = 1;
};

int cmd_econ(EconArgs const &a)
{
  Output out(a.out);
  Csv    csv(out.stream());
  if (a.task == "bg_sweep")
  {
    auto gs = parse_list(a.g_list, "--g-list");
    print_config("econ", {{"task", a.task}, {"g", gs}, {"n", a.n}, {"step", a.step}});
    csv.row("g", "b_g", "latency_share");
    for (double g : gs)
    {
      auto b = econ::bidding_share(g, a.n, {a.step, 1});
      csv.row(g, b.bid_share, b.latency_share);
    }
  }
  else if (a.task == "curves")
  {
    print_config("econ", {{"task", a.task}, {"g", a.g}, {"n", a.n}, {"step", a.step}});
    auto curve = econ::expost_equilibrium(a.g, a.n, {a.step, 1});
    csv.row("v", "s", "m", "latency_spend", "total_cost");
    for (auto const &p : curve.points) csv.row(p.v, p.s, p.m, p.latency_spend, p.total_cost);
  }
  else if (a.task == "partial_sep")
  {
    print_config("econ", {{"task", a.task}, {"g", a.g}, {"delta", a.delta}, {"points", a.points}});
    auto eq = econ::partial_separation_solve(a.g, a.delta);
    csv.row("v", "pi1", "pi2", "signal1", "signal2", "full_separation");
    for (auto const &p : eq.curve(a.points))
      csv.row(p.v, p.pi1, p.pi2, p.signal1, p.signal2, econ::full_separation_bid(p.v, a.g));
  }
  else if (a.task == "rev_equiv")
  {
    auto ns = parse_list(a.n_list, "--n-list");
    print_config("econ", {{"task", a.task}, {"g", a.g}, {"n", ns}});
    csv.row("technology", "n", "expected_spend", "total_spend", "closed_form_total", "max_cost_deviation");
    for (double nd : ns)
    {
      int n = static_cast<int>(nd);
      if (n != nd || n < 2) throw OutOfDomain("player counts must be integers >= 2");
      for (auto const &tech : {econ::SignalTech::time_boost(a.g), econ::SignalTech::latency_only(),
                               econ::SignalTech::shifted_linear(1.0)})
      {
        auto r = econ::revenue_equivalence_check(tech, n);
        csv.row(tech.name, n, r.expected_spend, r.total_spend, (n - 1.0) / (n + 1.0), r.max_deviation);
      }
    }
  }
  else if (a.task == "payoff_equiv")
  {
    print_config("econ", {{"task", a.task}, {"n", a.n}, {"trials", a.trials}, {"seed", a.seed}});
    auto r = econ::payoff_equivalence_mc(econ::ValuationModel::uniform(), a.n, a.trials, a.seed);
    csv.row("n", "trials", "allpay", "firstprice", "se_allpay", "se_firstprice", "se_diff", "equivalent_3se");
    csv.row(a.n, r.trials, r.allpay, r.firstprice, r.se_allpay, r.se_firstprice, r.se_diff, r.equivalent() ? 1 : 0);
    if (!r.equivalent()) return kViolation;
  }
  else
    throw InvalidInput("unknown econ task '" + a.task + "'");
  return kOk;
}

// ------------------------------------------------------------------ bench

struct BenchArgs
{
  std::string   out;
  double        g = 0.5, s1 = 0.1, s2 = 0.2, bid_mean = 0.0;
  std::size_t   trials = 100'000;
  std::uint64_t seed   = 1;
};

int cmd_bench(BenchArgs const &a)
{
  print_config("bench", {{"g", a.g}, {"s1", a.s1}, {"s2", a.s2}, {"trials", a.trials}, {"seed", a.seed},
                         {"bid_mean", a.bid_mean}});
  if (a.bid_mean < 0.0) throw InvalidInput("--bid-mean must be non-negative");
  auto bids = a.bid_mean > 0.0 ? econ::exponential_bids(a.bid_mean) : econ::zero_bids();
  auto   r = econ::block_auction_compare(a.g, a.s1, a.s2, bids, a.trials, a.seed);
  Output out(a.out);
  Csv    csv(out.stream());
  csv.row("g", "s1", "s2", "trials", "exclusion_window", "ethereum_window", "latency_factor", "batch_avg_delay",
          "batch_delay_se", "continuous_avg_delay");
  csv.row(a.g, a.s1, a.s2, r.trials, r.exclusion_window, r.ethereum_window, r.latency_factor, r.batch_avg_delay,
          r.batch_delay_se, r.continuous_avg_delay);
  return kOk;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Time-boost transaction ordering: sequencer, committee simulator and equilibrium tools"};
  app.require_subcommand(1);

  SequenceArgs seq;
  auto        *s = app.add_subcommand("sequence", "Order a JSONL transaction file into a feed");
  s->add_option("input", seq.input, "JSONL with {id, t, bid[, payload]} per line")->required();
  s->add_option("--g", seq.g, "maximum time boost in seconds");
  s->add_option("--c", seq.c, "boost curve constant");
  s->add_option("--out", seq.out, "output path (default stdout)");

  SimArgs sim;
  auto   *m = app.add_subcommand("sim", "Run a committee scenario; exit 1 if a run invariant fails");
  m->add_option("--config", sim.config, "scenario JSON")->required();
  m->add_option("--out", sim.out, "metrics JSON path (default stdout)");
  m->add_option("--log", sim.log, "event log JSONL path");
  m->add_option("--csv", sim.csv, "per-transaction CSV path");
  m->add_option("--g", sim.g);
  m->add_option("--c", sim.c);
  m->add_option("--n", sim.n);
  m->add_option("--f", sim.f);
  m->add_option("--seed", sim.seed);

  EconArgs econ;
  auto    *e = app.add_subcommand("econ", "Emit equilibrium tables as CSV");
  e->add_option("task", econ.task, "bg_sweep | curves | partial_sep | rev_equiv | payoff_equiv")
      ->required()
      ->check(CLI::IsMember({"bg_sweep", "curves", "partial_sep", "rev_equiv", "payoff_equiv"}));
  e->add_option("--g", econ.g, "maximum time boost");
  e->add_option("--g-list", econ.g_list, "comma-separated g values for bg_sweep");
  e->add_option("--n", econ.n, "number of players");
  e->add_option("--n-list", econ.n_list, "comma-separated player counts for rev_equiv");
  e->add_option("--delta", econ.delta, "latency gap for partial_sep");
  e->add_option("--points", econ.points, "valuation grid points for partial_sep");
  e->add_option("--step", econ.step, "ODE grid step");
  e->add_option("--trials", econ.trials, "Monte Carlo trials");
  e->add_option("--seed", econ.seed);
  e->add_option("--out", econ.out, "output path (default stdout)");

  BenchArgs bench;
  auto     *b = app.add_subcommand("bench", "Compare block auctions with continuous time boost");
  b->add_option("--g", bench.g, "block length and maximum boost");
  b->add_option("--s1", bench.s1, "latency of the faster party");
  b->add_option("--s2", bench.s2, "latency of the slower party");
  b->add_option("--bid-mean", bench.bid_mean, "mean of exponential bids; 0 means no bids");
  b->add_option("--trials", bench.trials);
  b->add_option("--seed", bench.seed);
  b->add_option("--out", bench.out, "output path (default stdout)");

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::CallForHelp const &err)
  {
    return app.exit(err);
  }
  catch (CLI::ParseError const &err)
  {
    app.exit(err);
    return kUsage;
  }

  try
  {
    if (*s) return cmd_sequence(seq);
    if (*m) return cmd_sim(sim);
    if (*e) return cmd_econ(econ);
    if (*b) return cmd_bench(bench);
  }
  catch (SolverFailure const &err)
  {
    std::cerr << "error: " << err.what() << '\n';
    return kViolation;
  }
  catch (std::exception const &err)
  {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
