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

#include "timeboost/committee/sequencer.hpp"

#include <gtest/gtest.h>

#include <deque>
#include <random>

using namespace timeboost;
using namespace timeboost::committee;

namespace {

// ---------------------------------------------------------------- oracles

/// Textbook recursive Merkle tree hash over leaf hashes (largest power of two below n splits).
Digest mth(std::vector<Digest> const &leaves, std::size_t lo, std::size_t hi)
{
  if (hi - lo == 0) return sha256({});
  if (hi - lo == 1) return leaves[lo];
  std::size_t k = 1;
  while (k * 2 < hi - lo) k *= 2;
  return merkle_node(mth(leaves, lo, lo + k), mth(leaves, lo + k, hi));
}

/// Median of an odd number of triples by full sort.
TimestampTriple brute_median(std::vector<TimestampTriple> v)
{
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

EncTx user_tx(double fee, std::string const &payload, ThresholdScheme const &s, std::optional<double> declared = {})
{
  return submit(UserTx{fee, to_bytes(payload)}.encode(), declared.value_or(fee), s);
}

Digest leaf_of(int i)
{
  return merkle_leaf(to_bytes("leaf-" + std::to_string(i)));
}

/// Flips bit `bit` of digest `d`.
Digest flipped(Digest d, std::size_t bit)
{
  d[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
  return d;
}

// ---------------------------------------------------------------- synchronous cluster

/// Every broadcast is delivered to every live replica immediately, in one global order.
struct Cluster
{
  CommitteeConfig                           cfg;
  std::shared_ptr<MockThreshold>            scheme;
  L1Stub                                    l1;
  std::vector<std::unique_ptr<Replica>>     reps;
  std::vector<bool>                         down;
  std::deque<std::pair<SequencerId, BroadcastMsg>> queue;
  std::vector<std::pair<SequencerId, BroadcastMsg>> log;
  std::int64_t                              now_ms = 1'000'000;

  Cluster(std::size_t n, std::size_t f, std::int64_t batch_window_us = 60'000'000,
          std::vector<Behavior> behaviors = {}, std::int64_t force_threshold_us = 3'000'000)
    : scheme(std::make_shared<MockThreshold>(f))
    , l1(f, force_threshold_us)
  {
    cfg.n               = n;
    cfg.f               = f;
    cfg.batch.window_us = batch_window_us;
    behaviors.resize(n, Behavior::Honest);
    for (SequencerId i = 0; i < n; ++i)
    {
      Replica::Options o;
      o.behavior = behaviors[i];
      o.floor_ms = 0;
      reps.push_back(std::make_unique<Replica>(i, cfg, scheme, &l1, o));
    }
    down.assign(n, false);
  }

  void send(SequencerId from, Replica::Out const &out)
  {
    for (auto const &m : out) queue.emplace_back(from, m);
  }

  void pump()
  {
    while (!queue.empty())
    {
      auto [from, m] = queue.front();
      queue.pop_front();
      log.emplace_back(from, m);
      for (SequencerId j = 0; j < reps.size(); ++j)
        if (!down[j]) send(j, reps[j]->on_deliver(from, m, now_ms));
    }
  }

  void submit_tx(EncTx const &tx)
  {
    for (SequencerId j = 0; j < reps.size(); ++j)
      if (!down[j]) send(j, reps[j]->on_user_tx(tx, now_ms));
    pump();
  }

  void advance(std::int64_t ms)
  {
    for (std::int64_t k = 0; k < ms; k += 10)
    {
      now_ms += std::min<std::int64_t>(10, ms - k);
      for (SequencerId j = 0; j < reps.size(); ++j)
        if (!down[j]) send(j, reps[j]->on_tick(now_ms));
      pump();
    }
  }

  /// Posts, in order, every signed batch of replica 0 that L1 has not seen.
  std::size_t post_batches()
  {
    std::size_t posted = 0;
    for (auto const &b : reps[0]->state().batches())
      if (b.signed_ && b.batch.header.block_number > l1.last_header().block_number)
      {
        auto r = l1.post_batch(b.batch, b.signatures, now_ms * 1000);
        EXPECT_TRUE(r.accepted) << r.reason;
        posted += r.accepted ? 1 : 0;
      }
    return posted;
  }

  SequencerState const &state(SequencerId i = 0) const
  {
    return reps[i]->state();
  }
};

}  // namespace

// ---------------------------------------------------------------- digests and Merkle

TEST(Digest, Sha256KnownVectors)
{
  EXPECT_EQ(to_hex(sha256(to_bytes("abc"))), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(to_hex(merkle_empty_root()), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Merkle, SingleLeafRootIsLeafHash)
{
  MerkleAccumulator acc;
  acc.append(leaf_of(0));
  EXPECT_EQ(acc.root(), leaf_of(0));
  MerkleTree t;
  t.append(leaf_of(0));
  EXPECT_EQ(t.root(), leaf_of(0));
}

TEST(Merkle, ProofOfLeafThreeOfEightHasLengthThree)
{
  MerkleTree t;
  for (int i = 0; i < 8; ++i) t.append(leaf_of(i));
  auto path = t.prove(3, 8);
  EXPECT_EQ(path.size(), 3u);
  EXPECT_TRUE(merkle_verify(leaf_of(3), 3, 8, path, t.root()));
}

TEST(Merkle, AccumulatorAndTreeMatchRecursiveOracle)
{
  MerkleAccumulator   acc;
  MerkleTree          t;
  std::vector<Digest> leaves;
  for (int i = 0; i < 70; ++i)
  {
    acc.append(leaf_of(i));
    t.append(leaf_of(i));
    leaves.push_back(leaf_of(i));
    auto want = mth(leaves, 0, leaves.size());
    ASSERT_EQ(acc.root(), want) << "n=" << leaves.size();
    ASSERT_EQ(t.root(), want);
    // peaks are one per set bit, so storage is logarithmic
    ASSERT_EQ(acc.peaks().size(), static_cast<std::size_t>(std::popcount(leaves.size())));
  }
}

TEST(Merkle, FiftyLeafProofsVerifyAndEveryBitFlipFails)
{
  MerkleTree t;
  for (int i = 0; i < 50; ++i) t.append(leaf_of(i));
  auto root = t.root();
  for (std::size_t i = 0; i < 50; ++i)
  {
    auto path = t.prove(i, 50);
    ASSERT_TRUE(merkle_verify(leaf_of(static_cast<int>(i)), i, 50, path, root)) << i;
    EXPECT_LE(path.size(), 6u);
    for (std::size_t b = 0; b < 256; ++b)
    {
      ASSERT_FALSE(merkle_verify(flipped(leaf_of(static_cast<int>(i)), b), i, 50, path, root));
      ASSERT_FALSE(merkle_verify(leaf_of(static_cast<int>(i)), i, 50, path, flipped(root, b)));
      for (std::size_t k = 0; k < path.size(); ++k)
      {
        auto bad = path;
        bad[k]   = flipped(bad[k], b);
        ASSERT_FALSE(merkle_verify(leaf_of(static_cast<int>(i)), i, 50, bad, root));
      }
    }
    ASSERT_FALSE(merkle_verify(leaf_of(static_cast<int>(i)), (i + 1) % 50, 50, path, root));
  }
}

TEST(Merkle, EveryHistoricalBlockProvableAgainstLatestRoot)
{
  MerkleTree t;
  for (int i = 0; i < 37; ++i) t.append(leaf_of(i));
  for (std::size_t n = 1; n <= 37; ++n)
    for (std::size_t i = 0; i < n; ++i)
      ASSERT_TRUE(merkle_verify(leaf_of(static_cast<int>(i)), i, 37, t.prove(i, 37), t.root()));
}

TEST(Merkle, PrefixConsistencyBetweenAnyTwoRoots)
{
  MerkleTree t;
  for (int i = 0; i < 40; ++i) t.append(leaf_of(i));
  for (std::size_t n = 1; n <= 40; ++n)
    for (std::size_t m = 1; m <= n; ++m)
    {
      auto proof = t.prove_consistency(m, n);
      ASSERT_TRUE(merkle_verify_prefix(m, t.root(m), n, t.root(n), proof)) << m << " " << n;
      if (m == n) continue;
      ASSERT_FALSE(merkle_verify_prefix(m, flipped(t.root(m), 5), n, t.root(n), proof));
      ASSERT_FALSE(merkle_verify_prefix(m, t.root(m), n, flipped(t.root(n), 200), proof));
      for (std::size_t k = 0; k < proof.size(); ++k)
      {
        auto bad = proof;
        bad[k]   = flipped(bad[k], 77);
        ASSERT_FALSE(merkle_verify_prefix(m, t.root(m), n, t.root(n), bad));
      }
    }
}

TEST(Merkle, ConsistencyFailsForDivergentHistories)
{
  MerkleTree a, b;
  for (int i = 0; i < 12; ++i)
  {
    a.append(leaf_of(i));
    b.append(i == 4 ? leaf_of(1000) : leaf_of(i));
  }
  EXPECT_FALSE(merkle_verify_prefix(6, b.root(6), 12, a.root(12), a.prove_consistency(6, 12)));
}

TEST(Merkle, AccumulatorSnapshotRoundTrip)
{
  MerkleAccumulator acc;
  for (int i = 0; i < 23; ++i) acc.append(leaf_of(i));
  ByteWriter w;
  acc.encode(w);
  ByteReader r(w.bytes());
  auto       back = MerkleAccumulator::decode(r);
  EXPECT_EQ(back.root(), acc.root());
  EXPECT_EQ(back.size(), acc.size());
}

// ---------------------------------------------------------------- serialization

TEST(Serialization, DelayedBlockGoldenVector)
{
  SequencerBlock b;
  b.height        = 12;
  b.delayed_count = 8;
  b.timestamp     = 1'700'000'000;  // 0x6553F100
  b.tx            = to_bytes("ignored");
  EXPECT_EQ(to_hex(serialize_block(b, 7)), "00"
                                            "000000006553f100"
                                            "0000000000000007");
}

TEST(Serialization, NormalBlockGoldenVector)
{
  SequencerBlock b;
  b.height        = 3;
  b.delayed_count = 2;
  b.timestamp     = 10;
  b.tx            = {0xde, 0xad, 0xbe};
  EXPECT_EQ(to_hex(serialize_block(b, 2)), "01"
                                            "000000000000000a"
                                            "00000003"
                                            "deadbe");
}

TEST(Serialization, DelayedCountMayGrowByOneAtMost)
{
  SequencerBlock b;
  b.delayed_count = 5;
  EXPECT_THROW(serialize_block(b, 3), ContractViolation);
}

TEST(Serialization, RoundTripOnThousandRandomBlocks)
{
  std::mt19937_64                 rng(99);
  std::vector<Bytes>              inbox;
  std::vector<SequencerBlock>     chain;
  MerkleTree                      tree;
  Bytes                           stream;
  std::uint64_t                   dc = 0, ts = 1000;
  for (int i = 0; i < 1000; ++i)
  {
    SequencerBlock b;
    b.height = chain.size() + 1;
    ts += rng() % 3;
    b.timestamp = ts;
    if (rng() % 4 == 0)
    {
      Bytes msg(rng() % 40);
      for (auto &x : msg) x = static_cast<std::uint8_t>(rng());
      inbox.push_back(msg);
      b.tx            = msg;
      b.delayed_count = ++dc;
    }
    else
    {
      b.tx.resize(rng() % 300);
      for (auto &x : b.tx) x = static_cast<std::uint8_t>(rng() % 7);  // runs for the compressor
      b.delayed_count = dc;
    }
    tree.append(b.leaf_hash());
    b.merkle_root = tree.root();
    auto bytes    = serialize_block(b, chain.empty() ? 0 : chain.back().delayed_count);
    stream.insert(stream.end(), bytes.begin(), bytes.end());
    chain.push_back(b);
  }

  auto       packed  = compress(stream);
  auto       entries = deserialize_blocks(decompress(packed));
  MerkleTree rebuilt;
  auto       blocks = reconstruct_blocks(entries, rebuilt, 0, [&](std::uint64_t i) { return inbox.at(i); });
  ASSERT_EQ(blocks.size(), chain.size());
  Bytes again;
  for (std::size_t i = 0; i < blocks.size(); ++i)
  {
    ASSERT_EQ(blocks[i], chain[i]) << i;
    auto bytes = serialize_block(blocks[i], i == 0 ? 0 : blocks[i - 1].delayed_count);
    again.insert(again.end(), bytes.begin(), bytes.end());
  }
  EXPECT_EQ(again, stream);
  EXPECT_LT(packed.size(), stream.size());
}

TEST(Serialization, BlockEncodeDecodeIsByteExact)
{
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i)
  {
    SequencerBlock b;
    b.height        = rng();
    b.delayed_count = rng();
    b.timestamp     = rng();
    b.tx.resize(rng() % 64);
    for (auto &x : b.tx) x = static_cast<std::uint8_t>(rng());
    for (auto &x : b.merkle_root) x = static_cast<std::uint8_t>(rng());
    ByteWriter w;
    b.encode(w);
    ByteReader r(w.bytes());
    EXPECT_EQ(SequencerBlock::decode(r), b);
    EXPECT_TRUE(r.done());
  }
}

TEST(Compression, PackBitsGoldenAndRoundTrip)
{
  Bytes in = {1, 2, 3, 7, 7, 7, 7, 9};
  EXPECT_EQ(to_hex(compress(in)), "02010203fd070009");
  EXPECT_EQ(decompress(compress(in)), in);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 300; ++k)
  {
    Bytes x(rng() % 600);
    for (auto &c : x) c = static_cast<std::uint8_t>(rng() % (1 + k % 5));
    ASSERT_EQ(decompress(compress(x)), x);
  }
  EXPECT_THROW(decompress(Bytes{0x05, 0x01}), ParseError);
  EXPECT_THROW(decompress(Bytes{0x80}), ParseError);
}

TEST(Serialization, ReconstructRejectsOutOfOrderDelayedIndex)
{
  std::vector<SerializedEntry> e{{true, 1, 3, {}}};
  MerkleTree                   t;
  EXPECT_THROW(reconstruct_blocks(e, t, 0, [](std::uint64_t) { return Bytes{}; }), ParseError);
}

// ---------------------------------------------------------------- transactions

TEST(Transaction, HashIsRecomputableFromCiphertextAndFee)
{
  MockThreshold s(1);
  auto          tx = user_tx(5, "swap", s);
  ByteWriter    w;
  w.raw(tx.ciphertext).u64(std::bit_cast<std::uint64_t>(5.0));
  EXPECT_EQ(tx.hash, sha256(w.bytes()));
  ByteWriter enc;
  tx.encode(enc);
  ByteReader r(enc.bytes());
  EXPECT_EQ(EncTx::decode(r).hash, tx.hash);
}

TEST(Transaction, MatchingFeeValidatesAndMismatchIsDiscarded)
{
  MockThreshold s(1);
  auto          good = user_tx(5, "p", s);
  auto          bad  = user_tx(5, "p", s, 9.0);
  std::map<SequencerId, Bytes> shares{{0, s.share(0, good)}, {1, s.share(1, good)}};
  auto plain = s.combine(good, shares);
  ASSERT_TRUE(plain);
  EXPECT_EQ(validate_plaintext(*plain, good.fee), Validation::Ok);

  std::map<SequencerId, Bytes> bshares{{0, s.share(0, bad)}, {1, s.share(1, bad)}};
  auto bplain = s.combine(bad, bshares);
  ASSERT_TRUE(bplain);
  EXPECT_EQ(validate_plaintext(*bplain, bad.fee), Validation::FeeMismatch);
}

TEST(Transaction, MalformedAndTamperedPlaintexts)
{
  EXPECT_EQ(validate_plaintext(to_bytes("garbage"), 0), Validation::Malformed);
  auto pt = UserTx{1.0, to_bytes("hello")}.encode();
  pt[5] ^= 1;
  EXPECT_EQ(validate_plaintext(pt, 1.0), Validation::BadSignature);
}

TEST(Transaction, DelayedInboxUsesIdentityEncryptionAndZeroFee)
{
  auto tx = delayed_tx(7, to_bytes("deposit"));
  EXPECT_EQ(tx.fee, 0.0);
  EXPECT_TRUE(tx.is_delayed());
  EXPECT_EQ(tx.scheme(), Scheme::Identity);
  EXPECT_EQ(tx.delayed_index(), 7u);
  EXPECT_EQ(delayed_message(tx), to_bytes("deposit"));
}

TEST(Threshold, FPlusOneSharesDecryptAndFewerDoNot)
{
  MockThreshold s(1);
  auto          tx = user_tx(0, "x", s);
  EXPECT_FALSE(s.combine(tx, {{0, s.share(0, tx)}}));
  EXPECT_TRUE(s.combine(tx, {{0, s.share(0, tx)}, {3, s.share(3, tx)}}));
  // a share for sequencer 0 presented as sequencer 1 does not count
  EXPECT_FALSE(s.verify_share(1, tx, s.share(0, tx)));
  EXPECT_FALSE(s.combine(tx, {{0, s.share(0, tx)}, {1, s.share(0, tx)}}));
}

TEST(Threshold, ForgedCiphertextDecryptsToGarbage)
{
  MockThreshold s(0);
  auto          tx = EncTx::make(Bytes{1, 'a', 'b', 0, 0, 0, 0, 0, 0, 0, 0}, 0);
  auto          p  = s.combine(tx, {{0, s.share(0, tx)}});
  ASSERT_TRUE(p);
  EXPECT_EQ(validate_plaintext(*p, 0), Validation::Malformed);
}

// ---------------------------------------------------------------- timestamps

TEST(Timestamp, SameMillisecondGivesDistinctIncreasingTriples)
{
  LocalClock c(2);
  auto       a = c.issue(100);
  auto       b = c.issue(100);
  auto       d = c.issue(101);
  EXPECT_LT(a, b);
  EXPECT_LT(b, d);
  EXPECT_EQ(b.seq, 1u);
  EXPECT_EQ(d.seq, 0u);
}

TEST(Timestamp, RegressionIsAFault)
{
  LocalClock c(0);
  c.issue(50);
  EXPECT_THROW(c.issue(49), ContractViolation);
}

TEST(Timestamp, OrderIsLexicographic)
{
  EXPECT_LT((TimestampTriple{1, 9, 9}), (TimestampTriple{2, 0, 0}));
  EXPECT_LT((TimestampTriple{1, 1, 9}), (TimestampTriple{1, 2, 0}));
  EXPECT_LT((TimestampTriple{1, 1, 1}), (TimestampTriple{1, 1, 2}));
}

// ---------------------------------------------------------------- messages

TEST(Messages, EveryVariantRoundTrips)
{
  MockThreshold             s(1);
  auto                      tx = user_tx(1.5, "m", s);
  Digest                    d  = sha256(to_bytes("d"));
  std::vector<BroadcastMsg> all{
      LocalTimestamp{3, 1, tx, {10, 1, 2}},  DecryptionShare{3, 2, d, to_bytes("share"), -42},
      BlockSignature{3, 0, d},               BatchSignature{4, 4, d},
      NewEpoch{17, d},                       Recover{2, 0xdeadbeef},
      StateHash{2, 0xdeadbeef, d},           Heartbeat{3, 1, {11, 1, 0}},
  };
  for (auto const &m : all)
  {
    auto bytes = encode_message(m);
    EXPECT_EQ(bytes[4], m.index() + 1);
    auto back = decode_message(bytes);
    EXPECT_EQ(encode_message(back), bytes) << msg_name(m);
    EXPECT_EQ(back.index(), m.index());

    auto trailing = bytes;
    trailing.push_back(0);
    EXPECT_THROW(decode_message(trailing), ParseError);
    auto truncated = bytes;
    truncated.pop_back();
    EXPECT_THROW(decode_message(truncated), ParseError);
  }
  EXPECT_THROW(decode_message(Bytes{0, 0, 0, 1, 99}), ParseError);
}

TEST(Messages, HeartbeatLayout)
{
  auto bytes = encode_message(Heartbeat{1, 2, {3, 2, 4}});
  EXPECT_EQ(to_hex(bytes), "00000021"
                           "08"
                           "0000000000000001"
                           "00000002"
                           "0000000000000003"
                           "00000002"
                           "0000000000000004");
}

// ---------------------------------------------------------------- consensus timestamp

namespace {

struct Bench
{
  CommitteeConfig                cfg;
  std::shared_ptr<MockThreshold> scheme;
  SequencerState                 st;

  Bench(std::size_t n, std::size_t f, double g = 0.5)
    : scheme(std::make_shared<MockThreshold>(f))
  {
    cfg.n       = n;
    cfg.f       = f;
    cfg.score.g = g;
    st          = SequencerState(cfg, scheme, nullptr);
  }

  void stamp(SequencerId id, EncTx const &tx, std::int64_t t, std::uint64_t seq = 0)
  {
    st.apply(id, LocalTimestamp{st.epoch(), id, tx, {t, id, seq}});
  }

  void beat(SequencerId id, std::int64_t t, std::uint64_t seq = 0)
  {
    st.apply(id, Heartbeat{st.epoch(), id, {t, id, seq}});
  }

  std::optional<TimestampTriple> tau(EncTx const &tx) const
  {
    auto it = st.pending().find(tx.hash);
    if (it != st.pending().end()) return it->second.consensus;
    for (auto const &c : st.chain())
      if (c.tx_hash == tx.hash) return c.consensus;
    return std::nullopt;
  }
};

}  // namespace

TEST(Consensus, ThreeAssignedGivesMedian)
{
  Bench b(3, 0);
  auto  tx = user_tx(0, "a", *b.scheme);
  b.stamp(0, tx, 10);
  b.stamp(1, tx, 20);
  EXPECT_FALSE(b.tau(tx));
  b.stamp(2, tx, 30);
  ASSERT_TRUE(b.tau(tx));
  EXPECT_EQ(b.tau(tx)->t, 20);
  EXPECT_EQ(b.st.pending().at(tx.hash).arm, ConsensusArm::Median);
}

TEST(Consensus, FiveAssignedGivesMedian)
{
  Bench b(5, 1);
  auto  tx = user_tx(0, "a", *b.scheme);
  for (SequencerId i = 0; i < 5; ++i) b.stamp(i, tx, 1 + i);
  ASSERT_TRUE(b.tau(tx));
  EXPECT_EQ(b.tau(tx)->t, 3);
}

TEST(Consensus, SecondArmWithSilentThird)
{
  // the rule itself, for N = 3 and F = 1 (a committee this small is rejected by configuration)
  std::map<SequencerId, TimestampTriple>      stamps{{0, {10, 0, 0}}, {1, {20, 1, 0}}};
  std::vector<std::optional<TimestampTriple>> m{TimestampTriple{21, 0, 0}, TimestampTriple{25, 1, 0}, std::nullopt};
  auto                                        r = consensus_timestamp(stamps, m, 3, 1);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->first, (TimestampTriple{20, 1, 0}));
  EXPECT_EQ(r->second, ConsensusArm::Quorum);
  m[0] = TimestampTriple{15, 0, 0};
  EXPECT_FALSE(consensus_timestamp(stamps, m, 3, 1));
  EXPECT_THROW((CommitteeConfig{3, 1, {}, {}}.validate()), InvalidInput);
}

TEST(Consensus, SecondArmInFiveMemberCommitteeWithSilentMember)
{
  Bench b(5, 1);
  auto  tx = user_tx(0, "a", *b.scheme);
  b.stamp(0, tx, 10);
  b.stamp(1, tx, 20);
  b.stamp(2, tx, 30);
  b.stamp(3, tx, 40);
  EXPECT_FALSE(b.tau(tx));  // silent member 4 might still stamp below 30
  b.beat(0, 35);
  EXPECT_FALSE(b.tau(tx));
  b.beat(1, 31);
  ASSERT_TRUE(b.tau(tx));
  EXPECT_EQ(b.tau(tx)->t, 30);
  EXPECT_EQ(b.st.pending().at(tx.hash).arm, ConsensusArm::Quorum);
}

TEST(Consensus, FirstArmWaitsForNonAssignersToPassTau)
{
  Bench b(5, 1);
  auto  tx = user_tx(0, "a", *b.scheme);
  b.stamp(0, tx, 10);
  b.stamp(1, tx, 20);
  b.stamp(2, tx, 30);
  EXPECT_FALSE(b.tau(tx));
  b.beat(3, 31);
  EXPECT_FALSE(b.tau(tx));
  b.beat(4, 31);
  ASSERT_TRUE(b.tau(tx));
  EXPECT_EQ(b.tau(tx)->t, 30);
  EXPECT_EQ(b.st.pending().at(tx.hash).arm, ConsensusArm::Median);
}

TEST(Consensus, RandomAllAssignedEqualsBruteForceMedian)
{
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial)
  {
    std::size_t n = std::array<std::size_t, 3>{3, 5, 7}[trial % 3];
    Bench       b(n, (n - 1) / 3);
    auto        tx = user_tx(0, "t" + std::to_string(trial), *b.scheme);
    std::vector<TimestampTriple> mine;
    std::vector<SequencerId>     order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (auto id : order)
    {
      TimestampTriple ts{static_cast<std::int64_t>(rng() % 50), id, 0};
      mine.push_back(ts);
      b.st.apply(id, LocalTimestamp{0, id, tx, ts});
    }
    auto tau = b.tau(tx);
    ASSERT_TRUE(tau);
    EXPECT_EQ(*tau, brute_median(mine));
    EXPECT_EQ(b.st.pending().at(tx.hash).arm, ConsensusArm::Median);
  }
}

TEST(Consensus, OnceSetNeverChanges)
{
  Bench b(5, 1);
  auto  tx = user_tx(0, "a", *b.scheme);
  for (SequencerId i = 0; i < 3; ++i) b.stamp(i, tx, 100 + 10 * i);
  b.beat(3, 200);
  b.beat(4, 200);
  auto first = b.tau(tx);
  ASSERT_TRUE(first);
  b.stamp(3, tx, 300);
  b.stamp(4, tx, 301);
  EXPECT_EQ(b.tau(tx), first);
}

TEST(Consensus, StaleLocalTimestampLeavesStateUnchanged)
{
  Bench b(3, 0);
  auto  tx  = user_tx(0, "a", *b.scheme);
  auto  tx2 = user_tx(0, "b", *b.scheme);
  b.stamp(0, tx, 50);
  auto before = b.st.digest();
  b.stamp(0, tx2, 50);  // equal triple
  b.stamp(0, tx2, 40);
  EXPECT_EQ(b.st.digest(), before);
  EXPECT_EQ(b.st.pending().count(tx2.hash), 0u);
}

TEST(Consensus, WrongEpochAndWrongSenderAreIgnored)
{
  Bench b(3, 0);
  auto  tx     = user_tx(0, "a", *b.scheme);
  auto  before = b.st.digest();
  b.st.apply(0, LocalTimestamp{3, 0, tx, {10, 0, 0}});
  b.st.apply(1, LocalTimestamp{0, 0, tx, {10, 0, 0}});  // claims to be 0
  b.st.apply(7, Heartbeat{0, 7, {10, 7, 0}});           // not a member
  EXPECT_EQ(b.st.digest(), before);
}

TEST(Consensus, IdenticalSequencesGiveIdenticalDigests)
{
  std::mt19937_64           rng(8);
  Bench                     a(5, 1), c(5, 1);
  std::vector<EncTx>        txs;
  for (int i = 0; i < 20; ++i) txs.push_back(user_tx(i * 0.1, "x" + std::to_string(i), *a.scheme));
  std::vector<std::int64_t> clock(5, 0);
  for (int step = 0; step < 400; ++step)
  {
    SequencerId  id = static_cast<SequencerId>(rng() % 5);
    BroadcastMsg m;
    clock[id] += 1 + static_cast<std::int64_t>(rng() % 40);
    if (rng() % 3) m = LocalTimestamp{0, id, txs[rng() % txs.size()], {clock[id], id, 0}};
    else m = Heartbeat{0, id, {clock[id], id, 0}};
    a.st.apply(id, m);
    c.st.apply(id, m);
  }
  EXPECT_EQ(a.st.digest(), c.st.digest());
  EXPECT_EQ(to_hex(a.st.encode()), to_hex(c.st.encode()));
}

// ---------------------------------------------------------------- adjusted timestamps and blocks

TEST(Adjusted, ZeroFeeIsIdentity)
{
  ScoreParams p;
  EXPECT_EQ(adjusted_timestamp_us(12'345, 0.0, p), 12'345'000);
}

TEST(Adjusted, TenSecondsWithUnitFee)
{
  ScoreParams p{0.5, 1.0};
  EXPECT_EQ(adjusted_timestamp_us(10'000, 1.0, p), 9'750'000);
}

TEST(Adjusted, ArrivalGLaterIsAlwaysLater)
{
  ScoreParams                           p{0.5, 1.0};
  std::mt19937_64                       rng(1);
  std::exponential_distribution<double> bid(0.01);
  for (int i = 0; i < 10000; ++i)
  {
    std::int64_t t1 = static_cast<std::int64_t>(rng() % 100000);
    std::int64_t t2 = t1 + 500 + static_cast<std::int64_t>(rng() % 3);
    EXPECT_LT(adjusted_timestamp_us(t1, 0.0, p), adjusted_timestamp_us(t2, bid(rng) * 1e6, p));
  }
}

TEST(Blocks, TimestampRoundsDown)
{
  EXPECT_EQ(block_timestamp(9'750'000, 500'000), 10u);
  EXPECT_EQ(block_timestamp(9'400'000, 500'000), 9u);
}

TEST(Blocks, ChainTimestampsNeverDecrease)
{
  Bench b(1, 0);
  auto  late  = user_tx(0, "late", *b.scheme);
  auto  early = user_tx(0.0, "early", *b.scheme);
  // single-member committee: its own stamp is the consensus timestamp
  b.stamp(0, late, 5'000);
  b.beat(0, 5'600);
  b.st.apply(0, DecryptionShare{0, 0, late.hash, b.scheme->share(0, late), 5'000'000});
  ASSERT_EQ(b.st.chain().size(), 1u);
  EXPECT_EQ(b.st.chain()[0].block.timestamp, 5u);
  b.stamp(0, early, 5'601);
  b.beat(0, 6'200);
  b.st.apply(0, DecryptionShare{0, 0, early.hash, b.scheme->share(0, early), 5'601'000});
  ASSERT_EQ(b.st.chain().size(), 2u);
  EXPECT_GE(b.st.chain()[1].block.timestamp, b.st.chain()[0].block.timestamp);
  EXPECT_EQ(b.st.chain()[1].block.height, 2u);
}

// ---------------------------------------------------------------- shares

TEST(Shares, NotEmittedBeforeQuorumPassesReleaseTime)
{
  Cluster c(3, 0);
  auto    tx = user_tx(0, "a", *c.scheme);
  c.submit_tx(tx);
  for (auto const &[from, m] : c.log) EXPECT_FALSE(std::holds_alternative<DecryptionShare>(m));
  EXPECT_FALSE(c.state().share_eligible(tx.hash));
  c.advance(400);
  EXPECT_FALSE(c.state().share_eligible(tx.hash));
  c.advance(200);
  EXPECT_TRUE(c.state().is_included(tx.hash));
}

TEST(Shares, EmittedInIncreasingAdjustedTimestampOrder)
{
  Cluster c(3, 0);
  // the second transaction arrives later but bids enough to move ahead
  auto a = user_tx(0, "a", *c.scheme);
  auto b = user_tx(10, "b", *c.scheme);
  c.submit_tx(a);
  c.advance(100);
  c.submit_tx(b);
  c.advance(1000);
  std::vector<Digest> order;
  for (auto const &[from, m] : c.log)
    if (auto const *s = std::get_if<DecryptionShare>(&m); s && from == 0) order.push_back(s->hash);
  ASSERT_EQ(order.size(), 2u);
  EXPECT_EQ(order[0], b.hash);
  EXPECT_EQ(order[1], a.hash);
  EXPECT_EQ(c.state().chain()[0].tx_hash, b.hash);
}

TEST(Shares, ShareForIneligibleTransactionIsIgnored)
{
  Bench b(3, 1 - 1);
  auto  tx = user_tx(0, "a", *b.scheme);
  for (SequencerId i = 0; i < 3; ++i) b.stamp(i, tx, 100);
  ASSERT_TRUE(b.tau(tx));
  auto before = b.st.digest();
  b.st.apply(1, DecryptionShare{0, 1, tx.hash, b.scheme->share(1, tx), 100'000});
  EXPECT_EQ(b.st.digest(), before);
  for (SequencerId i = 0; i < 3; ++i) b.beat(i, 700);
  ASSERT_TRUE(b.st.share_eligible(tx.hash));
  // wrong tau' or a share under someone else's id is still ignored
  b.st.apply(1, DecryptionShare{0, 1, tx.hash, b.scheme->share(1, tx), 99'000});
  b.st.apply(1, DecryptionShare{0, 1, tx.hash, b.scheme->share(2, tx), 100'000});
  EXPECT_FALSE(b.st.is_included(tx.hash));
  b.st.apply(1, DecryptionShare{0, 1, tx.hash, b.scheme->share(1, tx), 100'000});
  EXPECT_TRUE(b.st.is_included(tx.hash));
}

TEST(Shares, FeeMismatchIsDiscardedEverywhere)
{
  Cluster c(5, 1);
  auto    bad  = user_tx(5, "bad", *c.scheme, 9.0);
  auto    good = user_tx(5, "good", *c.scheme);
  c.submit_tx(bad);
  c.submit_tx(good);
  c.advance(1000);
  for (auto const &r : c.reps)
  {
    EXPECT_EQ(r->state().discarded().at(bad.hash), Validation::FeeMismatch);
    EXPECT_TRUE(r->state().is_included(good.hash));
  }
}

// ---------------------------------------------------------------- replicas

TEST(Replica, ReReceiptDoesNotStampTwice)
{
  Cluster c(3, 0);
  auto    tx = user_tx(0, "a", *c.scheme);
  EXPECT_EQ(c.reps[0]->on_user_tx(tx, c.now_ms).size(), 1u);
  EXPECT_TRUE(c.reps[0]->on_user_tx(tx, c.now_ms).empty());
}

TEST(Replica, StampsTransactionFirstSeenInAnotherBroadcast)
{
  Cluster c(3, 0);
  auto    tx = user_tx(0, "a", *c.scheme);
  c.send(0, c.reps[0]->on_user_tx(tx, c.now_ms));
  c.pump();
  std::set<SequencerId> stampers;
  for (auto const &[from, m] : c.log)
    if (std::holds_alternative<LocalTimestamp>(m)) stampers.insert(from);
  EXPECT_EQ(stampers, (std::set<SequencerId>{0, 1, 2}));
}

TEST(Replica, HonestReplicasDeriveIdenticalBlocksAndBatches)
{
  Cluster         c(5, 1, 500'000);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 30; ++i)
  {
    c.submit_tx(user_tx(static_cast<double>(rng() % 5), "t" + std::to_string(i), *c.scheme));
    c.advance(static_cast<std::int64_t>(rng() % 60));
  }
  c.advance(3000);
  ASSERT_EQ(c.state().chain().size(), 30u);
  ASSERT_GE(c.state().batches().size(), 2u);
  for (auto const &r : c.reps)
  {
    EXPECT_EQ(r->state().digest(), c.state().digest());
    for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(r->state().chain()[i].block, c.state().chain()[i].block);
    ASSERT_EQ(r->state().batches().size(), c.state().batches().size());
    for (std::size_t i = 0; i < c.state().batches().size(); ++i)
    {
      EXPECT_EQ(r->state().batches()[i].batch, c.state().batches()[i].batch);
      EXPECT_TRUE(r->state().batches()[i].signed_);
    }
  }
  for (auto const &e : c.state().chain()) EXPECT_TRUE(e.final);
  EXPECT_EQ(c.post_batches(), c.state().batches().size());
  EXPECT_EQ(c.l1.canonical_chain().size(), c.state().batches().back().batch.header.block_number);
}

TEST(Batches, HeaderMatchesLastBlockAndBodyDecompressesToSerialization)
{
  Cluster c(3, 0, 400'000);
  for (int i = 0; i < 12; ++i)
  {
    c.submit_tx(user_tx(0, "b" + std::to_string(i), *c.scheme));
    c.advance(90);
  }
  c.advance(2000);
  auto const &chain = c.state().chain();
  std::size_t next  = 0;
  for (auto const &be : c.state().batches())
  {
    auto const &b       = be.batch;
    auto const &last    = chain.at(b.header.block_number - 1);
    EXPECT_EQ(b.header.merkle_hash, last.block.merkle_root);
    EXPECT_EQ(b.header.delayed_count, last.block.delayed_count);
    EXPECT_EQ(b.header.timestamp, last.block.timestamp);
    Bytes expect;
    for (std::size_t h = next; h < b.header.block_number; ++h)
    {
      auto bytes = serialize_block(chain[h].block, h == 0 ? 0 : chain[h - 1].block.delayed_count);
      expect.insert(expect.end(), bytes.begin(), bytes.end());
    }
    EXPECT_EQ(decompress(b.body), expect);
    // window: every block's tau' lies within the window of the first
    EXPECT_LE(chain[b.header.block_number - 1].tau_prime_us - chain[next].tau_prime_us, 400'000);
    next = b.header.block_number;
  }
  EXPECT_GE(c.state().batches().size(), 2u);
}

TEST(Batches, SizeLimitClosesBatch)
{
  BatchBuilder   bb;
  BatchLimits    lim{60'000'000, 64};
  SequencerBlock b;
  std::vector<Batch> closed;
  std::mt19937_64    rng(1);
  for (std::uint64_t h = 1; h <= 10; ++h)
  {
    b.height = h;
    b.tx.resize(20);
    for (auto &x : b.tx) x = static_cast<std::uint8_t>(rng());
    if (auto out = bb.step(b, static_cast<std::int64_t>(h), 0, lim)) closed.push_back(*out);
  }
  ASSERT_FALSE(closed.empty());
  for (auto const &x : closed) EXPECT_LE(x.body.size(), 64u);
}

// ---------------------------------------------------------------- L1

namespace {

/// A standalone chain with its batches cut at the given block numbers.
struct Synthetic
{
  std::vector<SequencerBlock> blocks;
  std::vector<Batch>          batches;

  Synthetic(std::size_t n, std::vector<std::uint64_t> cuts, L1Stub &l1, std::set<std::size_t> delayed = {})
  {
    MerkleTree    t;
    std::uint64_t dc = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
      SequencerBlock b;
      b.height    = i + 1;
      b.timestamp = 100 + i;
      if (delayed.count(i))
      {
        b.tx            = to_bytes("inbox" + std::to_string(dc));
        l1.enqueue_delayed(b.tx, 0);
        b.delayed_count = ++dc;
      }
      else
      {
        b.tx            = to_bytes("tx" + std::to_string(i));
        b.delayed_count = dc;
      }
      t.append(b.leaf_hash());
      b.merkle_root = t.root();
      blocks.push_back(b);
    }
    std::uint64_t from = 0;
    for (auto cut : cuts)
    {
      ByteWriter w;
      for (std::uint64_t h = from; h < cut; ++h) serialize_block(w, blocks[h], h ? blocks[h - 1].delayed_count : 0);
      auto const &last = blocks[cut - 1];
      batches.push_back(
          Batch{{last.height, last.merkle_root, last.delayed_count, last.timestamp}, compress(w.bytes()), cut - from});
      from = cut;
    }
  }
};

}  // namespace

TEST(L1, RepeatedBlockNumberIsRejected)
{
  L1Stub    l1(1, 1'000'000);
  Synthetic s(7, {5, 7}, l1);
  EXPECT_TRUE(l1.post_batch(s.batches[0], {0, 1}, 1).accepted);
  auto again = l1.post_batch(s.batches[0], {0, 1}, 2);
  EXPECT_FALSE(again.accepted);
  EXPECT_NE(again.reason.find("block number"), std::string::npos);
  EXPECT_TRUE(l1.post_batch(s.batches[1], {2, 3}, 3).accepted);
  EXPECT_EQ(l1.last_header().block_number, 7u);
}

TEST(L1, FewerThanFPlusOneSignaturesIsRejected)
{
  L1Stub    l1(1, 1'000'000);
  Synthetic s(5, {5}, l1);
  EXPECT_FALSE(l1.post_batch(s.batches[0], {0}, 1).accepted);
}

TEST(L1, DelayedCountDecreaseIsRejected)
{
  L1Stub    l1(1, 1'000'000);
  Synthetic s(6, {5, 6}, l1, {1, 3});
  ASSERT_TRUE(l1.post_batch(s.batches[0], {0, 1}, 1).accepted);
  Batch lower = s.batches[1];
  lower.header.delayed_count = 1;
  auto r = l1.post_batch(lower, {0, 1}, 2);
  EXPECT_FALSE(r.accepted);
  EXPECT_NE(r.reason.find("delayed count"), std::string::npos);
}

TEST(L1, BatchThatDoesNotExtendChainIsRejected)
{
  L1Stub    l1(1, 1'000'000);
  Synthetic s(6, {3, 6}, l1);
  EXPECT_FALSE(l1.post_batch(s.batches[1], {0, 1}, 1).accepted);  // skips blocks 1..3
  Batch forged = s.batches[0];
  forged.header.merkle_hash[0] ^= 1;
  EXPECT_FALSE(l1.post_batch(forged, {0, 1}, 1).accepted);
}

TEST(L1, ForceIncludeHonoursAgeThreshold)
{
  L1Stub l1(1, 3'000'000);
  l1.enqueue_delayed(to_bytes("m0"), 1'000'000);
  std::string why;
  EXPECT_FALSE(l1.force_include(0, 3'500'000, &why));
  EXPECT_NE(why.find("young"), std::string::npos);
  EXPECT_FALSE(l1.force_include(1, 9'000'000, &why));
  auto fi = l1.force_include(0, 4'500'000);
  ASSERT_TRUE(fi);
  EXPECT_EQ(fi->block.height, 1u);
  EXPECT_EQ(fi->block.delayed_count, 1u);
  EXPECT_EQ(fi->block.timestamp, 4u);
  EXPECT_TRUE(l1.verify_force_include(fi->txid, 1));
  EXPECT_FALSE(l1.verify_force_include(fi->txid, 2));
  EXPECT_FALSE(l1.verify_force_include(sha256(to_bytes("nope")), 1));
}

// ---------------------------------------------------------------- epochs

namespace {

/// Runs blocks 1 and 2 into a posted batch, then C and D into unposted blocks 3 and 4, then
/// stamps E, F, G without including them, then force-includes a censored delayed message.
struct ReorgFixture
{
  Cluster            c{5, 1, 600'000};
  std::vector<EncTx> txs;
  ForcedInclude      fi;

  ReorgFixture()
  {
    c.l1.enqueue_delayed(to_bytes("censored"), 0);
    for (auto name : {"A", "B"})
    {
      txs.push_back(user_tx(0, name, *c.scheme));
      c.submit_tx(txs.back());
      c.advance(20);
    }
    c.advance(2500);
    EXPECT_EQ(c.post_batches(), 1u);
    for (auto name : {"C", "D"})
    {
      txs.push_back(user_tx(0, name, *c.scheme));
      c.submit_tx(txs.back());
      c.advance(20);
    }
    c.advance(560);
    EXPECT_EQ(c.state().chain().size(), 4u);
    EXPECT_EQ(c.l1.last_header().block_number, 2u);
    for (auto name : {"E", "F", "G"})
    {
      txs.push_back(user_tx(0, name, *c.scheme));
      c.submit_tx(txs.back());
      c.advance(10);
    }
    auto forced = c.l1.force_include(0, c.now_ms * 1000);
    EXPECT_TRUE(forced);
    fi = *forced;
  }

  void announce()
  {
    for (auto &r : c.reps) c.send(r->id(), r->on_force_include(fi));
    c.pump();
  }
};

}  // namespace

TEST(Epoch, OrphanedBlocksRecreatedInOrderAfterForcedBlock)
{
  ReorgFixture f;
  auto         old = f.c.state().chain();
  f.announce();
  auto const &chain = f.c.state().chain();
  EXPECT_EQ(f.c.state().epoch(), 3u);
  ASSERT_GE(chain.size(), 5u);
  EXPECT_TRUE(chain[2].forced);
  EXPECT_EQ(chain[2].block.tx, to_bytes("censored"));
  EXPECT_EQ(chain[2].block.merkle_root, f.fi.block.merkle_root);
  EXPECT_EQ(chain[3].tx_hash, old[2].tx_hash);
  EXPECT_EQ(chain[4].tx_hash, old[3].tx_hash);
  EXPECT_EQ(chain[3].block.height, 4u);
  EXPECT_EQ(chain[3].block.timestamp, f.fi.block.timestamp);
  EXPECT_EQ(chain[3].block.delayed_count, 1u);
  EXPECT_NE(chain[3].block.digest(), old[2].block.digest());
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(chain[i].block, old[i].block);
  // the recreated blocks are signed again under the new epoch
  f.c.advance(10);
  EXPECT_TRUE(chain[3].final);
  for (auto const &r : f.c.reps) EXPECT_EQ(r->state().digest(), f.c.state().digest());
}

TEST(Epoch, OrphanedTransactionsRestampedInOriginalOrder)
{
  ReorgFixture f;
  f.announce();
  for (auto const &r : f.c.reps) EXPECT_TRUE(r->paused());
  f.c.advance(1500);
  for (auto const &r : f.c.reps)
  {
    EXPECT_FALSE(r->paused());
    auto const &h = r->stamp_history();
    ASSERT_GE(h.size(), 2u);
    EXPECT_EQ(h.back().first, 3u);
    std::vector<Digest> want{f.txs[4].hash, f.txs[5].hash, f.txs[6].hash};
    EXPECT_EQ(h.back().second, want);
  }
  for (auto const &tx : f.txs) EXPECT_TRUE(f.c.state().is_included(tx.hash));
  EXPECT_EQ(f.c.state().chain().size(), 8u);

  // per-sequencer timestamps keep increasing across the restart
  std::map<SequencerId, TimestampTriple> last;
  for (auto const &[from, m] : f.c.log)
  {
    std::optional<TimestampTriple> ts;
    if (auto const *lt = std::get_if<LocalTimestamp>(&m)) ts = lt->ts;
    if (auto const *hb = std::get_if<Heartbeat>(&m)) ts = hb->ts;
    if (!ts) continue;
    if (last.count(from)) { EXPECT_LT(last[from], *ts); }
    last[from] = *ts;
  }
}

TEST(Epoch, OldEpochMessagesIgnored)
{
  ReorgFixture f;
  f.announce();
  f.c.advance(1500);
  auto before = f.c.state().digest();
  auto tx     = user_tx(0, "old", *f.c.scheme);
  auto &st    = const_cast<SequencerState &>(f.c.state());
  st.apply(1, LocalTimestamp{0, 1, tx, {f.c.now_ms + 5, 1, 0}});
  st.apply(1, Heartbeat{2, 1, {f.c.now_ms + 6, 1, 0}});
  EXPECT_EQ(st.digest(), before);
}

TEST(Epoch, BadTxidIsIgnored)
{
  ReorgFixture f;
  auto         before = f.c.state().digest();
  for (auto &r : f.c.reps) f.c.send(r->id(), Replica::Out{NewEpoch{f.fi.block.height, sha256(to_bytes("fake"))}});
  f.c.pump();
  EXPECT_EQ(f.c.state().epoch(), 0u);
  EXPECT_EQ(f.c.state().digest(), before);
  for (auto &r : f.c.reps) f.c.send(r->id(), Replica::Out{NewEpoch{f.fi.block.height + 1, f.fi.txid}});
  f.c.pump();
  EXPECT_EQ(f.c.state().epoch(), 0u);
}

TEST(Epoch, NoOrphansIsAnEpochBumpOnly)
{
  Cluster c(3, 0, 300'000);
  c.l1.enqueue_delayed(to_bytes("censored"), 0);
  std::vector<EncTx> txs;
  for (int i = 0; i < 3; ++i)
  {
    txs.push_back(user_tx(0, "n" + std::to_string(i), *c.scheme));
    c.submit_tx(txs.back());
  }
  c.advance(3000);
  c.post_batches();
  ASSERT_EQ(c.l1.last_header().block_number, 3u);
  auto fi = c.l1.force_include(0, c.now_ms * 1000);
  ASSERT_TRUE(fi);
  for (auto &r : c.reps) c.send(r->id(), r->on_force_include(*fi));
  c.pump();
  c.advance(1200);
  EXPECT_EQ(c.state().epoch(), 4u);
  ASSERT_EQ(c.state().chain().size(), 4u);
  for (auto const &tx : txs) EXPECT_TRUE(c.state().is_included(tx.hash));
  EXPECT_TRUE(c.state().chain()[3].forced);
}

TEST(Epoch, BatchesResumeAfterForcedBlock)
{
  ReorgFixture f;
  f.announce();
  f.c.advance(3000);
  f.c.post_batches();
  EXPECT_EQ(f.c.l1.last_header().block_number, f.c.state().chain().size());
  EXPECT_EQ(f.c.l1.canonical_chain().back().merkle_root, f.c.state().chain().back().block.merkle_root);
}

// ---------------------------------------------------------------- snapshots and recovery

TEST(Snapshot, EncodeDecodePreservesDigest)
{
  ReorgFixture f;
  f.announce();
  f.c.advance(700);
  auto bytes = f.c.state().encode();
  auto back  = SequencerState::decode(bytes, f.c.scheme, &f.c.l1);
  EXPECT_EQ(back.digest(), f.c.state().digest());
  EXPECT_EQ(back.encode(), bytes);
  bytes.push_back(0);
  EXPECT_THROW(SequencerState::decode(bytes, f.c.scheme, &f.c.l1), ParseError);
}

TEST(Recovery, ColdStartReachesCommonDigest)
{
  Cluster c(5, 1, 500'000);
  for (int i = 0; i < 10; ++i)
  {
    c.submit_tx(user_tx(i % 3, "r" + std::to_string(i), *c.scheme));
    c.advance(40);
  }
  c.down[4] = true;
  for (int i = 0; i < 10; ++i)
  {
    c.submit_tx(user_tx(0, "s" + std::to_string(i), *c.scheme));
    c.advance(40);
  }
  c.reps[4]  = std::make_unique<Replica>(4, c.cfg, c.scheme, &c.l1, Replica::Options{});
  c.down[4]  = false;
  auto fetch = [&](SequencerId r, SequencerId rec, std::uint64_t nonce) { return c.reps[r]->snapshot(rec, nonce); };
  c.send(4, c.reps[4]->cold_start(77, fetch));
  c.pump();
  EXPECT_FALSE(c.reps[4]->recovering());
  c.submit_tx(user_tx(0, "after", *c.scheme));
  c.advance(1500);
  for (auto const &r : c.reps) EXPECT_EQ(r->state().digest(), c.state().digest());
  EXPECT_EQ(c.state().chain().size(), 21u);
}

TEST(Recovery, WaitsForFPlusOneMatchingHashesAndRetriesBadFetch)
{
  Cluster c(5, 1);
  c.submit_tx(user_tx(0, "x", *c.scheme));
  c.advance(700);
  auto   snap   = c.state().encode();
  auto   digest = SequencerState::digest_of(snap);
  auto   other  = sha256(to_bytes("other"));
  std::size_t calls = 0;
  auto   fetch  = [&](SequencerId r, SequencerId, std::uint64_t) -> std::optional<Bytes> {
    ++calls;
    if (r == 0) return to_bytes("corrupt");
    return snap;
  };
  Replica fresh(4, c.cfg, c.scheme, &c.l1, Replica::Options{});
  EXPECT_EQ(fresh.cold_start(9, fetch).size(), 1u);
  fresh.on_deliver(4, Recover{4, 9}, c.now_ms);
  EXPECT_TRUE(fresh.on_deliver(0, StateHash{4, 9, digest}, c.now_ms).empty());
  EXPECT_TRUE(fresh.recovering());
  fresh.on_deliver(1, StateHash{4, 9, other}, c.now_ms);
  fresh.on_deliver(2, StateHash{4, 8, digest}, c.now_ms);  // stale nonce
  EXPECT_TRUE(fresh.recovering());
  auto out = fresh.on_deliver(3, StateHash{4, 9, digest}, c.now_ms);
  EXPECT_FALSE(fresh.recovering());
  EXPECT_EQ(calls, 2u);
  EXPECT_EQ(fresh.state().digest(), digest);
  for (auto const &m : out) EXPECT_TRUE(std::holds_alternative<LocalTimestamp>(m));
}

TEST(Recovery, ReplayEmitsOnlyOwnTimestamps)
{
  Cluster c(5, 1);
  c.advance(50);
  Replica fresh(4, c.cfg, c.scheme, &c.l1, Replica::Options{});
  Bytes   snap  = c.state().encode();
  auto    fetch = [&](SequencerId, SequencerId, std::uint64_t) -> std::optional<Bytes> { return snap; };
  fresh.cold_start(1, fetch);
  fresh.on_deliver(4, Recover{4, 1}, c.now_ms);
  // traffic recorded while waiting: a new transaction, its stamps and later heartbeats
  auto tx = user_tx(0, "during", *c.scheme);
  std::vector<std::pair<SequencerId, BroadcastMsg>> seen;
  for (SequencerId i = 0; i < 4; ++i) seen.emplace_back(i, LocalTimestamp{0, i, tx, {c.now_ms + 1, i, 0}});
  for (SequencerId i = 0; i < 4; ++i) seen.emplace_back(i, Heartbeat{0, i, {c.now_ms + 900, i, 0}});
  for (auto const &[from, m] : seen) EXPECT_TRUE(fresh.on_deliver(from, m, c.now_ms).empty());
  auto d = SequencerState::digest_of(snap);
  fresh.on_deliver(0, StateHash{4, 1, d}, c.now_ms + 900);
  auto out = fresh.on_deliver(1, StateHash{4, 1, d}, c.now_ms + 900);
  ASSERT_FALSE(fresh.recovering());
  ASSERT_EQ(out.size(), 1u);
  auto const *lt = std::get_if<LocalTimestamp>(&out[0]);
  ASSERT_NE(lt, nullptr);
  EXPECT_EQ(lt->tx.hash, tx.hash);
  EXPECT_EQ(lt->id, 4u);
}

// ---------------------------------------------------------------- adversaries

TEST(Adversary, LowStamperCannotStallInclusion)
{
  Cluster c(5, 1, 60'000'000, {Behavior::Honest, Behavior::Honest, Behavior::Honest, Behavior::Honest, Behavior::LowStamper});
  auto    tx = user_tx(0, "a", *c.scheme);
  c.submit_tx(tx);
  c.advance(800);
  EXPECT_TRUE(c.state().is_included(tx.hash));
  EXPECT_EQ(c.state().max_ts(4)->t, 0);
}

TEST(Adversary, NonSignerDoesNotBlockFinality)
{
  Cluster c(5, 1, 300'000, {Behavior::NonSigner});
  c.submit_tx(user_tx(0, "a", *c.scheme));
  c.advance(1500);
  ASSERT_EQ(c.state().chain().size(), 1u);
  EXPECT_TRUE(c.state().chain()[0].final);
  EXPECT_EQ(c.state().chain()[0].signatures.count(0), 0u);
  EXPECT_EQ(c.post_batches(), 1u);
}

TEST(Adversary, SilentMemberSendsNothing)
{
  Cluster c(5, 1, 300'000, {Behavior::Honest, Behavior::Silent});
  c.submit_tx(user_tx(0, "a", *c.scheme));
  c.advance(1500);
  for (auto const &[from, m] : c.log) EXPECT_NE(from, 1u);
  EXPECT_EQ(c.state().chain().size(), 1u);
}
