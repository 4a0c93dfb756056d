#include "telsm/wal.h"

#include <random>

#include "telsm/coding.h"
#include "telsm/env.h"
#include "test_util.h"

namespace telsm {
namespace {

using testing::TempDir;

WalRecord RandomRecord(std::mt19937_64& rng, uint64_t seq) {
  WalRecord r;
  r.cf_id = static_cast<uint16_t>(rng() % 5);
  r.key.user_key = "k" + std::to_string(rng() % 100000);
  r.key.seq = seq;
  r.key.kind = rng() % 7 == 0 ? ValueKind::kDelete : ValueKind::kPut;
  if (r.key.kind == ValueKind::kPut) r.value = std::string(rng() % 300, 'a' + rng() % 26);
  return r;
}

TEST(Wal, RecordLayout) {
  std::string buf;
  EncodeWalRecord(3, InternalKey{"ab", 9, ValueKind::kPut}, "xyz", &buf);
  // 8 + 1 + 2 + 2 + 2 + 4 + 3 + 4
  ASSERT_EQ(buf.size(), 26u);
  EXPECT_EQ(DecodeFixed64(buf.data()), 9u);
  EXPECT_EQ(buf[8], 1);
  EXPECT_EQ(DecodeFixed16(buf.data() + 9), 3u);
  EXPECT_EQ(DecodeFixed16(buf.data() + 11), 2u);
  EXPECT_EQ(buf.substr(13, 2), "ab");
  EXPECT_EQ(DecodeFixed32(buf.data() + 15), 3u);
  EXPECT_EQ(DecodeFixed32(buf.data() + 22), Crc32(std::string_view(buf).substr(0, 22)));
}

TEST(Wal, AppendReplayRoundTrip) {
  TempDir dir;
  std::unique_ptr<WalWriter> w;
  ASSERT_OK(WalWriter::Open(dir.Sub("wal-1.log"), &w));
  WalRecord r{7, InternalKey{"key", 42, ValueKind::kPut}, "value"};
  ASSERT_OK(w->Append(r.cf_id, r.key, r.value, true));
  ASSERT_OK(w->Close());
  WalReplayResult res;
  ASSERT_OK(ReplayWal(dir.Sub("wal-1.log"), &res));
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_EQ(res.records[0], r);
  EXPECT_FALSE(res.truncated);
}

TEST(Wal, TruncationYieldsCompletePrefix) {
  std::mt19937_64 rng(5);
  std::vector<WalRecord> recs;
  std::string buf;
  std::vector<size_t> ends;
  for (uint64_t i = 1; i <= 10000; ++i) {
    recs.push_back(RandomRecord(rng, i));
    EncodeWalRecord(recs.back().cf_id, recs.back().key, recs.back().value, &buf);
    ends.push_back(buf.size());
  }
  for (int trial = 0; trial < 200; ++trial) {
    size_t cut = rng() % (buf.size() + 1);
    WalReplayResult res;
    ASSERT_OK(DecodeWalBuffer(std::string_view(buf).substr(0, cut), &res));
    size_t complete = std::upper_bound(ends.begin(), ends.end(), cut) - ends.begin();
    ASSERT_EQ(res.records.size(), complete);
    EXPECT_EQ(res.truncated, complete == 0 ? cut > 0 : ends[complete - 1] != cut);
    for (size_t i = 0; i < complete; ++i) ASSERT_EQ(res.records[i], recs[i]);
  }
}

TEST(Wal, CorruptionStopsReplay) {
  std::mt19937_64 rng(6);
  std::string buf;
  std::vector<size_t> ends;
  for (uint64_t i = 1; i <= 500; ++i) {
    WalRecord r = RandomRecord(rng, i);
    EncodeWalRecord(r.cf_id, r.key, r.value, &buf);
    ends.push_back(buf.size());
  }
  for (int trial = 0; trial < 100; ++trial) {
    std::string bad = buf;
    size_t pos = rng() % bad.size();
    bad[pos] = static_cast<char>(bad[pos] ^ (1 + rng() % 255));
    WalReplayResult res;
    ASSERT_OK(DecodeWalBuffer(bad, &res));
    size_t rec = std::upper_bound(ends.begin(), ends.end(), pos) - ends.begin();
    EXPECT_LE(res.records.size(), rec);
    EXPECT_TRUE(res.truncated);
  }
}

TEST(Wal, KillAfterSyncPrefixMatchesReference) {
  TempDir dir;
  std::mt19937_64 rng(8);
  std::vector<WalRecord> log;
  std::unique_ptr<WalWriter> w;
  ASSERT_OK(WalWriter::Open(dir.Sub("wal.log"), &w));
  for (uint64_t i = 1; i <= 10000; ++i) {
    log.push_back(RandomRecord(rng, i));
    ASSERT_OK(w->Append(log.back().cf_id, log.back().key, log.back().value, i % 1000 == 0));
    if (i % 2500 == 0) {
      WalReplayResult res;
      ASSERT_OK(ReplayWal(dir.Sub("wal.log"), &res));
      ASSERT_GE(res.records.size(), i / 1000 * 1000);
      for (size_t j = 0; j < res.records.size(); ++j) ASSERT_EQ(res.records[j], log[j]);
    }
  }
}

}  // namespace
}  // namespace telsm
