#include "telsm/sst.h"

#include <map>
#include <random>

#include "telsm/block_cache.h"
#include "telsm/bloom.h"
#include "telsm/coding.h"
#include "telsm/env.h"
#include "telsm/iterator.h"
#include "telsm/memtable.h"
#include "telsm/statistics.h"
#include "test_util.h"

namespace telsm {
namespace {

using testing::TempDir;

std::vector<Entry> SortedEntries(std::mt19937_64& rng, int n) {
  std::map<std::string, Entry> by_key;
  uint64_t seq = 0;
  while (static_cast<int>(by_key.size()) < n) {
    std::string k = "key" + std::to_string(rng() % (n * 4));
    Entry e{{k, ++seq, rng() % 9 ? ValueKind::kPut : ValueKind::kDelete}, ""};
    if (e.key.kind == ValueKind::kPut) e.value = std::string(rng() % 200, 'a' + rng() % 26);
    by_key[k] = e;
  }
  std::vector<Entry> out;
  for (auto& [k, e] : by_key) out.push_back(e);
  return out;
}

Status Build(const std::string& path, const std::vector<Entry>& entries, uint32_t block_size) {
  std::unique_ptr<WritableFile> f;
  TELSM_RETURN_NOT_OK(WritableFile::Open(path, true, &f));
  TableBuilder b(std::move(f), block_size, 10);
  for (const auto& e : entries) {
    TELSM_RETURN_NOT_OK(b.Add(e.key.user_key, e.key.seq, e.key.kind, e.value));
  }
  return b.Finish(false);
}

TEST(Bloom, ProbeCount) {
  EXPECT_EQ(BloomProbeCount(10), 7);
  EXPECT_EQ(BloomProbeCount(1), 1);
}

TEST(Bloom, NoFalseNegativesAndExpectedFalsePositiveRate) {
  BloomFilterBuilder b(10);
  for (int i = 0; i < 100000; ++i) b.AddKey("present" + std::to_string(i));
  std::string f = b.Finish();
  for (int i = 0; i < 100000; ++i) ASSERT_TRUE(BloomMayContain(f, "present" + std::to_string(i)));
  int fp = 0;
  for (int i = 0; i < 100000; ++i) fp += BloomMayContain(f, "absent" + std::to_string(i));
  double rate = fp / 100000.0;
  EXPECT_NEAR(rate, 0.01, 0.005);
}

TEST(Sst, IterationReproducesEntries) {
  TempDir dir;
  std::mt19937_64 rng(4);
  auto entries = SortedEntries(rng, 5000);
  ASSERT_OK(Build(dir.Sub("t.sst"), entries, 1024));
  std::shared_ptr<TableReader> t;
  ASSERT_OK(TableReader::Open(dir.Sub("t.sst"), 1, {}, &t));
  EXPECT_GT(t->num_blocks(), 10u);
  auto it = t->NewIterator();
  size_t i = 0;
  for (it->SeekToFirst(); it->Valid(); it->Next(), ++i) {
    ASSERT_EQ(it->user_key(), entries[i].key.user_key);
    ASSERT_EQ(it->seq(), entries[i].key.seq);
    ASSERT_EQ(it->kind(), entries[i].key.kind);
    ASSERT_EQ(it->value(), entries[i].value);
  }
  ASSERT_OK(it->status());
  EXPECT_EQ(i, entries.size());
  it->Seek(entries[1234].key.user_key);
  ASSERT_TRUE(it->Valid());
  EXPECT_EQ(it->user_key(), entries[1234].key.user_key);
}

TEST(Sst, GetFindsEveryKeyAndRejectsAbsent) {
  TempDir dir;
  std::mt19937_64 rng(5);
  auto entries = SortedEntries(rng, 3000);
  ASSERT_OK(Build(dir.Sub("t.sst"), entries, 512));
  Statistics stats;
  BlockCache cache(1 << 20);
  std::shared_ptr<TableReader> t;
  ASSERT_OK(TableReader::Open(dir.Sub("t.sst"), 1, {&cache, &stats, nullptr, false}, &t));
  for (const auto& e : entries) {
    LookupResult r;
    ASSERT_OK(t->Get(e.key.user_key, kMaxSequenceNumber, &r));
    ASSERT_EQ(r.state, e.key.kind == ValueKind::kPut ? LookupState::kFound : LookupState::kDeleted);
    EXPECT_EQ(r.value, e.value);
    ASSERT_OK(t->Get(e.key.user_key, e.key.seq - 1, &r));
    EXPECT_EQ(r.state, LookupState::kNotFound);
  }
  uint64_t reads = stats.block_reads.load();
  for (int i = 0; i < 1000; ++i) {
    LookupResult r;
    ASSERT_OK(t->Get("zz-absent" + std::to_string(i), kMaxSequenceNumber, &r));
    EXPECT_EQ(r.state, LookupState::kNotFound);
  }
  // The filter answers nearly all absent probes without block reads.
  EXPECT_LT(stats.block_reads.load() - reads, 50u);
  EXPECT_GT(stats.block_cache_hits.load(), 0u);
}

TEST(Sst, BlocksNeverSplitEntries) {
  TempDir dir;
  std::vector<Entry> entries;
  for (int i = 0; i < 50; ++i) {
    entries.push_back({{"k" + std::to_string(100 + i), 1, ValueKind::kPut},
                       std::string(i % 3 == 0 ? 3000 : 100, 'x')});
  }
  ASSERT_OK(Build(dir.Sub("t.sst"), entries, 1024));
  std::string raw;
  ASSERT_OK(ReadFileToString(dir.Sub("t.sst"), &raw));
  const uint64_t index_off = DecodeFixed64(raw.data() + raw.size() - 24);
  const uint64_t filter_off = DecodeFixed64(raw.data() + raw.size() - 16);
  EXPECT_EQ(DecodeFixed32(raw.data() + raw.size() - 4), kSstMagic);
  EXPECT_EQ(DecodeFixed32(raw.data() + raw.size() - 8), kSstFormatVersion);
  Decoder idx(std::string_view(raw).substr(index_off, filter_off - index_off));
  size_t total = 0;
  while (!idx.empty()) {
    uint32_t klen, len;
    uint64_t off;
    std::string_view first;
    ASSERT_TRUE(idx.GetFixed32(&klen) && idx.GetBytes(klen, &first) && idx.GetFixed64(&off) &&
                idx.GetFixed32(&len));
    std::string_view block = std::string_view(raw).substr(off, len);
    size_t pos = 0, n = 0;
    BlockEntry e;
    while (pos < block.size()) {
      ASSERT_TRUE(ParseBlockEntry(block, &pos, &e));
      if (n == 0) EXPECT_EQ(e.key, first);
      ++n;
    }
    EXPECT_TRUE(len <= 1024 || n == 1) << len << " " << n;
    total += n;
  }
  EXPECT_EQ(total, entries.size());
}

TEST(Sst, BadMagicIsRejected) {
  TempDir dir;
  std::vector<Entry> entries = {{{"a", 1, ValueKind::kPut}, "v"}};
  ASSERT_OK(Build(dir.Sub("t.sst"), entries, 1024));
  std::string raw;
  ASSERT_OK(ReadFileToString(dir.Sub("t.sst"), &raw));
  raw[raw.size() - 1] ^= 0x55;
  ASSERT_OK(WriteStringToFile(dir.Sub("bad.sst"), raw, false));
  std::shared_ptr<TableReader> t;
  EXPECT_FALSE(TableReader::Open(dir.Sub("bad.sst"), 2, {}, &t).ok());
}

TEST(Sst, FlushOfMemtableIsSorted) {
  TempDir dir;
  MemTable m;
  std::mt19937_64 rng(9);
  for (uint64_t s = 1; s <= 100000; ++s) {
    m.Add("k" + std::to_string(rng() % 20000), s, ValueKind::kPut, "v");
  }
  std::unique_ptr<WritableFile> f;
  ASSERT_OK(WritableFile::Open(dir.Sub("m.sst"), true, &f));
  TableBuilder b(std::move(f), 4096, 10);
  auto it = m.NewIterator();
  for (it->SeekToFirst(); it->Valid(); it->Next()) {
    ASSERT_OK(b.Add(it->user_key(), it->seq(), it->kind(), it->value()));
  }
  ASSERT_OK(b.Finish(false));
  std::shared_ptr<TableReader> t;
  ASSERT_OK(TableReader::Open(dir.Sub("m.sst"), 1, {}, &t));
  auto r = t->NewIterator();
  std::string prev_key;
  uint64_t prev_seq = 0;
  size_t n = 0;
  for (r->SeekToFirst(); r->Valid(); r->Next(), ++n) {
    if (n) ASSERT_LT(CompareInternal(prev_key, prev_seq, r->user_key(), r->seq()), 0);
    prev_key = r->user_key();
    prev_seq = r->seq();
  }
  EXPECT_EQ(n, 100000u);
}

TEST(Sst, OutOfOrderAddIsRejected) {
  TempDir dir;
  std::unique_ptr<WritableFile> f;
  ASSERT_OK(WritableFile::Open(dir.Sub("o.sst"), true, &f));
  TableBuilder b(std::move(f), 4096, 10);
  ASSERT_OK(b.Add("b", 1, ValueKind::kPut, ""));
  EXPECT_FALSE(b.Add("a", 2, ValueKind::kPut, "").ok());
  b.Abandon();
}

}  // namespace
}  // namespace telsm
