#include "telsm/memtable.h"

#include <map>
#include <random>
#include <thread>

#include "telsm/iterator.h"
#include "test_util.h"

namespace telsm {
namespace {

TEST(MemTable, GetHonoursSnapshotAndDeletes) {
  MemTable m;
  EXPECT_TRUE(m.empty());
  m.Add("a", 1, ValueKind::kPut, "v1");
  m.Add("a", 3, ValueKind::kPut, "v3");
  m.Add("a", 5, ValueKind::kDelete, "");
  EXPECT_EQ(m.Get("a", 0).state, LookupState::kNotFound);
  EXPECT_EQ(m.Get("a", 2).value, "v1");
  EXPECT_EQ(m.Get("a", 4).value, "v3");
  EXPECT_EQ(m.Get("a", 4).seq, 3u);
  EXPECT_EQ(m.Get("a", 9).state, LookupState::kDeleted);
  EXPECT_EQ(m.Get("b", 9).state, LookupState::kNotFound);
  EXPECT_EQ(m.largest_seq(), 5u);
  EXPECT_EQ(m.num_entries(), 3u);
}

TEST(MemTable, IterationIsSortedByInternalKey) {
  MemTable m;
  std::mt19937_64 rng(1);
  std::vector<InternalKey> keys;
  for (uint64_t seq = 1; seq <= 100000; ++seq) {
    InternalKey k{"k" + std::to_string(rng() % 5000), seq, ValueKind::kPut};
    m.Add(k.user_key, k.seq, k.kind, "v");
    keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end());
  auto it = m.NewIterator();
  size_t i = 0;
  for (it->SeekToFirst(); it->Valid(); it->Next(), ++i) {
    ASSERT_LT(i, keys.size());
    ASSERT_EQ(it->user_key(), keys[i].user_key);
    ASSERT_EQ(it->seq(), keys[i].seq);
  }
  EXPECT_EQ(i, keys.size());
  it->Seek("k2");
  ASSERT_TRUE(it->Valid());
  EXPECT_GE(it->user_key(), "k2");
}

TEST(MemTable, ConcurrentReadersSeeConsistentPrefix) {
  MemTable m;
  std::atomic<uint64_t> published{0};
  std::atomic<bool> stop{false};
  std::thread reader([&] {
    while (!stop.load()) {
      uint64_t p = published.load(std::memory_order_acquire);
      if (p == 0) continue;
      auto r = m.Get("key" + std::to_string(p % 100), p);
      ASSERT_EQ(r.state, LookupState::kFound);
    }
  });
  for (uint64_t seq = 1; seq <= 20000; ++seq) {
    m.Add("key" + std::to_string(seq % 100), seq, ValueKind::kPut, std::to_string(seq));
    published.store(seq, std::memory_order_release);
  }
  stop = true;
  reader.join();
}

}  // namespace
}  // namespace telsm
