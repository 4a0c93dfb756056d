#include "telsm/compaction.h"

#include <map>
#include <random>
#include <set>

#include "telsm/codec.h"
#include "telsm/db.h"
#include "telsm/link.h"
#include "link_fixture.h"
#include "terminal_contents.h"

namespace telsm {
namespace {

using testing::Key;
using testing::MustSchema;
using testing::SmallConfig;
using testing::TempDir;

std::shared_ptr<FileMeta> File(ColumnFamilyId cf, int level, uint64_t number, std::string lo,
                               std::string hi, uint64_t bytes) {
  auto f = std::make_shared<FileMeta>();
  f->cf_id = cf;
  f->level = level;
  f->file_number = number;
  f->smallest = InternalKey{std::move(lo), 1, ValueKind::kPut};
  f->largest = InternalKey{std::move(hi), 1, ValueKind::kPut};
  f->file_bytes = bytes;
  return f;
}

std::shared_ptr<const Version> With(const Version& base, const EditGroup& g) {
  auto v = std::make_shared<Version>();
  Status st = ApplyEdits(base, g, 7, v.get());
  if (!st.ok()) throw std::runtime_error(st.ToString());
  return v;
}

TEST(PickCompaction, TransformerCfTiersAllOfL0AtZ) {
  Version root = testing::RootVersion("t", "a:u64"), linked;
  ASSERT_OK(testing::Link(root, {TransformerSpec::Identity()}, &linked));
  EngineConfig cfg;
  cfg.level0_file_num_compaction_trigger = 3;
  auto v = With(linked, {VersionEdit::AddFile(File(0, 0, 1, "a", "z", 10)),
                         VersionEdit::AddFile(File(0, 0, 2, "b", "c", 10))});
  EXPECT_FALSE(PickCompaction(v, 0, cfg, nullptr).has_value());
  auto forced = PickCompaction(v, 0, cfg, nullptr, true);
  ASSERT_TRUE(forced.has_value());
  EXPECT_EQ(forced->mode, CompactionMode::kTierToDestinations);
  auto v3 = With(*v, {VersionEdit::AddFile(File(0, 0, 3, "c", "d", 10))});
  auto job = PickCompaction(v3, 0, cfg, nullptr);
  ASSERT_TRUE(job.has_value());
  EXPECT_EQ(job->inputs.size(), 3u);
  EXPECT_TRUE(job->target_inputs.empty());
  EXPECT_EQ(job->inputs.front()->file_number, 3u);  // newest first
}

TEST(PickCompaction, LeveledCfPicksL0ThenOversizedLevel) {
  Version base = testing::RootVersion("t", "a:u64");
  EngineConfig cfg;
  cfg.level0_file_num_compaction_trigger = 2;
  cfg.write_buffer_size = 100;
  cfg.size_factor = 10;
  EXPECT_EQ(MaxBytesForLevel(cfg, 1), 1000u);
  EXPECT_EQ(MaxBytesForLevel(cfg, 3), 100000u);
  auto v = With(base, {VersionEdit::AddFile(File(0, 0, 1, "c", "f", 50)),
                       VersionEdit::AddFile(File(0, 0, 2, "d", "e", 50)),
                       VersionEdit::AddFile(File(0, 1, 3, "a", "b", 400)),
                       VersionEdit::AddFile(File(0, 1, 4, "e", "g", 400)),
                       VersionEdit::AddFile(File(0, 2, 5, "a", "z", 400))});
  auto job = PickCompaction(v, 0, cfg, nullptr);
  ASSERT_TRUE(job.has_value());
  EXPECT_EQ(job->mode, CompactionMode::kLevelWithin);
  EXPECT_EQ(job->target_level, 1);
  ASSERT_EQ(job->target_inputs.size(), 1u);
  EXPECT_EQ(job->target_inputs[0]->file_number, 4u);
  EXPECT_FALSE(job->bottommost);

  auto over = With(base, {VersionEdit::AddFile(File(0, 1, 3, "a", "b", 600)),
                          VersionEdit::AddFile(File(0, 1, 4, "e", "g", 600)),
                          VersionEdit::AddFile(File(0, 2, 5, "f", "z", 400))});
  CompactCursors cursors;
  auto first = PickCompaction(over, 0, cfg, &cursors);
  auto second = PickCompaction(over, 0, cfg, &cursors);
  ASSERT_TRUE(first && second);
  EXPECT_EQ(first->source_level, 1);
  EXPECT_EQ(first->inputs[0]->file_number, 3u);
  EXPECT_TRUE(first->target_inputs.empty());
  EXPECT_TRUE(first->bottommost);
  EXPECT_EQ(second->inputs[0]->file_number, 4u);
  EXPECT_EQ(second->target_inputs.size(), 1u);

  auto quiet = With(base, {VersionEdit::AddFile(File(0, 1, 3, "a", "b", 900))});
  EXPECT_FALSE(PickCompaction(quiet, 0, cfg, nullptr).has_value());
}

TEST(MergeRuns, KeepsNewestAndDropsDeletesOnlyWhenAsked) {
  std::vector<Entry> older = {{{"a", 1, ValueKind::kPut}, "a1"}, {{"b", 2, ValueKind::kPut}, "b2"}};
  std::vector<Entry> newer = {{{"a", 5, ValueKind::kPut}, "a5"}, {{"b", 6, ValueKind::kDelete}, ""},
                              {{"c", 7, ValueKind::kPut}, "c7"}};
  for (bool drop : {false, true}) {
    std::vector<std::unique_ptr<InternalIterator>> kids;
    kids.push_back(NewVectorIterator(older));
    kids.push_back(NewVectorIterator(newer));
    std::vector<Entry> out;
    ASSERT_OK(MergeRuns(NewMergingIterator(std::move(kids)), drop, [&](const Entry& e) {
      out.push_back(e);
      return Status::OK();
    }));
    ASSERT_EQ(out.size(), drop ? 2u : 3u);
    EXPECT_EQ(out[0].value, "a5");
    if (!drop) EXPECT_EQ(out[1].key.kind, ValueKind::kDelete);
    EXPECT_EQ(out.back().value, "c7");
  }
}

// Engine-level properties of transformation-embedded compaction.
class PipelineTest : public ::testing::Test {
 protected:
  static constexpr const char* kSchema = "a:u64,b:str,c:u64,d:str,e:u64,f:u64,g:str,h:u64";

  std::unique_ptr<DB> OpenDb(const std::string& sub) {
    std::unique_ptr<DB> db;
    Status st = DB::Open(SmallConfig(dir_.Sub(sub)), &db);
    if (!st.ok()) throw std::runtime_error(st.ToString());
    return db;
  }

  static Row MakeRow(uint64_t k, uint64_t ver) {
    return Row{k, "b" + std::to_string(ver % 7), k * ver, std::string(30, char('a' + ver % 26)),
               ver, k + ver, "g" + std::to_string(k % 13), ~k};
  }

  // Same deterministic stream of puts and deletes.
  static void Feed(DB* db, uint64_t seed, int ops) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < ops; ++i) {
      uint64_t k = rng() % 800;
      if (rng() % 8 == 0) {
        ASSERT_OK(db->Remove("t", Key(k)));
      } else {
        ASSERT_OK(db->Insert("t", Key(k), MakeRow(k, rng() % 1000)));
      }
    }
  }

  using Contents = testing::TerminalContents;
  static Contents Terminal(DB* db) {
    Contents out;
    bool upstream_empty = false;
    EXPECT_OK(testing::DumpTerminal(db, 0, &out, &upstream_empty));
    EXPECT_TRUE(upstream_empty);
    return out;
  }

  TempDir dir_;
};

TEST_F(PipelineTest, GroupingsOfSplitAndConvertAgree) {
  auto conv = TransformerSpec::Convert(RecordFormat::kText, RecordFormat::kPacked);
  auto a = OpenDb("a"), b = OpenDb("b"), c = OpenDb("c");
  for (auto* db : {a.get(), b.get(), c.get()}) {
    ASSERT_OK(db->CreateColumnFamily("t", MustSchema(kSchema), RecordFormat::kText));
  }
  ASSERT_OK(a->LinkTransformers("t", {TransformerSpec::Split(2), conv}));
  ASSERT_OK(b->LinkTransformers("t", {conv, TransformerSpec::Split(2)}));
  ASSERT_OK(c->LinkTransformers("t", {TransformerSpec::Split(2)}));
  ASSERT_OK(c->ExtendTransformers("t", {conv}));
  for (auto* db : {a.get(), b.get(), c.get()}) {
    Feed(db, 77, 4000);
    ASSERT_OK(db->MigrateAll());
    EXPECT_GT(db->stats().tier_jobs.load(), 0u);
  }
  Contents ca = Terminal(a.get());
  EXPECT_FALSE(ca.empty());
  EXPECT_EQ(ca, Terminal(b.get()));
  EXPECT_EQ(ca, Terminal(c.get()));
}

TEST_F(PipelineTest, SplitLeavesReassembleOriginalRows) {
  auto db = OpenDb("s"), plain = OpenDb("p");
  ASSERT_OK(db->CreateColumnFamily("t", MustSchema(kSchema), RecordFormat::kPacked));
  ASSERT_OK(plain->CreateColumnFamily("t", MustSchema(kSchema), RecordFormat::kPacked));
  ASSERT_OK(db->LinkTransformers("t", {TransformerSpec::Split(3)}));
  Feed(db.get(), 5, 3000);
  Feed(plain.get(), 5, 3000);
  ASSERT_OK(db->MigrateAll());
  ASSERT_OK(plain->WaitForQuiescence());
  Contents leaves = Terminal(db.get()), full = Terminal(plain.get());
  std::map<std::string, Row> joined;
  std::map<std::string, size_t> pieces;
  for (auto& [tk, row] : leaves) {
    size_t offset = std::stoul(tk.first.substr(0, tk.first.find(':')));
    Row& j = joined[tk.second];
    if (j.size() < offset + row.size()) j.resize(offset + row.size());
    std::copy(row.begin(), row.end(), j.begin() + offset);
    pieces[tk.second]++;
  }
  ASSERT_EQ(joined.size(), full.size());
  for (auto& [tk, row] : full) {
    ASSERT_EQ(joined[tk.second], row) << tk.second;
    EXPECT_EQ(pieces[tk.second], 4u);
  }
  EXPECT_OK(db->CurrentVersion()->CheckShape());
}

TEST_F(PipelineTest, IdentityPipelineMatchesPlainEngine) {
  auto db = OpenDb("i"), plain = OpenDb("p");
  ASSERT_OK(db->CreateColumnFamily("t", MustSchema(kSchema), RecordFormat::kText));
  ASSERT_OK(plain->CreateColumnFamily("t", MustSchema(kSchema), RecordFormat::kText));
  ASSERT_OK(db->LinkTransformers("t", {TransformerSpec::Identity()}));
  Feed(db.get(), 9, 3000);
  Feed(plain.get(), 9, 3000);
  ASSERT_OK(db->MigrateAll());
  ASSERT_OK(plain->WaitForQuiescence());
  auto strip = [](const Contents& c) {
    std::map<std::string, Row> out;
    for (auto& [tk, row] : c) out[tk.second] = row;
    return out;
  };
  EXPECT_EQ(strip(Terminal(db.get())), strip(Terminal(plain.get())));
}

TEST_F(PipelineTest, AugmentIndexMatchesPrimaryAtQuiescence) {
  auto db = OpenDb("x");
  ASSERT_OK(db->CreateColumnFamily("t", MustSchema(kSchema), RecordFormat::kText));
  ASSERT_OK(db->LinkTransformers("t", {TransformerSpec::Augment({"b", "e"})}));
  for (uint64_t seed : {1, 2, 3}) {
    Feed(db.get(), seed, 2000);
    ASSERT_OK(db->Flush());
  }
  ASSERT_OK(db->MigrateAll());
  Contents c = Terminal(db.get());
  std::set<std::string> want_b, want_e, got_b, got_e;
  for (auto& [tk, row] : c) {
    if (tk.first.find(":index") != std::string::npos) {
      (tk.first.rfind("1:", 0) == 0 ? got_b : got_e).insert(tk.second);
      continue;
    }
    std::string ik;
    ASSERT_OK(MakeIndexKey(row[1], tk.second, &ik));
    want_b.insert(ik);
    ASSERT_OK(MakeIndexKey(row[4], tk.second, &ik));
    want_e.insert(ik);
  }
  EXPECT_FALSE(want_b.empty());
  EXPECT_EQ(got_b, want_b);
  EXPECT_EQ(got_e, want_e);
}

TEST_F(PipelineTest, TransformerCfsKeepOnlyL0WhileBusy) {
  auto db = OpenDb("l");
  ASSERT_OK(db->CreateColumnFamily("t", MustSchema(kSchema), RecordFormat::kText));
  ASSERT_OK(db->LinkTransformers("t", {TransformerSpec::Split(2)}));
  for (int round = 0; round < 5; ++round) {
    Feed(db.get(), 100 + round, 1500);
    EXPECT_OK(db->CurrentVersion()->CheckShape());
  }
  ASSERT_OK(db->WaitForQuiescence());
  auto v = db->CurrentVersion();
  EXPECT_OK(v->CheckShape());
  EXPECT_GT(db->stats().tier_jobs.load(), 0u);
  EXPECT_GT(db->stats().level_jobs.load(), 0u);
  EXPECT_LT(v->NumFiles(0, 0), 2u * SmallConfig("").level0_file_num_compaction_trigger);
}

}  // namespace
}  // namespace telsm
