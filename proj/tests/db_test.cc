#include "telsm/db.h"

#include <map>
#include <random>

#include "telsm/codec.h"
#include "test_util.h"

namespace telsm {
namespace {

using testing::Key;
using testing::MustSchema;
using testing::SmallConfig;
using testing::TempDir;

Row MakeRow(uint64_t i, uint64_t ver) {
  return Row{i * 7 + ver, std::string("s") + std::to_string(i % 97), i ^ ver,
             std::string(20 + i % 13, static_cast<char>('a' + ver % 26)), ver};
}

const char* kSchema = "a:u64,b:str,c:u64,d:str,e:u64";

class DBTest : public ::testing::Test {
 protected:
  void Open(std::function<void(EngineConfig&)> tweak = nullptr) {
    EngineConfig c = SmallConfig(dir_.Sub("db"));
    if (tweak) tweak(c);
    ASSERT_OK(DB::Open(c, &db_));
  }
  void Reopen() {
    ASSERT_OK(db_->Close());
    db_.reset();
    Open();
  }

  // Random puts and deletes mirrored in `model_`.
  void Churn(const std::string& cf, int ops, uint64_t seed, int key_space = 600) {
    std::mt19937_64 rng(seed);
    for (int n = 0; n < ops; ++n) {
      uint64_t k = rng() % key_space;
      if (rng() % 10 == 0) {
        ASSERT_OK(db_->Remove(cf, Key(k)));
        model_.erase(Key(k));
      } else {
        Row r = MakeRow(k, rng() % 1000);
        ASSERT_OK(db_->Insert(cf, Key(k), r));
        model_[Key(k)] = r;
      }
    }
  }

  void CheckAgainstModel(const std::string& cf) {
    Schema s = MustSchema(kSchema);
    for (int k = 0; k < 620; ++k) {
      Row got;
      Status st = db_->ReadPointFull(cf, Key(k), &got);
      auto it = model_.find(Key(k));
      if (it == model_.end()) {
        EXPECT_TRUE(st.IsNotFound()) << Key(k) << " " << st.ToString();
      } else {
        ASSERT_OK(st);
        EXPECT_EQ(got, it->second) << Key(k);
        Value v;
        ASSERT_OK(db_->ReadPointColumn(cf, Key(k), "d", &v));
        EXPECT_EQ(v, it->second[3]);
      }
    }
    std::vector<KeyRow> rows;
    ASSERT_OK(db_->ReadRangeFull(cf, Key(100), Key(400), &rows));
    auto lo = model_.lower_bound(Key(100)), hi = model_.lower_bound(Key(400));
    ASSERT_EQ(rows.size(), static_cast<size_t>(std::distance(lo, hi)));
    size_t i = 0;
    for (auto it = lo; it != hi; ++it, ++i) {
      EXPECT_EQ(rows[i].first, it->first);
      EXPECT_EQ(rows[i].second, it->second);
    }
    std::vector<KeyValue> vals;
    ASSERT_OK(db_->ReadRangeColumn(cf, Key(0), Key(1000), "c", &vals));
    ASSERT_EQ(vals.size(), model_.size());
    i = 0;
    for (auto& [k, r] : model_) {
      EXPECT_EQ(vals[i].first, k);
      EXPECT_EQ(vals[i].second, r[2]);
      ++i;
    }
  }

  TempDir dir_;
  std::unique_ptr<DB> db_;
  std::map<std::string, Row> model_;
};

TEST_F(DBTest, PlainColumnFamilyMatchesModel) {
  Open();
  ASSERT_OK(db_->CreateColumnFamily("t", MustSchema(kSchema), RecordFormat::kPacked));
  Churn("t", 5000, 1);
  CheckAgainstModel("t");
  ASSERT_OK(db_->WaitForQuiescence());
  CheckAgainstModel("t");
  ASSERT_TRUE(db_->CurrentVersion()->TotalFileBytes() > 0);
  EXPECT_GT(db_->stats().flush_jobs.load(), 5u);
  EXPECT_GT(db_->stats().level_jobs.load(), 0u);
  EXPECT_EQ(db_->stats().tier_jobs.load(), 0u);
  Reopen();
  CheckAgainstModel("t");
}

TEST_F(DBTest, SplitPipelineMatchesModel) {
  Open();
  ASSERT_OK(db_->CreateColumnFamily("t", MustSchema(kSchema), RecordFormat::kText));
  ASSERT_OK(db_->LinkTransformers("t", {TransformerSpec::Split(2), TransformerSpec::Convert(
                                                                         RecordFormat::kText,
                                                                         RecordFormat::kPacked)}));
  Churn("t", 4000, 2);
  CheckAgainstModel("t");
  ASSERT_OK(db_->MigrateAll());
  CheckAgainstModel("t");
  auto v = db_->CurrentVersion();
  const ColumnFamilyDescriptor* root = v->FindByName("t");
  ASSERT_NE(root, nullptr);
  EXPECT_EQ(v->CfBytes(root->id), 0u);
  EXPECT_OK(v->CheckShape());
  EXPECT_GT(db_->stats().tier_jobs.load(), 0u);
  EXPECT_GT(db_->stats().level_jobs.load(), 0u);
  // 5 columns at target 2: stages [2,3] then [1,1][1,2].
  size_t leaves_with_data = 0;
  for (auto& [id, st] : v->cfs) {
    if (!st.desc->has_transformer() && v->CfBytes(id) > 0) ++leaves_with_data;
  }
  EXPECT_EQ(leaves_with_data, 4u) << v->DebugString();
  Reopen();
  Churn("t", 2000, 3);
  CheckAgainstModel("t");
  ASSERT_OK(db_->WaitForQuiescence());
  CheckAgainstModel("t");
}

TEST_F(DBTest, AugmentIndexTracksUpdates) {
  Open();
  ASSERT_OK(db_->CreateColumnFamily("t", MustSchema(kSchema), RecordFormat::kPacked));
  ASSERT_OK(db_->LinkTransformers("t", {TransformerSpec::Augment({"e"})}));
  EXPECT_TRUE(db_->HasIndex("t", "e"));
  EXPECT_FALSE(db_->HasIndex("t", "a"));
  Churn("t", 4000, 4);
  auto check = [&] {
    for (uint64_t v : {0ull, 5ull, 17ull, 999ull}) {
      std::vector<KeyRow> rows;
      ASSERT_OK(db_->ReadIndexPoint("t", "e", Value(v), &rows));
      std::vector<KeyRow> want;
      for (auto& [k, r] : model_) {
        if (std::get<uint64_t>(r[4]) == v) want.emplace_back(k, r);
      }
      EXPECT_EQ(rows, want) << v;
    }
    std::vector<KeyValue> got;
    ASSERT_OK(db_->ReadIndexRange("t", "e", Value(uint64_t{100}), Value(uint64_t{300}), &got));
    std::vector<KeyValue> want;
    for (auto& [k, r] : model_) {
      uint64_t e = std::get<uint64_t>(r[4]);
      if (e >= 100 && e < 300) want.emplace_back(k, r[4]);
    }
    EXPECT_EQ(got, want);
  };
  check();
  ASSERT_OK(db_->MigrateAll());
  check();
  CheckAgainstModel("t");
  std::vector<KeyRow> rows;
  EXPECT_TRUE(db_->ReadIndexPoint("t", "a", Value(uint64_t{1}), &rows).IsInvalidArgument());
}

}  // namespace
}  // namespace telsm
