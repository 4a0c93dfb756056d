#include "telsm/link.h"

#include "link_fixture.h"

namespace telsm {
namespace {

using testing::Link;
using testing::RootVersion;

std::string Columns(int n, const char* type = "u64") {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? ",c" : "c") + std::to_string(i) + ":" + type;
  return s;
}

std::vector<const ColumnFamilyDescriptor*> Terminals(const Version& v) {
  std::vector<const ColumnFamilyDescriptor*> out;
  for (auto id : LogicalFamily(v, 0)) {
    const auto* d = v.cf(id)->desc.get();
    if (!d->has_transformer()) out.push_back(d);
  }
  return out;
}

TEST(ValidateAndSort, OrdersGradualFirst) {
  std::vector<TransformerSpec> out;
  auto conv = TransformerSpec::Convert(RecordFormat::kText, RecordFormat::kPacked);
  ASSERT_OK(ValidateAndSort({conv, TransformerSpec::Split(2)}, &out));
  EXPECT_EQ(out, (std::vector<TransformerSpec>{TransformerSpec::Split(2), conv}));
  ASSERT_OK(ValidateAndSort({TransformerSpec::Identity()}, &out));
  EXPECT_EQ(out.size(), 1u);
  EXPECT_FALSE(ValidateAndSort({TransformerSpec::Split(2), TransformerSpec::Split(3)}, &out).ok());
  EXPECT_FALSE(ValidateAndSort({}, &out).ok());
  EXPECT_FALSE(ValidateAndSort({conv, conv}, &out).ok());
  EXPECT_FALSE(
      ValidateAndSort({TransformerSpec::Convert(RecordFormat::kText, RecordFormat::kText)}, &out).ok());
}

TEST(TransformerSpec, ParseAndPrint) {
  std::vector<TransformerSpec> specs;
  ASSERT_OK(TransformerSpec::ParseList(
      "split(target_group_size=4), convert(text,packed), augment(cols=[c3,c5])", &specs));
  ASSERT_EQ(specs.size(), 3u);
  EXPECT_EQ(specs[0], TransformerSpec::Split(4));
  EXPECT_EQ(specs[1], TransformerSpec::Convert(RecordFormat::kText, RecordFormat::kPacked));
  EXPECT_EQ(specs[2], TransformerSpec::Augment({"c3", "c5"}));
  for (const auto& s : specs) {
    TransformerSpec back;
    ASSERT_OK(TransformerSpec::Parse(s.ToString(), &back));
    EXPECT_EQ(back, s);
  }
  TransformerSpec s;
  ASSERT_OK(TransformerSpec::Parse("identity", &s));
  EXPECT_EQ(s.kind, TransformerKind::kIdentity);
  EXPECT_FALSE(TransformerSpec::Parse("shuffle", &s).ok());
  EXPECT_FALSE(TransformerSpec::Parse("convert(text)", &s).ok());
}

TEST(SplitStages, NineColumnsMatchTheFigure) {
  auto stages = PlanSplitStages(9, 2);
  ASSERT_EQ(stages.size(), 3u);
  EXPECT_EQ(stages[0], (ColumnGroups{{0, 4}, {4, 9}}));
  EXPECT_EQ(stages[1], (ColumnGroups{{0, 2}, {2, 4}, {4, 6}, {6, 9}}));
  size_t ones = 0, twos = 0;
  for (auto [b, e] : stages[2]) (e - b == 1 ? ones : twos) += 1;
  EXPECT_EQ(ones, 7u);
  EXPECT_EQ(twos, 1u);
  EXPECT_TRUE(PlanSplitStages(4, 4).empty());
}

TEST(SplitStages, LeavesPartitionTheSchema) {
  for (size_t n = 1; n <= 64; ++n) {
    for (size_t target = 1; target <= 9; ++target) {
      auto stages = PlanSplitStages(n, target);
      ColumnGroups prev{{0, n}};
      for (const auto& st : stages) {
        size_t pos = 0;
        for (auto [b, e] : st) {
          ASSERT_EQ(b, pos);
          ASSERT_LT(b, e);
          pos = e;
        }
        ASSERT_EQ(pos, n);
        ASSERT_GE(st.size(), prev.size());
        prev = st;
      }
      for (auto [b, e] : prev) ASSERT_LE(e - b, std::max<size_t>(target, 1));
    }
  }
}

TEST(Link, NineColumnSplitBuildsEightLeaves) {
  Version v = RootVersion("t", Columns(9)), out;
  ASSERT_OK(Link(v, {TransformerSpec::Split(2)}, &out));
  auto leaves = Terminals(out);
  ASSERT_EQ(leaves.size(), 8u);
  const auto* g0 = out.FindByName("t_l1g0");
  const auto* g1 = out.FindByName("t_l1g1");
  ASSERT_TRUE(g0 && g1);
  EXPECT_EQ(g0->schema.ToString(), "c0:u64,c1:u64,c2:u64,c3:u64");
  EXPECT_EQ(g1->schema.size(), 5u);
  EXPECT_EQ(g1->column_offset, 4u);
  EXPECT_FALSE(g0->user_facing());
  size_t covered = 0;
  for (auto* l : leaves) {
    EXPECT_EQ(l->root_id, 0);
    EXPECT_EQ(l->column_offset, covered);
    covered += l->schema.size();
  }
  EXPECT_EQ(covered, 9u);
  EXPECT_OK(out.CheckShape());
}

TEST(Link, SplitConvertLayering) {
  Version v = RootVersion("t", Columns(32)), out;
  auto conv = TransformerSpec::Convert(RecordFormat::kText, RecordFormat::kPacked);
  ASSERT_OK(Link(v, {conv, TransformerSpec::Split(4)}, &out));
  auto leaves = Terminals(out);
  ASSERT_EQ(leaves.size(), 8u);
  for (auto* l : leaves) {
    EXPECT_EQ(l->schema.size(), 4u);
    EXPECT_EQ(l->format, RecordFormat::kPacked);
    EXPECT_NE(l->name.find("_converted"), std::string::npos) << l->name;
    const auto* parent = out.cf(l->parent_id)->desc.get();
    EXPECT_EQ(parent->transformer->kind, TransformerKind::kConvert);
    EXPECT_EQ(parent->format, RecordFormat::kText);
    EXPECT_NE(parent->name.find("_l3g"), std::string::npos) << parent->name;
  }
}

TEST(Link, AugmentCreatesPrimaryAndSecondaries) {
  Version v = RootVersion("t", "a:u64,b:str,c:u64"), out;
  ASSERT_OK(Link(v, {TransformerSpec::Augment({"b", "c"})}, &out));
  const auto* p = out.FindByName("t_primary");
  const auto* s1 = out.FindByName("t_secondary_1");
  const auto* s2 = out.FindByName("t_secondary_2");
  ASSERT_TRUE(p && s1 && s2);
  EXPECT_EQ(p->role, CfRole::kRow);
  EXPECT_EQ(s1->role, CfRole::kIndex);
  EXPECT_EQ(s1->index_column, "b");
  EXPECT_EQ(s2->index_column, "c");
  EXPECT_FALSE(Link(v, {TransformerSpec::Augment({"zz"})}, &out).ok());
}

TEST(Link, IdentityIsOneHop) {
  Version v = RootVersion("t", "a:u64"), out;
  ASSERT_OK(Link(v, {TransformerSpec::Identity()}, &out));
  auto fam = LogicalFamily(out, 0);
  ASSERT_EQ(fam.size(), 2u);
  EXPECT_FALSE(out.cf(fam[1])->desc->has_transformer());
}

TEST(Link, RejectsRelinkCollisionAndInternalSource) {
  Version v = RootVersion("t", "a:u64,b:u64"), out, again;
  ASSERT_OK(Link(v, {TransformerSpec::Identity()}, &out));
  EXPECT_FALSE(Link(out, {TransformerSpec::Identity()}, &again).ok());

  ColumnFamilyDescriptor clash;
  clash.id = 1;
  clash.root_id = 1;
  clash.name = "t_identity";
  clash.schema = testing::MustSchema("a:u64");
  Version with_clash;
  ASSERT_OK(ApplyEdits(v, {VersionEdit::CreateCf(clash)}, 7, &with_clash));
  EXPECT_FALSE(Link(with_clash, {TransformerSpec::Identity()}, &again).ok());

  LinkPlan plan;
  ColumnFamilyId internal = LogicalFamily(out, 0)[1];
  EXPECT_FALSE(PlanLinks(out, internal, {TransformerSpec::Identity()}, &plan).ok());
  // Convert from a format the CF does not hold.
  EXPECT_FALSE(
      Link(v, {TransformerSpec::Convert(RecordFormat::kPacked, RecordFormat::kText)}, &again).ok());
}

TEST(Link, ExtensionReachesSameGraphAsOneShot) {
  Version v = RootVersion("t", Columns(12));
  auto conv = TransformerSpec::Convert(RecordFormat::kText, RecordFormat::kPacked);
  Version one, staged, two;
  ASSERT_OK(Link(v, {TransformerSpec::Split(3), conv}, &one));
  ASSERT_OK(Link(v, {TransformerSpec::Split(3)}, &staged));
  ASSERT_OK(Link(staged, {conv}, &two, true));
  auto names = [](const Version& x) {
    std::vector<std::string> out;
    for (auto* d : Terminals(x)) out.push_back(d->name + "/" + d->schema.ToString());
    std::sort(out.begin(), out.end());
    return out;
  };
  EXPECT_EQ(names(one), names(two));
  Version bad;
  EXPECT_FALSE(Link(staged, {TransformerSpec::Split(2)}, &bad, true).ok());
}

}  // namespace
}  // namespace telsm
