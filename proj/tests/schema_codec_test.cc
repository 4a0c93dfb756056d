#include <random>

#include "telsm/bench.h"
#include "telsm/codec.h"
#include "telsm/schema.h"
#include "test_util.h"

namespace telsm {
namespace {

using testing::MustSchema;

Row RandomRow(const Schema& s, std::mt19937_64& rng) {
  Row r;
  for (const auto& c : s.columns()) {
    if (c.type == ColumnType::kU64) {
      r.push_back(rng() >> (rng() % 64));
    } else {
      std::string v(rng() % 40, ' ');
      for (auto& ch : v) ch = static_cast<char>(rng() % 256);
      r.push_back(v);
    }
  }
  return r;
}

TEST(Schema, ParseAndLookup) {
  Schema s = MustSchema("a:u64,b:str");
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.IndexOf("b"), 1u);
  EXPECT_FALSE(s.IndexOf("c").has_value());
  EXPECT_EQ(s.ToString(), "a:u64,b:str");
  Schema bad;
  EXPECT_FALSE(Schema::Parse("a:u64,a:str", &bad).ok());
  EXPECT_FALSE(Schema::Parse("", &bad).ok());
  EXPECT_FALSE(Schema::Parse("a:float", &bad).ok());
  EXPECT_TRUE(s.Matches(Row{uint64_t{1}, std::string("x")}));
  EXPECT_FALSE(s.Matches(Row{std::string("x"), uint64_t{1}}));
  EXPECT_EQ(s.Slice(1, 2).ToString(), "b:str");
}

TEST(TextCodec, Examples) {
  Schema s = MustSchema("a:u64,b:str");
  EXPECT_EQ(EncodeText(s, Row{uint64_t{5}, std::string("hi")}), R"({"a":5,"b":"hi"})");
  EXPECT_EQ(EncodeText(MustSchema("s:str"), Row{std::string()}), R"({"s":""})");
  Row r;
  ASSERT_OK(DecodeText(s, R"({"a":5,"b":"hi"})", &r));
  EXPECT_EQ(r, (Row{uint64_t{5}, std::string("hi")}));
  ASSERT_OK(DecodeText(s, R"({"b":"hi","a":5})", &r));
  EXPECT_EQ(r, (Row{uint64_t{5}, std::string("hi")}));
  EXPECT_FALSE(DecodeText(s, R"({"a":5,"a":6,"b":"hi"})", &r).ok());
  EXPECT_FALSE(DecodeText(s, R"({"a":5})", &r).ok());
  EXPECT_FALSE(DecodeText(s, R"({"a":"5","b":"hi"})", &r).ok());
  EXPECT_FALSE(DecodeText(s, R"({"a":5,"b":"hi"} x)", &r).ok());
}

TEST(TextCodec, EscapesRoundTrip) {
  Schema s = MustSchema("s:str");
  Row r{std::string("q\"b\\s\n\t\x01\x7f\xc3\xa9")};
  Row back;
  ASSERT_OK(DecodeText(s, EncodeText(s, r), &back));
  EXPECT_EQ(back, r);
}

TEST(PackedCodec, Examples) {
  Schema s = MustSchema("a:u64,b:str");
  std::string out;
  ASSERT_OK(EncodePacked(s, Row{uint64_t{5}, std::string("hi")}, &out));
  EXPECT_EQ(out, std::string("\x01\x05\x00\x00\x00\x00\x00\x00\x00\x02\x00hi", 13));
  std::string cols;
  for (int i = 0; i < 50; ++i) cols += (i ? "," : "") + std::string("c") + std::to_string(i) + ":u64";
  Schema wide = MustSchema(cols);
  ASSERT_OK(EncodePacked(wide, Row(50, uint64_t{9}), &out));
  EXPECT_EQ(out.size(), 401u);
  EXPECT_FALSE(EncodePacked(MustSchema("s:str"), Row{std::string(65536, 'x')}, &out).ok());
  Row r;
  EXPECT_FALSE(DecodePacked(s, std::string("\x02\x05", 2), &r).ok());
  EXPECT_FALSE(DecodePacked(s, out.substr(0, 5), &r).ok());
}

TEST(Codecs, RandomRoundTrip) {
  std::mt19937_64 rng(11);
  Schema s = bench::MakeSchema(bench::SchemaPreset::kWide50);
  for (int i = 0; i < 300; ++i) {
    Row r = RandomRow(s, rng);
    for (auto f : {RecordFormat::kText, RecordFormat::kPacked}) {
      std::string enc;
      ASSERT_OK(EncodeRecord(f, s, r, &enc));
      Row back;
      ASSERT_OK(DecodeRecord(f, s, enc, &back));
      ASSERT_EQ(back, r);
      for (size_t c : {size_t{0}, size_t{7}, size_t{49}}) {
        Value v;
        ASSERT_OK(ExtractColumn(f, s, enc, c, &v));
        EXPECT_EQ(v, r[c]);
      }
    }
  }
}

TEST(Codecs, ProjectColumnMatchesDecodeThenPick) {
  Schema s = MustSchema("a:u64,b:str,c:u64");
  Row r{uint64_t{5}, std::string("hi"), uint64_t{7}};
  std::string text = EncodeText(s, r), out;
  ASSERT_OK(ProjectColumn(s, text, RecordFormat::kText, "b", &out));
  EXPECT_EQ(out, R"({"b":"hi"})");
  std::string packed;
  ASSERT_OK(EncodePacked(s, r, &packed));
  ASSERT_OK(ProjectColumn(s, packed, RecordFormat::kPacked, "a", &out));
  EXPECT_EQ(out, std::string("\x01\x05\x00\x00\x00\x00\x00\x00\x00", 9));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    Row row = RandomRow(s, rng);
    for (const auto& c : s.columns()) {
      std::string want;
      size_t idx = *s.IndexOf(c.name);
      ASSERT_OK(EncodePacked(s.Slice(idx, idx + 1), Row{row[idx]}, &want));
      ASSERT_OK(EncodePacked(s, row, &packed));
      ASSERT_OK(ProjectColumn(s, packed, RecordFormat::kPacked, c.name, &out));
      EXPECT_EQ(out, want);
    }
  }
  EXPECT_FALSE(ProjectColumn(s, packed, RecordFormat::kPacked, "zz", &out).ok());
}

TEST(Codecs, PackedSmallerThanTextOnSyntheticCorpus) {
  for (auto preset : {bench::SchemaPreset::kWide50, bench::SchemaPreset::kSplit32}) {
    Schema s = bench::MakeSchema(preset);
    for (uint64_t i = 0; i < 2000; ++i) {
      Row r = bench::SynthRow(1, i, s);
      std::string text = EncodeText(s, r), packed;
      ASSERT_OK(EncodePacked(s, r, &packed));
      ASSERT_LT(packed.size(), text.size());
    }
  }
}

}  // namespace
}  // namespace telsm
