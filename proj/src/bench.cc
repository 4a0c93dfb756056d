#include "telsm/bench.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "telsm/codec.h"
#include "telsm/transformer.h"

namespace telsm::bench {

namespace {

using Clock = std::chrono::steady_clock;

uint64_t Mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double Seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

template <typename T>
Status ParseNumber(std::string_view s, T* out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    return Status::InvalidArgument("not a number: " + std::string(s));
  }
  return Status::OK();
}

uint64_t HashValue(const Value& v) {
  if (const auto* u = std::get_if<uint64_t>(&v)) return Mix(*u);
  return std::hash<std::string>()(std::get<std::string>(v));
}

std::vector<std::pair<std::string, std::string>> Tokens(std::string_view line) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) {
    size_t eq = tok.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- dataset

Status ParseSchemaPreset(std::string_view name, SchemaPreset* out) {
  if (name == "wide50" || name == "default") {
    *out = SchemaPreset::kWide50;
  } else if (name == "split32") {
    *out = SchemaPreset::kSplit32;
  } else {
    return Status::InvalidArgument("unknown schema preset " + std::string(name));
  }
  return Status::OK();
}

const char* SchemaPresetName(SchemaPreset p) {
  return p == SchemaPreset::kWide50 ? "wide50" : "split32";
}

Schema MakeSchema(SchemaPreset p) {
  const size_t n = p == SchemaPreset::kWide50 ? 50 : 32;
  const size_t str_every = p == SchemaPreset::kWide50 ? 10 : 4;
  std::vector<Column> cols;
  for (size_t j = 0; j < n; ++j) {
    char name[8];
    std::snprintf(name, sizeof(name), "f%02zu", j);
    cols.push_back({name, j % str_every == 0 ? ColumnType::kStr : ColumnType::kU64});
  }
  Schema s;
  Schema::Make(std::move(cols), &s);
  return s;
}

std::string SynthKey(uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIu64, index);
  return buf;
}

Value SynthValue(uint64_t seed, uint64_t index, const Schema& schema, size_t column,
                 uint64_t version) {
  uint64_t h = Mix(seed ^ Mix(index ^ Mix((version << 16) + column)));
  if (schema.column(column).type == ColumnType::kU64) return h;
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::string s(kSynthStringBytes, ' ');
  for (size_t i = 0; i < kSynthStringBytes; ++i) {
    if (i % 8 == 0) h = Mix(h);
    s[i] = kAlphabet[(h >> (8 * (i % 8))) % 36];
  }
  return s;
}

Row SynthRow(uint64_t seed, uint64_t index, const Schema& schema, uint64_t version) {
  Row row;
  row.reserve(schema.size());
  for (size_t j = 0; j < schema.size(); ++j) {
    row.push_back(SynthValue(seed, index, schema, j, version));
  }
  return row;
}

Zipfian::Zipfian(uint64_t n, double theta) : n_(std::max<uint64_t>(n, 1)) {
  // The closed form needs theta < 1.
  theta_ = std::min(theta, 1 - 1e-6);
  alpha_ = 1 / (1 - theta_);
  zetan_ = 0;
  for (uint64_t i = 1; i <= n_; ++i) zetan_ += 1 / std::pow(static_cast<double>(i), theta_);
  const double zeta2 = 1 + 1 / std::pow(2.0, theta_);
  eta_ = (1 - std::pow(2.0 / n_, 1 - theta_)) / (1 - zeta2 / zetan_);
  half_pow_theta_ = 1 + std::pow(0.5, theta_);
}

uint64_t Zipfian::Next(std::mt19937_64& rng) const {
  const double u = std::uniform_real_distribution<double>(0, 1)(rng);
  const double uz = u * zetan_;
  if (uz < 1) return 0;
  if (uz < half_pow_theta_) return std::min<uint64_t>(1, n_ - 1);
  auto r = static_cast<uint64_t>(n_ * std::pow(eta_ * u - eta_ + 1, alpha_));
  return std::min(r, n_ - 1);
}

Status ParseDistribution(std::string_view name, Distribution* out) {
  if (name == "uniform") {
    *out = Distribution::kUniform;
  } else if (name == "zipfian") {
    *out = Distribution::kZipfian;
  } else {
    return Status::InvalidArgument("unknown key distribution " + std::string(name));
  }
  return Status::OK();
}

KeyChooser::KeyChooser(Distribution dist, uint64_t n, double theta)
    : dist_(dist), n_(std::max<uint64_t>(n, 1)) {
  if (dist_ == Distribution::kZipfian) zipf_.emplace(n_, theta);
}

uint64_t KeyChooser::Next(std::mt19937_64& rng) const {
  if (dist_ == Distribution::kUniform) return rng() % n_;
  return Mix(zipf_->Next(rng)) % n_;
}

// ---------------------------------------------------------------- stats

double NearestRank(const std::vector<double>& sorted, double pct) {
  if (sorted.empty()) return 0;
  auto rank = static_cast<size_t>(std::ceil(pct / 100.0 * sorted.size()));
  rank = std::clamp<size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

LatencyStats LatencyStats::FromSamples(std::vector<double> samples, double elapsed_s) {
  LatencyStats st;
  if (samples.empty()) return st;
  std::sort(samples.begin(), samples.end());
  st.count = samples.size();
  st.min_us = samples.front();
  st.max_us = samples.back();
  st.p25_us = NearestRank(samples, 25);
  st.p50_us = NearestRank(samples, 50);
  st.p75_us = NearestRank(samples, 75);
  st.p99_us = NearestRank(samples, 99);
  st.throughput = elapsed_s > 0 ? st.count / elapsed_s : 0;
  return st;
}

std::string LatencyStats::Format() const {
  // Shortest form that parses back to the same double.
  auto num = [](double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
  };
  return "count=" + std::to_string(count) + " min_us=" + num(min_us) + " p25_us=" + num(p25_us) +
         " p50_us=" + num(p50_us) + " p75_us=" + num(p75_us) + " p99_us=" + num(p99_us) +
         " max_us=" + num(max_us) + " throughput_ops=" + num(throughput);
}

Status LatencyStats::Parse(std::string_view line, LatencyStats* out) {
  std::map<std::string, double*> fields = {
      {"min_us", &out->min_us}, {"p25_us", &out->p25_us}, {"p50_us", &out->p50_us},
      {"p75_us", &out->p75_us}, {"p99_us", &out->p99_us}, {"max_us", &out->max_us},
      {"throughput_ops", &out->throughput},
  };
  size_t seen = 0;
  bool have_count = false;
  for (const auto& [k, v] : Tokens(line)) {
    if (k == "count") {
      TELSM_RETURN_NOT_OK(ParseNumber(v, &out->count));
      have_count = true;
      continue;
    }
    auto it = fields.find(k);
    if (it == fields.end()) continue;
    TELSM_RETURN_NOT_OK(ParseNumber(v, it->second));
    ++seen;
  }
  if (!have_count || seen != fields.size()) {
    return Status::InvalidArgument("incomplete stats line: " + std::string(line));
  }
  return Status::OK();
}

Comparison Compare(const LatencyStats& b, const LatencyStats& c) {
  auto ratio = [](double x, double y) { return y > 0 ? x / y : 1.0; };
  Comparison r;
  r.overhead = b.throughput > 0 ? 1 - c.throughput / b.throughput : 0;
  r.min_ratio = ratio(c.min_us, b.min_us);
  r.p25_ratio = ratio(c.p25_us, b.p25_us);
  r.p50_ratio = ratio(c.p50_us, b.p50_us);
  r.p75_ratio = ratio(c.p75_us, b.p75_us);
  r.p99_ratio = ratio(c.p99_us, b.p99_us);
  r.max_ratio = ratio(c.max_us, b.max_us);
  return r;
}

std::string FormatComparison(const std::string& label, const Comparison& c) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%s overhead=%.2f%% min_ratio=%.3f p25_ratio=%.3f p50_ratio=%.3f "
                "p75_ratio=%.3f p99_ratio=%.3f max_ratio=%.3f",
                label.c_str(), 100 * c.overhead, c.min_ratio, c.p25_ratio, c.p50_ratio,
                c.p75_ratio, c.p99_ratio, c.max_ratio);
  return buf;
}

std::string RunRecord::Format() const {
  std::string out;
  for (const auto& [k, v] : meta) out += k + "=" + v + " ";
  return out + stats.Format();
}

Status RunRecord::Parse(std::string_view line, RunRecord* out) {
  static const std::set<std::string> kStatKeys = {"count",  "min_us", "p25_us",
                                                  "p50_us", "p75_us", "p99_us",
                                                  "max_us", "throughput_ops"};
  out->meta.clear();
  for (auto& [k, v] : Tokens(line)) {
    if (!kStatKeys.count(k)) out->meta[k] = v;
  }
  return LatencyStats::Parse(line, &out->stats);
}

Status ReadRunRecords(const std::string& path, std::vector<RunRecord>* out) {
  std::ifstream f(path);
  if (!f) return Status::IOError("cannot open " + path);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    RunRecord r;
    TELSM_RETURN_NOT_OK(RunRecord::Parse(line, &r));
    out->push_back(std::move(r));
  }
  return Status::OK();
}

// ---------------------------------------------------------------- config

Status BenchConfig::FromKeyValues(std::map<std::string, std::string> kv, BenchConfig* out) {
  BenchConfig c;
  TELSM_RETURN_NOT_OK(c.engine.ApplyKeyValues(&kv));
  auto take = [&](const char* key, auto&& apply) -> Status {
    auto it = kv.find(key);
    if (it == kv.end()) return Status::OK();
    Status s = apply(it->second);
    if (!s.ok()) return Status::InvalidArgument(std::string(key) + ": " + s.message());
    kv.erase(it);
    return Status::OK();
  };
  // Accepted for compatibility with RocksDB-style option dumps; no effect.
  for (const char* k : {"enable_pipelined_write", "max_open_files", "max_background_flushes"}) {
    kv.erase(k);
  }
  TELSM_RETURN_NOT_OK(take("compaction_style", [](const std::string& v) {
    if (v == "level" || v == "kCompactionStyleLevel") return Status::OK();
    return Status::NotSupported("only leveled compaction is available");
  }));
  TELSM_RETURN_NOT_OK(take("cf_name", [&](const std::string& v) {
    c.cf_name = v;
    return Status::OK();
  }));
  TELSM_RETURN_NOT_OK(take("schema", [&](const std::string& v) {
    return ParseSchemaPreset(v, &c.preset);
  }));
  TELSM_RETURN_NOT_OK(take("format", [&](const std::string& v) {
    auto f = ParseRecordFormat(v);
    if (!f) return Status::InvalidArgument("unknown format " + v);
    c.format = *f;
    return Status::OK();
  }));
  TELSM_RETURN_NOT_OK(take("transformer", [&](const std::string& v) {
    return TransformerSpec::ParseList(v, &c.transformers);
  }));
  TELSM_RETURN_NOT_OK(take("external", [&](const std::string& v) {
    if (v == "none") return Status::OK();
    TransformerSpec spec;
    TELSM_RETURN_NOT_OK(TransformerSpec::Parse(v, &spec));
    c.external = spec;
    return Status::OK();
  }));
  TELSM_RETURN_NOT_OK(take("record_count", [&](const std::string& v) {
    return ParseNumber(std::string_view(v), &c.record_count);
  }));
  TELSM_RETURN_NOT_OK(take("load_bytes", [&](const std::string& v) {
    return ParseByteSize(v, &c.load_bytes);
  }));
  TELSM_RETURN_NOT_OK(take("key_distribution", [&](const std::string& v) {
    return ParseDistribution(v, &c.distribution);
  }));
  TELSM_RETURN_NOT_OK(take("zipf_theta", [&](const std::string& v) {
    TELSM_RETURN_NOT_OK(ParseNumber(std::string_view(v), &c.zipf_theta));
    if (!(c.zipf_theta > 0 && c.zipf_theta <= 1)) {
      return Status::InvalidArgument("zipf_theta must lie in (0, 1]");
    }
    return Status::OK();
  }));
  TELSM_RETURN_NOT_OK(take("range_width", [&](const std::string& v) {
    return ParseNumber(std::string_view(v), &c.range_width);
  }));
  TELSM_RETURN_NOT_OK(take("query_column", [&](const std::string& v) {
    c.query_column = v;
    return Status::OK();
  }));
  TELSM_RETURN_NOT_OK(take("index_column", [&](const std::string& v) {
    c.index_column = v;
    return Status::OK();
  }));
  TELSM_RETURN_NOT_OK(take("seed", [&](const std::string& v) {
    return ParseNumber(std::string_view(v), &c.seed);
  }));
  if (!kv.empty()) return Status::InvalidArgument("unknown config key " + kv.begin()->first);
  if (c.external && !c.transformers.empty()) {
    return Status::InvalidArgument("external and transformer are mutually exclusive");
  }
  Schema s = c.schema();
  if (!s.IndexOf(c.QueryColumn())) {
    return Status::InvalidArgument("query_column " + c.QueryColumn() + " not in schema");
  }
  *out = std::move(c);
  return Status::OK();
}

Status BenchConfig::FromText(const std::string& text, BenchConfig* out) {
  std::map<std::string, std::string> kv;
  TELSM_RETURN_NOT_OK(ParseConfigText(text, &kv));
  return FromKeyValues(std::move(kv), out);
}

Status BenchConfig::FromFile(const std::string& path, BenchConfig* out) {
  std::map<std::string, std::string> kv;
  TELSM_RETURN_NOT_OK(ReadConfigFile(path, &kv));
  return FromKeyValues(std::move(kv), out);
}

uint64_t BenchConfig::RecordCount() const {
  if (record_count) return record_count;
  Schema s = schema();
  std::string rec;
  EncodeRecord(format, s, SynthRow(seed, 0, s), &rec);
  return std::max<uint64_t>(1, load_bytes / (rec.size() + 16));
}

std::string BenchConfig::QueryColumn() const {
  if (!query_column.empty()) return query_column;
  Schema s = schema();
  for (const auto& c : s.columns()) {
    if (c.type == ColumnType::kU64) return c.name;
  }
  return s.column(0).name;
}

std::string BenchConfig::IndexColumn() const {
  if (!index_column.empty()) return index_column;
  for (const auto& t : transformers) {
    if (t.kind == TransformerKind::kAugment) return t.indexed_columns.front();
  }
  if (external && external->kind == TransformerKind::kAugment) {
    return external->indexed_columns.front();
  }
  return QueryColumn();
}

std::string BenchConfig::Label() const {
  if (external) return "external[" + external->ToString() + "]";
  if (transformers.empty()) return std::string("plain[") + RecordFormatName(format) + "]";
  std::string out = "te[";
  for (size_t i = 0; i < transformers.size(); ++i) {
    if (i) out += "+";
    out += transformers[i].ToString();
  }
  return out + "]";
}

// ---------------------------------------------------------------- testbed

Status Testbed::Open(const BenchConfig& cfg, std::unique_ptr<Testbed>* out) {
  std::unique_ptr<Testbed> tb(new Testbed);
  tb->cfg_ = cfg;
  tb->schema_ = cfg.schema();
  TELSM_RETURN_NOT_OK(DB::Open(cfg.engine, &tb->db_));
  TELSM_RETURN_NOT_OK(tb->Setup());
  *out = std::move(tb);
  return Status::OK();
}

Testbed::~Testbed() {
  if (db_) db_->Close();
}

Status Testbed::Close() {
  Status s = db_ ? db_->Close() : Status::OK();
  db_.reset();
  return s;
}

Status Testbed::Setup() {
  auto idx = schema_.IndexOf(cfg_.IndexColumn());
  if (!idx) return Status::InvalidArgument("index column " + cfg_.IndexColumn() + " not in schema");
  index_col_ = *idx;

  auto exists = [&](const std::string& name) {
    ColumnFamilyDescriptor d;
    return db_->GetColumnFamily(name, &d).ok();
  };
  auto create = [&](const std::string& name, const Schema& s, RecordFormat f) -> Status {
    if (exists(name)) return Status::OK();
    created_ = true;
    return db_->CreateColumnFamily(name, s, f);
  };

  const auto kind = cfg_.external ? cfg_.external->kind : TransformerKind::kIdentity;
  if (cfg_.external && kind == TransformerKind::kSplit) {
    auto stages = PlanSplitStages(schema_.size(), cfg_.external->target_group_size);
    ColumnGroups final_groups = stages.empty() ? ColumnGroups{{0, schema_.size()}} : stages.back();
    for (size_t g = 0; g < final_groups.size(); ++g) {
      auto [b, e] = final_groups[g];
      groups_.push_back({cfg_.cf_name + "_g" + std::to_string(g), b, e, schema_.Slice(b, e)});
      TELSM_RETURN_NOT_OK(create(groups_.back().cf, groups_.back().schema, cfg_.format));
    }
    return Status::OK();
  }
  if (cfg_.external && kind == TransformerKind::kConvert) {
    if (cfg_.external->from != cfg_.format) {
      return Status::InvalidArgument("external convert must start from the root format");
    }
    return create(cfg_.cf_name, schema_, cfg_.external->to);
  }
  TELSM_RETURN_NOT_OK(create(cfg_.cf_name, schema_, cfg_.format));
  if (cfg_.external && kind == TransformerKind::kAugment) {
    index_cf_ = cfg_.cf_name + "_xidx_" + cfg_.IndexColumn();
    TELSM_RETURN_NOT_OK(Schema::Make({{"v", schema_.column(index_col_).type}}, &index_schema_));
    return create(index_cf_, index_schema_, cfg_.format);
  }
  if (created_ && !cfg_.transformers.empty()) {
    TELSM_RETURN_NOT_OK(db_->LinkTransformers(cfg_.cf_name, cfg_.transformers));
  }
  return Status::OK();
}

bool Testbed::has_index() const {
  return !index_cf_.empty() || db_->HasIndex(cfg_.cf_name, cfg_.IndexColumn());
}

Status Testbed::PutRow(std::string_view key, const Row& row) {
  std::string rec;
  TELSM_RETURN_NOT_OK(EncodeRecord(cfg_.format, schema_, row, &rec));
  return Put(key, rec);
}

Status Testbed::Put(std::string_view key, std::string_view record) {
  if (!cfg_.external || cfg_.external->kind == TransformerKind::kIdentity) {
    return db_->InsertEncoded(cfg_.cf_name, key, record);
  }
  Row row;
  TELSM_RETURN_NOT_OK(DecodeRecord(cfg_.format, schema_, record, &row));
  switch (cfg_.external->kind) {
    case TransformerKind::kConvert: {
      std::string converted;
      TELSM_RETURN_NOT_OK(EncodeRecord(cfg_.external->to, schema_, row, &converted));
      return db_->InsertEncoded(cfg_.cf_name, key, converted);
    }
    case TransformerKind::kSplit: {
      WriteBatch batch;
      std::string piece;
      for (const auto& g : groups_) {
        Row part(row.begin() + g.begin, row.begin() + g.end);
        TELSM_RETURN_NOT_OK(EncodeRecord(cfg_.format, g.schema, part, &piece));
        ColumnFamilyDescriptor d;
        TELSM_RETURN_NOT_OK(db_->GetColumnFamily(g.cf, &d));
        batch.Put(d.id, key, piece);
      }
      return db_->Write(batch);
    }
    case TransformerKind::kAugment: {
      ColumnFamilyDescriptor root, index;
      TELSM_RETURN_NOT_OK(db_->GetColumnFamily(cfg_.cf_name, &root));
      TELSM_RETURN_NOT_OK(db_->GetColumnFamily(index_cf_, &index));
      const Value& now = row[index_col_];
      Value old;
      Status s = db_->ReadPointColumn(cfg_.cf_name, key, cfg_.IndexColumn(), &old);
      if (!s.ok() && !s.IsNotFound()) return s;
      WriteBatch batch;
      batch.Put(root.id, key, record);
      std::string ikey, ival;
      if (s.ok() && old != now) {
        TELSM_RETURN_NOT_OK(MakeIndexKey(old, key, &ikey));
        batch.Delete(index.id, ikey);
      }
      if (!s.ok() || old != now) {
        TELSM_RETURN_NOT_OK(MakeIndexKey(now, key, &ikey));
        TELSM_RETURN_NOT_OK(EncodeRecord(cfg_.format, index_schema_, Row{now}, &ival));
        batch.Put(index.id, ikey, ival);
      }
      return db_->Write(batch);
    }
    default:
      return Status::NotSupported("external " + cfg_.external->ToString());
  }
}

Status Testbed::PointFull(std::string_view key, Row* row) {
  if (groups_.empty()) return db_->ReadPointFull(cfg_.cf_name, key, row);
  row->clear();
  Row part;
  size_t found = 0;
  for (const auto& g : groups_) {
    Status s = db_->ReadPointFull(g.cf, key, &part);
    if (s.IsNotFound()) continue;
    TELSM_RETURN_NOT_OK(s);
    ++found;
    row->insert(row->end(), part.begin(), part.end());
  }
  if (found == 0) return Status::NotFound();
  if (found != groups_.size()) return Status::Corruption("external split pieces incomplete");
  return Status::OK();
}

Status Testbed::PointColumn(std::string_view key, size_t column, Value* value) {
  const std::string& name = schema_.column(column).name;
  for (const auto& g : groups_) {
    if (column >= g.begin && column < g.end) return db_->ReadPointColumn(g.cf, key, name, value);
  }
  return db_->ReadPointColumn(cfg_.cf_name, key, name, value);
}

Status Testbed::RangeFull(std::string_view k1, std::string_view k2, const RowCallback& cb) {
  if (groups_.empty()) return db_->ScanRangeFull(cfg_.cf_name, k1, k2, cb);
  // Pieces are written together, so the group scans line up key by key.
  std::vector<std::vector<KeyRow>> parts(groups_.size());
  for (size_t g = 0; g < groups_.size(); ++g) {
    TELSM_RETURN_NOT_OK(db_->ReadRangeFull(groups_[g].cf, k1, k2, &parts[g]));
    if (parts[g].size() != parts[0].size()) {
      return Status::Corruption("external split pieces incomplete");
    }
  }
  Row row;
  for (size_t i = 0; i < parts[0].size(); ++i) {
    row.clear();
    for (auto& p : parts) {
      if (p[i].first != parts[0][i].first) return Status::Corruption("external split misaligned");
      row.insert(row.end(), p[i].second.begin(), p[i].second.end());
    }
    if (!cb(parts[0][i].first, row)) break;
  }
  return Status::OK();
}

Status Testbed::RangeColumn(std::string_view k1, std::string_view k2, size_t column,
                            const ValueCallback& cb) {
  const std::string& name = schema_.column(column).name;
  for (const auto& g : groups_) {
    if (column >= g.begin && column < g.end) return db_->ScanRangeColumn(g.cf, k1, k2, name, cb);
  }
  return db_->ScanRangeColumn(cfg_.cf_name, k1, k2, name, cb);
}

Status Testbed::ExternalIndexScan(std::string_view lo, std::string_view hi,
                                  std::vector<std::string>* pks) {
  return db_->ScanRangeFull(index_cf_, lo, hi, [&](std::string_view k, const Row&) {
    std::string_view vb, pk;
    if (SplitIndexKey(k, &vb, &pk)) pks->emplace_back(pk);
    return true;
  });
}

Status Testbed::IndexPoint(const Value& v, std::vector<KeyRow>* rows, bool* fallback) {
  rows->clear();
  *fallback = false;
  if (db_->HasIndex(cfg_.cf_name, cfg_.IndexColumn())) {
    return db_->ReadIndexPoint(cfg_.cf_name, cfg_.IndexColumn(), v, rows);
  }
  if (!index_cf_.empty()) {
    std::string lo, hi;
    TELSM_RETURN_NOT_OK(IndexValueBytes(v, &lo));
    hi = lo;
    lo.push_back('\0');
    hi.push_back('\1');
    std::vector<std::string> pks;
    TELSM_RETURN_NOT_OK(ExternalIndexScan(lo, hi, &pks));
    std::sort(pks.begin(), pks.end());
    Row row;
    for (const auto& pk : pks) {
      Status s = PointFull(pk, &row);
      if (s.IsNotFound()) continue;
      TELSM_RETURN_NOT_OK(s);
      if (row[index_col_] == v) rows->emplace_back(pk, row);
    }
    return Status::OK();
  }
  *fallback = true;
  return RangeFull("", "", [&](std::string_view k, const Row& r) {
    if (r[index_col_] == v) rows->emplace_back(std::string(k), r);
    return true;
  });
}

Status Testbed::IndexRange(const Value& lo, const Value& hi, std::vector<KeyValue>* out,
                           bool* fallback) {
  out->clear();
  *fallback = false;
  if (db_->HasIndex(cfg_.cf_name, cfg_.IndexColumn())) {
    return db_->ReadIndexRange(cfg_.cf_name, cfg_.IndexColumn(), lo, hi, out);
  }
  auto in_range = [&](const Value& v) { return !(v < lo) && v < hi; };
  if (!index_cf_.empty()) {
    if (!(lo < hi)) return Status::OK();
    std::string lo_b, hi_b;
    TELSM_RETURN_NOT_OK(IndexValueBytes(lo, &lo_b));
    TELSM_RETURN_NOT_OK(IndexValueBytes(hi, &hi_b));
    std::vector<std::string> pks;
    TELSM_RETURN_NOT_OK(ExternalIndexScan(lo_b, hi_b, &pks));
    std::sort(pks.begin(), pks.end());
    pks.erase(std::unique(pks.begin(), pks.end()), pks.end());
    Value v;
    for (const auto& pk : pks) {
      Status s = PointColumn(pk, index_col_, &v);
      if (s.IsNotFound()) continue;
      TELSM_RETURN_NOT_OK(s);
      if (in_range(v)) out->emplace_back(pk, v);
    }
    return Status::OK();
  }
  *fallback = true;
  return RangeColumn("", "", index_col_, [&](std::string_view k, const Value& v) {
    if (in_range(v)) out->emplace_back(std::string(k), v);
    return true;
  });
}

uint64_t Testbed::StoredBytes() const { return db_->CurrentVersion()->TotalFileBytes(); }

// ---------------------------------------------------------------- workloads

std::string LoadReport::Format() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "records=%" PRIu64 " bytes=%" PRIu64
                " insert_s=%.3f total_s=%.3f insert_ops=%.1f sustained_ops=%.1f",
                records, bytes, insert_seconds, total_seconds, insert_ops(), sustained_ops());
  return buf;
}

Status Load(Testbed* tb, uint64_t first, uint64_t count, int clients, LoadReport* report) {
  *report = LoadReport{};
  if (count == 0) return Status::OK();
  clients = std::max(clients, 1);
  // Visit [0, count) in a scattered order: i -> i * stride mod count.
  uint64_t stride = (count > 2 ? 2654435761ull % count : 1);
  while (stride == 0 || std::gcd(stride, count) != 1) ++stride;

  const uint64_t seed = tb->config().seed;
  const Schema& schema = tb->schema();
  const RecordFormat format = tb->config().format;
  std::atomic<uint64_t> next{0}, done{0}, bytes{0};
  std::mutex mu;
  Status first_error;
  auto start = Clock::now();
  std::vector<std::thread> threads;
  for (int c = 0; c < clients; ++c) {
    threads.emplace_back([&] {
      std::string rec;
      constexpr uint64_t kChunk = 64;
      while (true) {
        uint64_t pos = next.fetch_add(kChunk);
        if (pos >= count) return;
        for (uint64_t i = pos; i < std::min(pos + kChunk, count); ++i) {
          uint64_t index = first + static_cast<uint64_t>(
                                       (static_cast<unsigned __int128>(i) * stride) % count);
          std::string key = SynthKey(index);
          Status s = EncodeRecord(format, schema, SynthRow(seed, index, schema), &rec);
          if (s.ok()) s = tb->Put(key, rec);
          if (!s.ok()) {
            std::lock_guard<std::mutex> l(mu);
            if (first_error.ok()) first_error = s;
            next.store(count);
            return;
          }
          done.fetch_add(1, std::memory_order_relaxed);
          bytes.fetch_add(key.size() + rec.size(), std::memory_order_relaxed);
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  report->records = done.load();
  report->bytes = bytes.load();
  report->insert_seconds = Seconds(Clock::now() - start);
  if (!first_error.ok()) {
    return Status::IOError("load stopped after " + std::to_string(report->records) + " of " +
                           std::to_string(count) + " records: " + first_error.ToString());
  }
  TELSM_RETURN_NOT_OK(tb->db()->WaitForQuiescence());
  report->total_seconds = Seconds(Clock::now() - start);
  return Status::OK();
}

Status ParseWorkload(std::string_view name, Workload* out) {
  if (name.size() == 2 && (name[0] == 'q' || name[0] == 'Q') && name[1] >= '1' && name[1] <= '7') {
    *out = static_cast<Workload>(name[1] - '0');
    return Status::OK();
  }
  return Status::InvalidArgument("unknown workload " + std::string(name) + " (expected q1..q7)");
}

std::string WorkloadName(Workload w) { return "q" + std::to_string(static_cast<int>(w)); }

WorkloadSpec DefaultSpec(const BenchConfig& cfg, Workload kind) {
  WorkloadSpec spec;
  spec.kind = kind;
  spec.distribution = cfg.distribution;
  spec.theta = cfg.zipf_theta;
  spec.range_width = cfg.range_width;
  spec.column = *cfg.schema().IndexOf(cfg.QueryColumn());
  spec.key_space = cfg.RecordCount();
  spec.seed = cfg.seed;
  spec.data_seed = cfg.seed;
  return spec;
}

OpGenerator::OpGenerator(const WorkloadSpec& spec, int client)
    : kind_(spec.kind),
      rng_(Mix(spec.seed ^ Mix(static_cast<uint64_t>(client) + 1))),
      chooser_(spec.distribution, spec.key_space, spec.theta) {}

Op OpGenerator::Next() {
  Op op{kind_, chooser_.Next(rng_), 0};
  if (kind_ == Workload::kQ1) op.version = rng_() | 1;
  return op;
}

namespace {

Status Execute(Testbed* tb, const WorkloadSpec& spec, const Op& op, bool* fallback,
               uint64_t* checksum) {
  const Schema& schema = tb->schema();
  const std::string key = SynthKey(op.index);
  const size_t icol = *schema.IndexOf(tb->config().IndexColumn());
  auto fold = [&](uint64_t h) { *checksum += Mix(h); };
  switch (op.kind) {
    case Workload::kQ1: {
      std::string rec;
      TELSM_RETURN_NOT_OK(EncodeRecord(tb->config().format, schema,
                                       SynthRow(spec.data_seed, op.index, schema, op.version),
                                       &rec));
      return tb->Put(key, rec);
    }
    case Workload::kQ2: {
      std::optional<Value> max;
      TELSM_RETURN_NOT_OK(tb->RangeColumn(key, SynthKey(op.index + spec.range_width), spec.column,
                                          [&](std::string_view, const Value& v) {
                                            if (!max || *max < v) max = v;
                                            return true;
                                          }));
      if (max) fold(HashValue(*max));
      return Status::OK();
    }
    case Workload::kQ3: {
      Value v;
      Status s = tb->PointColumn(key, spec.column, &v);
      if (s.ok()) fold(HashValue(v));
      return s.IsNotFound() ? Status::OK() : s;
    }
    case Workload::kQ4: {
      Value lo = SynthValue(spec.data_seed, op.index, schema, icol);
      const auto* u = std::get_if<uint64_t>(&lo);
      if (!u) return Status::NotSupported("q4 needs a u64 index column");
      const uint64_t step = std::numeric_limits<uint64_t>::max() / std::max<uint64_t>(spec.key_space, 1);
      const uint64_t span = spec.range_width * step;
      Value hi = (*u > std::numeric_limits<uint64_t>::max() - span)
                     ? std::numeric_limits<uint64_t>::max()
                     : *u + span;
      std::vector<KeyValue> out;
      TELSM_RETURN_NOT_OK(tb->IndexRange(lo, hi, &out, fallback));
      std::optional<Value> max;
      for (auto& [k, v] : out) {
        if (!max || *max < v) max = v;
      }
      if (max) fold(HashValue(*max));
      return Status::OK();
    }
    case Workload::kQ5: {
      std::vector<KeyRow> rows;
      TELSM_RETURN_NOT_OK(
          tb->IndexPoint(SynthValue(spec.data_seed, op.index, schema, icol), &rows, fallback));
      for (auto& [k, r] : rows) fold(std::hash<std::string>()(k));
      return Status::OK();
    }
    case Workload::kQ6: {
      uint64_t n = 0;
      TELSM_RETURN_NOT_OK(tb->RangeFull(key, SynthKey(op.index + spec.range_width),
                                        [&](std::string_view k, const Row&) {
                                          ++n;
                                          fold(std::hash<std::string_view>()(k));
                                          return true;
                                        }));
      return Status::OK();
    }
    case Workload::kQ7: {
      Row row;
      Status s = tb->PointFull(key, &row);
      if (s.ok()) fold(HashValue(row.back()));
      return s.IsNotFound() ? Status::OK() : s;
    }
  }
  return Status::InvalidArgument("bad workload");
}

}  // namespace

Status RunWorkload(Testbed* tb, const WorkloadSpec& spec, WorkloadResult* result) {
  *result = WorkloadResult{};
  const int clients = std::max(spec.clients, 1);
  std::vector<std::vector<double>> samples(clients);
  std::vector<uint64_t> sums(clients, 0);
  std::vector<char> fallbacks(clients, 0);
  std::atomic<uint64_t> errors{0};
  std::mutex mu;
  Status first_error;
  const auto start = Clock::now();
  const auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                                    std::chrono::duration<double>(spec.duration_s));
  std::vector<std::thread> threads;
  for (int c = 0; c < clients; ++c) {
    threads.emplace_back([&, c] {
      OpGenerator gen(spec, c);
      uint64_t quota = std::numeric_limits<uint64_t>::max();
      if (spec.op_count) {
        quota = spec.op_count / clients + (static_cast<uint64_t>(c) < spec.op_count % clients);
      }
      for (uint64_t n = 0; n < quota; ++n) {
        if (!spec.op_count && Clock::now() >= deadline) break;
        Op op = gen.Next();
        bool fb = false;
        auto t0 = Clock::now();
        Status s = Execute(tb, spec, op, &fb, &sums[c]);
        samples[c].push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
        fallbacks[c] |= fb;
        if (!s.ok()) {
          errors.fetch_add(1);
          std::lock_guard<std::mutex> l(mu);
          if (first_error.ok()) first_error = s;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  const double elapsed = Seconds(Clock::now() - start);
  std::vector<double> all;
  for (auto& s : samples) all.insert(all.end(), s.begin(), s.end());
  result->stats = LatencyStats::FromSamples(std::move(all), elapsed);
  result->errors = errors.load();
  for (int c = 0; c < clients; ++c) {
    result->checksum += sums[c];
    result->fallback |= fallbacks[c] != 0;
  }
  return first_error;
}

}  // namespace telsm::bench
