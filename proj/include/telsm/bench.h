#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "telsm/db.h"
#include "telsm/options.h"
#include "telsm/schema.h"
#include "telsm/status.h"
#include "telsm/transformer_spec.h"

namespace telsm::bench {

// ---------------------------------------------------------------- dataset

enum class SchemaPreset { kWide50, kSplit32 };

Status ParseSchemaPreset(std::string_view name, SchemaPreset* out);
const char* SchemaPresetName(SchemaPreset p);
// Wide50: 50 columns f00..f49, a 24-byte string every tenth column and u64
// elsewhere. Split32: 32 columns, a string every fourth column.
Schema MakeSchema(SchemaPreset p);

inline constexpr size_t kSynthStringBytes = 24;

// Zero-padded 16-digit decimal.
std::string SynthKey(uint64_t index);
// Deterministic in (seed, index, version).
Row SynthRow(uint64_t seed, uint64_t index, const Schema& schema, uint64_t version = 0);
Value SynthValue(uint64_t seed, uint64_t index, const Schema& schema, size_t column,
                 uint64_t version = 0);

// Gray et al. generator over ranks [0, n); rank 0 is the most popular.
class Zipfian {
 public:
  Zipfian(uint64_t n, double theta);
  uint64_t Next(std::mt19937_64& rng) const;
  uint64_t n() const { return n_; }
  double theta() const { return theta_; }

 private:
  uint64_t n_;
  double theta_, alpha_, zetan_, eta_, half_pow_theta_;
};

enum class Distribution { kUniform, kZipfian };
Status ParseDistribution(std::string_view name, Distribution* out);

// Key indexes in [0, n). Zipfian ranks are scattered over the key space so
// that popular keys are not adjacent.
class KeyChooser {
 public:
  KeyChooser(Distribution dist, uint64_t n, double theta);
  uint64_t Next(std::mt19937_64& rng) const;

 private:
  Distribution dist_;
  uint64_t n_;
  std::optional<Zipfian> zipf_;
};

// ---------------------------------------------------------------- stats

struct LatencyStats {
  uint64_t count = 0;
  double min_us = 0, p25_us = 0, p50_us = 0, p75_us = 0, p99_us = 0, max_us = 0;
  double throughput = 0;  // ops/s

  static LatencyStats FromSamples(std::vector<double> samples_us, double elapsed_s);
  // "count=... min_us=... ... throughput_ops=..."
  std::string Format() const;
  // Picks the stat keys out of a key=value line; other keys are ignored.
  static Status Parse(std::string_view line, LatencyStats* out);
  bool operator==(const LatencyStats&) const = default;
};

// Nearest-rank percentile of an ascending sample; pct in (0, 100].
double NearestRank(const std::vector<double>& sorted, double pct);

struct Comparison {
  double overhead = 0;  // 1 - candidate/baseline throughput
  double min_ratio = 1, p25_ratio = 1, p50_ratio = 1, p75_ratio = 1, p99_ratio = 1, max_ratio = 1;
};
Comparison Compare(const LatencyStats& baseline, const LatencyStats& candidate);
std::string FormatComparison(const std::string& label, const Comparison& c);

// One result line: free-form metadata followed by the stats.
struct RunRecord {
  std::map<std::string, std::string> meta;
  LatencyStats stats;

  std::string Format() const;
  static Status Parse(std::string_view line, RunRecord* out);
};
Status ReadRunRecords(const std::string& path, std::vector<RunRecord>* out);

// ---------------------------------------------------------------- config

struct BenchConfig {
  EngineConfig engine;
  std::string cf_name = "usertable";
  SchemaPreset preset = SchemaPreset::kWide50;
  RecordFormat format = RecordFormat::kText;
  std::vector<TransformerSpec> transformers;
  // Transformation applied by the harness before each write instead of
  // inside compaction.
  std::optional<TransformerSpec> external;
  uint64_t record_count = 0;          // 0 => derived from load_bytes
  uint64_t load_bytes = 1ull << 30;   // encoded bytes in the root format
  Distribution distribution = Distribution::kZipfian;
  double zipf_theta = 0.99;
  uint64_t range_width = 100;
  std::string query_column;           // default: first u64 column
  std::string index_column;           // default: first augmented column
  uint64_t seed = 1;

  static Status FromKeyValues(std::map<std::string, std::string> kv, BenchConfig* out);
  static Status FromText(const std::string& text, BenchConfig* out);
  static Status FromFile(const std::string& path, BenchConfig* out);

  Schema schema() const { return MakeSchema(preset); }
  uint64_t RecordCount() const;
  std::string QueryColumn() const;
  std::string IndexColumn() const;
  // "plain", "te[split(target_group_size=4)]", "external[convert(text,packed)]"
  std::string Label() const;
};

// ---------------------------------------------------------------- testbed

// A loaded store plus the mapping from logical queries to engine calls,
// for both engine-embedded and harness-side transformations.
class Testbed {
 public:
  static Status Open(const BenchConfig& cfg, std::unique_ptr<Testbed>* out);
  ~Testbed();

  const BenchConfig& config() const { return cfg_; }
  const Schema& schema() const { return schema_; }
  DB* db() { return db_.get(); }
  bool has_index() const;
  // True when Open created the column families, i.e. nothing is loaded yet.
  bool created() const { return created_; }

  // `record` is encoded in the root format.
  Status Put(std::string_view key, std::string_view record);
  Status PutRow(std::string_view key, const Row& row);

  Status PointFull(std::string_view key, Row* row);
  Status PointColumn(std::string_view key, size_t column, Value* value);
  Status RangeFull(std::string_view k1, std::string_view k2, const RowCallback& cb);
  Status RangeColumn(std::string_view k1, std::string_view k2, size_t column,
                     const ValueCallback& cb);
  // Without an index both fall back to a full scan; *fallback reports it.
  Status IndexPoint(const Value& v, std::vector<KeyRow>* rows, bool* fallback);
  Status IndexRange(const Value& lo, const Value& hi, std::vector<KeyValue>* out, bool* fallback);

  uint64_t StoredBytes() const;
  Status Close();

 private:
  Testbed() = default;
  Status Setup();
  Status ExternalIndexScan(std::string_view lo, std::string_view hi,
                           std::vector<std::string>* pks);

  BenchConfig cfg_;
  Schema schema_;
  std::unique_ptr<DB> db_;
  size_t index_col_ = 0;
  // External split: CF name and root column range per group.
  struct Group {
    std::string cf;
    size_t begin, end;
    Schema schema;
  };
  std::vector<Group> groups_;
  std::string index_cf_;
  Schema index_schema_;
  bool created_ = false;
};

// ---------------------------------------------------------------- workloads

struct LoadReport {
  uint64_t records = 0;
  uint64_t bytes = 0;
  double insert_seconds = 0;
  double total_seconds = 0;   // inserts plus background settling
  double insert_ops() const { return insert_seconds > 0 ? records / insert_seconds : 0; }
  double sustained_ops() const { return total_seconds > 0 ? records / total_seconds : 0; }
  std::string Format() const;
};

// Inserts records [first, first + count) in a scattered order from
// `clients` threads, then waits for compactions to settle.
Status Load(Testbed* tb, uint64_t first, uint64_t count, int clients, LoadReport* report);

enum class Workload { kQ1 = 1, kQ2, kQ3, kQ4, kQ5, kQ6, kQ7 };
Status ParseWorkload(std::string_view name, Workload* out);
std::string WorkloadName(Workload w);

struct WorkloadSpec {
  Workload kind = Workload::kQ3;
  int clients = 1;
  double duration_s = 10;
  uint64_t op_count = 0;      // total across clients; 0 => run for duration_s
  Distribution distribution = Distribution::kZipfian;
  double theta = 0.99;
  uint64_t range_width = 100;
  size_t column = 1;
  uint64_t key_space = 0;
  uint64_t seed = 1;
  uint64_t data_seed = 1;     // seed the store was loaded with
};

WorkloadSpec DefaultSpec(const BenchConfig& cfg, Workload kind);

// One logical operation; the run loop and tests share the generator.
struct Op {
  Workload kind;
  uint64_t index = 0;
  uint64_t version = 0;
  bool operator==(const Op&) const = default;
};

class OpGenerator {
 public:
  OpGenerator(const WorkloadSpec& spec, int client);
  Op Next();

 private:
  Workload kind_;
  std::mt19937_64 rng_;
  KeyChooser chooser_;
};

struct WorkloadResult {
  LatencyStats stats;
  bool fallback = false;
  uint64_t errors = 0;
  uint64_t checksum = 0;  // fold of query results
};

Status RunWorkload(Testbed* tb, const WorkloadSpec& spec, WorkloadResult* result);

}  // namespace telsm::bench
