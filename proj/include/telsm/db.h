#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "telsm/column_family.h"
#include "telsm/options.h"
#include "telsm/schema.h"
#include "telsm/statistics.h"
#include "telsm/status.h"
#include "telsm/transformer_spec.h"
#include "telsm/version.h"

namespace telsm {

// Raw writes against user-facing column families. Values must already be
// records in the CF's format.
class WriteBatch {
 public:
  struct Op {
    ColumnFamilyId cf;
    ValueKind kind;
    std::string key;
    std::string value;
  };

  void Put(ColumnFamilyId cf, std::string_view key, std::string_view value) {
    ops_.push_back({cf, ValueKind::kPut, std::string(key), std::string(value)});
  }
  void Delete(ColumnFamilyId cf, std::string_view key) {
    ops_.push_back({cf, ValueKind::kDelete, std::string(key), {}});
  }
  void Clear() { ops_.clear(); }
  size_t size() const { return ops_.size(); }
  bool empty() const { return ops_.empty(); }
  const std::vector<Op>& ops() const { return ops_; }

 private:
  std::vector<Op> ops_;
};

using KeyRow = std::pair<std::string, Row>;
using KeyValue = std::pair<std::string, Value>;

// Return false to stop a scan early.
using RowCallback = std::function<bool(std::string_view key, const Row& row)>;
using ValueCallback = std::function<bool(std::string_view key, const Value& value)>;

class DB {
 public:
  static Status Open(const EngineConfig& config, std::unique_ptr<DB>* db);
  ~DB();

  DB(const DB&) = delete;
  DB& operator=(const DB&) = delete;

  // Stops background work. Unflushed writes stay in the WAL.
  Status Close();

  // ---- catalog
  Status CreateColumnFamily(const std::string& name, const Schema& schema, RecordFormat format,
                            ColumnFamilyId* id = nullptr);
  // Attaches a transformer pipeline to a user-facing CF and creates the
  // internal CFs it writes to.
  Status LinkTransformers(const std::string& name, const std::vector<TransformerSpec>& specs);
  // Links `specs` after the current end of the CF's pipeline.
  Status ExtendTransformers(const std::string& name, const std::vector<TransformerSpec>& specs);
  Status GetColumnFamily(const std::string& name, ColumnFamilyDescriptor* desc) const;
  std::vector<ColumnFamilyDescriptor> ListColumnFamilies() const;

  // ---- writes
  Status Insert(const std::string& cf, std::string_view key, const Row& row);
  // Stores `record` as is; it must already be encoded in the CF's format.
  // Only indexed columns are inspected.
  Status InsertEncoded(const std::string& cf, std::string_view key, std::string_view record);
  Status Remove(const std::string& cf, std::string_view key);
  Status Write(const WriteBatch& batch);

  // ---- reads; ranges are [k1, k2)
  Status ReadPointFull(const std::string& cf, std::string_view key, Row* row);
  Status ReadPointColumn(const std::string& cf, std::string_view key, const std::string& column,
                         Value* value);
  Status ReadRangeFull(const std::string& cf, std::string_view k1, std::string_view k2,
                       std::vector<KeyRow>* rows);
  Status ScanRangeFull(const std::string& cf, std::string_view k1, std::string_view k2,
                       const RowCallback& cb);
  Status ReadRangeColumn(const std::string& cf, std::string_view k1, std::string_view k2,
                         const std::string& column, std::vector<KeyValue>* values);
  Status ScanRangeColumn(const std::string& cf, std::string_view k1, std::string_view k2,
                         const std::string& column, const ValueCallback& cb);
  // Rows whose `column` equals `value`, by primary key.
  Status ReadIndexPoint(const std::string& cf, const std::string& column, const Value& value,
                        std::vector<KeyRow>* rows);
  // (primary key, column value) for rows whose `column` lies in [lo, hi).
  Status ReadIndexRange(const std::string& cf, const std::string& column, const Value& lo,
                        const Value& hi, std::vector<KeyValue>* matches);
  bool HasIndex(const std::string& cf, const std::string& column) const;

  // ---- maintenance
  // Seals the active memtables and waits until they are on disk.
  Status Flush();
  // Flush, then wait until no compaction is pending or running.
  Status WaitForQuiescence();
  // Flush, then tier every transformer CF regardless of the L0 trigger until
  // all data has reached the terminal CFs, then settle.
  Status MigrateAll();
  void PauseBackgroundWork();
  void ContinueBackgroundWork();

  Statistics& stats();
  std::shared_ptr<const Version> CurrentVersion() const;
  const EngineConfig& config() const;
  uint64_t BlockAccesses(ColumnFamilyId cf) const;
  void ResetBlockAccesses();
  // First error hit by a background job, if any.
  Status BackgroundError() const;
  std::string DebugString() const;

  struct Rep;

 private:
  DB();
  std::unique_ptr<Rep> rep_;
};

}  // namespace telsm
