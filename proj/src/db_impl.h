#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "telsm/block_cache.h"
#include "telsm/compaction.h"
#include "telsm/db.h"
#include "telsm/memtable.h"
#include "telsm/transformer.h"
#include "telsm/version.h"
#include "telsm/wal.h"

namespace telsm {

// One write-buffer generation: a memtable per user-facing CF plus the WAL
// holding the same writes. The table map is fixed once published.
struct MemGen {
  uint64_t wal_number = 0;
  std::map<ColumnFamilyId, std::shared_ptr<MemTable>> tables;

  size_t LargestTableBytes() const;
  bool Empty() const;
  SequenceNumber LargestSeq() const;
};

struct IndexInfo {
  ColumnFamilyId augment_cf;
  ColumnFamilyId primary_cf;
  ColumnFamilyId secondary_cf;
  size_t root_column;
  // Root down to the augment CF: data there is not indexed yet.
  std::vector<ColumnFamilyId> upstream;
};

struct Catalog {
  std::unordered_map<std::string, ColumnFamilyId> by_name;
  // Per user-facing CF: indexed column name -> index layout.
  std::map<ColumnFamilyId, std::map<std::string, IndexInfo>> indexes;

  static std::shared_ptr<const Catalog> Build(const Version& v);
};

struct SuperVersion {
  std::shared_ptr<const MemGen> mem;
  std::vector<std::shared_ptr<const MemGen>> imm;  // newest first
  std::shared_ptr<const Version> version;
  std::shared_ptr<const Catalog> catalog;
};

struct ReadContext {
  SequenceNumber snapshot;
  std::shared_ptr<const SuperVersion> sv;
  const ColumnFamilyDescriptor& desc(ColumnFamilyId id) const { return *sv->version->cf(id)->desc; }
};

struct DB::Rep {
  EngineConfig cfg;
  Statistics stats;
  std::unique_ptr<BlockCache> cache;
  std::unique_ptr<VersionSet> versions;

  // Serializes the commit path and memtable switches.
  std::mutex write_mu;
  std::unique_ptr<WalWriter> wal;
  SequenceNumber next_seq = 1;
  std::atomic<SequenceNumber> published_seq{0};

  // Guards everything below.
  mutable std::mutex mu;
  std::condition_variable bg_cv;
  std::shared_ptr<const MemGen> mem;
  std::vector<std::shared_ptr<const MemGen>> imm;  // newest first
  std::shared_ptr<const SuperVersion> sv;
  std::set<ColumnFamilyId> busy_cfs;
  std::map<ColumnFamilyId, CompactCursors> cursors;
  std::map<ColumnFamilyId, std::pair<std::shared_ptr<const ColumnFamilyDescriptor>,
                                     std::shared_ptr<Transformer>>>
      transformers;
  int running_jobs = 0;
  bool flushing = false;
  bool shutting_down = false;
  bool paused = false;
  bool force_migrate = false;
  Status bg_error;
  std::vector<std::thread> threads;

  // ---- db.cc
  Status Recover();
  void StartThreads();
  void StopThreads();
  std::shared_ptr<const SuperVersion> GetSuperVersion() const;
  void RefreshSuperVersionLocked();
  Status ApplyCatalogEdits(const EditGroup& edits);
  Status NewMemGenLocked(uint64_t wal_number, std::shared_ptr<const MemGen>* out) const;
  Status SwitchMemtable();
  Status MakeRoomForWrite(std::unique_lock<std::mutex>* write_lock);
  Status WriteImpl(const std::vector<WriteBatch::Op>& ops, bool public_api);
  Status WriteLevel0(const MemGen& gen, EditGroup* edits, uint64_t* bytes);
  void FlushThread();
  void CompactionThread();
  bool PickJobLocked(CompactionJob* job);
  bool AnyJobPendingLocked();
  void SetBackgroundError(const Status& s);

  // ---- db_compaction.cc
  Status RunCompaction(const CompactionJob& job);
  Status RunTierJob(const CompactionJob& job);
  Status RunLevelJob(const CompactionJob& job);
  Status GetTransformer(const Version& v, ColumnFamilyId cf, std::shared_ptr<Transformer>* out);

  // ---- query.cc
  ReadContext NewReadContext() const;
  Status ResolveRoot(const ReadContext& ctx, const std::string& name,
                     const ColumnFamilyDescriptor** desc) const;
  Status LookupOwn(const ReadContext& ctx, ColumnFamilyId cf, std::string_view key,
                   LookupResult* result) const;
  // Newest row for key in the subtree rooted at `cf`, restricted to root
  // columns [cb, ce).
  Status ReadRow(const ReadContext& ctx, ColumnFamilyId cf, std::string_view key, size_t cb,
                 size_t ce, Row* row, bool* found) const;
  // Every version stored directly in `cf` (memtables included) for keys in
  // [lo, hi); an empty `hi` means unbounded.
  std::unique_ptr<InternalIterator> OwnIterator(const ReadContext& ctx, ColumnFamilyId cf,
                                                std::string_view lo, std::string_view hi) const;
  Status ScanRows(const ReadContext& ctx, ColumnFamilyId root, std::string_view k1,
                  std::string_view k2, size_t cb, size_t ce, const RowCallback& fn) const;
  // Primary keys that may satisfy `match`: index entries in [lo, hi) plus
  // rows upstream of the augment CF.
  Status CollectIndexCandidates(const ReadContext& ctx, const IndexInfo& info,
                                std::string_view lo, std::string_view hi,
                                const std::function<bool(const Value&)>& match,
                                std::set<std::string>* pks) const;
};

// Root-relative column range [begin, end) of a CF.
inline size_t ColumnsBegin(const ColumnFamilyDescriptor& d) { return d.column_offset; }
inline size_t ColumnsEnd(const ColumnFamilyDescriptor& d) {
  return d.column_offset + d.schema.size();
}

}  // namespace telsm
