#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "telsm/column_family.h"
#include "telsm/env.h"
#include "telsm/internal_key.h"
#include "telsm/sst.h"
#include "telsm/status.h"

namespace telsm {

struct FileMeta {
  uint64_t file_number = 0;
  ColumnFamilyId cf_id = 0;
  int level = 0;
  InternalKey smallest;
  InternalKey largest;
  uint64_t file_bytes = 0;
  uint64_t entry_count = 0;
  std::shared_ptr<TableReader> table;
};
using FileMetaPtr = std::shared_ptr<const FileMeta>;

struct CfState {
  std::shared_ptr<const ColumnFamilyDescriptor> desc;
  // levels[0] is newest-first; deeper levels are sorted by smallest key.
  std::vector<std::vector<FileMetaPtr>> levels;
};

// Immutable snapshot of every column family and its files.
class Version {
 public:
  SequenceNumber last_sequence = 0;
  std::map<ColumnFamilyId, CfState> cfs;

  const CfState* cf(ColumnFamilyId id) const;
  const ColumnFamilyDescriptor* FindByName(std::string_view name) const;
  uint64_t LevelBytes(ColumnFamilyId id, int level) const;
  size_t NumFiles(ColumnFamilyId id, int level) const;
  uint64_t TotalFileBytes() const;
  uint64_t CfBytes(ColumnFamilyId id) const;
  size_t CfFiles(ColumnFamilyId id) const;
  // Transformer CFs hold only L0 files; every other CF keeps disjoint files
  // in each level >= 1.
  Status CheckShape() const;
  std::string DebugString() const;
};

struct VersionEdit {
  enum class Type { kCreateCf, kSetLink, kAddFile, kDeleteFile, kSetSeq };
  Type type = Type::kSetSeq;
  ColumnFamilyDescriptor cf;   // kCreateCf; kSetLink uses id/transformer/destinations
  std::shared_ptr<FileMeta> file;  // kAddFile
  ColumnFamilyId cf_id = 0;    // kDeleteFile
  int level = 0;               // kDeleteFile
  uint64_t file_number = 0;    // kDeleteFile
  SequenceNumber seq = 0;      // kSetSeq

  static VersionEdit CreateCf(ColumnFamilyDescriptor desc);
  static VersionEdit SetLink(ColumnFamilyId id, std::optional<TransformerSpec> transformer,
                             std::vector<ColumnFamilyId> destinations);
  static VersionEdit AddFile(std::shared_ptr<FileMeta> file);
  static VersionEdit DeleteFile(ColumnFamilyId cf, int level, uint64_t number);
  static VersionEdit SetSeq(SequenceNumber seq);
};
using EditGroup = std::vector<VersionEdit>;

// One manifest line (without the trailing newline); edits are separated by
// " | ".
std::string EncodeEditGroup(const EditGroup& edits);
Status DecodeEditGroup(std::string_view line, EditGroup* edits);

// Applies `edits` on top of `base`. Added files keep whatever table reader
// they carry.
Status ApplyEdits(const Version& base, const EditGroup& edits, int max_levels, Version* out);

// Owns the MANIFEST and the current Version.
class VersionSet {
 public:
  VersionSet(std::string dir, int max_levels, bool sync, TableReadOptions table_opts);
  ~VersionSet();

  // Replays MANIFEST (if any), opens every live table, removes orphan SSTs,
  // and rewrites the manifest as a compact snapshot.
  Status Recover();

  // Durably logs `edits` as one line and publishes the resulting Version.
  // Files deleted by the group are unlinked afterwards.
  Status LogAndApply(const EditGroup& edits);

  std::shared_ptr<const Version> current() const;

  uint64_t NewFileNumber();
  void MarkFileNumberUsed(uint64_t n);
  std::string SstPath(uint64_t number) const;
  std::string WalPath(uint64_t number) const;
  std::string ManifestPath() const { return dir_ + "/MANIFEST"; }
  const TableReadOptions& table_options() const { return table_opts_; }
  Status OpenTable(uint64_t number, ColumnFamilyId cf, std::shared_ptr<TableReader>* out) const;

  // Data-block accesses through tables of one CF.
  uint64_t BlockAccesses(ColumnFamilyId cf) const { return access_counters_[cf].load(); }
  void ResetBlockAccesses();

 private:
  Status WriteSnapshot(const Version& v);

  const std::string dir_;
  const int max_levels_;
  const bool sync_;
  TableReadOptions table_opts_;

  std::mutex manifest_mu_;
  std::unique_ptr<WritableFile> manifest_;

  mutable std::mutex current_mu_;
  std::shared_ptr<const Version> current_;
  std::atomic<uint64_t> next_file_number_{1};
  std::unique_ptr<std::atomic<uint64_t>[]> access_counters_;
};

}  // namespace telsm
