#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "telsm/iterator.h"
#include "telsm/options.h"
#include "telsm/version.h"

namespace telsm {

enum class CompactionMode { kTierToDestinations, kLevelWithin };

const char* CompactionModeName(CompactionMode m);

struct CompactionJob {
  ColumnFamilyId cf = 0;
  CompactionMode mode = CompactionMode::kLevelWithin;
  int source_level = 0;
  int target_level = 0;
  std::vector<FileMetaPtr> inputs;         // from source_level
  std::vector<FileMetaPtr> target_inputs;  // overlapping files at target_level
  std::shared_ptr<const Version> version;
  // No deeper level of the CF overlaps the job's key range.
  bool bottommost = false;
};

// Round-robin position per level for leveled picks; may be null.
using CompactCursors = std::map<int, std::string>;

// Tier job over all L0 runs when a transformer CF reaches Z runs. Plain CFs
// level L0 into L1 at Z runs, otherwise push one file out of the lowest level
// whose size exceeds base * T^(i-1). `force` tiers any non-empty L0 of a
// transformer CF.
std::optional<CompactionJob> PickCompaction(const std::shared_ptr<const Version>& v,
                                            ColumnFamilyId cf, const EngineConfig& cfg,
                                            CompactCursors* cursors, bool force = false);

// Capacity of level `level` (>= 1) of a leveled CF.
uint64_t MaxBytesForLevel(const EngineConfig& cfg, int level);

// Iterator over the job's inputs in internal-key order.
std::unique_ptr<InternalIterator> NewCompactionInputIterator(const CompactionJob& job);

// Merges sorted runs into the newest version per key. Deletes are kept unless
// `drop_deletes`.
Status MergeRuns(std::unique_ptr<InternalIterator> input, bool drop_deletes,
                 const std::function<Status(const Entry&)>& emit);

}  // namespace telsm
