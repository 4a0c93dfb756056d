#include "telsm/compaction.h"

#include <algorithm>
#include <cmath>

namespace telsm {

const char* CompactionModeName(CompactionMode m) {
  return m == CompactionMode::kTierToDestinations ? "tier_to_destinations" : "level_within";
}

uint64_t MaxBytesForLevel(const EngineConfig& cfg, int level) {
  double bytes = static_cast<double>(cfg.LevelBase());
  for (int i = 1; i < level; ++i) bytes *= cfg.size_factor;
  return static_cast<uint64_t>(bytes);
}

namespace {

bool Overlaps(const FileMeta& f, std::string_view lo, std::string_view hi) {
  return !(f.largest.user_key < lo || f.smallest.user_key > hi);
}

std::vector<FileMetaPtr> OverlappingFiles(const std::vector<FileMetaPtr>& files,
                                          std::string_view lo, std::string_view hi) {
  std::vector<FileMetaPtr> out;
  for (const auto& f : files) {
    if (Overlaps(*f, lo, hi)) out.push_back(f);
  }
  return out;
}

void KeyRange(const std::vector<FileMetaPtr>& files, std::string* lo, std::string* hi) {
  for (size_t i = 0; i < files.size(); ++i) {
    if (i == 0 || files[i]->smallest.user_key < *lo) *lo = files[i]->smallest.user_key;
    if (i == 0 || files[i]->largest.user_key > *hi) *hi = files[i]->largest.user_key;
  }
}

}  // namespace

std::optional<CompactionJob> PickCompaction(const std::shared_ptr<const Version>& v,
                                            ColumnFamilyId cf, const EngineConfig& cfg,
                                            CompactCursors* cursors, bool force) {
  const CfState* st = v->cf(cf);
  if (!st) return std::nullopt;
  const auto& levels = st->levels;
  const size_t z = static_cast<size_t>(cfg.level0_file_num_compaction_trigger);

  CompactionJob job;
  job.cf = cf;
  job.version = v;

  if (st->desc->has_transformer()) {
    if (levels[0].empty() || (levels[0].size() < z && !force)) return std::nullopt;
    job.mode = CompactionMode::kTierToDestinations;
    job.inputs = levels[0];
    return job;
  }

  job.mode = CompactionMode::kLevelWithin;
  const int max_level = static_cast<int>(levels.size()) - 1;
  if (!levels[0].empty() && (levels[0].size() >= z || force)) {
    job.source_level = 0;
    job.target_level = 1;
    job.inputs = levels[0];
  } else {
    int pick = -1;
    for (int i = 1; i < max_level; ++i) {
      if (v->LevelBytes(cf, i) > MaxBytesForLevel(cfg, i)) {
        pick = i;
        break;
      }
    }
    if (pick < 0) return std::nullopt;
    const auto& files = levels[pick];
    FileMetaPtr chosen = files.front();
    if (cursors) {
      auto it = cursors->find(pick);
      if (it != cursors->end()) {
        for (const auto& f : files) {
          if (f->smallest.user_key > it->second) {
            chosen = f;
            break;
          }
        }
      }
      (*cursors)[pick] = chosen->largest.user_key;
    }
    job.source_level = pick;
    job.target_level = pick + 1;
    job.inputs = {chosen};
  }
  std::string lo, hi;
  KeyRange(job.inputs, &lo, &hi);
  job.target_inputs = OverlappingFiles(levels[job.target_level], lo, hi);
  std::vector<FileMetaPtr> all = job.inputs;
  all.insert(all.end(), job.target_inputs.begin(), job.target_inputs.end());
  KeyRange(all, &lo, &hi);
  job.bottommost = true;
  for (int l = job.target_level + 1; l <= max_level; ++l) {
    if (!OverlappingFiles(levels[l], lo, hi).empty()) job.bottommost = false;
  }
  return job;
}

std::unique_ptr<InternalIterator> NewCompactionInputIterator(const CompactionJob& job) {
  std::vector<std::unique_ptr<InternalIterator>> children;
  for (const auto& f : job.inputs) children.push_back(f->table->NewIterator());
  for (const auto& f : job.target_inputs) children.push_back(f->table->NewIterator());
  return NewMergingIterator(std::move(children));
}

Status MergeRuns(std::unique_ptr<InternalIterator> input, bool drop_deletes,
                 const std::function<Status(const Entry&)>& emit) {
  NewestVersionIterator it(std::move(input), kMaxSequenceNumber);
  Entry e;
  for (it.SeekToFirst(); it.Valid(); it.Next()) {
    if (drop_deletes && it.kind() == ValueKind::kDelete) continue;
    e.key.user_key.assign(it.user_key());
    e.key.seq = it.seq();
    e.key.kind = it.kind();
    if (it.kind() == ValueKind::kPut) {
      e.value.assign(it.value());
    } else {
      e.value.clear();
    }
    TELSM_RETURN_NOT_OK(emit(e));
  }
  return it.status();
}

}  // namespace telsm
