#include "db_impl.h"

namespace telsm {

namespace {

// Writes a stream of entries into one or more SSTs, cutting files at the
// target size.
class OutputWriter {
 public:
  OutputWriter(DB::Rep* r, ColumnFamilyId cf, int level, uint64_t target)
      : r_(r), cf_(cf), level_(level), target_(target) {}

  ~OutputWriter() {
    if (builder_) {
      builder_->Abandon();
      RemoveFile(r_->versions->SstPath(number_));
    }
  }

  Status Add(const Entry& e) {
    if (!builder_) {
      number_ = r_->versions->NewFileNumber();
      std::unique_ptr<WritableFile> file;
      TELSM_RETURN_NOT_OK(WritableFile::Open(r_->versions->SstPath(number_), true, &file));
      builder_ = std::make_unique<TableBuilder>(std::move(file), r_->cfg.block_size,
                                                r_->cfg.bloom_bits_per_key);
    }
    TELSM_RETURN_NOT_OK(builder_->Add(e.key.user_key, e.key.seq, e.key.kind, e.value));
    if (target_ && builder_->EstimatedSize() >= target_) return Cut();
    return Status::OK();
  }

  Status Finish() { return builder_ ? Cut() : Status::OK(); }

  // Deletes every finished output (used when the job fails).
  void Discard() {
    for (const auto& f : outputs_) RemoveFile(r_->versions->SstPath(f->file_number));
    outputs_.clear();
  }

  const std::vector<std::shared_ptr<FileMeta>>& outputs() const { return outputs_; }

 private:
  Status Cut() {
    Status s = builder_->Finish(r_->cfg.sync_files);
    if (!s.ok()) return s;
    auto meta = std::make_shared<FileMeta>();
    meta->file_number = number_;
    meta->cf_id = cf_;
    meta->level = level_;
    meta->smallest = builder_->smallest();
    meta->largest = builder_->largest();
    meta->file_bytes = builder_->file_size();
    meta->entry_count = builder_->num_entries();
    builder_.reset();
    outputs_.push_back(meta);
    return r_->versions->OpenTable(number_, cf_, &meta->table);
  }

  DB::Rep* r_;
  ColumnFamilyId cf_;
  int level_;
  uint64_t target_;
  uint64_t number_ = 0;
  std::unique_ptr<TableBuilder> builder_;
  std::vector<std::shared_ptr<FileMeta>> outputs_;
};

uint64_t InputBytes(const CompactionJob& job) {
  uint64_t b = 0;
  for (const auto& f : job.inputs) b += f->file_bytes;
  for (const auto& f : job.target_inputs) b += f->file_bytes;
  return b;
}

}  // namespace

Status DB::Rep::GetTransformer(const Version& v, ColumnFamilyId cf,
                               std::shared_ptr<Transformer>* out) {
  const CfState* st = v.cf(cf);
  std::lock_guard<std::mutex> l(mu);
  auto it = transformers.find(cf);
  if (it != transformers.end() && it->second.first == st->desc) {
    *out = it->second.second;
    return Status::OK();
  }
  std::vector<ColumnFamilyDescriptor> dests;
  for (ColumnFamilyId d : st->desc->destinations) {
    const CfState* ds = v.cf(d);
    if (!ds) return Status::Corruption("missing destination column family");
    dests.push_back(*ds->desc);
  }
  std::unique_ptr<Transformer> t;
  TELSM_RETURN_NOT_OK(NewTransformer(*st->desc, dests, &t));
  *out = std::shared_ptr<Transformer>(std::move(t));
  transformers[cf] = {st->desc, *out};
  return Status::OK();
}

Status DB::Rep::RunCompaction(const CompactionJob& job) {
  return job.mode == CompactionMode::kTierToDestinations ? RunTierJob(job) : RunLevelJob(job);
}

Status DB::Rep::RunTierJob(const CompactionJob& job) {
  const Version& v = *job.version;
  std::shared_ptr<Transformer> t;
  TELSM_RETURN_NOT_OK(GetTransformer(v, job.cf, &t));

  PriorValueLookup lookup;
  if (t->source().transformer->kind == TransformerKind::kAugment) {
    // The primary CF is only fed by this job's CF, so the job snapshot sees
    // every older row.
    auto snap = std::make_shared<SuperVersion>();
    snap->version = job.version;
    ReadContext ctx{kMaxSequenceNumber, snap};
    ColumnFamilyId primary = t->source().destinations[0];
    const auto& src = t->source();
    lookup = [this, ctx, primary, src](std::string_view key, Row* row, bool* found) {
      return ReadRow(ctx, primary, key, ColumnsBegin(src), ColumnsEnd(src), row, found);
    };
  }
  TELSM_RETURN_NOT_OK(t->Prepare(std::move(lookup)));

  Status s = MergeRuns(NewCompactionInputIterator(job), false, [&](const Entry& e) {
    return t->Transform(e.key.user_key, e.key.seq, e.key.kind, e.value);
  });
  if (!s.ok()) {
    t->Abort();
    return s;
  }
  TransformOutputSet outputs;
  TELSM_RETURN_NOT_OK(t->Retrieve(&outputs));
  Bump(stats.bytes_read_compaction, InputBytes(job));

  EditGroup edits;
  std::vector<std::unique_ptr<OutputWriter>> writers;
  uint64_t written = 0;
  for (ColumnFamilyId dest : t->source().destinations) {
    const auto& entries = outputs[dest];
    if (entries.empty()) continue;
    auto w = std::make_unique<OutputWriter>(this, dest, 0, 0);
    for (const auto& e : entries) {
      s = w->Add(e);
      if (!s.ok()) break;
    }
    if (s.ok()) s = w->Finish();
    writers.push_back(std::move(w));
    if (!s.ok()) break;
  }
  if (s.ok()) {
    for (const auto& w : writers) {
      for (const auto& f : w->outputs()) {
        written += f->file_bytes;
        edits.push_back(VersionEdit::AddFile(f));
      }
    }
    for (const auto& f : job.inputs) {
      edits.push_back(VersionEdit::DeleteFile(job.cf, 0, f->file_number));
    }
    if (cfg.sync_files) s = SyncDir(cfg.data_dir);
  }
  if (s.ok()) {
    TELSM_KILL_POINT("compaction.after_output");
    s = versions->LogAndApply(edits);
  }
  if (!s.ok()) {
    for (auto& w : writers) w->Discard();
    return s;
  }
  Bump(stats.bytes_written_compaction, written);
  Bump(stats.tier_jobs);
  std::lock_guard<std::mutex> l(mu);
  RefreshSuperVersionLocked();
  return Status::OK();
}

Status DB::Rep::RunLevelJob(const CompactionJob& job) {
  const bool drop = job.bottommost;
  OutputWriter w(this, job.cf, job.target_level, cfg.TargetFileSize());
  Status s = MergeRuns(NewCompactionInputIterator(job), drop,
                       [&](const Entry& e) { return w.Add(e); });
  if (s.ok()) s = w.Finish();
  Bump(stats.bytes_read_compaction, InputBytes(job));
  EditGroup edits;
  uint64_t written = 0;
  if (s.ok()) {
    for (const auto& f : w.outputs()) {
      written += f->file_bytes;
      edits.push_back(VersionEdit::AddFile(f));
    }
    for (const auto& f : job.inputs) {
      edits.push_back(VersionEdit::DeleteFile(job.cf, job.source_level, f->file_number));
    }
    for (const auto& f : job.target_inputs) {
      edits.push_back(VersionEdit::DeleteFile(job.cf, job.target_level, f->file_number));
    }
    if (cfg.sync_files && !w.outputs().empty()) s = SyncDir(cfg.data_dir);
  }
  if (s.ok()) {
    TELSM_KILL_POINT("compaction.after_output");
    s = versions->LogAndApply(edits);
  }
  if (!s.ok()) {
    w.Discard();
    return s;
  }
  Bump(stats.bytes_written_compaction, written);
  Bump(stats.level_jobs);
  std::lock_guard<std::mutex> l(mu);
  RefreshSuperVersionLocked();
  return Status::OK();
}

}  // namespace telsm
