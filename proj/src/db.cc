#include <algorithm>
#include <chrono>
#include <sstream>

#include "db_impl.h"
#include "telsm/codec.h"
#include "telsm/link.h"

namespace telsm {

namespace {

using Clock = std::chrono::steady_clock;

uint64_t MicrosSince(Clock::time_point t) {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t).count());
}

bool ParseNumberedName(const std::string& name, const char* prefix, const char* suffix,
                       uint64_t* n) {
  std::string_view s(name), p(prefix), x(suffix);
  if (s.size() <= p.size() + x.size() || s.substr(0, p.size()) != p ||
      s.substr(s.size() - x.size()) != x) {
    return false;
  }
  s = s.substr(p.size(), s.size() - p.size() - x.size());
  uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<uint64_t>(c - '0');
  }
  *n = v;
  return true;
}

}  // namespace

// ---------------------------------------------------------------- MemGen

size_t MemGen::LargestTableBytes() const {
  size_t m = 0;
  for (const auto& [id, t] : tables) m = std::max(m, t->ApproximateMemoryUsage());
  return m;
}

bool MemGen::Empty() const {
  for (const auto& [id, t] : tables) {
    if (!t->empty()) return false;
  }
  return true;
}

SequenceNumber MemGen::LargestSeq() const {
  SequenceNumber s = 0;
  for (const auto& [id, t] : tables) s = std::max(s, t->largest_seq());
  return s;
}

// ---------------------------------------------------------------- Catalog

std::shared_ptr<const Catalog> Catalog::Build(const Version& v) {
  auto c = std::make_shared<Catalog>();
  for (const auto& [id, st] : v.cfs) {
    const auto& d = *st.desc;
    c->by_name[d.name] = id;
    if (!d.transformer || d.transformer->kind != TransformerKind::kAugment) continue;
    std::vector<ColumnFamilyId> path;
    for (ColumnFamilyId x = id; x != kNoColumnFamily;) {
      path.push_back(x);
      const CfState* p = v.cf(x);
      x = p ? p->desc->parent_id : kNoColumnFamily;
    }
    std::reverse(path.begin(), path.end());
    const auto& cols = d.transformer->indexed_columns;
    for (size_t i = 0; i < cols.size() && i + 1 < d.destinations.size(); ++i) {
      IndexInfo info;
      info.augment_cf = id;
      info.primary_cf = d.destinations[0];
      info.secondary_cf = d.destinations[i + 1];
      info.root_column = d.column_offset + *d.schema.IndexOf(cols[i]);
      info.upstream = path;
      c->indexes[d.root_id][cols[i]] = std::move(info);
    }
  }
  return c;
}

// ---------------------------------------------------------------- open / close

DB::DB() : rep_(std::make_unique<Rep>()) {}

DB::~DB() { Close(); }

Status DB::Open(const EngineConfig& config, std::unique_ptr<DB>* db) {
  TELSM_RETURN_NOT_OK(config.Validate());
  if (!FileExists(config.data_dir)) {
    if (!config.create_if_missing) return Status::InvalidArgument("no database at " + config.data_dir);
  }
  TELSM_RETURN_NOT_OK(CreateDirIfMissing(config.data_dir));
  std::unique_ptr<DB> d(new DB());
  Rep* r = d->rep_.get();
  r->cfg = config;
  r->cache = std::make_unique<BlockCache>(config.block_cache_bytes);
  TableReadOptions topts;
  topts.cache = r->cache.get();
  topts.stats = &r->stats;
  topts.direct_reads = config.use_direct_reads;
  r->versions =
      std::make_unique<VersionSet>(config.data_dir, config.max_levels, config.sync_files, topts);
  TELSM_RETURN_NOT_OK(r->Recover());
  r->StartThreads();
  *db = std::move(d);
  return Status::OK();
}

Status DB::Close() {
  if (!rep_) return Status::OK();
  rep_->StopThreads();
  std::lock_guard<std::mutex> wl(rep_->write_mu);
  if (rep_->wal) {
    Status s = rep_->wal->Close();
    rep_->wal.reset();
    return s;
  }
  return Status::OK();
}

Status DB::Rep::NewMemGenLocked(uint64_t wal_number, std::shared_ptr<const MemGen>* out) const {
  auto gen = std::make_shared<MemGen>();
  gen->wal_number = wal_number;
  for (const auto& [id, st] : versions->current()->cfs) {
    if (st.desc->user_facing()) gen->tables[id] = std::make_shared<MemTable>();
  }
  *out = std::move(gen);
  return Status::OK();
}

Status DB::Rep::Recover() {
  TELSM_RETURN_NOT_OK(versions->Recover());
  auto v = versions->current();

  std::vector<std::string> names;
  TELSM_RETURN_NOT_OK(ListDir(cfg.data_dir, &names));
  std::vector<uint64_t> wals;
  for (const auto& n : names) {
    uint64_t num;
    if (ParseNumberedName(n, "wal-", ".log", &num)) wals.push_back(num);
  }
  std::sort(wals.begin(), wals.end());

  std::shared_ptr<const MemGen> gen;
  NewMemGenLocked(0, &gen);
  SequenceNumber max_seq = v->last_sequence;
  for (uint64_t num : wals) {
    WalReplayResult res;
    TELSM_RETURN_NOT_OK(ReplayWal(versions->WalPath(num), &res));
    for (const auto& rec : res.records) {
      if (rec.key.seq <= v->last_sequence) continue;
      auto it = gen->tables.find(rec.cf_id);
      if (it == gen->tables.end()) {
        return Status::Corruption("WAL record for unknown column family " +
                                  std::to_string(rec.cf_id));
      }
      it->second->Add(rec.key.user_key, rec.key.seq, rec.key.kind, rec.value);
      max_seq = std::max(max_seq, rec.key.seq);
    }
  }
  if (!gen->Empty()) {
    EditGroup edits;
    uint64_t bytes = 0;
    TELSM_RETURN_NOT_OK(WriteLevel0(*gen, &edits, &bytes));
    edits.push_back(VersionEdit::SetSeq(max_seq));
    TELSM_RETURN_NOT_OK(versions->LogAndApply(edits));
    Bump(stats.bytes_written_flush, bytes);
  }
  for (uint64_t num : wals) RemoveFile(versions->WalPath(num));

  next_seq = std::max(max_seq, versions->current()->last_sequence) + 1;
  published_seq.store(next_seq - 1);
  uint64_t wal_number = versions->NewFileNumber();
  TELSM_RETURN_NOT_OK(WalWriter::Open(versions->WalPath(wal_number), &wal));
  TELSM_RETURN_NOT_OK(SyncDir(cfg.data_dir));
  std::lock_guard<std::mutex> l(mu);
  NewMemGenLocked(wal_number, &mem);
  RefreshSuperVersionLocked();
  return Status::OK();
}

void DB::Rep::StartThreads() {
  threads.emplace_back([this] { FlushThread(); });
  for (int i = 0; i < cfg.background_compaction_workers; ++i) {
    threads.emplace_back([this] { CompactionThread(); });
  }
}

void DB::Rep::StopThreads() {
  {
    std::lock_guard<std::mutex> l(mu);
    shutting_down = true;
  }
  bg_cv.notify_all();
  for (auto& t : threads) t.join();
  threads.clear();
}

std::shared_ptr<const SuperVersion> DB::Rep::GetSuperVersion() const {
  std::lock_guard<std::mutex> l(mu);
  return sv;
}

void DB::Rep::RefreshSuperVersionLocked() {
  auto s = std::make_shared<SuperVersion>();
  s->mem = mem;
  s->imm = imm;
  s->version = versions->current();
  if (sv && sv->version->cfs.size() == s->version->cfs.size() && sv->catalog) {
    bool same = true;
    for (const auto& [id, st] : s->version->cfs) {
      const CfState* old = sv->version->cf(id);
      if (!old || old->desc != st.desc) same = false;
    }
    s->catalog = same ? sv->catalog : Catalog::Build(*s->version);
  } else {
    s->catalog = Catalog::Build(*s->version);
  }
  sv = std::move(s);
}

void DB::Rep::SetBackgroundError(const Status& s) {
  std::lock_guard<std::mutex> l(mu);
  if (bg_error.ok()) bg_error = s;
  bg_cv.notify_all();
}

// ---------------------------------------------------------------- catalog

Status DB::Rep::ApplyCatalogEdits(const EditGroup& edits) {
  TELSM_RETURN_NOT_OK(versions->LogAndApply(edits));
  std::lock_guard<std::mutex> l(mu);
  // New user-facing CFs need a memtable in the active generation.
  auto gen = std::make_shared<MemGen>(*mem);
  for (const auto& [id, st] : versions->current()->cfs) {
    if (st.desc->user_facing() && !gen->tables.count(id)) {
      gen->tables[id] = std::make_shared<MemTable>();
    }
  }
  mem = std::move(gen);
  transformers.clear();
  RefreshSuperVersionLocked();
  bg_cv.notify_all();
  return Status::OK();
}

Status DB::CreateColumnFamily(const std::string& name, const Schema& schema, RecordFormat format,
                              ColumnFamilyId* id) {
  if (name.empty() || name.find_first_of(" \t\n|") != std::string::npos) {
    return Status::InvalidArgument("bad column family name");
  }
  if (schema.empty()) return Status::InvalidArgument("schema must have at least one column");
  std::lock_guard<std::mutex> wl(rep_->write_mu);
  auto v = rep_->versions->current();
  if (v->FindByName(name)) return Status::InvalidArgument("column family exists: " + name);
  ColumnFamilyDescriptor d;
  d.id = 0;
  for (const auto& [cid, st] : v->cfs) d.id = std::max<ColumnFamilyId>(d.id, cid + 1);
  if (d.id >= kNoColumnFamily) return Status::InvalidArgument("too many column families");
  d.name = name;
  d.schema = schema;
  d.format = format;
  d.kind = CfKind::kUserFacing;
  d.root_id = d.id;
  TELSM_RETURN_NOT_OK(rep_->ApplyCatalogEdits({VersionEdit::CreateCf(d)}));
  if (id) *id = d.id;
  return Status::OK();
}

namespace {

// Holds off compaction picking while the catalog changes shape.
class CatalogChange {
 public:
  explicit CatalogChange(DB::Rep* r) : r_(r) {
    std::unique_lock<std::mutex> l(r_->mu);
    was_paused_ = r_->paused;
    r_->paused = true;
    r_->bg_cv.wait(l, [&] { return r_->running_jobs == 0 || r_->shutting_down; });
  }
  ~CatalogChange() {
    std::lock_guard<std::mutex> l(r_->mu);
    r_->paused = was_paused_;
    r_->bg_cv.notify_all();
  }

 private:
  DB::Rep* r_;
  bool was_paused_;
};

}  // namespace

Status DB::LinkTransformers(const std::string& name, const std::vector<TransformerSpec>& specs) {
  std::lock_guard<std::mutex> wl(rep_->write_mu);
  CatalogChange guard(rep_.get());
  auto v = rep_->versions->current();
  const ColumnFamilyDescriptor* d = v->FindByName(name);
  if (!d) return Status::InvalidArgument("unknown column family " + name);
  LinkPlan plan;
  TELSM_RETURN_NOT_OK(PlanLinks(*v, d->id, specs, &plan));
  return rep_->ApplyCatalogEdits(plan.edits);
}

Status DB::ExtendTransformers(const std::string& name, const std::vector<TransformerSpec>& specs) {
  std::lock_guard<std::mutex> wl(rep_->write_mu);
  CatalogChange guard(rep_.get());
  auto v = rep_->versions->current();
  const ColumnFamilyDescriptor* d = v->FindByName(name);
  if (!d) return Status::InvalidArgument("unknown column family " + name);
  LinkPlan plan;
  TELSM_RETURN_NOT_OK(PlanExtension(*v, d->id, specs, &plan));
  return rep_->ApplyCatalogEdits(plan.edits);
}

Status DB::GetColumnFamily(const std::string& name, ColumnFamilyDescriptor* desc) const {
  auto v = rep_->versions->current();
  const ColumnFamilyDescriptor* d = v->FindByName(name);
  if (!d) return Status::NotFound("column family " + name);
  *desc = *d;
  return Status::OK();
}

std::vector<ColumnFamilyDescriptor> DB::ListColumnFamilies() const {
  std::vector<ColumnFamilyDescriptor> out;
  for (const auto& [id, st] : rep_->versions->current()->cfs) out.push_back(*st.desc);
  return out;
}

// ---------------------------------------------------------------- writes

Status DB::Rep::SwitchMemtable() {
  uint64_t number = versions->NewFileNumber();
  std::unique_ptr<WalWriter> w;
  TELSM_RETURN_NOT_OK(WalWriter::Open(versions->WalPath(number), &w));
  if (wal) TELSM_RETURN_NOT_OK(wal->Close());
  wal = std::move(w);
  std::lock_guard<std::mutex> l(mu);
  imm.insert(imm.begin(), mem);
  NewMemGenLocked(number, &mem);
  RefreshSuperVersionLocked();
  bg_cv.notify_all();
  return Status::OK();
}

Status DB::Rep::MakeRoomForWrite(std::unique_lock<std::mutex>* /*write_lock*/) {
  bool slowed = false;
  while (true) {
    std::unique_lock<std::mutex> l(mu);
    if (!bg_error.ok()) return bg_error;
    if (shutting_down) return Status::Aborted("database is closing");
    size_t max_l0 = 0;
    for (const auto& [id, st] : versions->current()->cfs) {
      max_l0 = std::max(max_l0, st.levels[0].size());
    }
    if (!slowed && max_l0 >= static_cast<size_t>(cfg.level0_slowdown_writes_trigger)) {
      l.unlock();
      auto t = Clock::now();
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
      Bump(stats.write_stall_micros, MicrosSince(t));
      slowed = true;
      continue;
    }
    if (max_l0 >= static_cast<size_t>(cfg.level0_stop_writes_trigger)) {
      auto t = Clock::now();
      bg_cv.wait_for(l, std::chrono::milliseconds(100));
      Bump(stats.write_stall_micros, MicrosSince(t));
      continue;
    }
    if (mem->LargestTableBytes() < cfg.write_buffer_size) return Status::OK();
    if (imm.size() + 1 >= static_cast<size_t>(cfg.max_write_buffer_number)) {
      auto t = Clock::now();
      bg_cv.wait_for(l, std::chrono::milliseconds(100));
      Bump(stats.write_stall_micros, MicrosSince(t));
      continue;
    }
    l.unlock();
    TELSM_RETURN_NOT_OK(SwitchMemtable());
    return Status::OK();
  }
}

Status DB::Rep::WriteImpl(const std::vector<WriteBatch::Op>& ops, bool public_api) {
  if (ops.empty()) return Status::OK();
  auto s = GetSuperVersion();
  for (const auto& op : ops) {
    const CfState* st = s->version->cf(op.cf);
    if (!st) return Status::InvalidArgument("unknown column family id " + std::to_string(op.cf));
    if (public_api && !st->desc->user_facing()) {
      return Status::InvalidArgument("column family " + st->desc->name + " is internal");
    }
    if (op.key.empty() || op.key.size() > 0xffff) {
      return Status::InvalidArgument("key must be 1..65535 bytes");
    }
  }

  std::unique_lock<std::mutex> wl(write_mu);
  TELSM_RETURN_NOT_OK(MakeRoomForWrite(&wl));
  std::shared_ptr<const MemGen> gen;
  {
    std::lock_guard<std::mutex> l(mu);
    gen = mem;
  }
  std::string buf;
  SequenceNumber seq = next_seq;
  uint64_t ingested = 0;
  for (const auto& op : ops) {
    EncodeWalRecord(op.cf, InternalKey{op.key, seq++, op.kind}, op.value, &buf);
    ingested += op.key.size() + op.value.size();
  }
  Status ws = wal->AppendEncoded(buf, cfg.sync_wal);
  if (!ws.ok()) {
    SetBackgroundError(ws);
    return ws;
  }
  seq = next_seq;
  for (const auto& op : ops) {
    auto it = gen->tables.find(op.cf);
    if (it == gen->tables.end()) return Status::InvalidArgument("no memtable for column family");
    it->second->Add(op.key, seq++, op.kind, op.value);
  }
  next_seq = seq;
  published_seq.store(seq - 1, std::memory_order_release);
  Bump(stats.bytes_ingested, ingested);
  return Status::OK();
}

namespace {

Status CheckIndexedValues(const Catalog& cat, ColumnFamilyId cf, const Row& row) {
  auto it = cat.indexes.find(cf);
  if (it == cat.indexes.end()) return Status::OK();
  for (const auto& [col, info] : it->second) {
    std::string tmp;
    TELSM_RETURN_NOT_OK(IndexValueBytes(row[info.root_column], &tmp));
  }
  return Status::OK();
}

// Records are otherwise stored as given; only indexed columns are looked at.
Status CheckIndexedRecord(const Catalog& cat, const ColumnFamilyDescriptor& d,
                          std::string_view record) {
  auto it = cat.indexes.find(d.id);
  if (it == cat.indexes.end()) return Status::OK();
  Value v;
  std::string tmp;
  for (const auto& [col, info] : it->second) {
    TELSM_RETURN_NOT_OK(ExtractColumn(d.format, d.schema, record, info.root_column, &v));
    TELSM_RETURN_NOT_OK(IndexValueBytes(v, &tmp));
  }
  return Status::OK();
}

}  // namespace

Status DB::Insert(const std::string& cf, std::string_view key, const Row& row) {
  auto s = rep_->GetSuperVersion();
  auto it = s->catalog->by_name.find(cf);
  if (it == s->catalog->by_name.end()) return Status::InvalidArgument("unknown column family " + cf);
  const auto& d = *s->version->cf(it->second)->desc;
  if (!d.user_facing()) return Status::InvalidArgument("column family " + cf + " is internal");
  if (!d.schema.Matches(row)) return Status::InvalidArgument("row does not match schema of " + cf);
  TELSM_RETURN_NOT_OK(CheckIndexedValues(*s->catalog, d.id, row));
  std::string value;
  TELSM_RETURN_NOT_OK(EncodeRecord(d.format, d.schema, row, &value));
  return rep_->WriteImpl({WriteBatch::Op{d.id, ValueKind::kPut, std::string(key), std::move(value)}},
                         true);
}

Status DB::InsertEncoded(const std::string& cf, std::string_view key, std::string_view record) {
  auto s = rep_->GetSuperVersion();
  auto it = s->catalog->by_name.find(cf);
  if (it == s->catalog->by_name.end()) return Status::InvalidArgument("unknown column family " + cf);
  const auto& d = *s->version->cf(it->second)->desc;
  if (!d.user_facing()) return Status::InvalidArgument("column family " + cf + " is internal");
  TELSM_RETURN_NOT_OK(CheckIndexedRecord(*s->catalog, d, record));
  return rep_->WriteImpl(
      {WriteBatch::Op{d.id, ValueKind::kPut, std::string(key), std::string(record)}}, true);
}

Status DB::Remove(const std::string& cf, std::string_view key) {
  auto s = rep_->GetSuperVersion();
  auto it = s->catalog->by_name.find(cf);
  if (it == s->catalog->by_name.end()) return Status::InvalidArgument("unknown column family " + cf);
  if (!s->version->cf(it->second)->desc->user_facing()) {
    return Status::InvalidArgument("column family " + cf + " is internal");
  }
  return rep_->WriteImpl({WriteBatch::Op{it->second, ValueKind::kDelete, std::string(key), {}}},
                         true);
}

Status DB::Write(const WriteBatch& batch) {
  auto s = rep_->GetSuperVersion();
  for (const auto& op : batch.ops()) {
    const CfState* st = s->version->cf(op.cf);
    if (!st) return Status::InvalidArgument("unknown column family id " + std::to_string(op.cf));
    const auto& d = *st->desc;
    if (!d.user_facing()) return Status::InvalidArgument("column family " + d.name + " is internal");
    if (op.kind == ValueKind::kPut) TELSM_RETURN_NOT_OK(CheckIndexedRecord(*s->catalog, d, op.value));
  }
  return rep_->WriteImpl(batch.ops(), true);
}

// ---------------------------------------------------------------- flush

Status DB::Rep::WriteLevel0(const MemGen& gen, EditGroup* edits, uint64_t* bytes) {
  *bytes = 0;
  for (const auto& [cf, table] : gen.tables) {
    if (table->empty()) continue;
    uint64_t number = versions->NewFileNumber();
    std::unique_ptr<WritableFile> file;
    TELSM_RETURN_NOT_OK(WritableFile::Open(versions->SstPath(number), true, &file));
    TableBuilder builder(std::move(file), cfg.block_size, cfg.bloom_bits_per_key);
    NewestVersionIterator it(table->NewIterator(), kMaxSequenceNumber);
    Status s;
    for (it.SeekToFirst(); it.Valid() && s.ok(); it.Next()) {
      s = builder.Add(it.user_key(), it.seq(), it.kind(), it.value());
    }
    if (s.ok()) s = it.status();
    if (s.ok()) s = builder.Finish(cfg.sync_files);
    if (!s.ok()) {
      builder.Abandon();
      RemoveFile(versions->SstPath(number));
      return s;
    }
    TELSM_KILL_POINT("flush.after_table");
    auto meta = std::make_shared<FileMeta>();
    meta->file_number = number;
    meta->cf_id = cf;
    meta->level = 0;
    meta->smallest = builder.smallest();
    meta->largest = builder.largest();
    meta->file_bytes = builder.file_size();
    meta->entry_count = builder.num_entries();
    TELSM_RETURN_NOT_OK(versions->OpenTable(number, cf, &meta->table));
    *bytes += meta->file_bytes;
    edits->push_back(VersionEdit::AddFile(std::move(meta)));
  }
  if (!edits->empty() && cfg.sync_files) TELSM_RETURN_NOT_OK(SyncDir(cfg.data_dir));
  return Status::OK();
}

void DB::Rep::FlushThread() {
  std::unique_lock<std::mutex> l(mu);
  while (true) {
    bg_cv.wait(l, [&] { return shutting_down || (!imm.empty() && bg_error.ok()); });
    if (shutting_down) break;
    std::shared_ptr<const MemGen> gen = imm.back();
    flushing = true;
    l.unlock();

    EditGroup edits;
    uint64_t bytes = 0;
    Status s = WriteLevel0(*gen, &edits, &bytes);
    if (s.ok() && !edits.empty()) {
      edits.push_back(VersionEdit::SetSeq(gen->LargestSeq()));
      TELSM_KILL_POINT("flush.before_install");
      s = versions->LogAndApply(edits);
    }
    if (!s.ok()) {
      for (const auto& e : edits) {
        if (e.type == VersionEdit::Type::kAddFile) RemoveFile(versions->SstPath(e.file->file_number));
      }
    }

    l.lock();
    flushing = false;
    if (!s.ok()) {
      if (bg_error.ok()) bg_error = s;
      bg_cv.notify_all();
      continue;
    }
    imm.pop_back();
    RefreshSuperVersionLocked();
    if (!edits.empty()) {
      Bump(stats.flush_jobs);
      Bump(stats.bytes_written_flush, bytes);
    }
    l.unlock();
    TELSM_KILL_POINT("flush.before_wal_delete");
    RemoveFile(versions->WalPath(gen->wal_number));
    l.lock();
    bg_cv.notify_all();
  }
}

Status DB::Flush() {
  {
    std::lock_guard<std::mutex> wl(rep_->write_mu);
    bool empty;
    {
      std::lock_guard<std::mutex> l(rep_->mu);
      if (!rep_->bg_error.ok()) return rep_->bg_error;
      empty = rep_->mem->Empty();
    }
    if (!empty) TELSM_RETURN_NOT_OK(rep_->SwitchMemtable());
  }
  std::unique_lock<std::mutex> l(rep_->mu);
  rep_->bg_cv.wait(l, [&] {
    return (rep_->imm.empty() && !rep_->flushing) || !rep_->bg_error.ok() || rep_->shutting_down;
  });
  return rep_->bg_error;
}

// ---------------------------------------------------------------- compaction scheduling

bool DB::Rep::PickJobLocked(CompactionJob* job) {
  auto v = versions->current();
  for (const auto& [id, st] : v->cfs) {
    if (busy_cfs.count(id)) continue;
    auto j = PickCompaction(v, id, cfg, &cursors[id], force_migrate);
    if (j) {
      *job = std::move(*j);
      return true;
    }
  }
  return false;
}

bool DB::Rep::AnyJobPendingLocked() {
  auto v = versions->current();
  for (const auto& [id, st] : v->cfs) {
    if (PickCompaction(v, id, cfg, nullptr, force_migrate)) return true;
  }
  return false;
}

void DB::Rep::CompactionThread() {
  std::unique_lock<std::mutex> l(mu);
  while (true) {
    CompactionJob job;
    bg_cv.wait(l, [&] {
      return shutting_down || (!paused && bg_error.ok() && PickJobLocked(&job));
    });
    if (shutting_down) break;
    const ColumnFamilyId cf = job.cf;
    busy_cfs.insert(cf);
    ++running_jobs;
    l.unlock();
    Status s = RunCompaction(job);
    job = CompactionJob{};
    l.lock();
    busy_cfs.erase(cf);
    --running_jobs;
    if (!s.ok() && bg_error.ok()) bg_error = s;
    bg_cv.notify_all();
  }
}

Status DB::WaitForQuiescence() {
  TELSM_RETURN_NOT_OK(Flush());
  std::unique_lock<std::mutex> l(rep_->mu);
  while (true) {
    if (!rep_->bg_error.ok()) return rep_->bg_error;
    if (rep_->shutting_down) return Status::Aborted("database is closing");
    if (rep_->paused) return Status::InvalidArgument("background work is paused");
    if (rep_->running_jobs == 0 && rep_->imm.empty() && !rep_->flushing &&
        !rep_->AnyJobPendingLocked()) {
      return Status::OK();
    }
    rep_->bg_cv.wait_for(l, std::chrono::milliseconds(50));
  }
}

Status DB::MigrateAll() {
  TELSM_RETURN_NOT_OK(Flush());
  {
    std::lock_guard<std::mutex> l(rep_->mu);
    rep_->force_migrate = true;
    rep_->bg_cv.notify_all();
  }
  Status s = WaitForQuiescence();
  {
    std::lock_guard<std::mutex> l(rep_->mu);
    rep_->force_migrate = false;
  }
  if (!s.ok()) return s;
  return WaitForQuiescence();
}

void DB::PauseBackgroundWork() {
  std::unique_lock<std::mutex> l(rep_->mu);
  rep_->paused = true;
  rep_->bg_cv.wait(l, [&] { return rep_->running_jobs == 0; });
}

void DB::ContinueBackgroundWork() {
  std::lock_guard<std::mutex> l(rep_->mu);
  rep_->paused = false;
  rep_->bg_cv.notify_all();
}

// ---------------------------------------------------------------- misc

Statistics& DB::stats() { return rep_->stats; }

std::shared_ptr<const Version> DB::CurrentVersion() const { return rep_->versions->current(); }

const EngineConfig& DB::config() const { return rep_->cfg; }

uint64_t DB::BlockAccesses(ColumnFamilyId cf) const { return rep_->versions->BlockAccesses(cf); }

void DB::ResetBlockAccesses() { rep_->versions->ResetBlockAccesses(); }

Status DB::BackgroundError() const {
  std::lock_guard<std::mutex> l(rep_->mu);
  return rep_->bg_error;
}

std::string DB::DebugString() const { return rep_->versions->current()->DebugString(); }

}  // namespace telsm
