#include <algorithm>

#include "db_impl.h"
#include "telsm/codec.h"

namespace telsm {

namespace {

// Decodes the part of a record that falls in root columns [nb, ne).
Status DecodeSubRow(const ColumnFamilyDescriptor& d, std::string_view value, size_t nb, size_t ne,
                    Row* row) {
  const size_t begin = ColumnsBegin(d);
  if (nb == begin && ne == ColumnsEnd(d)) return DecodeRecord(d.format, d.schema, value, row);
  if (ne - nb == 1) {
    row->resize(1);
    return ExtractColumn(d.format, d.schema, value, nb - begin, &(*row)[0]);
  }
  Row full;
  TELSM_RETURN_NOT_OK(DecodeRecord(d.format, d.schema, value, &full));
  row->assign(full.begin() + (nb - begin), full.begin() + (ne - begin));
  return Status::OK();
}

bool Intersects(const ColumnFamilyDescriptor& d, size_t cb, size_t ce) {
  return std::max(cb, ColumnsBegin(d)) < std::min(ce, ColumnsEnd(d));
}

bool FileInRange(const FileMeta& f, std::string_view lo, std::string_view hi) {
  if (f.largest.user_key < lo) return false;
  return hi.empty() || std::string_view(f.smallest.user_key) < hi;
}

// Logical stream of one node: its own data shadows whatever its
// destinations hold for the same key.
class NodeSource {
 public:
  NodeSource(const DB::Rep* rep, const ReadContext& ctx, ColumnFamilyId cf, size_t cb, size_t ce,
             std::string_view lo, std::string_view hi)
      : desc_(ctx.desc(cf)),
        nb_(std::max(cb, ColumnsBegin(desc_))),
        ne_(std::min(ce, ColumnsEnd(desc_))),
        hi_(hi),
        own_(rep->OwnIterator(ctx, cf, lo, hi), ctx.snapshot) {
    split_ = desc_.transformer && desc_.transformer->kind == TransformerKind::kSplit;
    if (desc_.transformer) {
      for (ColumnFamilyId d : desc_.destinations) {
        const auto& dd = ctx.desc(d);
        if (dd.role != CfRole::kRow) continue;
        if (split_ && !Intersects(dd, nb_, ne_)) continue;
        children_.push_back(std::make_unique<NodeSource>(rep, ctx, d, nb_, ne_, lo, hi));
        if (!split_) break;
      }
    }
    own_.Seek(lo);
    Settle();
  }

  bool Valid() const { return valid_; }
  const std::string& key() const { return key_; }
  bool deleted() const { return deleted_; }
  Status status() const { return status_; }

  Status row(Row* out) {
    if (own_at_) return DecodeSubRow(desc_, own_.value(), nb_, ne_, out);
    if (!split_) return children_[0]->row(out);
    out->clear();
    Row part;
    for (auto& c : children_) {
      TELSM_RETURN_NOT_OK(c->row(&part));
      out->insert(out->end(), part.begin(), part.end());
    }
    return Status::OK();
  }

  void Next() {
    if (own_at_) own_.Next();
    for (auto& c : children_) {
      if (c->Valid() && c->key() == key_) c->Next();
    }
    Settle();
  }

 private:
  bool OwnValid() const {
    return own_.Valid() && (hi_.empty() || own_.user_key() < std::string_view(hi_));
  }

  void Settle() {
    valid_ = false;
    if (!own_.status().ok()) {
      status_ = own_.status();
      return;
    }
    const std::string* min_key = nullptr;
    if (OwnValid()) key_.assign(own_.user_key()), min_key = &key_;
    for (auto& c : children_) {
      if (!c->status().ok()) {
        status_ = c->status();
        return;
      }
      if (c->Valid() && (!min_key || c->key() < *min_key)) min_key = &c->key();
    }
    if (!min_key) return;
    if (min_key != &key_) key_ = *min_key;
    valid_ = true;
    own_at_ = OwnValid() && own_.user_key() == std::string_view(key_);
    if (own_at_) {
      deleted_ = own_.kind() == ValueKind::kDelete;
      return;
    }
    size_t found = 0;
    for (auto& c : children_) {
      if (c->Valid() && c->key() == key_ && !c->deleted()) ++found;
    }
    deleted_ = found == 0;
    if (split_ && found != 0 && found != children_.size()) {
      status_ = Status::Corruption("split pieces of key are incomplete in " + desc_.name);
      valid_ = false;
    }
  }

  const ColumnFamilyDescriptor& desc_;
  const size_t nb_, ne_;
  const std::string hi_;
  NewestVersionIterator own_;
  std::vector<std::unique_ptr<NodeSource>> children_;
  bool split_ = false;
  bool valid_ = false;
  bool own_at_ = false;
  bool deleted_ = false;
  std::string key_;
  Status status_;
};

}  // namespace

ReadContext DB::Rep::NewReadContext() const {
  ReadContext ctx;
  ctx.snapshot = published_seq.load(std::memory_order_acquire);
  ctx.sv = GetSuperVersion();
  return ctx;
}

Status DB::Rep::ResolveRoot(const ReadContext& ctx, const std::string& name,
                            const ColumnFamilyDescriptor** desc) const {
  auto it = ctx.sv->catalog->by_name.find(name);
  if (it == ctx.sv->catalog->by_name.end()) {
    return Status::InvalidArgument("unknown column family " + name);
  }
  const auto& d = ctx.desc(it->second);
  if (!d.user_facing()) return Status::InvalidArgument("column family " + name + " is internal");
  *desc = &d;
  return Status::OK();
}

Status DB::Rep::LookupOwn(const ReadContext& ctx, ColumnFamilyId cf, std::string_view key,
                          LookupResult* r) const {
  const CfState* st = ctx.sv->version->cf(cf);
  *r = LookupResult{};
  if (st->desc->user_facing() && ctx.sv->mem) {
    auto probe = [&](const MemGen& gen) {
      auto it = gen.tables.find(cf);
      if (it == gen.tables.end()) return false;
      *r = it->second->Get(key, ctx.snapshot);
      return r->state != LookupState::kNotFound;
    };
    if (probe(*ctx.sv->mem)) return Status::OK();
    for (const auto& gen : ctx.sv->imm) {
      if (probe(*gen)) return Status::OK();
    }
  }
  for (const auto& f : st->levels[0]) {
    if (key < std::string_view(f->smallest.user_key) || key > std::string_view(f->largest.user_key)) {
      continue;
    }
    TELSM_RETURN_NOT_OK(f->table->Get(key, kMaxSequenceNumber, r));
    if (r->state != LookupState::kNotFound) return Status::OK();
  }
  for (size_t l = 1; l < st->levels.size(); ++l) {
    const auto& files = st->levels[l];
    auto it = std::lower_bound(files.begin(), files.end(), key,
                               [](const FileMetaPtr& f, std::string_view k) {
                                 return std::string_view(f->largest.user_key) < k;
                               });
    if (it == files.end() || key < std::string_view((*it)->smallest.user_key)) continue;
    TELSM_RETURN_NOT_OK((*it)->table->Get(key, kMaxSequenceNumber, r));
    if (r->state != LookupState::kNotFound) return Status::OK();
  }
  return Status::OK();
}

Status DB::Rep::ReadRow(const ReadContext& ctx, ColumnFamilyId cf, std::string_view key,
                        size_t cb, size_t ce, Row* row, bool* found) const {
  const auto& d = ctx.desc(cf);
  const size_t nb = std::max(cb, ColumnsBegin(d));
  const size_t ne = std::min(ce, ColumnsEnd(d));
  *found = false;
  LookupResult r;
  TELSM_RETURN_NOT_OK(LookupOwn(ctx, cf, key, &r));
  if (r.state == LookupState::kFound) {
    *found = true;
    return DecodeSubRow(d, r.value, nb, ne, row);
  }
  if (r.state == LookupState::kDeleted || !d.transformer) return Status::OK();
  if (d.transformer->kind != TransformerKind::kSplit) {
    return ReadRow(ctx, d.destinations[0], key, nb, ne, row, found);
  }
  row->clear();
  size_t considered = 0, present = 0;
  Row part;
  for (ColumnFamilyId child : d.destinations) {
    if (!Intersects(ctx.desc(child), nb, ne)) continue;
    ++considered;
    bool f = false;
    TELSM_RETURN_NOT_OK(ReadRow(ctx, child, key, nb, ne, &part, &f));
    if (f) {
      ++present;
      row->insert(row->end(), part.begin(), part.end());
    }
  }
  if (present == 0) return Status::OK();
  if (present != considered) {
    return Status::Corruption("split pieces of key are incomplete in " + d.name);
  }
  *found = true;
  return Status::OK();
}

std::unique_ptr<InternalIterator> DB::Rep::OwnIterator(const ReadContext& ctx, ColumnFamilyId cf,
                                                       std::string_view lo,
                                                       std::string_view hi) const {
  const CfState* st = ctx.sv->version->cf(cf);
  std::vector<std::unique_ptr<InternalIterator>> children;
  if (st->desc->user_facing() && ctx.sv->mem) {
    auto add = [&](const MemGen& gen) {
      auto it = gen.tables.find(cf);
      if (it != gen.tables.end() && !it->second->empty()) {
        children.push_back(it->second->NewIterator());
      }
    };
    add(*ctx.sv->mem);
    for (const auto& gen : ctx.sv->imm) add(*gen);
  }
  for (const auto& level : st->levels) {
    for (const auto& f : level) {
      if (FileInRange(*f, lo, hi)) children.push_back(f->table->NewIterator());
    }
  }
  return NewMergingIterator(std::move(children));
}

Status DB::Rep::ScanRows(const ReadContext& ctx, ColumnFamilyId root, std::string_view k1,
                         std::string_view k2, size_t cb, size_t ce, const RowCallback& fn) const {
  if (!k2.empty() && k2 <= k1) return Status::OK();
  NodeSource src(this, ctx, root, cb, ce, k1, k2);
  Row row;
  for (; src.Valid(); src.Next()) {
    if (src.deleted()) continue;
    TELSM_RETURN_NOT_OK(src.row(&row));
    if (!fn(src.key(), row)) break;
  }
  return src.status();
}

Status DB::Rep::CollectIndexCandidates(const ReadContext& ctx, const IndexInfo& info,
                                       std::string_view lo, std::string_view hi,
                                       const std::function<bool(const Value&)>& match,
                                       std::set<std::string>* pks) const {
  {
    NewestVersionIterator it(OwnIterator(ctx, info.secondary_cf, lo, hi), ctx.snapshot);
    for (it.Seek(lo); it.Valid() && it.user_key() < hi; it.Next()) {
      if (it.kind() == ValueKind::kDelete) continue;
      std::string_view vb, pk;
      if (!SplitIndexKey(it.user_key(), &vb, &pk)) return Status::Corruption("bad index key");
      pks->emplace(pk);
    }
    TELSM_RETURN_NOT_OK(it.status());
  }
  for (ColumnFamilyId cf : info.upstream) {
    const auto& d = ctx.desc(cf);
    const size_t col = info.root_column - ColumnsBegin(d);
    NewestVersionIterator it(OwnIterator(ctx, cf, "", ""), ctx.snapshot);
    Value v;
    for (it.SeekToFirst(); it.Valid(); it.Next()) {
      if (it.kind() == ValueKind::kDelete) continue;
      TELSM_RETURN_NOT_OK(ExtractColumn(d.format, d.schema, it.value(), col, &v));
      if (match(v)) pks->emplace(it.user_key());
    }
    TELSM_RETURN_NOT_OK(it.status());
  }
  return Status::OK();
}

// ---------------------------------------------------------------- public reads

Status DB::ReadPointFull(const std::string& cf, std::string_view key, Row* row) {
  ReadContext ctx = rep_->NewReadContext();
  const ColumnFamilyDescriptor* d;
  TELSM_RETURN_NOT_OK(rep_->ResolveRoot(ctx, cf, &d));
  bool found = false;
  TELSM_RETURN_NOT_OK(rep_->ReadRow(ctx, d->id, key, 0, d->schema.size(), row, &found));
  return found ? Status::OK() : Status::NotFound();
}

Status DB::ReadPointColumn(const std::string& cf, std::string_view key, const std::string& column,
                           Value* value) {
  ReadContext ctx = rep_->NewReadContext();
  const ColumnFamilyDescriptor* d;
  TELSM_RETURN_NOT_OK(rep_->ResolveRoot(ctx, cf, &d));
  auto idx = d->schema.IndexOf(column);
  if (!idx) return Status::InvalidArgument("unknown column " + column);
  bool found = false;
  Row row;
  TELSM_RETURN_NOT_OK(rep_->ReadRow(ctx, d->id, key, *idx, *idx + 1, &row, &found));
  if (!found) return Status::NotFound();
  *value = std::move(row[0]);
  return Status::OK();
}

Status DB::ScanRangeFull(const std::string& cf, std::string_view k1, std::string_view k2,
                         const RowCallback& cb) {
  ReadContext ctx = rep_->NewReadContext();
  const ColumnFamilyDescriptor* d;
  TELSM_RETURN_NOT_OK(rep_->ResolveRoot(ctx, cf, &d));
  return rep_->ScanRows(ctx, d->id, k1, k2, 0, d->schema.size(), cb);
}

Status DB::ReadRangeFull(const std::string& cf, std::string_view k1, std::string_view k2,
                         std::vector<KeyRow>* rows) {
  rows->clear();
  return ScanRangeFull(cf, k1, k2, [&](std::string_view k, const Row& r) {
    rows->emplace_back(std::string(k), r);
    return true;
  });
}

Status DB::ScanRangeColumn(const std::string& cf, std::string_view k1, std::string_view k2,
                           const std::string& column, const ValueCallback& cb) {
  ReadContext ctx = rep_->NewReadContext();
  const ColumnFamilyDescriptor* d;
  TELSM_RETURN_NOT_OK(rep_->ResolveRoot(ctx, cf, &d));
  auto idx = d->schema.IndexOf(column);
  if (!idx) return Status::InvalidArgument("unknown column " + column);
  return rep_->ScanRows(ctx, d->id, k1, k2, *idx, *idx + 1,
                        [&](std::string_view k, const Row& r) { return cb(k, r[0]); });
}

Status DB::ReadRangeColumn(const std::string& cf, std::string_view k1, std::string_view k2,
                           const std::string& column, std::vector<KeyValue>* values) {
  values->clear();
  return ScanRangeColumn(cf, k1, k2, column, [&](std::string_view k, const Value& v) {
    values->emplace_back(std::string(k), v);
    return true;
  });
}

namespace {

Status FindIndex(const ReadContext& ctx, const ColumnFamilyDescriptor& d,
                 const std::string& column, const IndexInfo** info) {
  auto it = ctx.sv->catalog->indexes.find(d.id);
  if (it != ctx.sv->catalog->indexes.end()) {
    auto jt = it->second.find(column);
    if (jt != it->second.end()) {
      *info = &jt->second;
      return Status::OK();
    }
  }
  return Status::InvalidArgument("no index on " + d.name + "." + column +
                                 "; index reads need an augment transformer");
}

}  // namespace

bool DB::HasIndex(const std::string& cf, const std::string& column) const {
  ReadContext ctx = rep_->NewReadContext();
  const ColumnFamilyDescriptor* d;
  const IndexInfo* info;
  return rep_->ResolveRoot(ctx, cf, &d).ok() && FindIndex(ctx, *d, column, &info).ok();
}

Status DB::ReadIndexPoint(const std::string& cf, const std::string& column, const Value& value,
                          std::vector<KeyRow>* rows) {
  rows->clear();
  ReadContext ctx = rep_->NewReadContext();
  const ColumnFamilyDescriptor* d;
  TELSM_RETURN_NOT_OK(rep_->ResolveRoot(ctx, cf, &d));
  const IndexInfo* info;
  TELSM_RETURN_NOT_OK(FindIndex(ctx, *d, column, &info));
  if (!ValueMatchesType(value, d->schema.column(info->root_column).type)) {
    return Status::InvalidArgument("value type does not match column " + column);
  }
  std::string lo;
  TELSM_RETURN_NOT_OK(IndexValueBytes(value, &lo));
  std::string hi = lo;
  lo.push_back('\0');
  hi.push_back('\1');
  std::set<std::string> pks;
  TELSM_RETURN_NOT_OK(rep_->CollectIndexCandidates(
      ctx, *info, lo, hi, [&](const Value& v) { return v == value; }, &pks));
  Row row;
  for (const auto& pk : pks) {
    bool found = false;
    TELSM_RETURN_NOT_OK(rep_->ReadRow(ctx, d->id, pk, 0, d->schema.size(), &row, &found));
    if (found && row[info->root_column] == value) rows->emplace_back(pk, row);
  }
  return Status::OK();
}

Status DB::ReadIndexRange(const std::string& cf, const std::string& column, const Value& lo,
                          const Value& hi, std::vector<KeyValue>* matches) {
  matches->clear();
  ReadContext ctx = rep_->NewReadContext();
  const ColumnFamilyDescriptor* d;
  TELSM_RETURN_NOT_OK(rep_->ResolveRoot(ctx, cf, &d));
  const IndexInfo* info;
  TELSM_RETURN_NOT_OK(FindIndex(ctx, *d, column, &info));
  const ColumnType type = d->schema.column(info->root_column).type;
  if (!ValueMatchesType(lo, type) || !ValueMatchesType(hi, type)) {
    return Status::InvalidArgument("value type does not match column " + column);
  }
  if (!(lo < hi)) return Status::OK();
  std::string lo_b, hi_b;
  TELSM_RETURN_NOT_OK(IndexValueBytes(lo, &lo_b));
  TELSM_RETURN_NOT_OK(IndexValueBytes(hi, &hi_b));
  auto in_range = [&](const Value& v) { return !(v < lo) && v < hi; };
  std::set<std::string> pks;
  TELSM_RETURN_NOT_OK(rep_->CollectIndexCandidates(ctx, *info, lo_b, hi_b, in_range, &pks));
  const size_t c = info->root_column;
  Row row;
  for (const auto& pk : pks) {
    bool found = false;
    TELSM_RETURN_NOT_OK(rep_->ReadRow(ctx, d->id, pk, c, c + 1, &row, &found));
    if (found && in_range(row[0])) matches->emplace_back(pk, row[0]);
  }
  return Status::OK();
}

}  // namespace telsm
