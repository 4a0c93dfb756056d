#include "telsm/version.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include "telsm/coding.h"

namespace telsm {

// ---------------------------------------------------------------- Version

const CfState* Version::cf(ColumnFamilyId id) const {
  auto it = cfs.find(id);
  return it == cfs.end() ? nullptr : &it->second;
}

const ColumnFamilyDescriptor* Version::FindByName(std::string_view name) const {
  for (const auto& [id, st] : cfs) {
    if (st.desc->name == name) return st.desc.get();
  }
  return nullptr;
}

uint64_t Version::LevelBytes(ColumnFamilyId id, int level) const {
  const CfState* st = cf(id);
  if (!st || level >= static_cast<int>(st->levels.size())) return 0;
  uint64_t total = 0;
  for (const auto& f : st->levels[level]) total += f->file_bytes;
  return total;
}

size_t Version::NumFiles(ColumnFamilyId id, int level) const {
  const CfState* st = cf(id);
  if (!st || level >= static_cast<int>(st->levels.size())) return 0;
  return st->levels[level].size();
}

uint64_t Version::TotalFileBytes() const {
  uint64_t total = 0;
  for (const auto& [id, st] : cfs) {
    for (const auto& level : st.levels) {
      for (const auto& f : level) total += f->file_bytes;
    }
  }
  return total;
}

uint64_t Version::CfBytes(ColumnFamilyId id) const {
  uint64_t total = 0;
  if (const CfState* st = cf(id)) {
    for (const auto& level : st->levels) {
      for (const auto& f : level) total += f->file_bytes;
    }
  }
  return total;
}

size_t Version::CfFiles(ColumnFamilyId id) const {
  size_t n = 0;
  if (const CfState* st = cf(id)) {
    for (const auto& level : st->levels) n += level.size();
  }
  return n;
}

Status Version::CheckShape() const {
  for (const auto& [id, st] : cfs) {
    for (size_t l = 1; l < st.levels.size(); ++l) {
      const auto& files = st.levels[l];
      if (st.desc->has_transformer() && !files.empty()) {
        return Status::Corruption("transformer cf " + st.desc->name + " has files in L" +
                                  std::to_string(l));
      }
      for (size_t i = 1; i < files.size(); ++i) {
        if (files[i - 1]->largest.user_key >= files[i]->smallest.user_key) {
          return Status::Corruption("overlapping files in " + st.desc->name + " L" +
                                    std::to_string(l));
        }
      }
    }
  }
  return Status::OK();
}

std::string Version::DebugString() const {
  std::ostringstream os;
  os << "last_sequence " << last_sequence << "\n";
  for (const auto& [id, st] : cfs) {
    os << "cf " << id << " " << st.desc->name << (st.desc->has_transformer() ? " [" : "")
       << (st.desc->has_transformer() ? st.desc->transformer->ToString() + "]" : "") << "\n";
    for (size_t l = 0; l < st.levels.size(); ++l) {
      if (st.levels[l].empty()) continue;
      uint64_t bytes = 0;
      for (const auto& f : st.levels[l]) bytes += f->file_bytes;
      os << "  L" << l << ": " << st.levels[l].size() << " files, " << bytes << " bytes\n";
    }
  }
  return os.str();
}

// ---------------------------------------------------------------- VersionEdit

VersionEdit VersionEdit::CreateCf(ColumnFamilyDescriptor desc) {
  VersionEdit e;
  e.type = Type::kCreateCf;
  e.cf = std::move(desc);
  return e;
}

VersionEdit VersionEdit::SetLink(ColumnFamilyId id, std::optional<TransformerSpec> transformer,
                                 std::vector<ColumnFamilyId> destinations) {
  VersionEdit e;
  e.type = Type::kSetLink;
  e.cf.id = id;
  e.cf.transformer = std::move(transformer);
  e.cf.destinations = std::move(destinations);
  return e;
}

VersionEdit VersionEdit::AddFile(std::shared_ptr<FileMeta> file) {
  VersionEdit e;
  e.type = Type::kAddFile;
  e.file = std::move(file);
  return e;
}

VersionEdit VersionEdit::DeleteFile(ColumnFamilyId cf, int level, uint64_t number) {
  VersionEdit e;
  e.type = Type::kDeleteFile;
  e.cf_id = cf;
  e.level = level;
  e.file_number = number;
  return e;
}

VersionEdit VersionEdit::SetSeq(SequenceNumber seq) {
  VersionEdit e;
  e.type = Type::kSetSeq;
  e.seq = seq;
  return e;
}

namespace {

std::string HexOrDash(std::string_view s) { return s.empty() ? "-" : HexEncode(s); }

bool UnHexOrDash(std::string_view tok, std::string* out) {
  if (tok == "-") {
    out->clear();
    return true;
  }
  auto v = HexDecode(tok);
  if (!v) return false;
  *out = std::move(*v);
  return true;
}

std::string EncodeIds(const std::vector<ColumnFamilyId>& ids) {
  if (ids.empty()) return "-";
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(ids[i]);
  }
  return out;
}

template <typename T>
bool ParseNum(std::string_view tok, T* out) {
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), *out);
  return !tok.empty() && ec == std::errc() && p == tok.data() + tok.size();
}

bool ParseIds(std::string_view tok, std::vector<ColumnFamilyId>* out) {
  out->clear();
  if (tok == "-") return true;
  size_t start = 0;
  while (start <= tok.size()) {
    size_t comma = tok.find(',', start);
    if (comma == std::string_view::npos) comma = tok.size();
    ColumnFamilyId id;
    if (!ParseNum(tok.substr(start, comma - start), &id)) return false;
    out->push_back(id);
    start = comma + 1;
  }
  return true;
}

std::string EncodeTransformer(const std::optional<TransformerSpec>& t) {
  return t ? HexEncode(t->ToString()) : "-";
}

bool ParseTransformer(std::string_view tok, std::optional<TransformerSpec>* out) {
  if (tok == "-") {
    out->reset();
    return true;
  }
  std::string text;
  if (!UnHexOrDash(tok, &text)) return false;
  TransformerSpec spec;
  if (!TransformerSpec::Parse(text, &spec).ok()) return false;
  *out = std::move(spec);
  return true;
}

void AppendKey(std::ostringstream& os, const InternalKey& k) {
  os << ' ' << HexOrDash(k.user_key) << ' ' << k.seq << ' ' << static_cast<int>(k.kind);
}

bool ParseKey(const std::vector<std::string_view>& t, size_t i, InternalKey* k) {
  int kind;
  if (!UnHexOrDash(t[i], &k->user_key) || !ParseNum(t[i + 1], &k->seq) ||
      !ParseNum(t[i + 2], &kind) || kind < 0 || kind > 1) {
    return false;
  }
  k->kind = static_cast<ValueKind>(kind);
  return true;
}

void EncodeEdit(const VersionEdit& e, std::ostringstream& os) {
  switch (e.type) {
    case VersionEdit::Type::kCreateCf: {
      const auto& d = e.cf;
      os << "CREATE_CF " << d.id << ' ' << HexEncode(d.name) << ' '
         << (d.user_facing() ? 'U' : 'I') << ' ' << RecordFormatName(d.format) << ' '
         << HexEncode(d.schema.ToString()) << ' ' << d.root_id << ' '
         << (d.parent_id == kNoColumnFamily ? std::string("-") : std::to_string(d.parent_id))
         << ' ' << d.column_offset << ' ' << (d.role == CfRole::kRow ? 'R' : 'X') << ' '
         << HexOrDash(d.index_column) << ' ' << EncodeTransformer(d.transformer) << ' '
         << EncodeIds(d.destinations);
      break;
    }
    case VersionEdit::Type::kSetLink:
      os << "SET_LINK " << e.cf.id << ' ' << EncodeTransformer(e.cf.transformer) << ' '
         << EncodeIds(e.cf.destinations);
      break;
    case VersionEdit::Type::kAddFile: {
      const auto& f = *e.file;
      os << "ADD_FILE " << f.cf_id << ' ' << f.level << ' ' << f.file_number << ' '
         << f.file_bytes << ' ' << f.entry_count;
      AppendKey(os, f.smallest);
      AppendKey(os, f.largest);
      break;
    }
    case VersionEdit::Type::kDeleteFile:
      os << "DELETE_FILE " << e.cf_id << ' ' << e.level << ' ' << e.file_number;
      break;
    case VersionEdit::Type::kSetSeq:
      os << "SET_SEQ " << e.seq;
      break;
  }
}

Status DecodeEdit(const std::vector<std::string_view>& t, VersionEdit* e) {
  auto bad = [&]() { return Status::Corruption("bad manifest edit: " + std::string(t[0])); };
  if (t[0] == "CREATE_CF") {
    if (t.size() != 13) return bad();
    ColumnFamilyDescriptor d;
    std::string name, schema_text;
    if (!ParseNum(t[1], &d.id) || !UnHexOrDash(t[2], &name) || name.empty()) return bad();
    d.name = name;
    if (t[3] != "U" && t[3] != "I") return bad();
    d.kind = t[3] == "U" ? CfKind::kUserFacing : CfKind::kInternal;
    auto fmt = ParseRecordFormat(t[4]);
    if (!fmt) return bad();
    d.format = *fmt;
    if (!UnHexOrDash(t[5], &schema_text) || !Schema::Parse(schema_text, &d.schema).ok()) {
      return bad();
    }
    if (!ParseNum(t[6], &d.root_id)) return bad();
    if (t[7] == "-") {
      d.parent_id = kNoColumnFamily;
    } else if (!ParseNum(t[7], &d.parent_id)) {
      return bad();
    }
    if (!ParseNum(t[8], &d.column_offset)) return bad();
    if (t[9] != "R" && t[9] != "X") return bad();
    d.role = t[9] == "R" ? CfRole::kRow : CfRole::kIndex;
    if (!UnHexOrDash(t[10], &d.index_column)) return bad();
    if (!ParseTransformer(t[11], &d.transformer) || !ParseIds(t[12], &d.destinations)) {
      return bad();
    }
    *e = VersionEdit::CreateCf(std::move(d));
  } else if (t[0] == "SET_LINK") {
    if (t.size() != 4) return bad();
    ColumnFamilyId id;
    std::optional<TransformerSpec> tr;
    std::vector<ColumnFamilyId> dests;
    if (!ParseNum(t[1], &id) || !ParseTransformer(t[2], &tr) || !ParseIds(t[3], &dests)) {
      return bad();
    }
    *e = VersionEdit::SetLink(id, std::move(tr), std::move(dests));
  } else if (t[0] == "ADD_FILE") {
    if (t.size() != 12) return bad();
    auto f = std::make_shared<FileMeta>();
    if (!ParseNum(t[1], &f->cf_id) || !ParseNum(t[2], &f->level) ||
        !ParseNum(t[3], &f->file_number) || !ParseNum(t[4], &f->file_bytes) ||
        !ParseNum(t[5], &f->entry_count) || !ParseKey(t, 6, &f->smallest) ||
        !ParseKey(t, 9, &f->largest)) {
      return bad();
    }
    *e = VersionEdit::AddFile(std::move(f));
  } else if (t[0] == "DELETE_FILE") {
    if (t.size() != 4) return bad();
    ColumnFamilyId cf;
    int level;
    uint64_t number;
    if (!ParseNum(t[1], &cf) || !ParseNum(t[2], &level) || !ParseNum(t[3], &number)) {
      return bad();
    }
    *e = VersionEdit::DeleteFile(cf, level, number);
  } else if (t[0] == "SET_SEQ") {
    if (t.size() != 2) return bad();
    SequenceNumber seq;
    if (!ParseNum(t[1], &seq)) return bad();
    *e = VersionEdit::SetSeq(seq);
  } else {
    return bad();
  }
  return Status::OK();
}

}  // namespace

std::string EncodeEditGroup(const EditGroup& edits) {
  std::ostringstream os;
  for (size_t i = 0; i < edits.size(); ++i) {
    if (i) os << " | ";
    EncodeEdit(edits[i], os);
  }
  return os.str();
}

Status DecodeEditGroup(std::string_view line, EditGroup* edits) {
  edits->clear();
  std::vector<std::string_view> tokens;
  auto flush = [&]() -> Status {
    if (tokens.empty()) return Status::Corruption("empty manifest edit");
    VersionEdit e;
    TELSM_RETURN_NOT_OK(DecodeEdit(tokens, &e));
    edits->push_back(std::move(e));
    tokens.clear();
    return Status::OK();
  };
  size_t pos = 0;
  while (pos < line.size()) {
    size_t sp = line.find(' ', pos);
    if (sp == std::string_view::npos) sp = line.size();
    std::string_view tok = line.substr(pos, sp - pos);
    pos = sp + 1;
    if (tok.empty()) continue;
    if (tok == "|") {
      TELSM_RETURN_NOT_OK(flush());
    } else {
      tokens.push_back(tok);
    }
  }
  return flush();
}

Status ApplyEdits(const Version& base, const EditGroup& edits, int max_levels, Version* out) {
  Version v = base;
  for (const auto& e : edits) {
    switch (e.type) {
      case VersionEdit::Type::kCreateCf: {
        if (v.cfs.count(e.cf.id) || v.FindByName(e.cf.name)) {
          return Status::Corruption("duplicate column family " + e.cf.name);
        }
        CfState st;
        st.desc = std::make_shared<const ColumnFamilyDescriptor>(e.cf);
        st.levels.resize(max_levels);
        v.cfs.emplace(e.cf.id, std::move(st));
        break;
      }
      case VersionEdit::Type::kSetLink: {
        auto it = v.cfs.find(e.cf.id);
        if (it == v.cfs.end()) return Status::Corruption("SET_LINK on unknown cf");
        auto d = std::make_shared<ColumnFamilyDescriptor>(*it->second.desc);
        d->transformer = e.cf.transformer;
        d->destinations = e.cf.destinations;
        it->second.desc = std::move(d);
        break;
      }
      case VersionEdit::Type::kAddFile: {
        const auto& f = e.file;
        auto it = v.cfs.find(f->cf_id);
        if (it == v.cfs.end()) return Status::Corruption("ADD_FILE on unknown cf");
        if (f->level < 0 || f->level >= max_levels) {
          return Status::Corruption("ADD_FILE level out of range");
        }
        auto& files = it->second.levels[f->level];
        for (const auto& x : files) {
          if (x->file_number == f->file_number) return Status::Corruption("duplicate file");
        }
        files.push_back(f);
        break;
      }
      case VersionEdit::Type::kDeleteFile: {
        auto it = v.cfs.find(e.cf_id);
        if (it == v.cfs.end() || e.level < 0 || e.level >= max_levels) {
          return Status::Corruption("DELETE_FILE on unknown cf/level");
        }
        auto& files = it->second.levels[e.level];
        auto pos = std::find_if(files.begin(), files.end(),
                                [&](const FileMetaPtr& f) { return f->file_number == e.file_number; });
        if (pos == files.end()) {
          return Status::Corruption("DELETE_FILE of unknown file " + std::to_string(e.file_number));
        }
        files.erase(pos);
        break;
      }
      case VersionEdit::Type::kSetSeq:
        v.last_sequence = std::max(v.last_sequence, e.seq);
        break;
    }
  }
  for (auto& [id, st] : v.cfs) {
    auto& l0 = st.levels[0];
    std::sort(l0.begin(), l0.end(), [](const FileMetaPtr& a, const FileMetaPtr& b) {
      return a->file_number > b->file_number;
    });
    for (size_t l = 1; l < st.levels.size(); ++l) {
      auto& files = st.levels[l];
      std::sort(files.begin(), files.end(), [](const FileMetaPtr& a, const FileMetaPtr& b) {
        return a->smallest < b->smallest;
      });
    }
  }
  *out = std::move(v);
  return Status::OK();
}

// ---------------------------------------------------------------- VersionSet

VersionSet::VersionSet(std::string dir, int max_levels, bool sync, TableReadOptions table_opts)
    : dir_(std::move(dir)), max_levels_(max_levels), sync_(sync), table_opts_(table_opts) {
  current_ = std::make_shared<const Version>();
  access_counters_.reset(new std::atomic<uint64_t>[kNoColumnFamily + 1]);
  ResetBlockAccesses();
}

VersionSet::~VersionSet() {
  if (manifest_) manifest_->Close();
}

std::string VersionSet::SstPath(uint64_t number) const {
  return dir_ + "/sst-" + std::to_string(number) + ".sst";
}

std::string VersionSet::WalPath(uint64_t number) const {
  return dir_ + "/wal-" + std::to_string(number) + ".log";
}

uint64_t VersionSet::NewFileNumber() { return next_file_number_.fetch_add(1); }

void VersionSet::MarkFileNumberUsed(uint64_t n) {
  uint64_t cur = next_file_number_.load();
  while (cur <= n && !next_file_number_.compare_exchange_weak(cur, n + 1)) {
  }
}

Status VersionSet::OpenTable(uint64_t number, ColumnFamilyId cf,
                             std::shared_ptr<TableReader>* out) const {
  TableReadOptions opts = table_opts_;
  opts.access_counter = &access_counters_[cf];
  return TableReader::Open(SstPath(number), number, opts, out);
}

void VersionSet::ResetBlockAccesses() {
  for (size_t i = 0; i <= kNoColumnFamily; ++i) access_counters_[i].store(0);
}

std::shared_ptr<const Version> VersionSet::current() const {
  std::lock_guard<std::mutex> l(current_mu_);
  return current_;
}

Status VersionSet::Recover() {
  Version v;
  std::string path = ManifestPath();
  if (FileExists(path)) {
    std::string data;
    TELSM_RETURN_NOT_OK(ReadFileToString(path, &data));
    size_t pos = 0;
    size_t line_no = 0;
    while (pos < data.size()) {
      size_t nl = data.find('\n', pos);
      // A final line without its newline was never committed.
      if (nl == std::string::npos) break;
      ++line_no;
      std::string_view line(data.data() + pos, nl - pos);
      pos = nl + 1;
      if (line.empty()) continue;
      EditGroup edits;
      Status s = DecodeEditGroup(line, &edits);
      if (s.ok()) s = ApplyEdits(v, edits, max_levels_, &v);
      if (!s.ok()) {
        return Status::Corruption("MANIFEST line " + std::to_string(line_no) + ": " + s.message());
      }
      for (const auto& e : edits) {
        if (e.type == VersionEdit::Type::kAddFile) MarkFileNumberUsed(e.file->file_number);
      }
    }
  }

  // Attach readers to every live file.
  for (auto& [id, st] : v.cfs) {
    for (auto& level : st.levels) {
      for (auto& f : level) {
        auto meta = std::make_shared<FileMeta>(*f);
        TELSM_RETURN_NOT_OK(OpenTable(meta->file_number, meta->cf_id, &meta->table));
        f = meta;
      }
    }
  }

  std::vector<std::string> names;
  TELSM_RETURN_NOT_OK(ListDir(dir_, &names));
  std::set<uint64_t> live;
  for (const auto& [id, st] : v.cfs) {
    for (const auto& level : st.levels) {
      for (const auto& f : level) live.insert(f->file_number);
    }
  }
  for (const auto& name : names) {
    uint64_t n = 0;
    if (name.size() > 8 && name.rfind("sst-", 0) == 0 && name.substr(name.size() - 4) == ".sst") {
      if (ParseNum(std::string_view(name).substr(4, name.size() - 8), &n)) {
        MarkFileNumberUsed(n);
        if (!live.count(n)) RemoveFile(dir_ + "/" + name);
      }
    } else if (name.rfind("wal-", 0) == 0 && name.size() > 8 &&
               name.substr(name.size() - 4) == ".log") {
      if (ParseNum(std::string_view(name).substr(4, name.size() - 8), &n)) MarkFileNumberUsed(n);
    } else if (name.size() > 4 && name.substr(name.size() - 4) == ".tmp") {
      RemoveFile(dir_ + "/" + name);
    }
  }

  TELSM_RETURN_NOT_OK(WriteSnapshot(v));
  std::lock_guard<std::mutex> l(current_mu_);
  current_ = std::make_shared<const Version>(std::move(v));
  return Status::OK();
}

Status VersionSet::WriteSnapshot(const Version& v) {
  std::string text;
  for (const auto& [id, st] : v.cfs) {
    text += EncodeEditGroup({VersionEdit::CreateCf(*st.desc)}) + "\n";
  }
  for (const auto& [id, st] : v.cfs) {
    for (const auto& level : st.levels) {
      for (const auto& f : level) {
        text += EncodeEditGroup({VersionEdit::AddFile(std::make_shared<FileMeta>(*f))}) + "\n";
      }
    }
  }
  text += EncodeEditGroup({VersionEdit::SetSeq(v.last_sequence)}) + "\n";
  std::string tmp = ManifestPath() + ".tmp";
  TELSM_RETURN_NOT_OK(WriteStringToFile(tmp, text, true));
  if (::rename(tmp.c_str(), ManifestPath().c_str()) != 0) {
    return Status::IOError("rename MANIFEST");
  }
  TELSM_RETURN_NOT_OK(SyncDir(dir_));
  std::lock_guard<std::mutex> l(manifest_mu_);
  if (manifest_) manifest_->Close();
  return WritableFile::Open(ManifestPath(), false, &manifest_);
}

Status VersionSet::LogAndApply(const EditGroup& edits) {
  std::lock_guard<std::mutex> l(manifest_mu_);
  auto base = current();
  Version next;
  TELSM_RETURN_NOT_OK(ApplyEdits(*base, edits, max_levels_, &next));

  std::string line = EncodeEditGroup(edits);
  line.push_back('\n');
  TELSM_KILL_POINT("manifest.before_write");
  TELSM_RETURN_NOT_OK(manifest_->Append(line));
  TELSM_RETURN_NOT_OK(sync_ ? manifest_->Sync() : manifest_->Flush());
  TELSM_KILL_POINT("manifest.after_write");

  {
    std::lock_guard<std::mutex> cl(current_mu_);
    current_ = std::make_shared<const Version>(std::move(next));
  }
  for (const auto& e : edits) {
    if (e.type != VersionEdit::Type::kDeleteFile) continue;
    if (const CfState* st = base->cf(e.cf_id)) {
      for (const auto& f : st->levels[e.level]) {
        if (f->file_number == e.file_number && f->table) f->table->EvictFromCacheOnClose();
      }
    }
    RemoveFile(SstPath(e.file_number));
  }
  return Status::OK();
}

}  // namespace telsm
