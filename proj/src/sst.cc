#include "telsm/sst.h"

#include <algorithm>

#include "telsm/bloom.h"
#include "telsm/coding.h"

namespace telsm {

namespace {

size_t EncodedEntrySize(std::string_view key, std::string_view value) {
  return 1 + 2 + key.size() + 8 + 4 + value.size();
}

}  // namespace

bool ParseBlockEntry(std::string_view block, size_t* pos, BlockEntry* e) {
  Decoder d(block.substr(*pos));
  uint8_t kind;
  uint16_t klen;
  uint32_t vlen;
  if (!d.GetFixed8(&kind) || kind > 1 || !d.GetFixed16(&klen) || !d.GetBytes(klen, &e->key) ||
      !d.GetFixed64(&e->seq) || !d.GetFixed32(&vlen) || !d.GetBytes(vlen, &e->value)) {
    return false;
  }
  e->kind = static_cast<ValueKind>(kind);
  *pos = block.size() - d.remaining();
  return true;
}

TableBuilder::TableBuilder(std::unique_ptr<WritableFile> file, uint32_t block_size,
                           int bloom_bits_per_key)
    : file_(std::move(file)), block_size_(block_size), bloom_(bloom_bits_per_key) {}

Status TableBuilder::Add(std::string_view user_key, SequenceNumber seq, ValueKind kind,
                         std::string_view value) {
  if (num_entries_ > 0 && CompareInternal(last_key_, last_seq_, user_key, seq) >= 0) {
    return Status::InvalidArgument("table entries out of order");
  }
  if (user_key.size() > 0xffff) return Status::InvalidArgument("key too long");
  size_t esize = EncodedEntrySize(user_key, value);
  if (!block_.empty() && block_.size() + esize > block_size_) {
    TELSM_RETURN_NOT_OK(FlushBlock());
  }
  if (block_.empty()) block_first_key_.assign(user_key);
  block_.push_back(static_cast<char>(kind));
  PutFixed16(&block_, static_cast<uint16_t>(user_key.size()));
  block_.append(user_key);
  PutFixed64(&block_, seq);
  PutFixed32(&block_, static_cast<uint32_t>(value.size()));
  block_.append(value);

  if (num_entries_ == 0 || last_key_ != user_key) bloom_.AddKey(user_key);
  if (num_entries_ == 0) smallest_ = InternalKey{std::string(user_key), seq, kind};
  largest_ = InternalKey{std::string(user_key), seq, kind};
  last_key_.assign(user_key);
  last_seq_ = seq;
  ++num_entries_;
  return Status::OK();
}

Status TableBuilder::FlushBlock() {
  if (block_.empty()) return Status::OK();
  PutFixed32(&index_, static_cast<uint32_t>(block_first_key_.size()));
  index_.append(block_first_key_);
  PutFixed64(&index_, offset_);
  PutFixed32(&index_, static_cast<uint32_t>(block_.size()));
  TELSM_RETURN_NOT_OK(file_->Append(block_));
  offset_ += block_.size();
  block_.clear();
  return Status::OK();
}

Status TableBuilder::Finish(bool sync) {
  TELSM_RETURN_NOT_OK(FlushBlock());
  const uint64_t index_offset = offset_;
  TELSM_RETURN_NOT_OK(file_->Append(index_));
  offset_ += index_.size();

  const uint64_t filter_offset = offset_;
  const std::string filter = bloom_.Finish();
  TELSM_RETURN_NOT_OK(file_->Append(filter));
  offset_ += filter.size();

  std::string footer;
  PutFixed64(&footer, index_offset);
  PutFixed64(&footer, filter_offset);
  PutFixed32(&footer, kSstFormatVersion);
  PutFixed32(&footer, kSstMagic);
  TELSM_RETURN_NOT_OK(file_->Append(footer));
  offset_ += footer.size();
  TELSM_RETURN_NOT_OK(sync ? file_->Sync() : file_->Flush());
  finished_ = true;
  return file_->Close();
}

void TableBuilder::Abandon() {
  if (file_) file_->Close();
  finished_ = true;
}

Status TableReader::Open(const std::string& path, uint64_t file_number,
                         const TableReadOptions& opts, std::shared_ptr<TableReader>* out) {
  std::shared_ptr<TableReader> t(new TableReader());
  t->file_number_ = file_number;
  t->opts_ = opts;
  TELSM_RETURN_NOT_OK(RandomAccessFile::Open(path, opts.direct_reads, &t->file_));
  const uint64_t size = t->file_->size();
  if (size < kSstFooterSize) return Status::Corruption("sst too small: " + path);
  std::string footer;
  TELSM_RETURN_NOT_OK(t->file_->Read(size - kSstFooterSize, kSstFooterSize, &footer));
  const uint64_t index_offset = DecodeFixed64(footer.data());
  const uint64_t filter_offset = DecodeFixed64(footer.data() + 8);
  const uint32_t version = DecodeFixed32(footer.data() + 16);
  const uint32_t magic = DecodeFixed32(footer.data() + 20);
  if (magic != kSstMagic) return Status::Corruption("bad sst magic: " + path);
  if (version != kSstFormatVersion) return Status::Corruption("unsupported sst version: " + path);
  if (index_offset > filter_offset || filter_offset > size - kSstFooterSize) {
    return Status::Corruption("bad sst footer offsets: " + path);
  }
  std::string index;
  TELSM_RETURN_NOT_OK(t->file_->Read(index_offset, filter_offset - index_offset, &index));
  TELSM_RETURN_NOT_OK(
      t->file_->Read(filter_offset, size - kSstFooterSize - filter_offset, &t->filter_));
  Decoder d(index);
  while (!d.empty()) {
    uint32_t klen, blen;
    uint64_t off;
    std::string_view key;
    if (!d.GetFixed32(&klen) || !d.GetBytes(klen, &key) || !d.GetFixed64(&off) ||
        !d.GetFixed32(&blen) || off + blen > index_offset) {
      return Status::Corruption("bad sst index block: " + path);
    }
    t->blocks_.push_back(BlockHandle{std::string(key), off, blen});
  }
  *out = std::move(t);
  return Status::OK();
}

TableReader::~TableReader() {
  if (evict_on_close_ && opts_.cache) opts_.cache->EraseFile(file_number_);
}

bool TableReader::KeyMayMatch(std::string_view user_key) const {
  if (filter_.empty()) return true;
  if (opts_.stats) Bump(opts_.stats->bloom_checked);
  bool may = BloomMayContain(filter_, user_key);
  if (!may && opts_.stats) Bump(opts_.stats->bloom_useful);
  return may;
}

Status TableReader::ReadBlock(size_t index, std::shared_ptr<const std::string>* out) const {
  const BlockHandle& h = blocks_[index];
  if (opts_.access_counter) opts_.access_counter->fetch_add(1, std::memory_order_relaxed);
  if (opts_.cache) {
    *out = opts_.cache->Lookup(file_number_, h.offset);
    if (*out) {
      if (opts_.stats) Bump(opts_.stats->block_cache_hits);
      return Status::OK();
    }
  }
  auto block = std::make_shared<std::string>();
  TELSM_RETURN_NOT_OK(file_->Read(h.offset, h.length, block.get()));
  if (opts_.stats) Bump(opts_.stats->block_reads);
  if (opts_.cache) opts_.cache->Insert(file_number_, h.offset, block);
  *out = std::move(block);
  return Status::OK();
}

size_t TableReader::FindBlock(std::string_view user_key) const {
  // First block whose first key is >= user_key; versions of user_key may
  // begin in the block before it.
  auto it = std::lower_bound(blocks_.begin(), blocks_.end(), user_key,
                             [](const BlockHandle& h, std::string_view k) { return h.first_key < k; });
  size_t idx = static_cast<size_t>(it - blocks_.begin());
  return idx == 0 ? 0 : idx - 1;
}

Status TableReader::Get(std::string_view user_key, SequenceNumber snapshot,
                        LookupResult* result) const {
  result->state = LookupState::kNotFound;
  if (blocks_.empty() || !KeyMayMatch(user_key)) return Status::OK();
  for (size_t b = FindBlock(user_key); b < blocks_.size(); ++b) {
    if (blocks_[b].first_key > user_key) break;
    std::shared_ptr<const std::string> block;
    TELSM_RETURN_NOT_OK(ReadBlock(b, &block));
    size_t pos = 0;
    BlockEntry e;
    while (pos < block->size()) {
      if (!ParseBlockEntry(*block, &pos, &e)) return Status::Corruption("bad sst data block");
      int c = e.key.compare(user_key);
      if (c < 0) continue;
      if (c > 0) return Status::OK();
      if (e.seq > snapshot) continue;
      result->seq = e.seq;
      if (e.kind == ValueKind::kDelete) {
        result->state = LookupState::kDeleted;
      } else {
        result->state = LookupState::kFound;
        result->value.assign(e.value);
      }
      return Status::OK();
    }
  }
  return Status::OK();
}

class TableReader::Iter : public InternalIterator {
 public:
  explicit Iter(std::shared_ptr<const TableReader> t) : table_(std::move(t)) {}

  bool Valid() const override { return valid_; }

  void SeekToFirst() override {
    LoadBlock(0);
    SkipEmptyBlocks();
  }

  void Seek(std::string_view user_key) override {
    if (table_->blocks_.empty()) {
      valid_ = false;
      return;
    }
    LoadBlock(table_->FindBlock(user_key));
    SkipEmptyBlocks();
    while (valid_ && cur_.key < user_key) Next();
  }

  void Next() override {
    if (pos_ < block_->size()) {
      ParseCurrent();
      return;
    }
    LoadBlock(block_index_ + 1);
    SkipEmptyBlocks();
  }

  std::string_view user_key() const override { return cur_.key; }
  SequenceNumber seq() const override { return cur_.seq; }
  ValueKind kind() const override { return cur_.kind; }
  std::string_view value() const override { return cur_.value; }
  Status status() const override { return status_; }

 private:
  void LoadBlock(size_t idx) {
    valid_ = false;
    block_index_ = idx;
    pos_ = 0;
    block_.reset();
    if (idx >= table_->blocks_.size()) return;
    Status s = table_->ReadBlock(idx, &block_);
    if (!s.ok()) {
      status_ = s;
      block_.reset();
      return;
    }
    if (!block_->empty()) ParseCurrent();
  }

  void SkipEmptyBlocks() {
    while (!valid_ && status_.ok() && block_ && block_index_ + 1 < table_->blocks_.size() &&
           block_->empty()) {
      LoadBlock(block_index_ + 1);
    }
  }

  void ParseCurrent() {
    if (!ParseBlockEntry(*block_, &pos_, &cur_)) {
      status_ = Status::Corruption("bad sst data block");
      valid_ = false;
      return;
    }
    valid_ = true;
  }

  std::shared_ptr<const TableReader> table_;
  std::shared_ptr<const std::string> block_;
  size_t block_index_ = 0;
  size_t pos_ = 0;
  BlockEntry cur_{};
  bool valid_ = false;
  Status status_;
};

std::unique_ptr<InternalIterator> TableReader::NewIterator() const {
  return std::make_unique<Iter>(shared_from_this());
}

}  // namespace telsm
