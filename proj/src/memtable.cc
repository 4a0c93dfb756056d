#include "telsm/memtable.h"

#include <cstddef>
#include <cstring>

#include "telsm/coding.h"
#include "telsm/iterator.h"

namespace telsm {

char* Arena::NewBlock(size_t bytes) {
  blocks_.push_back(std::make_unique<char[]>(bytes));
  usage_.fetch_add(bytes + sizeof(char*), std::memory_order_relaxed);
  return blocks_.back().get();
}

char* Arena::Allocate(size_t bytes) {
  if (bytes <= remaining_) {
    char* r = ptr_;
    ptr_ += bytes;
    remaining_ -= bytes;
    return r;
  }
  if (bytes > kBlockSize / 4) return NewBlock(bytes);
  ptr_ = NewBlock(kBlockSize);
  remaining_ = kBlockSize;
  char* r = ptr_;
  ptr_ += bytes;
  remaining_ -= bytes;
  return r;
}

char* Arena::AllocateAligned(size_t bytes) {
  constexpr size_t align = alignof(std::max_align_t);
  size_t mod = reinterpret_cast<uintptr_t>(ptr_) & (align - 1);
  size_t slop = mod == 0 ? 0 : align - mod;
  if (bytes + slop <= remaining_) {
    char* r = ptr_ + slop;
    ptr_ += bytes + slop;
    remaining_ -= bytes + slop;
    return r;
  }
  char* r = Allocate(bytes + align);
  size_t m = reinterpret_cast<uintptr_t>(r) & (align - 1);
  return m == 0 ? r : r + (align - m);
}

// Entry encoding inside the arena:
//   u16 key_len | key | u64 seq | u8 kind | u32 val_len | value
struct MemTable::Node {
  const char* entry;
  std::atomic<Node*> next[1];

  Node* Next(int n) { return next[n].load(std::memory_order_acquire); }
  void SetNext(int n, Node* x) { next[n].store(x, std::memory_order_release); }
};

std::string_view MemTable::KeyOf(const char* entry) {
  return {entry + 2, DecodeFixed16(entry)};
}

SequenceNumber MemTable::SeqOf(const char* entry) {
  return DecodeFixed64(entry + 2 + DecodeFixed16(entry));
}

int MemTable::Compare(const char* a, std::string_view b_key, SequenceNumber b_seq) {
  return CompareInternal(KeyOf(a), SeqOf(a), b_key, b_seq);
}

MemTable::MemTable() {
  head_ = NewNode(nullptr, kMaxHeight);
  for (int i = 0; i < kMaxHeight; ++i) head_->SetNext(i, nullptr);
}

MemTable::~MemTable() = default;

MemTable::Node* MemTable::NewNode(const char* entry, int height) {
  char* mem = arena_.AllocateAligned(sizeof(Node) + sizeof(std::atomic<Node*>) * (height - 1));
  Node* n = new (mem) Node;
  n->entry = entry;
  for (int i = 1; i < height; ++i) new (&n->next[i]) std::atomic<Node*>(nullptr);
  return n;
}

int MemTable::RandomHeight() {
  int h = 1;
  while (h < kMaxHeight && (rnd_() % 4) == 0) ++h;
  return h;
}

MemTable::Node* MemTable::FindGreaterOrEqual(std::string_view key, SequenceNumber seq,
                                             Node** prev) const {
  Node* x = head_;
  int level = max_height_.load(std::memory_order_relaxed) - 1;
  for (;;) {
    Node* next = x->Next(level);
    if (next != nullptr && Compare(next->entry, key, seq) < 0) {
      x = next;
    } else {
      if (prev) prev[level] = x;
      if (level == 0) return next;
      --level;
    }
  }
}

void MemTable::Add(std::string_view user_key, SequenceNumber seq, ValueKind kind,
                   std::string_view value) {
  size_t len = 2 + user_key.size() + 8 + 1 + 4 + value.size();
  char* buf = arena_.Allocate(len);
  char* p = buf;
  std::string tmp;
  tmp.reserve(len);
  PutFixed16(&tmp, static_cast<uint16_t>(user_key.size()));
  tmp.append(user_key);
  PutFixed64(&tmp, seq);
  tmp.push_back(static_cast<char>(kind));
  PutFixed32(&tmp, static_cast<uint32_t>(value.size()));
  tmp.append(value);
  std::memcpy(p, tmp.data(), len);

  Node* prev[kMaxHeight];
  FindGreaterOrEqual(user_key, seq, prev);
  int height = RandomHeight();
  int cur = max_height_.load(std::memory_order_relaxed);
  if (height > cur) {
    for (int i = cur; i < height; ++i) prev[i] = head_;
    max_height_.store(height, std::memory_order_relaxed);
  }
  Node* x = NewNode(buf, height);
  for (int i = 0; i < height; ++i) {
    x->next[i].store(prev[i]->next[i].load(std::memory_order_relaxed), std::memory_order_relaxed);
    prev[i]->SetNext(i, x);
  }
  num_entries_.fetch_add(1, std::memory_order_release);
  if (seq > largest_seq_.load(std::memory_order_relaxed)) {
    largest_seq_.store(seq, std::memory_order_release);
  }
}

namespace {

struct DecodedEntry {
  std::string_view key;
  SequenceNumber seq;
  ValueKind kind;
  std::string_view value;
};

DecodedEntry DecodeEntry(const char* e) {
  DecodedEntry d;
  uint16_t klen = DecodeFixed16(e);
  d.key = {e + 2, klen};
  const char* p = e + 2 + klen;
  d.seq = DecodeFixed64(p);
  d.kind = static_cast<ValueKind>(p[8]);
  d.value = {p + 13, DecodeFixed32(p + 9)};
  return d;
}

}  // namespace

LookupResult MemTable::Get(std::string_view user_key, SequenceNumber snapshot) const {
  LookupResult r;
  Node* n = FindGreaterOrEqual(user_key, snapshot, nullptr);
  if (n == nullptr) return r;
  DecodedEntry d = DecodeEntry(n->entry);
  if (d.key != user_key) return r;
  r.seq = d.seq;
  if (d.kind == ValueKind::kDelete) {
    r.state = LookupState::kDeleted;
  } else {
    r.state = LookupState::kFound;
    r.value.assign(d.value);
  }
  return r;
}

class MemTable::Iter : public InternalIterator {
 public:
  explicit Iter(const MemTable* mem) : mem_(mem) {}

  bool Valid() const override { return node_ != nullptr; }
  void SeekToFirst() override {
    node_ = mem_->head_->Next(0);
    Decode();
  }
  void Seek(std::string_view user_key) override {
    node_ = mem_->FindGreaterOrEqual(user_key, kMaxSequenceNumber, nullptr);
    Decode();
  }
  void Next() override {
    node_ = node_->Next(0);
    Decode();
  }
  std::string_view user_key() const override { return cur_.key; }
  SequenceNumber seq() const override { return cur_.seq; }
  ValueKind kind() const override { return cur_.kind; }
  std::string_view value() const override { return cur_.value; }
  Status status() const override { return Status::OK(); }

 private:
  void Decode() {
    if (node_) cur_ = DecodeEntry(node_->entry);
  }

  const MemTable* mem_;
  Node* node_ = nullptr;
  DecodedEntry cur_{};
};

std::unique_ptr<InternalIterator> MemTable::NewIterator() const {
  return std::make_unique<Iter>(this);
}

}  // namespace telsm
