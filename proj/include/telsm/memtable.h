#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "telsm/internal_key.h"

namespace telsm {

class InternalIterator;

// Bump allocator; memory is released only when the arena is destroyed.
class Arena {
 public:
  Arena() = default;
  Arena(const Arena&) = delete;
  Arena& operator=(const Arena&) = delete;

  char* Allocate(size_t bytes);
  char* AllocateAligned(size_t bytes);
  size_t MemoryUsage() const { return usage_.load(std::memory_order_relaxed); }

 private:
  char* NewBlock(size_t bytes);

  static constexpr size_t kBlockSize = 64 << 10;
  char* ptr_ = nullptr;
  size_t remaining_ = 0;
  std::vector<std::unique_ptr<char[]>> blocks_;
  std::atomic<size_t> usage_{0};
};

enum class LookupState { kNotFound, kFound, kDeleted };

struct LookupResult {
  LookupState state = LookupState::kNotFound;
  SequenceNumber seq = 0;
  std::string value;
};

// Sorted in-memory write buffer. One writer at a time (callers serialize
// Add); any number of concurrent readers without locks.
class MemTable {
 public:
  MemTable();
  ~MemTable();
  MemTable(const MemTable&) = delete;
  MemTable& operator=(const MemTable&) = delete;

  void Add(std::string_view user_key, SequenceNumber seq, ValueKind kind,
           std::string_view value);

  // Newest entry for user_key with seq <= snapshot.
  LookupResult Get(std::string_view user_key, SequenceNumber snapshot) const;

  std::unique_ptr<InternalIterator> NewIterator() const;

  size_t ApproximateMemoryUsage() const { return arena_.MemoryUsage(); }
  uint64_t num_entries() const { return num_entries_.load(std::memory_order_acquire); }
  bool empty() const { return num_entries() == 0; }
  SequenceNumber largest_seq() const { return largest_seq_.load(std::memory_order_acquire); }

 private:
  struct Node;
  class Iter;
  friend class Iter;

  static constexpr int kMaxHeight = 12;

  static std::string_view KeyOf(const char* entry);
  static SequenceNumber SeqOf(const char* entry);
  static int Compare(const char* a, std::string_view b_key, SequenceNumber b_seq);

  Node* NewNode(const char* entry, int height);
  int RandomHeight();
  // First node >= (key, seq); fills prev when non-null.
  Node* FindGreaterOrEqual(std::string_view key, SequenceNumber seq, Node** prev) const;

  Arena arena_;
  Node* head_;
  std::atomic<int> max_height_{1};
  std::minstd_rand rnd_{0xdeadbeef};
  std::atomic<uint64_t> num_entries_{0};
  std::atomic<SequenceNumber> largest_seq_{0};
};

}  // namespace telsm
