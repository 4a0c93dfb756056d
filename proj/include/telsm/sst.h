#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "telsm/block_cache.h"
#include "telsm/bloom.h"
#include "telsm/env.h"
#include "telsm/internal_key.h"
#include "telsm/iterator.h"
#include "telsm/memtable.h"
#include "telsm/statistics.h"
#include "telsm/status.h"

namespace telsm {

inline constexpr uint32_t kSstMagic = 0x4D59434C;
inline constexpr uint32_t kSstFormatVersion = 1;
inline constexpr size_t kSstFooterSize = 24;

// File layout:
//   data blocks    entries of u8 kind | u16 key_len | key | u64 seq |
//                  u32 val_len | value; a block is closed before the first
//                  entry that would push it past block_size, and an entry
//                  larger than block_size gets a block of its own
//   index block    per data block: u32 first_key_len | first user key |
//                  u64 offset | u32 length
//   filter block   bloom filter over user keys
//   footer         u64 index offset | u64 filter offset | u32 version | u32 magic
class TableBuilder {
 public:
  TableBuilder(std::unique_ptr<WritableFile> file, uint32_t block_size, int bloom_bits_per_key);

  // Entries must arrive in strictly ascending internal-key order.
  Status Add(std::string_view user_key, SequenceNumber seq, ValueKind kind,
             std::string_view value);
  Status Finish(bool sync);
  void Abandon();

  uint64_t num_entries() const { return num_entries_; }
  uint64_t file_size() const { return offset_; }
  // Estimated size the file would have if finished now.
  uint64_t EstimatedSize() const { return offset_ + block_.size(); }
  const InternalKey& smallest() const { return smallest_; }
  const InternalKey& largest() const { return largest_; }

 private:
  Status FlushBlock();

  std::unique_ptr<WritableFile> file_;
  const uint32_t block_size_;
  BloomFilterBuilder bloom_;
  std::string block_;
  std::string block_first_key_;
  std::string index_;
  uint64_t offset_ = 0;
  uint64_t num_entries_ = 0;
  InternalKey smallest_;
  InternalKey largest_;
  std::string last_key_;
  SequenceNumber last_seq_ = 0;
  bool finished_ = false;
};

struct TableReadOptions {
  BlockCache* cache = nullptr;
  Statistics* stats = nullptr;
  // Incremented on every data-block access (cache hit or miss).
  std::atomic<uint64_t>* access_counter = nullptr;
  bool direct_reads = false;
};

class TableReader : public std::enable_shared_from_this<TableReader> {
 public:
  static Status Open(const std::string& path, uint64_t file_number,
                     const TableReadOptions& opts, std::shared_ptr<TableReader>* out);
  ~TableReader();

  // Newest version of user_key with seq <= snapshot.
  Status Get(std::string_view user_key, SequenceNumber snapshot, LookupResult* result) const;
  bool KeyMayMatch(std::string_view user_key) const;

  std::unique_ptr<InternalIterator> NewIterator() const;

  uint64_t file_number() const { return file_number_; }
  uint64_t file_size() const { return file_->size(); }
  size_t num_blocks() const { return blocks_.size(); }

  // Marks the file for deletion from the cache when the reader is released.
  void EvictFromCacheOnClose() { evict_on_close_ = true; }

 private:
  struct BlockHandle {
    std::string first_key;
    uint64_t offset;
    uint32_t length;
  };
  class Iter;

  TableReader() = default;

  Status ReadBlock(size_t index, std::shared_ptr<const std::string>* out) const;
  // Index of the first block that may contain user_key.
  size_t FindBlock(std::string_view user_key) const;

  std::unique_ptr<RandomAccessFile> file_;
  uint64_t file_number_ = 0;
  TableReadOptions opts_;
  std::vector<BlockHandle> blocks_;
  std::string filter_;
  std::atomic<bool> evict_on_close_{false};
};

// One decoded data-block entry.
struct BlockEntry {
  ValueKind kind;
  std::string_view key;
  SequenceNumber seq;
  std::string_view value;
};

// Parses the entry at *pos and advances it. Returns false on malformed input.
bool ParseBlockEntry(std::string_view block, size_t* pos, BlockEntry* e);

}  // namespace telsm
