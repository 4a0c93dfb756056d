#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

namespace telsm {

// LRU cache of decoded-at-read-time SST data blocks keyed by
// (file number, block offset).
class BlockCache {
 public:
  explicit BlockCache(uint64_t capacity_bytes) : capacity_(capacity_bytes) {}

  std::shared_ptr<const std::string> Lookup(uint64_t file_number, uint64_t offset);
  void Insert(uint64_t file_number, uint64_t offset, std::shared_ptr<const std::string> block);
  void EraseFile(uint64_t file_number);

  uint64_t usage() const;
  uint64_t capacity() const { return capacity_; }

 private:
  struct Key {
    uint64_t file;
    uint64_t offset;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    size_t operator()(const Key& k) const {
      return std::hash<uint64_t>()(k.file * 0x9e3779b97f4a7c15ULL ^ k.offset);
    }
  };
  struct Item {
    Key key;
    std::shared_ptr<const std::string> block;
  };

  void EvictLocked();

  const uint64_t capacity_;
  mutable std::mutex mu_;
  uint64_t usage_ = 0;
  std::list<Item> lru_;  // front = most recent
  std::unordered_map<Key, std::list<Item>::iterator, KeyHash> map_;
};

}  // namespace telsm
