#include "telsm/block_cache.h"

namespace telsm {

std::shared_ptr<const std::string> BlockCache::Lookup(uint64_t file_number, uint64_t offset) {
  std::lock_guard<std::mutex> l(mu_);
  auto it = map_.find(Key{file_number, offset});
  if (it == map_.end()) return nullptr;
  lru_.splice(lru_.begin(), lru_, it->second);
  return it->second->block;
}

void BlockCache::Insert(uint64_t file_number, uint64_t offset,
                        std::shared_ptr<const std::string> block) {
  if (capacity_ == 0 || block->size() > capacity_) return;
  std::lock_guard<std::mutex> l(mu_);
  Key key{file_number, offset};
  auto it = map_.find(key);
  if (it != map_.end()) {
    usage_ -= it->second->block->size();
    lru_.erase(it->second);
    map_.erase(it);
  }
  usage_ += block->size();
  lru_.push_front(Item{key, std::move(block)});
  map_[key] = lru_.begin();
  EvictLocked();
}

void BlockCache::EraseFile(uint64_t file_number) {
  std::lock_guard<std::mutex> l(mu_);
  for (auto it = lru_.begin(); it != lru_.end();) {
    if (it->key.file == file_number) {
      usage_ -= it->block->size();
      map_.erase(it->key);
      it = lru_.erase(it);
    } else {
      ++it;
    }
  }
}

uint64_t BlockCache::usage() const {
  std::lock_guard<std::mutex> l(mu_);
  return usage_;
}

void BlockCache::EvictLocked() {
  while (usage_ > capacity_ && !lru_.empty()) {
    usage_ -= lru_.back().block->size();
    map_.erase(lru_.back().key);
    lru_.pop_back();
  }
}

}  // namespace telsm
