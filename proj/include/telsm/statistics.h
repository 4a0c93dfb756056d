#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <string>

namespace telsm {

// Engine-wide counters. All updates are relaxed atomics.
struct Statistics {
  std::atomic<uint64_t> bytes_ingested{0};          // user key + value bytes written
  std::atomic<uint64_t> bytes_written_flush{0};
  std::atomic<uint64_t> bytes_read_compaction{0};
  std::atomic<uint64_t> bytes_written_compaction{0};
  std::atomic<uint64_t> flush_jobs{0};
  std::atomic<uint64_t> tier_jobs{0};               // TierToDestinations
  std::atomic<uint64_t> level_jobs{0};              // LevelWithin
  std::atomic<uint64_t> write_stall_micros{0};
  std::atomic<uint64_t> block_reads{0};             // data blocks fetched from files
  std::atomic<uint64_t> block_cache_hits{0};
  std::atomic<uint64_t> bloom_useful{0};            // lookups skipped by the filter
  std::atomic<uint64_t> bloom_checked{0};

  void Reset();
  // Name -> value, in a stable order. Also used by the CLI `stats` dump.
  std::map<std::string, uint64_t> Snapshot() const;
};

inline void Bump(std::atomic<uint64_t>& c, uint64_t n = 1) {
  c.fetch_add(n, std::memory_order_relaxed);
}

}  // namespace telsm
