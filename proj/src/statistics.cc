#include "telsm/statistics.h"

namespace telsm {

void Statistics::Reset() {
  for (auto* c : {&bytes_ingested, &bytes_written_flush, &bytes_read_compaction,
                  &bytes_written_compaction, &flush_jobs, &tier_jobs, &level_jobs,
                  &write_stall_micros, &block_reads, &block_cache_hits, &bloom_useful,
                  &bloom_checked}) {
    c->store(0, std::memory_order_relaxed);
  }
}

std::map<std::string, uint64_t> Statistics::Snapshot() const {
  auto v = [](const std::atomic<uint64_t>& c) { return c.load(std::memory_order_relaxed); };
  return {
      {"bytes_ingested", v(bytes_ingested)},
      {"bytes_written_flush", v(bytes_written_flush)},
      {"bytes_read_compaction", v(bytes_read_compaction)},
      {"bytes_written_compaction", v(bytes_written_compaction)},
      {"jobs_flush", v(flush_jobs)},
      {"jobs_tier_to_destinations", v(tier_jobs)},
      {"jobs_level_within", v(level_jobs)},
      {"write_stall_micros", v(write_stall_micros)},
      {"block_reads", v(block_reads)},
      {"block_cache_hits", v(block_cache_hits)},
      {"bloom_checked", v(bloom_checked)},
      {"bloom_useful", v(bloom_useful)},
  };
}

}  // namespace telsm
