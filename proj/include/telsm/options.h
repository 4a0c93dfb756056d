#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "telsm/status.h"

namespace telsm {

// Engine tuning. Key names in config files mirror the RocksDB option names
// the evaluation setup used; see ParseConfigText.
struct EngineConfig {
  std::string data_dir = "telsm-data";

  uint64_t write_buffer_size = 32ull << 20;     // B
  int max_write_buffer_number = 4;
  int size_factor = 4;                           // T
  int level0_file_num_compaction_trigger = 4;    // Z
  int level0_slowdown_writes_trigger = 30;
  int level0_stop_writes_trigger = 64;
  int max_levels = 7;
  uint64_t max_bytes_for_level_base = 0;         // 0 => B * T
  uint64_t target_file_size_base = 0;            // 0 => B
  uint32_t block_size = 4096;                    // blksz
  int bloom_bits_per_key = 10;
  uint64_t block_cache_bytes = 8ull << 20;
  int background_compaction_workers = 2;
  int max_subcompactions = 1;                    // accepted, always treated as 1
  bool sync_files = true;                        // fsync SSTs and MANIFEST
  bool sync_wal = false;                         // fdatasync per write batch
  bool use_direct_reads = false;
  bool create_if_missing = true;

  uint64_t LevelBase() const {
    return max_bytes_for_level_base ? max_bytes_for_level_base
                                    : write_buffer_size * static_cast<uint64_t>(size_factor);
  }
  uint64_t TargetFileSize() const {
    return target_file_size_base ? target_file_size_base : write_buffer_size;
  }

  Status Validate() const;

  // Applies recognised keys and erases them from `kv`; unrecognised keys are
  // left for the caller.
  Status ApplyKeyValues(std::map<std::string, std::string>* kv);
};

// Parses `key = value` lines; '#' starts a comment. Repeated keys are joined
// with ',' so that multiple transformer lines form one pipeline.
Status ParseConfigText(const std::string& text, std::map<std::string, std::string>* kv);
Status ReadConfigFile(const std::string& path, std::map<std::string, std::string>* kv);

// Accepts plain integers and K/M/G suffixes (binary multiples).
Status ParseByteSize(const std::string& s, uint64_t* out);

}  // namespace telsm
