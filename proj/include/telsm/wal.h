#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "telsm/env.h"
#include "telsm/internal_key.h"
#include "telsm/status.h"

namespace telsm {

struct WalRecord {
  uint16_t cf_id = 0;
  InternalKey key;
  std::string value;

  bool operator==(const WalRecord&) const = default;
};

// Record layout (little endian):
//   u64 seq | u8 kind | u16 cf_id | u16 key_len | key | u32 val_len | value |
//   u32 crc32(all preceding record bytes)
void EncodeWalRecord(uint16_t cf_id, const InternalKey& key, std::string_view value,
                     std::string* dst);

class WalWriter {
 public:
  static Status Open(const std::string& path, std::unique_ptr<WalWriter>* out);

  // Appends pre-encoded records and hands them to the kernel; with `sync`
  // also fdatasyncs.
  Status AppendEncoded(std::string_view records, bool sync);
  Status Append(uint16_t cf_id, const InternalKey& key, std::string_view value, bool sync);
  Status Close();

  uint64_t size() const { return file_->size(); }
  const std::string& path() const { return file_->path(); }

 private:
  explicit WalWriter(std::unique_ptr<WritableFile> f) : file_(std::move(f)) {}
  std::unique_ptr<WritableFile> file_;
};

struct WalReplayResult {
  std::vector<WalRecord> records;
  // Byte offset just past the last intact record.
  uint64_t valid_bytes = 0;
  // True when replay stopped at a torn or corrupt record.
  bool truncated = false;
};

// Returns every record up to (not including) the first truncated record or
// CRC mismatch. Tail corruption is reported, not treated as an error.
Status ReplayWal(const std::string& path, WalReplayResult* result);
Status DecodeWalBuffer(std::string_view data, WalReplayResult* result);

}  // namespace telsm
