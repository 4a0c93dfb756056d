#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "telsm/status.h"

namespace telsm {

// Append-only file backed by a POSIX descriptor. Append() buffers;
// Flush() hands the buffer to the kernel so the data survives a process
// crash; Sync() additionally makes it durable on the device.
class WritableFile {
 public:
  static Status Open(const std::string& path, bool truncate, std::unique_ptr<WritableFile>* out);
  ~WritableFile();

  WritableFile(const WritableFile&) = delete;
  WritableFile& operator=(const WritableFile&) = delete;

  Status Append(std::string_view data);
  Status Flush();
  Status Sync();
  Status Close();

  uint64_t size() const { return size_; }
  const std::string& path() const { return path_; }

 private:
  WritableFile(std::string path, int fd, uint64_t size)
      : path_(std::move(path)), fd_(fd), size_(size) {}

  std::string path_;
  int fd_;
  uint64_t size_;
  std::string buf_;
};

class RandomAccessFile {
 public:
  static Status Open(const std::string& path, bool direct, std::unique_ptr<RandomAccessFile>* out);
  ~RandomAccessFile();

  RandomAccessFile(const RandomAccessFile&) = delete;
  RandomAccessFile& operator=(const RandomAccessFile&) = delete;

  // Thread-safe positional read of exactly n bytes.
  Status Read(uint64_t offset, size_t n, std::string* out) const;
  uint64_t size() const { return size_; }

 private:
  RandomAccessFile(int fd, uint64_t size, bool direct) : fd_(fd), size_(size), direct_(direct) {}

  int fd_;
  uint64_t size_;
  bool direct_;
};

Status ReadFileToString(const std::string& path, std::string* out);
Status WriteStringToFile(const std::string& path, std::string_view data, bool sync);
Status CreateDirIfMissing(const std::string& path);
Status SyncDir(const std::string& path);
bool FileExists(const std::string& path);
Status RemoveFile(const std::string& path);
Status ListDir(const std::string& path, std::vector<std::string>* names);

// Crash-injection hooks used by the recovery tests. A disarmed kill point
// costs one relaxed atomic load.
namespace kill_point {

inline constexpr int kExitCode = 86;

// Terminates the process with _exit(kExitCode) at the `countdown`-th hit of
// a kill point whose name starts with `prefix` ("" matches every point).
void Arm(std::string prefix, uint64_t countdown);
void Disarm();
void Hit(const char* name);
// Number of kill-point hits observed since the last Arm/ResetCounter.
uint64_t HitCount();
void ResetCounter();

}  // namespace kill_point

}  // namespace telsm

#define TELSM_KILL_POINT(name) ::telsm::kill_point::Hit(name)
