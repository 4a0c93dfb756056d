#include "telsm/env.h"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <mutex>

namespace telsm {

namespace {

Status PosixError(const std::string& context, int err) {
  return Status::IOError(context + ": " + std::strerror(err));
}

constexpr size_t kWriteBufferLimit = 64 << 10;
constexpr size_t kDirectAlign = 4096;

}  // namespace

Status WritableFile::Open(const std::string& path, bool truncate,
                          std::unique_ptr<WritableFile>* out) {
  int flags = O_WRONLY | O_CREAT | O_CLOEXEC | (truncate ? O_TRUNC : O_APPEND);
  int fd = ::open(path.c_str(), flags, 0644);
  if (fd < 0) return PosixError("open " + path, errno);
  struct stat st;
  if (::fstat(fd, &st) != 0) {
    int err = errno;
    ::close(fd);
    return PosixError("fstat " + path, err);
  }
  out->reset(new WritableFile(path, fd, static_cast<uint64_t>(st.st_size)));
  return Status::OK();
}

WritableFile::~WritableFile() { Close(); }

Status WritableFile::Append(std::string_view data) {
  buf_.append(data);
  size_ += data.size();
  if (buf_.size() >= kWriteBufferLimit) return Flush();
  return Status::OK();
}

Status WritableFile::Flush() {
  size_t off = 0;
  while (off < buf_.size()) {
    ssize_t n = ::write(fd_, buf_.data() + off, buf_.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return PosixError("write " + path_, errno);
    }
    off += static_cast<size_t>(n);
  }
  buf_.clear();
  return Status::OK();
}

Status WritableFile::Sync() {
  TELSM_RETURN_NOT_OK(Flush());
  if (::fdatasync(fd_) != 0) return PosixError("fdatasync " + path_, errno);
  return Status::OK();
}

Status WritableFile::Close() {
  if (fd_ < 0) return Status::OK();
  Status s = Flush();
  ::close(fd_);
  fd_ = -1;
  return s;
}

Status RandomAccessFile::Open(const std::string& path, bool direct,
                              std::unique_ptr<RandomAccessFile>* out) {
  int flags = O_RDONLY | O_CLOEXEC;
#ifdef O_DIRECT
  if (direct) flags |= O_DIRECT;
#endif
  int fd = ::open(path.c_str(), flags);
  if (fd < 0 && direct) {
    // Filesystems such as tmpfs reject O_DIRECT.
    direct = false;
    fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  }
  if (fd < 0) return PosixError("open " + path, errno);
  struct stat st;
  if (::fstat(fd, &st) != 0) {
    int err = errno;
    ::close(fd);
    return PosixError("fstat " + path, err);
  }
  out->reset(new RandomAccessFile(fd, static_cast<uint64_t>(st.st_size), direct));
  return Status::OK();
}

RandomAccessFile::~RandomAccessFile() { ::close(fd_); }

Status RandomAccessFile::Read(uint64_t offset, size_t n, std::string* out) const {
  if (offset + n > size_) return Status::Corruption("read past end of file");
  if (!direct_) {
    out->resize(n);
    size_t done = 0;
    while (done < n) {
      ssize_t r = ::pread(fd_, out->data() + done, n - done, static_cast<off_t>(offset + done));
      if (r < 0) {
        if (errno == EINTR) continue;
        return PosixError("pread", errno);
      }
      if (r == 0) return Status::Corruption("unexpected end of file");
      done += static_cast<size_t>(r);
    }
    return Status::OK();
  }
  uint64_t start = offset & ~(kDirectAlign - 1);
  uint64_t end = (offset + n + kDirectAlign - 1) & ~(kDirectAlign - 1);
  size_t len = static_cast<size_t>(end - start);
  void* raw = nullptr;
  if (posix_memalign(&raw, kDirectAlign, len) != 0) return Status::IOError("posix_memalign");
  std::unique_ptr<char, decltype(&std::free)> buf(static_cast<char*>(raw), &std::free);
  size_t done = 0;
  while (done < len) {
    ssize_t r = ::pread(fd_, buf.get() + done, len - done, static_cast<off_t>(start + done));
    if (r < 0) {
      if (errno == EINTR) continue;
      return PosixError("pread", errno);
    }
    if (r == 0) break;
    done += static_cast<size_t>(r);
  }
  if (start + done < offset + n) return Status::Corruption("unexpected end of file");
  out->assign(buf.get() + (offset - start), n);
  return Status::OK();
}

Status ReadFileToString(const std::string& path, std::string* out) {
  int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) return PosixError("open " + path, errno);
  out->clear();
  char buf[1 << 16];
  for (;;) {
    ssize_t r = ::read(fd, buf, sizeof(buf));
    if (r < 0) {
      if (errno == EINTR) continue;
      int err = errno;
      ::close(fd);
      return PosixError("read " + path, err);
    }
    if (r == 0) break;
    out->append(buf, static_cast<size_t>(r));
  }
  ::close(fd);
  return Status::OK();
}

Status WriteStringToFile(const std::string& path, std::string_view data, bool sync) {
  std::unique_ptr<WritableFile> f;
  TELSM_RETURN_NOT_OK(WritableFile::Open(path, true, &f));
  TELSM_RETURN_NOT_OK(f->Append(data));
  TELSM_RETURN_NOT_OK(sync ? f->Sync() : f->Flush());
  return f->Close();
}

Status CreateDirIfMissing(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) return Status::IOError("mkdir " + path + ": " + ec.message());
  return Status::OK();
}

Status SyncDir(const std::string& path) {
  int fd = ::open(path.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return PosixError("open dir " + path, errno);
  int rc = ::fsync(fd);
  int err = errno;
  ::close(fd);
  if (rc != 0) return PosixError("fsync dir " + path, err);
  return Status::OK();
}

bool FileExists(const std::string& path) { return ::access(path.c_str(), F_OK) == 0; }

Status RemoveFile(const std::string& path) {
  if (::unlink(path.c_str()) != 0 && errno != ENOENT) return PosixError("unlink " + path, errno);
  return Status::OK();
}

Status ListDir(const std::string& path, std::vector<std::string>* names) {
  names->clear();
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(path, ec)) {
    names->push_back(e.path().filename().string());
  }
  if (ec) return Status::IOError("list " + path + ": " + ec.message());
  return Status::OK();
}

namespace kill_point {

namespace {
std::atomic<bool> g_armed{false};
std::atomic<uint64_t> g_hits{0};
std::mutex g_mu;
std::string g_prefix;
uint64_t g_countdown = 0;
}  // namespace

void Arm(std::string prefix, uint64_t countdown) {
  std::lock_guard<std::mutex> l(g_mu);
  g_prefix = std::move(prefix);
  g_countdown = countdown;
  g_hits.store(0, std::memory_order_relaxed);
  g_armed.store(true, std::memory_order_release);
}

void Disarm() { g_armed.store(false, std::memory_order_release); }

void Hit(const char* name) {
  if (!g_armed.load(std::memory_order_relaxed)) return;
  std::lock_guard<std::mutex> l(g_mu);
  if (std::string_view(name).substr(0, g_prefix.size()) != g_prefix) return;
  g_hits.fetch_add(1, std::memory_order_relaxed);
  if (g_countdown > 0 && --g_countdown == 0) ::_exit(kExitCode);
}

uint64_t HitCount() { return g_hits.load(std::memory_order_relaxed); }
void ResetCounter() { g_hits.store(0, std::memory_order_relaxed); }

}  // namespace kill_point

}  // namespace telsm
