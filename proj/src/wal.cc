#include "telsm/wal.h"

#include "telsm/coding.h"

namespace telsm {

void EncodeWalRecord(uint16_t cf_id, const InternalKey& key, std::string_view value,
                     std::string* dst) {
  size_t start = dst->size();
  PutFixed64(dst, key.seq);
  dst->push_back(static_cast<char>(key.kind));
  PutFixed16(dst, cf_id);
  PutFixed16(dst, static_cast<uint16_t>(key.user_key.size()));
  dst->append(key.user_key);
  PutFixed32(dst, static_cast<uint32_t>(value.size()));
  dst->append(value);
  PutFixed32(dst, Crc32(std::string_view(*dst).substr(start)));
}

Status WalWriter::Open(const std::string& path, std::unique_ptr<WalWriter>* out) {
  std::unique_ptr<WritableFile> f;
  TELSM_RETURN_NOT_OK(WritableFile::Open(path, true, &f));
  out->reset(new WalWriter(std::move(f)));
  return Status::OK();
}

Status WalWriter::AppendEncoded(std::string_view records, bool sync) {
  TELSM_RETURN_NOT_OK(file_->Append(records));
  TELSM_KILL_POINT("wal.append.before_flush");
  TELSM_RETURN_NOT_OK(sync ? file_->Sync() : file_->Flush());
  return Status::OK();
}

Status WalWriter::Append(uint16_t cf_id, const InternalKey& key, std::string_view value,
                         bool sync) {
  std::string rec;
  EncodeWalRecord(cf_id, key, value, &rec);
  return AppendEncoded(rec, sync);
}

Status WalWriter::Close() { return file_->Close(); }

Status DecodeWalBuffer(std::string_view data, WalReplayResult* result) {
  result->records.clear();
  result->truncated = false;
  Decoder d(data);
  uint64_t offset = 0;
  while (!d.empty()) {
    const size_t before = d.remaining();
    std::string_view rec_start = d.rest();
    uint64_t seq;
    uint8_t kind;
    uint16_t cf, key_len;
    uint32_t val_len, crc;
    std::string_view key, value;
    bool ok = d.GetFixed64(&seq) && d.GetFixed8(&kind) && d.GetFixed16(&cf) &&
              d.GetFixed16(&key_len) && d.GetBytes(key_len, &key) && d.GetFixed32(&val_len) &&
              d.GetBytes(val_len, &value);
    size_t body = before - d.remaining();
    ok = ok && d.GetFixed32(&crc);
    if (!ok || crc != Crc32(rec_start.substr(0, body)) || kind > 1) {
      result->truncated = true;
      break;
    }
    WalRecord r;
    r.cf_id = cf;
    r.key.user_key.assign(key);
    r.key.seq = seq;
    r.key.kind = static_cast<ValueKind>(kind);
    r.value.assign(value);
    result->records.push_back(std::move(r));
    offset += before - d.remaining();
  }
  result->valid_bytes = offset;
  return Status::OK();
}

Status ReplayWal(const std::string& path, WalReplayResult* result) {
  std::string data;
  TELSM_RETURN_NOT_OK(ReadFileToString(path, &data));
  return DecodeWalBuffer(data, result);
}

}  // namespace telsm
