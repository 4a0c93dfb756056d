#include "telsm/codec.h"

#include <charconv>
#include <cstdint>

#include "telsm/coding.h"

namespace telsm {

namespace {

void AppendJsonString(std::string* out, std::string_view s) {
  static constexpr char kHex[] = "0123456789abcdef";
  out->push_back('"');
  for (unsigned char c : s) {
    switch (c) {
      case '"':
        out->append("\\\"");
        break;
      case '\\':
        out->append("\\\\");
        break;
      case '\n':
        out->append("\\n");
        break;
      case '\r':
        out->append("\\r");
        break;
      case '\t':
        out->append("\\t");
        break;
      case '\b':
        out->append("\\b");
        break;
      case '\f':
        out->append("\\f");
        break;
      default:
        if (c < 0x20) {
          out->append("\\u00");
          out->push_back(kHex[c >> 4]);
          out->push_back(kHex[c & 0xf]);
        } else {
          out->push_back(static_cast<char>(c));
        }
    }
  }
  out->push_back('"');
}

void AppendUtf8(std::string* out, uint32_t cp) {
  if (cp < 0x80) {
    out->push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out->push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out->push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out->push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

// Minimal strict JSON reader for the flat objects the TEXT codec produces.
class JsonReader {
 public:
  explicit JsonReader(std::string_view in) : in_(in) {}

  void SkipWs() {
    while (pos_ < in_.size() &&
           (in_[pos_] == ' ' || in_[pos_] == '\n' || in_[pos_] == '\r' || in_[pos_] == '\t')) {
      ++pos_;
    }
  }

  bool Consume(char c) {
    SkipWs();
    if (pos_ < in_.size() && in_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool Peek(char c) {
    SkipWs();
    return pos_ < in_.size() && in_[pos_] == c;
  }

  bool AtEnd() {
    SkipWs();
    return pos_ == in_.size();
  }

  bool ReadString(std::string* out) {
    out->clear();
    if (!Consume('"')) return false;
    while (pos_ < in_.size()) {
      char c = in_[pos_++];
      if (c == '"') return true;
      if (static_cast<unsigned char>(c) < 0x20) return false;
      if (c != '\\') {
        out->push_back(c);
        continue;
      }
      if (pos_ >= in_.size()) return false;
      char e = in_[pos_++];
      switch (e) {
        case '"':
        case '\\':
        case '/':
          out->push_back(e);
          break;
        case 'n':
          out->push_back('\n');
          break;
        case 'r':
          out->push_back('\r');
          break;
        case 't':
          out->push_back('\t');
          break;
        case 'b':
          out->push_back('\b');
          break;
        case 'f':
          out->push_back('\f');
          break;
        case 'u': {
          uint32_t cp;
          if (!ReadHex4(&cp)) return false;
          if (cp >= 0xd800 && cp < 0xdc00) {
            uint32_t lo;
            if (pos_ + 1 >= in_.size() || in_[pos_] != '\\' || in_[pos_ + 1] != 'u') return false;
            pos_ += 2;
            if (!ReadHex4(&lo) || lo < 0xdc00 || lo >= 0xe000) return false;
            cp = 0x10000 + ((cp - 0xd800) << 10) + (lo - 0xdc00);
          } else if (cp >= 0xdc00 && cp < 0xe000) {
            return false;
          }
          AppendUtf8(out, cp);
          break;
        }
        default:
          return false;
      }
    }
    return false;
  }

  bool ReadU64(uint64_t* out) {
    SkipWs();
    size_t start = pos_;
    while (pos_ < in_.size() && in_[pos_] >= '0' && in_[pos_] <= '9') ++pos_;
    size_t n = pos_ - start;
    if (n == 0) return false;
    if (n > 1 && in_[start] == '0') return false;
    auto [p, ec] = std::from_chars(in_.data() + start, in_.data() + pos_, *out);
    return ec == std::errc() && p == in_.data() + pos_;
  }

  // Skips a scalar JSON value (string or unsigned integer).
  bool SkipValue() {
    if (Peek('"')) {
      std::string tmp;
      return ReadString(&tmp);
    }
    uint64_t v;
    return ReadU64(&v);
  }

 private:
  bool ReadHex4(uint32_t* cp) {
    if (pos_ + 4 > in_.size()) return false;
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      char c = in_[pos_++];
      v <<= 4;
      if (c >= '0' && c <= '9') {
        v |= static_cast<uint32_t>(c - '0');
      } else if (c >= 'a' && c <= 'f') {
        v |= static_cast<uint32_t>(c - 'a' + 10);
      } else if (c >= 'A' && c <= 'F') {
        v |= static_cast<uint32_t>(c - 'A' + 10);
      } else {
        return false;
      }
    }
    *cp = v;
    return true;
  }

  std::string_view in_;
  size_t pos_ = 0;
};

Status ReadJsonValue(JsonReader* r, ColumnType type, Value* out) {
  if (type == ColumnType::kU64) {
    uint64_t v;
    if (!r->ReadU64(&v)) return Status::Corruption("expected unsigned integer");
    *out = v;
  } else {
    std::string s;
    if (!r->ReadString(&s)) return Status::Corruption("expected string");
    *out = std::move(s);
  }
  return Status::OK();
}

// Resolves a key to a column index, trying the expected position first.
std::optional<size_t> ResolveKey(const Schema& schema, const std::string& key,
                                 size_t expected) {
  if (expected < schema.size() && schema.column(expected).name == key) return expected;
  return schema.IndexOf(key);
}

bool SkipPackedColumn(Decoder* d, ColumnType type) {
  if (type == ColumnType::kU64) {
    uint64_t v;
    return d->GetFixed64(&v);
  }
  uint16_t len;
  std::string_view s;
  return d->GetFixed16(&len) && d->GetBytes(len, &s);
}

}  // namespace

std::string EncodeText(const Schema& schema, const Row& row) {
  std::string out;
  out.reserve(16 * row.size());
  out.push_back('{');
  char num[24];
  for (size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    AppendJsonString(&out, schema.column(i).name);
    out.push_back(':');
    if (const auto* u = std::get_if<uint64_t>(&row[i])) {
      auto [p, ec] = std::to_chars(num, num + sizeof(num), *u);
      out.append(num, p);
    } else {
      AppendJsonString(&out, std::get<std::string>(row[i]));
    }
  }
  out.push_back('}');
  return out;
}

Status DecodeText(const Schema& schema, std::string_view in, Row* row) {
  JsonReader r(in);
  row->assign(schema.size(), Value{});
  std::vector<bool> seen(schema.size(), false);
  if (!r.Consume('{')) return Status::Corruption("text record: expected '{'");
  size_t filled = 0;
  std::string key;
  if (!r.Peek('}')) {
    for (size_t pos = 0;; ++pos) {
      if (!r.ReadString(&key)) return Status::Corruption("text record: expected key");
      auto idx = ResolveKey(schema, key, pos);
      if (!idx) return Status::Corruption("text record: unknown column " + key);
      if (seen[*idx]) return Status::Corruption("text record: duplicate column " + key);
      if (!r.Consume(':')) return Status::Corruption("text record: expected ':'");
      TELSM_RETURN_NOT_OK(ReadJsonValue(&r, schema.column(*idx).type, &(*row)[*idx]));
      seen[*idx] = true;
      ++filled;
      if (r.Consume(',')) continue;
      break;
    }
  }
  if (!r.Consume('}')) return Status::Corruption("text record: expected '}'");
  if (!r.AtEnd()) return Status::Corruption("text record: trailing bytes");
  if (filled != schema.size()) return Status::Corruption("text record: missing columns");
  return Status::OK();
}

Status EncodePacked(const Schema& schema, const Row& row, std::string* out) {
  out->clear();
  out->push_back(kPackedVersion);
  for (size_t i = 0; i < row.size(); ++i) {
    if (schema.column(i).type == ColumnType::kU64) {
      PutFixed64(out, std::get<uint64_t>(row[i]));
    } else {
      const auto& s = std::get<std::string>(row[i]);
      if (s.size() > kMaxPackedString) {
        return Status::InvalidArgument("packed string column exceeds 65535 bytes");
      }
      PutFixed16(out, static_cast<uint16_t>(s.size()));
      out->append(s);
    }
  }
  return Status::OK();
}

Status DecodePacked(const Schema& schema, std::string_view in, Row* row) {
  Decoder d(in);
  uint8_t version;
  if (!d.GetFixed8(&version) || version != kPackedVersion) {
    return Status::Corruption("packed record: bad version byte");
  }
  row->resize(schema.size());
  for (size_t i = 0; i < schema.size(); ++i) {
    if (schema.column(i).type == ColumnType::kU64) {
      uint64_t v;
      if (!d.GetFixed64(&v)) return Status::Corruption("packed record: truncated u64");
      (*row)[i] = v;
    } else {
      uint16_t len;
      std::string_view s;
      if (!d.GetFixed16(&len) || !d.GetBytes(len, &s)) {
        return Status::Corruption("packed record: truncated string");
      }
      (*row)[i] = std::string(s);
    }
  }
  if (!d.empty()) return Status::Corruption("packed record: trailing bytes");
  return Status::OK();
}

Status EncodeRecord(RecordFormat format, const Schema& schema, const Row& row,
                    std::string* out) {
  if (!schema.Matches(row)) return Status::InvalidArgument("row does not match schema");
  if (format == RecordFormat::kText) {
    *out = EncodeText(schema, row);
    return Status::OK();
  }
  return EncodePacked(schema, row, out);
}

Status DecodeRecord(RecordFormat format, const Schema& schema, std::string_view in,
                    Row* row) {
  return format == RecordFormat::kText ? DecodeText(schema, in, row)
                                       : DecodePacked(schema, in, row);
}

Status ExtractColumn(RecordFormat format, const Schema& schema, std::string_view in,
                     size_t column, Value* out) {
  if (column >= schema.size()) return Status::InvalidArgument("column out of range");
  if (format == RecordFormat::kPacked) {
    Decoder d(in);
    uint8_t version;
    if (!d.GetFixed8(&version) || version != kPackedVersion) {
      return Status::Corruption("packed record: bad version byte");
    }
    for (size_t i = 0; i < column; ++i) {
      if (!SkipPackedColumn(&d, schema.column(i).type)) {
        return Status::Corruption("packed record: truncated");
      }
    }
    if (schema.column(column).type == ColumnType::kU64) {
      uint64_t v;
      if (!d.GetFixed64(&v)) return Status::Corruption("packed record: truncated u64");
      *out = v;
    } else {
      uint16_t len;
      std::string_view s;
      if (!d.GetFixed16(&len) || !d.GetBytes(len, &s)) {
        return Status::Corruption("packed record: truncated string");
      }
      *out = std::string(s);
    }
    return Status::OK();
  }

  JsonReader r(in);
  if (!r.Consume('{')) return Status::Corruption("text record: expected '{'");
  std::string key;
  for (size_t pos = 0; !r.Peek('}'); ++pos) {
    if (!r.ReadString(&key) || !r.Consume(':')) {
      return Status::Corruption("text record: expected key");
    }
    auto idx = ResolveKey(schema, key, pos);
    if (!idx) return Status::Corruption("text record: unknown column " + key);
    if (*idx == column) return ReadJsonValue(&r, schema.column(column).type, out);
    if (!r.SkipValue()) return Status::Corruption("text record: bad value");
    if (!r.Consume(',')) break;
  }
  return Status::Corruption("text record: missing column " + schema.column(column).name);
}

Status ProjectColumn(const Schema& schema, std::string_view encoded, RecordFormat format,
                     std::string_view column_name, std::string* out) {
  auto idx = schema.IndexOf(column_name);
  if (!idx) return Status::InvalidArgument("unknown column: " + std::string(column_name));
  Value v;
  TELSM_RETURN_NOT_OK(ExtractColumn(format, schema, encoded, *idx, &v));
  Schema one = schema.Slice(*idx, *idx + 1);
  return EncodeRecord(format, one, Row{std::move(v)}, out);
}

}  // namespace telsm
