#include "telsm/schema.h"

#include <charconv>

namespace telsm {

const char* RecordFormatName(RecordFormat f) {
  return f == RecordFormat::kText ? "text" : "packed";
}

std::optional<RecordFormat> ParseRecordFormat(std::string_view name) {
  if (name == "text" || name == "TEXT" || name == "json") return RecordFormat::kText;
  if (name == "packed" || name == "PACKED") return RecordFormat::kPacked;
  return std::nullopt;
}

Schema::Schema(std::vector<Column> columns) : columns_(std::move(columns)) {
  for (size_t i = 0; i < columns_.size(); ++i) index_.emplace(columns_[i].name, i);
}

Status Schema::Make(std::vector<Column> columns, Schema* out) {
  if (columns.empty()) return Status::InvalidArgument("schema needs at least one column");
  Schema s(std::move(columns));
  if (s.index_.size() != s.columns_.size()) {
    return Status::InvalidArgument("duplicate column name");
  }
  for (const auto& c : s.columns_) {
    if (c.name.empty()) return Status::InvalidArgument("empty column name");
    for (char ch : c.name) {
      if (ch == ',' || ch == ':' || ch == '"' || ch == '\\' ||
          static_cast<unsigned char>(ch) < 0x20) {
        return Status::InvalidArgument("column name has reserved character: " + c.name);
      }
    }
  }
  *out = std::move(s);
  return Status::OK();
}

Status Schema::Parse(std::string_view text, Schema* out) {
  std::vector<Column> cols;
  while (!text.empty()) {
    size_t comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    size_t colon = item.rfind(':');
    if (colon == std::string_view::npos) {
      return Status::InvalidArgument("bad schema item: " + std::string(item));
    }
    std::string_view type = item.substr(colon + 1);
    Column c;
    c.name = std::string(item.substr(0, colon));
    if (type == "u64" || type == "U64") {
      c.type = ColumnType::kU64;
    } else if (type == "str" || type == "Str" || type == "STR") {
      c.type = ColumnType::kStr;
    } else {
      return Status::InvalidArgument("bad column type: " + std::string(type));
    }
    cols.push_back(std::move(c));
  }
  return Make(std::move(cols), out);
}

std::optional<size_t> Schema::IndexOf(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Schema Schema::Slice(size_t begin, size_t end) const {
  return Schema(std::vector<Column>(columns_.begin() + begin, columns_.begin() + end));
}

bool Schema::Matches(const Row& row) const {
  if (row.size() != columns_.size()) return false;
  for (size_t i = 0; i < row.size(); ++i) {
    if (!ValueMatchesType(row[i], columns_[i].type)) return false;
  }
  return true;
}

std::string Schema::ToString() const {
  std::string out;
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (i) out.push_back(',');
    out += columns_[i].name;
    out += columns_[i].type == ColumnType::kU64 ? ":u64" : ":str";
  }
  return out;
}

bool ValueMatchesType(const Value& v, ColumnType t) {
  return t == ColumnType::kU64 ? std::holds_alternative<uint64_t>(v)
                               : std::holds_alternative<std::string>(v);
}

std::string ValueToString(const Value& v) {
  if (const auto* u = std::get_if<uint64_t>(&v)) return std::to_string(*u);
  return std::get<std::string>(v);
}

}  // namespace telsm
