#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "telsm/status.h"

namespace telsm {

enum class ColumnType : uint8_t { kU64 = 0, kStr = 1 };

// On-disk encoding of a row value. TEXT is self-describing JSON, PACKED is a
// schema-driven binary layout.
enum class RecordFormat : uint8_t { kText = 0, kPacked = 1 };

const char* RecordFormatName(RecordFormat f);
std::optional<RecordFormat> ParseRecordFormat(std::string_view name);

struct Column {
  std::string name;
  ColumnType type = ColumnType::kU64;

  bool operator==(const Column&) const = default;
};

using Value = std::variant<uint64_t, std::string>;
using Row = std::vector<Value>;

// Ordered, non-empty list of uniquely named columns.
class Schema {
 public:
  Schema() = default;

  static Status Make(std::vector<Column> columns, Schema* out);
  // "name:u64,name:str,..."
  static Status Parse(std::string_view text, Schema* out);

  size_t size() const { return columns_.size(); }
  bool empty() const { return columns_.empty(); }
  const Column& column(size_t i) const { return columns_[i]; }
  const std::vector<Column>& columns() const { return columns_; }
  std::optional<size_t> IndexOf(std::string_view name) const;

  // Contiguous sub-schema [begin, end).
  Schema Slice(size_t begin, size_t end) const;

  bool Matches(const Row& row) const;
  std::string ToString() const;

  bool operator==(const Schema& o) const { return columns_ == o.columns_; }

 private:
  explicit Schema(std::vector<Column> columns);

  std::vector<Column> columns_;
  std::unordered_map<std::string, size_t> index_;
};

bool ValueMatchesType(const Value& v, ColumnType t);
std::string ValueToString(const Value& v);

}  // namespace telsm
