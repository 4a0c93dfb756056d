#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "telsm/schema.h"
#include "telsm/transformer_spec.h"

namespace telsm {

using ColumnFamilyId = uint16_t;
inline constexpr ColumnFamilyId kNoColumnFamily = 0xffff;

enum class CfKind : uint8_t { kUserFacing, kInternal };

// Row CFs hold (key, record); index CFs hold (index_key, empty).
enum class CfRole : uint8_t { kRow, kIndex };

struct ColumnFamilyDescriptor {
  ColumnFamilyId id = 0;
  std::string name;
  Schema schema;
  RecordFormat format = RecordFormat::kText;
  CfKind kind = CfKind::kUserFacing;
  ColumnFamilyId root_id = 0;
  ColumnFamilyId parent_id = kNoColumnFamily;
  // Position of schema.column(0) within the root schema.
  size_t column_offset = 0;
  CfRole role = CfRole::kRow;
  // Indexed column name (index CFs only).
  std::string index_column;
  std::optional<TransformerSpec> transformer;
  std::vector<ColumnFamilyId> destinations;

  bool user_facing() const { return kind == CfKind::kUserFacing; }
  bool has_transformer() const { return transformer.has_value(); }
};

}  // namespace telsm
