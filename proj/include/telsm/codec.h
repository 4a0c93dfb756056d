#pragma once

#include <string>
#include <string_view>

#include "telsm/schema.h"
#include "telsm/status.h"

namespace telsm {

// TEXT: a JSON object keyed by column name in schema order, e.g.
// {"a":5,"b":"hi"}. U64 values are bare decimal numbers.
std::string EncodeText(const Schema& schema, const Row& row);
Status DecodeText(const Schema& schema, std::string_view in, Row* row);

inline constexpr char kPackedVersion = 0x01;
inline constexpr size_t kMaxPackedString = 65535;

// PACKED: 0x01, then per column U64 as 8 LE bytes or Str as u16 LE length
// followed by the bytes. Field names are not stored.
Status EncodePacked(const Schema& schema, const Row& row, std::string* out);
Status DecodePacked(const Schema& schema, std::string_view in, Row* row);

Status EncodeRecord(RecordFormat format, const Schema& schema, const Row& row,
                    std::string* out);
Status DecodeRecord(RecordFormat format, const Schema& schema, std::string_view in,
                    Row* row);

// Reads a single column without materializing the row.
Status ExtractColumn(RecordFormat format, const Schema& schema, std::string_view in,
                     size_t column, Value* out);

// Returns the named column re-encoded as a one-column record of the same
// format.
Status ProjectColumn(const Schema& schema, std::string_view encoded, RecordFormat format,
                     std::string_view column_name, std::string* out);

}  // namespace telsm
