#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace telsm {

using SequenceNumber = uint64_t;

inline constexpr SequenceNumber kMaxSequenceNumber = ~0ULL;

// Deletes are full entries with an empty value.
enum class ValueKind : uint8_t { kDelete = 0, kPut = 1 };

// Orders ascending by user key, then descending by sequence number so that
// the newest version of a key is met first.
inline int CompareInternal(std::string_view a_key, SequenceNumber a_seq,
                           std::string_view b_key, SequenceNumber b_seq) {
  int c = a_key.compare(b_key);
  if (c != 0) return c < 0 ? -1 : 1;
  if (a_seq > b_seq) return -1;
  if (a_seq < b_seq) return 1;
  return 0;
}

struct InternalKey {
  std::string user_key;
  SequenceNumber seq = 0;
  ValueKind kind = ValueKind::kPut;

  friend bool operator<(const InternalKey& a, const InternalKey& b) {
    return CompareInternal(a.user_key, a.seq, b.user_key, b.seq) < 0;
  }
  friend bool operator==(const InternalKey& a, const InternalKey& b) {
    return a.user_key == b.user_key && a.seq == b.seq && a.kind == b.kind;
  }
};

// A fully materialized versioned entry.
struct Entry {
  InternalKey key;
  std::string value;

  friend bool operator==(const Entry& a, const Entry& b) {
    return a.key == b.key && a.value == b.value;
  }
};

}  // namespace telsm
