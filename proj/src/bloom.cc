#include "telsm/bloom.h"

#include <cmath>

#include "telsm/coding.h"

namespace telsm {

int BloomProbeCount(int bits_per_key) {
  int k = static_cast<int>(std::lround(0.69 * bits_per_key));
  if (k < 1) k = 1;
  if (k > 30) k = 30;
  return k;
}

void BloomFilterBuilder::AddKey(std::string_view user_key) {
  hashes_.push_back(Hash64(user_key));
}

namespace {

inline uint64_t Rotate(uint64_t h) { return (h >> 32) | (h << 32); }

}  // namespace

std::string BloomFilterBuilder::Finish() const {
  std::string out;
  if (bits_per_key_ <= 0) return out;
  uint64_t bits = hashes_.size() * static_cast<uint64_t>(bits_per_key_);
  if (bits < 64) bits = 64;
  bits = (bits + 7) / 8 * 8;
  const int k = BloomProbeCount(bits_per_key_);
  out.push_back(static_cast<char>(k));
  PutFixed32(&out, static_cast<uint32_t>(bits));
  size_t header = out.size();
  out.resize(header + bits / 8, '\0');
  char* array = out.data() + header;
  for (uint64_t h : hashes_) {
    uint64_t delta = Rotate(h) | 1;
    for (int i = 0; i < k; ++i) {
      uint64_t pos = h % bits;
      array[pos / 8] |= static_cast<char>(1 << (pos % 8));
      h += delta;
    }
  }
  return out;
}

bool BloomMayContain(std::string_view filter, std::string_view user_key) {
  if (filter.size() < 5) return true;
  int k = static_cast<unsigned char>(filter[0]);
  uint64_t bits = DecodeFixed32(filter.data() + 1);
  if (bits == 0 || filter.size() - 5 < bits / 8 || k > 30) return true;
  const char* array = filter.data() + 5;
  uint64_t h = Hash64(user_key);
  uint64_t delta = Rotate(h) | 1;
  for (int i = 0; i < k; ++i) {
    uint64_t pos = h % bits;
    if ((array[pos / 8] & (1 << (pos % 8))) == 0) return false;
    h += delta;
  }
  return true;
}

}  // namespace telsm
