#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace telsm {

// Number of probes for a given bits-per-key budget: round(0.69 * bits).
int BloomProbeCount(int bits_per_key);

// Filter block layout: u8 probes | u32 num_bits | bit array.
// Probes use double hashing over one 64-bit hash of the user key.
class BloomFilterBuilder {
 public:
  explicit BloomFilterBuilder(int bits_per_key) : bits_per_key_(bits_per_key) {}

  void AddKey(std::string_view user_key);
  size_t num_keys() const { return hashes_.size(); }
  std::string Finish() const;

 private:
  int bits_per_key_;
  std::vector<uint64_t> hashes_;
};

// Returns false only if the key is definitely absent. An empty or malformed
// filter matches everything.
bool BloomMayContain(std::string_view filter, std::string_view user_key);

}  // namespace telsm
