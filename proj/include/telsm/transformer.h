#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "telsm/column_family.h"
#include "telsm/internal_key.h"
#include "telsm/memtable.h"
#include "telsm/schema.h"
#include "telsm/status.h"

namespace telsm {

// Per destination CF: entries sorted by internal key.
using TransformOutputSet = std::map<ColumnFamilyId, std::vector<Entry>>;

// Newest row stored for a key downstream of the transformer, as of the
// compaction snapshot. Only Augment uses it.
using PriorValueLookup = std::function<Status(std::string_view key, Row* row, bool* found)>;

// Index keys are value bytes, 0x00, primary key. U64 values are 16 lowercase
// hex digits (big-endian) so byte order is numeric order.
Status IndexValueBytes(const Value& v, std::string* out);
Status MakeIndexKey(const Value& v, std::string_view primary_key, std::string* out);
// Splits at the first 0x00. Returns false if there is none.
bool SplitIndexKey(std::string_view index_key, std::string_view* value_bytes,
                   std::string_view* primary_key);

class Transformer {
 public:
  Transformer(ColumnFamilyDescriptor source, std::vector<ColumnFamilyDescriptor> destinations);
  virtual ~Transformer() = default;

  // Takes the per-transformer lock and clears staging. Busy if another job
  // holds it.
  Status Prepare(PriorValueLookup lookup = {});
  // Stages the outputs for one merged entry. Deletes carry an empty value.
  virtual Status Transform(std::string_view key, SequenceNumber seq, ValueKind kind,
                           std::string_view value) = 0;
  // Hands over the staged outputs and releases the lock.
  Status Retrieve(TransformOutputSet* out);
  // Drops staged outputs and releases the lock.
  void Abort();

  const ColumnFamilyDescriptor& source() const { return source_; }
  const std::vector<ColumnFamilyDescriptor>& destinations() const { return dests_; }

 protected:
  void Stage(size_t dest_index, std::string_view key, SequenceNumber seq, ValueKind kind,
             std::string value);

  const ColumnFamilyDescriptor source_;
  const std::vector<ColumnFamilyDescriptor> dests_;
  PriorValueLookup lookup_;

 private:
  std::mutex mu_;
  bool held_ = false;
  std::vector<std::vector<Entry>> staged_;
};

// Builds the transformer attached to `source`; `destinations` must be in
// the order listed by source.destinations.
Status NewTransformer(const ColumnFamilyDescriptor& source,
                      const std::vector<ColumnFamilyDescriptor>& destinations,
                      std::unique_ptr<Transformer>* out);

}  // namespace telsm
