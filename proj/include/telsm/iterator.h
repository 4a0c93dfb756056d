#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "telsm/internal_key.h"
#include "telsm/status.h"

namespace telsm {

// Forward iterator over versioned entries in internal-key order.
class InternalIterator {
 public:
  virtual ~InternalIterator() = default;

  virtual bool Valid() const = 0;
  virtual void SeekToFirst() = 0;
  // Positions at the first entry whose user key is >= user_key.
  virtual void Seek(std::string_view user_key) = 0;
  virtual void Next() = 0;

  virtual std::string_view user_key() const = 0;
  virtual SequenceNumber seq() const = 0;
  virtual ValueKind kind() const = 0;
  virtual std::string_view value() const = 0;
  virtual Status status() const = 0;
};

// Heap merge of child iterators; yields every version of every key.
std::unique_ptr<InternalIterator> NewMergingIterator(
    std::vector<std::unique_ptr<InternalIterator>> children);

// Iterator over a materialized, sorted entry vector.
std::unique_ptr<InternalIterator> NewVectorIterator(std::vector<Entry> entries);

// Collapses a merged stream to the newest visible version of each user key
// (seq <= snapshot). Deletes are surfaced, not hidden.
class NewestVersionIterator {
 public:
  NewestVersionIterator(std::unique_ptr<InternalIterator> input, SequenceNumber snapshot);

  bool Valid() const { return valid_; }
  void SeekToFirst();
  void Seek(std::string_view user_key);
  void Next();

  std::string_view user_key() const { return key_; }
  SequenceNumber seq() const { return seq_; }
  ValueKind kind() const { return kind_; }
  std::string_view value() const { return value_; }
  Status status() const { return input_->status(); }

 private:
  void FindNext();

  std::unique_ptr<InternalIterator> input_;
  SequenceNumber snapshot_;
  bool valid_ = false;
  std::string key_;
  SequenceNumber seq_ = 0;
  ValueKind kind_ = ValueKind::kPut;
  std::string value_;
};

}  // namespace telsm
