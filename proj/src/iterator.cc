#include "telsm/iterator.h"

#include <algorithm>

namespace telsm {

namespace {

class MergingIterator : public InternalIterator {
 public:
  explicit MergingIterator(std::vector<std::unique_ptr<InternalIterator>> children)
      : children_(std::move(children)) {}

  bool Valid() const override { return !heap_.empty(); }

  void SeekToFirst() override {
    for (auto& c : children_) c->SeekToFirst();
    Rebuild();
  }

  void Seek(std::string_view user_key) override {
    for (auto& c : children_) c->Seek(user_key);
    Rebuild();
  }

  void Next() override {
    std::pop_heap(heap_.begin(), heap_.end(), Greater{});
    InternalIterator* it = heap_.back();
    it->Next();
    if (it->Valid()) {
      std::push_heap(heap_.begin(), heap_.end(), Greater{});
    } else {
      heap_.pop_back();
      if (!it->status().ok() && status_.ok()) status_ = it->status();
    }
  }

  std::string_view user_key() const override { return heap_.front()->user_key(); }
  SequenceNumber seq() const override { return heap_.front()->seq(); }
  ValueKind kind() const override { return heap_.front()->kind(); }
  std::string_view value() const override { return heap_.front()->value(); }
  Status status() const override { return status_; }

 private:
  struct Greater {
    bool operator()(const InternalIterator* a, const InternalIterator* b) const {
      return CompareInternal(a->user_key(), a->seq(), b->user_key(), b->seq()) > 0;
    }
  };

  void Rebuild() {
    heap_.clear();
    for (auto& c : children_) {
      if (c->Valid()) {
        heap_.push_back(c.get());
      } else if (!c->status().ok() && status_.ok()) {
        status_ = c->status();
      }
    }
    std::make_heap(heap_.begin(), heap_.end(), Greater{});
  }

  std::vector<std::unique_ptr<InternalIterator>> children_;
  std::vector<InternalIterator*> heap_;
  Status status_;
};

class VectorIterator : public InternalIterator {
 public:
  explicit VectorIterator(std::vector<Entry> entries) : entries_(std::move(entries)) {}

  bool Valid() const override { return pos_ < entries_.size(); }
  void SeekToFirst() override { pos_ = 0; }
  void Seek(std::string_view user_key) override {
    pos_ = static_cast<size_t>(
        std::lower_bound(entries_.begin(), entries_.end(), user_key,
                         [](const Entry& e, std::string_view k) { return e.key.user_key < k; }) -
        entries_.begin());
  }
  void Next() override { ++pos_; }
  std::string_view user_key() const override { return entries_[pos_].key.user_key; }
  SequenceNumber seq() const override { return entries_[pos_].key.seq; }
  ValueKind kind() const override { return entries_[pos_].key.kind; }
  std::string_view value() const override { return entries_[pos_].value; }
  Status status() const override { return Status::OK(); }

 private:
  std::vector<Entry> entries_;
  size_t pos_ = 0;
};

}  // namespace

std::unique_ptr<InternalIterator> NewMergingIterator(
    std::vector<std::unique_ptr<InternalIterator>> children) {
  return std::make_unique<MergingIterator>(std::move(children));
}

std::unique_ptr<InternalIterator> NewVectorIterator(std::vector<Entry> entries) {
  return std::make_unique<VectorIterator>(std::move(entries));
}

NewestVersionIterator::NewestVersionIterator(std::unique_ptr<InternalIterator> input,
                                             SequenceNumber snapshot)
    : input_(std::move(input)), snapshot_(snapshot) {}

void NewestVersionIterator::SeekToFirst() {
  input_->SeekToFirst();
  FindNext();
}

void NewestVersionIterator::Seek(std::string_view user_key) {
  input_->Seek(user_key);
  FindNext();
}

void NewestVersionIterator::Next() {
  // Skip remaining versions of the current key.
  while (input_->Valid() && input_->user_key() == key_) input_->Next();
  FindNext();
}

void NewestVersionIterator::FindNext() {
  while (input_->Valid() && input_->seq() > snapshot_) input_->Next();
  valid_ = input_->Valid();
  if (!valid_) return;
  key_.assign(input_->user_key());
  seq_ = input_->seq();
  kind_ = input_->kind();
  value_.assign(input_->value());
  input_->Next();
}

}  // namespace telsm
