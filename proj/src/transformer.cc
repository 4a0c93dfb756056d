#include "telsm/transformer.h"

#include <algorithm>
#include <cstdio>

#include "telsm/codec.h"

namespace telsm {

Status IndexValueBytes(const Value& v, std::string* out) {
  if (const auto* u = std::get_if<uint64_t>(&v)) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(*u));
    out->assign(buf, 16);
    return Status::OK();
  }
  const auto& s = std::get<std::string>(v);
  if (s.find('\0') != std::string::npos) {
    return Status::InvalidArgument("indexed string value contains 0x00");
  }
  *out = s;
  return Status::OK();
}

Status MakeIndexKey(const Value& v, std::string_view primary_key, std::string* out) {
  TELSM_RETURN_NOT_OK(IndexValueBytes(v, out));
  out->push_back('\0');
  out->append(primary_key);
  return Status::OK();
}

bool SplitIndexKey(std::string_view index_key, std::string_view* value_bytes,
                   std::string_view* primary_key) {
  size_t z = index_key.find('\0');
  if (z == std::string_view::npos) return false;
  *value_bytes = index_key.substr(0, z);
  *primary_key = index_key.substr(z + 1);
  return true;
}

Transformer::Transformer(ColumnFamilyDescriptor source,
                         std::vector<ColumnFamilyDescriptor> destinations)
    : source_(std::move(source)), dests_(std::move(destinations)) {}

Status Transformer::Prepare(PriorValueLookup lookup) {
  std::lock_guard<std::mutex> l(mu_);
  if (held_) return Status::Busy("transformer of " + source_.name + " is in use");
  held_ = true;
  lookup_ = std::move(lookup);
  staged_.assign(dests_.size(), {});
  return Status::OK();
}

void Transformer::Stage(size_t dest_index, std::string_view key, SequenceNumber seq,
                        ValueKind kind, std::string value) {
  staged_[dest_index].push_back(Entry{InternalKey{std::string(key), seq, kind}, std::move(value)});
}

Status Transformer::Retrieve(TransformOutputSet* out) {
  std::lock_guard<std::mutex> l(mu_);
  if (!held_) return Status::InvalidArgument("Retrieve without Prepare");
  out->clear();
  for (size_t i = 0; i < dests_.size(); ++i) {
    auto& v = staged_[i];
    std::sort(v.begin(), v.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });
    (*out)[dests_[i].id] = std::move(v);
  }
  staged_.clear();
  lookup_ = nullptr;
  held_ = false;
  return Status::OK();
}

void Transformer::Abort() {
  std::lock_guard<std::mutex> l(mu_);
  staged_.clear();
  lookup_ = nullptr;
  held_ = false;
}

namespace {

class IdentityTransformer : public Transformer {
 public:
  using Transformer::Transformer;
  Status Transform(std::string_view key, SequenceNumber seq, ValueKind kind,
                   std::string_view value) override {
    Stage(0, key, seq, kind, std::string(value));
    return Status::OK();
  }
};

class SplitTransformer : public Transformer {
 public:
  using Transformer::Transformer;
  Status Transform(std::string_view key, SequenceNumber seq, ValueKind kind,
                   std::string_view value) override {
    if (kind == ValueKind::kDelete) {
      for (size_t i = 0; i < dests_.size(); ++i) Stage(i, key, seq, kind, {});
      return Status::OK();
    }
    TELSM_RETURN_NOT_OK(DecodeRecord(source_.format, source_.schema, value, &row_));
    for (size_t i = 0; i < dests_.size(); ++i) {
      const auto& d = dests_[i];
      size_t begin = d.column_offset - source_.column_offset;
      Row sub(row_.begin() + begin, row_.begin() + begin + d.schema.size());
      std::string out;
      TELSM_RETURN_NOT_OK(EncodeRecord(d.format, d.schema, sub, &out));
      Stage(i, key, seq, kind, std::move(out));
    }
    return Status::OK();
  }

 private:
  Row row_;
};

class ConvertTransformer : public Transformer {
 public:
  using Transformer::Transformer;
  Status Transform(std::string_view key, SequenceNumber seq, ValueKind kind,
                   std::string_view value) override {
    if (kind == ValueKind::kDelete) {
      Stage(0, key, seq, kind, {});
      return Status::OK();
    }
    TELSM_RETURN_NOT_OK(DecodeRecord(source_.transformer->from, source_.schema, value, &row_));
    std::string out;
    TELSM_RETURN_NOT_OK(EncodeRecord(source_.transformer->to, source_.schema, row_, &out));
    Stage(0, key, seq, kind, std::move(out));
    return Status::OK();
  }

 private:
  Row row_;
};

// Destination 0 is the primary CF; destination i (i >= 1) indexes
// indexed_columns[i - 1]. Replaced or deleted rows retract their old index
// entries so the index matches the primary at quiescence.
class AugmentTransformer : public Transformer {
 public:
  AugmentTransformer(ColumnFamilyDescriptor source, std::vector<ColumnFamilyDescriptor> dests)
      : Transformer(std::move(source), std::move(dests)) {
    for (const auto& c : source_.transformer->indexed_columns) {
      columns_.push_back(*source_.schema.IndexOf(c));
    }
  }

  Status Transform(std::string_view key, SequenceNumber seq, ValueKind kind,
                   std::string_view value) override {
    Row old_row;
    bool has_old = false;
    if (lookup_) TELSM_RETURN_NOT_OK(lookup_(key, &old_row, &has_old));
    Row row;
    if (kind == ValueKind::kPut) {
      TELSM_RETURN_NOT_OK(DecodeRecord(source_.format, source_.schema, value, &row));
    }
    Stage(0, key, seq, kind, std::string(value));
    for (size_t i = 0; i < columns_.size(); ++i) {
      std::string old_ik, new_ik;
      if (has_old) TELSM_RETURN_NOT_OK(MakeIndexKey(old_row[columns_[i]], key, &old_ik));
      if (kind == ValueKind::kPut) {
        TELSM_RETURN_NOT_OK(MakeIndexKey(row[columns_[i]], key, &new_ik));
        Stage(i + 1, new_ik, seq, ValueKind::kPut, {});
      }
      if (has_old && old_ik != new_ik) Stage(i + 1, old_ik, seq, ValueKind::kDelete, {});
    }
    return Status::OK();
  }

 private:
  std::vector<size_t> columns_;
};

}  // namespace

Status NewTransformer(const ColumnFamilyDescriptor& source,
                      const std::vector<ColumnFamilyDescriptor>& destinations,
                      std::unique_ptr<Transformer>* out) {
  if (!source.transformer) return Status::InvalidArgument(source.name + " has no transformer");
  if (destinations.size() != source.destinations.size()) {
    return Status::InvalidArgument("destination list mismatch for " + source.name);
  }
  switch (source.transformer->kind) {
    case TransformerKind::kIdentity:
      if (destinations.size() != 1) return Status::InvalidArgument("identity needs 1 destination");
      out->reset(new IdentityTransformer(source, destinations));
      break;
    case TransformerKind::kSplit:
      for (const auto& d : destinations) {
        if (d.column_offset < source.column_offset ||
            d.column_offset - source.column_offset + d.schema.size() > source.schema.size()) {
          return Status::InvalidArgument("split destination outside source columns");
        }
      }
      out->reset(new SplitTransformer(source, destinations));
      break;
    case TransformerKind::kConvert:
      if (destinations.size() != 1) return Status::InvalidArgument("convert needs 1 destination");
      out->reset(new ConvertTransformer(source, destinations));
      break;
    case TransformerKind::kAugment:
      if (destinations.size() != 1 + source.transformer->indexed_columns.size()) {
        return Status::InvalidArgument("augment destination count mismatch");
      }
      for (const auto& c : source.transformer->indexed_columns) {
        if (!source.schema.IndexOf(c)) return Status::InvalidArgument("unknown indexed column " + c);
      }
      out->reset(new AugmentTransformer(source, destinations));
      break;
  }
  return Status::OK();
}

}  // namespace telsm
