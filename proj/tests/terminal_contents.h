#pragma once

#include <map>
#include <string>

#include "telsm/codec.h"
#include "telsm/db.h"
#include "telsm/iterator.h"
#include "telsm/link.h"

namespace telsm::testing {

// (leaf tag, key) -> decoded row over the terminal CFs of `root`. The tag is
// the leaf's column offset and sub-schema, so differently named but
// equivalent leaves compare equal. Index entries map to empty rows.
using TerminalContents = std::map<std::pair<std::string, std::string>, Row>;

inline Status DumpTerminal(DB* db, ColumnFamilyId root, TerminalContents* out,
                           bool* upstream_empty = nullptr) {
  out->clear();
  if (upstream_empty) *upstream_empty = true;
  auto v = db->CurrentVersion();
  for (auto id : LogicalFamily(*v, root)) {
    const auto& d = *v->cf(id)->desc;
    if (d.has_transformer()) {
      if (upstream_empty && v->CfFiles(id) != 0) *upstream_empty = false;
      continue;
    }
    std::vector<std::unique_ptr<InternalIterator>> runs;
    for (const auto& level : v->cf(id)->levels) {
      for (const auto& f : level) runs.push_back(f->table->NewIterator());
    }
    NewestVersionIterator it(NewMergingIterator(std::move(runs)), kMaxSequenceNumber);
    std::string tag = std::to_string(d.column_offset) + ":" + d.schema.ToString() +
                      (d.role == CfRole::kIndex ? ":index" : "");
    for (it.SeekToFirst(); it.Valid(); it.Next()) {
      if (it.kind() == ValueKind::kDelete) continue;
      Row r;
      if (d.role == CfRole::kRow) TELSM_RETURN_NOT_OK(DecodeRecord(d.format, d.schema, it.value(), &r));
      (*out)[{tag, std::string(it.user_key())}] = std::move(r);
    }
  }
  return Status::OK();
}

}  // namespace telsm::testing
