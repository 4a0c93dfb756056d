#pragma once

#include <vector>

#include "telsm/column_family.h"
#include "telsm/status.h"
#include "telsm/transformer_spec.h"
#include "telsm/version.h"

namespace telsm {

// Rejects empty lists, more than one gradual spec and repeated kinds;
// returns the gradual spec first and the rest in their given order.
Status ValidateAndSort(const std::vector<TransformerSpec>& specs,
                       std::vector<TransformerSpec>* sorted);

// Manifest edits that create the internal CFs of a pipeline and attach
// transformers to existing ones.
struct LinkPlan {
  std::vector<ColumnFamilyDescriptor> created;
  EditGroup edits;
};

// Links `specs` onto the user-facing CF `root`, which must not carry a
// transformer yet.
Status PlanLinks(const Version& v, ColumnFamilyId root, const std::vector<TransformerSpec>& specs,
                 LinkPlan* plan);

// Continues an existing pipeline: `specs` are linked onto every terminal row
// CF of the logical family rooted at `root` (the root itself if it has no
// pipeline yet). The combined pipeline must still pass ValidateAndSort with
// the gradual spec first.
Status PlanExtension(const Version& v, ColumnFamilyId root,
                     const std::vector<TransformerSpec>& specs, LinkPlan* plan);

// Members of the logical family rooted at `root`, breadth first.
std::vector<ColumnFamilyId> LogicalFamily(const Version& v, ColumnFamilyId root);

}  // namespace telsm
