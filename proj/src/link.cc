#include "telsm/link.h"

#include <algorithm>
#include <deque>
#include <set>

namespace telsm {

Status ValidateAndSort(const std::vector<TransformerSpec>& specs,
                       std::vector<TransformerSpec>* sorted) {
  if (specs.empty()) return Status::InvalidArgument("empty transformer list");
  std::set<TransformerKind> kinds;
  std::vector<TransformerSpec> gradual, rest;
  for (const auto& s : specs) {
    if (!kinds.insert(s.kind).second) {
      return Status::InvalidArgument(std::string("duplicate transformer kind: ") +
                                     TransformerKindName(s.kind));
    }
    if (s.kind == TransformerKind::kConvert && s.from == s.to) {
      return Status::InvalidArgument("convert with identical formats");
    }
    if (s.kind == TransformerKind::kSplit && s.target_group_size == 0) {
      return Status::InvalidArgument("split target_group_size must be >= 1");
    }
    if (s.kind == TransformerKind::kAugment && s.indexed_columns.empty()) {
      return Status::InvalidArgument("augment needs at least one column");
    }
    (s.gradual() ? gradual : rest).push_back(s);
  }
  if (gradual.size() > 1) return Status::InvalidArgument("more than one gradual transformer");
  sorted->clear();
  sorted->insert(sorted->end(), gradual.begin(), gradual.end());
  sorted->insert(sorted->end(), rest.begin(), rest.end());
  return Status::OK();
}

std::vector<ColumnFamilyId> LogicalFamily(const Version& v, ColumnFamilyId root) {
  std::vector<ColumnFamilyId> out;
  std::deque<ColumnFamilyId> q{root};
  while (!q.empty()) {
    ColumnFamilyId id = q.front();
    q.pop_front();
    const CfState* st = v.cf(id);
    if (!st) continue;
    out.push_back(id);
    for (ColumnFamilyId d : st->desc->destinations) q.push_back(d);
  }
  return out;
}

namespace {

// One pipeline step: a Split spec expands into one step per stage.
struct Step {
  TransformerSpec spec;
  int stage = 0;  // 1-based for split steps
};

struct Node {
  ColumnFamilyDescriptor desc;
  bool existing = false;
  size_t step = 0;
  size_t start_offset = 0;  // column offset of the node the pipeline started from
  std::string base;         // name used for split children
};

class Planner {
 public:
  Planner(const Version& v, LinkPlan* plan) : v_(v), plan_(plan) {
    for (const auto& [id, st] : v.cfs) next_id_ = std::max<int>(next_id_, id + 1);
  }

  Status Run(const std::vector<ColumnFamilyId>& starts, const std::vector<TransformerSpec>& specs) {
    for (ColumnFamilyId id : starts) {
      const ColumnFamilyDescriptor& d = *v_.cf(id)->desc;
      for (const auto& spec : specs) {
        if (spec.kind != TransformerKind::kSplit) continue;
        stages_ = PlanSplitStages(d.schema.size(), spec.target_group_size);
        for (size_t s = 0; s < stages_.size(); ++s) steps_.push_back({spec, static_cast<int>(s + 1)});
      }
      break;
    }
    for (const auto& spec : specs) {
      if (spec.kind != TransformerKind::kSplit) steps_.push_back({spec, 0});
    }
    std::deque<Node> queue;
    for (ColumnFamilyId id : starts) {
      Node n;
      n.desc = *v_.cf(id)->desc;
      n.existing = true;
      n.start_offset = n.desc.column_offset;
      n.base = n.desc.name;
      queue.push_back(std::move(n));
    }
    while (!queue.empty()) {
      Node node = std::move(queue.front());
      queue.pop_front();
      // Groups too narrow to split skip the remaining split stages.
      while (node.step < steps_.size() && steps_[node.step].spec.kind == TransformerKind::kSplit &&
             node.desc.schema.size() < 2) {
        ++node.step;
      }
      if (node.step >= steps_.size()) continue;
      std::vector<Node> children;
      TELSM_RETURN_NOT_OK(Expand(node, &children));
      std::vector<ColumnFamilyId> ids;
      for (auto& c : children) ids.push_back(c.desc.id);
      TransformerSpec attached = steps_[node.step].spec;
      if (node.existing) {
        plan_->edits.push_back(VersionEdit::SetLink(node.desc.id, attached, ids));
      } else {
        node.desc.transformer = attached;
        node.desc.destinations = ids;
        Created(node.desc) = node.desc;
      }
      for (auto& c : children) {
        plan_->created.push_back(c.desc);
        if (c.desc.role == CfRole::kRow) queue.push_back(std::move(c));
      }
    }
    for (const auto& d : plan_->created) plan_->edits.push_back(VersionEdit::CreateCf(d));
    // SET_LINK edits must follow the creations they reference.
    std::stable_partition(plan_->edits.begin(), plan_->edits.end(), [](const VersionEdit& e) {
      return e.type == VersionEdit::Type::kCreateCf;
    });
    return Status::OK();
  }

 private:
  ColumnFamilyDescriptor& Created(const ColumnFamilyDescriptor& d) {
    for (auto& c : plan_->created) {
      if (c.id == d.id) return c;
    }
    return plan_->created.emplace_back(d);
  }

  Status NewChild(const Node& parent, std::string name, Node* child) {
    if (v_.FindByName(name) || names_.count(name)) {
      return Status::InvalidArgument("column family name already exists: " + name);
    }
    if (next_id_ >= kNoColumnFamily) return Status::InvalidArgument("too many column families");
    names_.insert(name);
    child->desc = ColumnFamilyDescriptor{};
    child->desc.id = static_cast<ColumnFamilyId>(next_id_++);
    child->desc.name = std::move(name);
    child->desc.schema = parent.desc.schema;
    child->desc.format = parent.desc.format;
    child->desc.kind = CfKind::kInternal;
    child->desc.root_id = parent.desc.root_id;
    child->desc.parent_id = parent.desc.id;
    child->desc.column_offset = parent.desc.column_offset;
    child->existing = false;
    child->step = parent.step + 1;
    child->start_offset = parent.start_offset;
    child->base = parent.base;
    return Status::OK();
  }

  Status Expand(const Node& node, std::vector<Node>* children) {
    if (node.existing) {
      const CfState* st = v_.cf(node.desc.id);
      for (size_t l = 1; l < st->levels.size(); ++l) {
        if (!st->levels[l].empty()) {
          return Status::InvalidArgument(node.desc.name + " already has data below level 0");
        }
      }
    }
    const Step& step = steps_[node.step];
    const Schema& schema = node.desc.schema;
    switch (step.spec.kind) {
      case TransformerKind::kSplit: {
        size_t b = node.desc.column_offset - node.start_offset;
        size_t n = schema.size();
        size_t left = n / 2;
        const ColumnGroups& groups = stages_[step.stage - 1];
        std::pair<size_t, size_t> ranges[2] = {{b, b + left}, {b + left, b + n}};
        for (auto r : ranges) {
          auto it = std::find(groups.begin(), groups.end(), r);
          size_t g = static_cast<size_t>(it - groups.begin());
          Node c;
          TELSM_RETURN_NOT_OK(NewChild(node, node.base + "_l" + std::to_string(step.stage) + "g" +
                                                 std::to_string(g), &c));
          c.desc.schema = schema.Slice(r.first - b, r.second - b);
          c.desc.column_offset = node.desc.column_offset + (r.first - b);
          children->push_back(std::move(c));
        }
        break;
      }
      case TransformerKind::kConvert: {
        if (node.desc.format != step.spec.from) {
          return Status::InvalidArgument(node.desc.name + " is not stored as " +
                                         RecordFormatName(step.spec.from));
        }
        Node c;
        TELSM_RETURN_NOT_OK(NewChild(node, node.desc.name + "_converted", &c));
        c.desc.format = step.spec.to;
        children->push_back(std::move(c));
        break;
      }
      case TransformerKind::kAugment: {
        for (const auto& col : step.spec.indexed_columns) {
          if (!schema.IndexOf(col)) {
            return Status::InvalidArgument("augment column not in " + node.desc.name + ": " + col);
          }
        }
        Node primary;
        TELSM_RETURN_NOT_OK(NewChild(node, node.desc.name + "_primary", &primary));
        children->push_back(std::move(primary));
        for (size_t i = 0; i < step.spec.indexed_columns.size(); ++i) {
          Node c;
          TELSM_RETURN_NOT_OK(
              NewChild(node, node.desc.name + "_secondary_" + std::to_string(i + 1), &c));
          const auto& col = step.spec.indexed_columns[i];
          size_t idx = *schema.IndexOf(col);
          c.desc.schema = schema.Slice(idx, idx + 1);
          c.desc.column_offset = node.desc.column_offset + idx;
          c.desc.role = CfRole::kIndex;
          c.desc.index_column = col;
          children->push_back(std::move(c));
        }
        break;
      }
      case TransformerKind::kIdentity: {
        Node c;
        TELSM_RETURN_NOT_OK(NewChild(node, node.desc.name + "_identity", &c));
        children->push_back(std::move(c));
        break;
      }
    }
    return Status::OK();
  }

  const Version& v_;
  LinkPlan* plan_;
  int next_id_ = 0;
  std::set<std::string> names_;
  std::vector<ColumnGroups> stages_;
  std::vector<Step> steps_;
};

}  // namespace

Status PlanLinks(const Version& v, ColumnFamilyId root, const std::vector<TransformerSpec>& specs,
                 LinkPlan* plan) {
  const CfState* st = v.cf(root);
  if (!st) return Status::InvalidArgument("unknown column family");
  if (!st->desc->user_facing()) {
    return Status::InvalidArgument("transformers link only to user-facing column families");
  }
  if (st->desc->has_transformer()) {
    return Status::InvalidArgument(st->desc->name + " already has a transformer");
  }
  std::vector<TransformerSpec> sorted;
  TELSM_RETURN_NOT_OK(ValidateAndSort(specs, &sorted));
  *plan = LinkPlan{};
  return Planner(v, plan).Run({root}, sorted);
}

Status PlanExtension(const Version& v, ColumnFamilyId root,
                     const std::vector<TransformerSpec>& specs, LinkPlan* plan) {
  const CfState* st = v.cf(root);
  if (!st || !st->desc->user_facing()) return Status::InvalidArgument("unknown user-facing cf");
  if (!st->desc->has_transformer()) return PlanLinks(v, root, specs, plan);

  std::vector<TransformerSpec> existing;
  std::set<TransformerKind> seen;
  std::vector<ColumnFamilyId> terminals;
  for (ColumnFamilyId id : LogicalFamily(v, root)) {
    const auto& d = *v.cf(id)->desc;
    if (d.has_transformer()) {
      if (seen.insert(d.transformer->kind).second) existing.push_back(*d.transformer);
    } else if (d.role == CfRole::kRow) {
      terminals.push_back(id);
    }
  }
  std::vector<TransformerSpec> combined = existing;
  combined.insert(combined.end(), specs.begin(), specs.end());
  std::vector<TransformerSpec> sorted;
  TELSM_RETURN_NOT_OK(ValidateAndSort(combined, &sorted));
  for (const auto& s : specs) {
    if (s.gradual()) return Status::InvalidArgument("gradual transformer must be linked first");
  }
  std::vector<TransformerSpec> tail;
  TELSM_RETURN_NOT_OK(ValidateAndSort(specs, &tail));
  *plan = LinkPlan{};
  return Planner(v, plan).Run(terminals, tail);
}

}  // namespace telsm
