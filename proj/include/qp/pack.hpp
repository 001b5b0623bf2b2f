#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qp/term.hpp"

namespace qp {

// One node of a query pack. Nodes live in QueryPack::nodes in preorder and
// reference each other by index. A node is a leaf iff it has no children iff
// it carries a leaf query id (the 0-based position of the query in the input
// list). conj may be empty at the root and at leaves that mark a query which
// is a strict prefix of a sibling.
struct PackNode {
  Conjunction conj;
  std::vector<int32_t> children;
  int32_t leaf_query = -1;
  int32_t parent = -1;
  int32_t depth = 0;

  // Labels, 0 = unlabelled. Non-leaf nodes get qp_number (depth-first,
  // left-to-right, root = 1; the root's father counts as 0). Leaves get
  // query_number 1..n left-to-right. Every node gets child_number
  // 1..|siblings| within its parent (root = 1).
  int32_t qp_number = 0;
  int32_t child_number = 0;
  int32_t query_number = 0;

  bool is_leaf() const { return children.empty(); }
};

struct QueryPack {
  std::vector<PackNode> nodes;  // preorder; nodes[0] is the root
  int32_t query_count = 0;
  int32_t max_branching = 1;  // max |children| over nodes, at least 1
  int32_t depth = 0;          // max node depth, root = 0
  int32_t var_count = 0;      // variable ids are < var_count
  std::vector<Term> key_vars;  // declared key tuple (may be empty)

  const PackNode& root() const { return nodes.front(); }
  std::vector<int32_t> leaf_ids() const;  // leaves in left-to-right order
  std::vector<int32_t> key_var_ids() const;
};

// Maximal shared-prefix trie over the input queries: two queries share a path
// exactly as long as their longest common literal prefix (syntactic equality
// including variable ids). A query that is a strict prefix of another becomes
// an empty-conj leaf under the shared node. Child order follows input order
// restricted to the subtree. Throws EmptyInput on an empty list.
QueryPack build_pack(std::span<const Conjunction> queries);

// Fills qp/child/query numbers; deterministic and idempotent.
void label_pack(QueryPack& pack);

// Path concatenations root -> ... -> node -> ... -> leaf for every leaf below
// `node`, in left-to-right leaf order. At the root this reproduces the pack's
// member queries.
std::vector<Conjunction> dependent_queries(const QueryPack& pack, int32_t node);

// Structural and label invariant check; empty result means valid.
std::vector<std::string> validate_pack(const QueryPack& pack);

// Text form:
//   pack := conj | conj ',' '(' pack (' or ' pack)+ ')' | '(' pack (' or ' pack)+ ')'
// An empty-conj leaf is written as the atom `true`. A leading `#key X, Y.`
// line declares the pack's key variables. parse_pack preserves the written
// tree shape; emit_pack(parse_pack(t)) is the canonical form of t.
QueryPack parse_pack(std::string_view text);
std::string emit_pack(const QueryPack& pack);

nlohmann::json pack_to_json(const QueryPack& pack);

// Recomputes query_count / max_branching / depth / var_count and parent /
// depth links from the tree structure. Used by the builders.
void refresh_pack_stats(QueryPack& pack);

}  // namespace qp
