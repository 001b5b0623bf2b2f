#include "qp/pack.hpp"

#include <algorithm>
#include <functional>

#include <nlohmann/json.hpp>

#include "qp/errors.hpp"

namespace qp {

std::vector<int32_t> QueryPack::leaf_ids() const {
  std::vector<int32_t> out;
  std::function<void(int32_t)> walk = [&](int32_t id) {
    if (nodes[id].is_leaf()) {
      out.push_back(id);
      return;
    }
    for (int32_t c : nodes[id].children) walk(c);
  };
  if (!nodes.empty()) walk(0);
  return out;
}

std::vector<int32_t> QueryPack::key_var_ids() const {
  std::vector<int32_t> out;
  out.reserve(key_vars.size());
  for (const Term& t : key_vars) out.push_back(t.var_id());
  return out;
}

void refresh_pack_stats(QueryPack& pack) {
  pack.query_count = 0;
  pack.max_branching = 1;
  pack.depth = 0;
  int32_t max_var = -1;
  for (const Term& k : pack.key_vars) max_var = std::max(max_var, k.var_id());

  std::function<void(int32_t, int32_t, int32_t)> walk = [&](int32_t id, int32_t parent,
                                                            int32_t depth) {
    PackNode& n = pack.nodes[id];
    n.parent = parent;
    n.depth = depth;
    max_var = std::max(max_var, max_var_id(n.conj));
    pack.depth = std::max(pack.depth, depth);
    if (n.is_leaf()) ++pack.query_count;
    pack.max_branching = std::max(pack.max_branching, static_cast<int32_t>(n.children.size()));
    for (int32_t c : n.children) walk(c, id, depth + 1);
  };
  if (!pack.nodes.empty()) walk(0, -1, 0);
  pack.var_count = max_var + 1;
}

namespace {

struct Entry {
  int32_t query;
  size_t offset;
};

// Builds the subtree for `entries` (all sharing the path consumed so far) and
// returns its node id. Nodes are appended in preorder.
int32_t build_node(QueryPack& pack, std::span<const Conjunction> queries,
                   std::vector<Entry> entries) {
  int32_t id = static_cast<int32_t>(pack.nodes.size());
  pack.nodes.emplace_back();

  if (entries.size() == 1) {
    const Entry& e = entries.front();
    PackNode& n = pack.nodes[id];
    n.conj.atoms.assign(queries[e.query].atoms.begin() + static_cast<long>(e.offset),
                        queries[e.query].atoms.end());
    n.leaf_query = e.query;
    return id;
  }

  // Extend the shared segment while every entry agrees on the next literal.
  Conjunction shared;
  for (;;) {
    bool all_have = true;
    for (const Entry& e : entries)
      if (e.offset >= queries[e.query].size()) all_have = false;
    if (!all_have) break;
    const Atom& first = queries[entries[0].query].atoms[entries[0].offset];
    bool all_equal = true;
    for (const Entry& e : entries)
      if (!(queries[e.query].atoms[e.offset] == first)) all_equal = false;
    if (!all_equal) break;
    shared.atoms.push_back(first);
    for (Entry& e : entries) ++e.offset;
  }
  pack.nodes[id].conj = std::move(shared);

  // Group the remainders: exhausted entries become empty-conj leaves, the
  // rest group by their next literal; groups ordered by first occurrence.
  std::vector<std::vector<Entry>> groups;
  for (const Entry& e : entries) {
    if (e.offset >= queries[e.query].size()) {
      groups.push_back({e});  // strict prefix: its own empty leaf
      continue;
    }
    const Atom& next = queries[e.query].atoms[e.offset];
    bool placed = false;
    for (auto& g : groups) {
      const Entry& head = g.front();
      if (head.offset < queries[head.query].size() &&
          queries[head.query].atoms[head.offset] == next) {
        g.push_back(e);
        placed = true;
        break;
      }
    }
    if (!placed) groups.push_back({e});
  }

  std::vector<int32_t> children;
  children.reserve(groups.size());
  for (auto& g : groups) children.push_back(build_node(pack, queries, std::move(g)));
  pack.nodes[id].children = std::move(children);
  return id;
}

}  // namespace

QueryPack build_pack(std::span<const Conjunction> queries) {
  if (queries.empty()) throw EmptyInput("build_pack: empty query list");
  QueryPack pack;
  std::vector<Entry> entries;
  entries.reserve(queries.size());
  for (int32_t i = 0; i < static_cast<int32_t>(queries.size()); ++i)
    entries.push_back({i, 0});
  build_node(pack, queries, std::move(entries));
  refresh_pack_stats(pack);
  return pack;
}

void label_pack(QueryPack& pack) {
  int32_t next_qp = 1;
  int32_t next_query = 1;
  std::function<void(int32_t, int32_t)> walk = [&](int32_t id, int32_t child_number) {
    PackNode& n = pack.nodes[id];
    n.child_number = child_number;
    if (n.is_leaf()) {
      n.qp_number = 0;
      n.query_number = next_query++;
      return;
    }
    n.qp_number = next_qp++;
    n.query_number = 0;
    for (size_t i = 0; i < n.children.size(); ++i)
      walk(n.children[i], static_cast<int32_t>(i) + 1);
  };
  if (!pack.nodes.empty()) walk(0, 1);
}

std::vector<Conjunction> dependent_queries(const QueryPack& pack, int32_t node) {
  // Prefix from the root down to (and including) `node`.
  std::vector<int32_t> path;
  for (int32_t p = node; p != -1; p = pack.nodes[p].parent) path.push_back(p);
  std::reverse(path.begin(), path.end());
  Conjunction prefix;
  for (int32_t id : path)
    prefix.atoms.insert(prefix.atoms.end(), pack.nodes[id].conj.atoms.begin(),
                        pack.nodes[id].conj.atoms.end());

  std::vector<Conjunction> out;
  std::function<void(int32_t, Conjunction)> walk = [&](int32_t id, Conjunction acc) {
    const PackNode& n = pack.nodes[id];
    if (id != node)
      acc.atoms.insert(acc.atoms.end(), n.conj.atoms.begin(), n.conj.atoms.end());
    if (n.is_leaf()) {
      out.push_back(std::move(acc));
      return;
    }
    for (int32_t c : n.children) walk(c, acc);
  };
  walk(node, prefix);
  return out;
}

std::vector<std::string> validate_pack(const QueryPack& pack) {
  std::vector<std::string> violations;
  auto complain = [&](std::string msg) { violations.push_back(std::move(msg)); };

  if (pack.nodes.empty()) {
    complain("pack has no nodes");
    return violations;
  }

  int32_t leaf_count = 0;
  int32_t max_branch = 1;
  int32_t max_depth = 0;
  std::vector<int32_t> leaf_queries;
  bool labelled = pack.nodes[0].qp_number != 0 || pack.nodes[0].query_number != 0;
  int32_t expect_qp = 1;
  int32_t expect_query = 1;

  std::function<void(int32_t, int32_t, int32_t, int32_t)> walk =
      [&](int32_t id, int32_t parent, int32_t depth, int32_t child_number) {
        const PackNode& n = pack.nodes[id];
        bool leaf = n.children.empty();
        if (leaf != (n.leaf_query >= 0))
          complain("node " + std::to_string(id) + ": leaf iff children empty iff query id present");
        if (n.parent != parent) complain("node " + std::to_string(id) + ": bad parent link");
        if (n.depth != depth) complain("node " + std::to_string(id) + ": bad depth");
        max_depth = std::max(max_depth, depth);
        max_branch = std::max(max_branch, static_cast<int32_t>(n.children.size()));
        if (labelled && n.child_number != child_number)
          complain("node " + std::to_string(id) + ": child number " +
                   std::to_string(n.child_number) + ", expected " + std::to_string(child_number));
        if (leaf) {
          ++leaf_count;
          leaf_queries.push_back(n.leaf_query);
          if (labelled && n.query_number != expect_query)
            complain("leaf " + std::to_string(id) + ": query number " +
                     std::to_string(n.query_number) + " not left-to-right (expected " +
                     std::to_string(expect_query) + ")");
          ++expect_query;
          return;
        }
        if (labelled && n.qp_number != expect_qp)
          complain("node " + std::to_string(id) + ": qp number " + std::to_string(n.qp_number) +
                   " not depth-first (expected " + std::to_string(expect_qp) + ")");
        ++expect_qp;
        // Prefix maximality: no two children may begin with the same literal.
        for (size_t i = 0; i < n.children.size(); ++i) {
          const PackNode& a = pack.nodes[n.children[i]];
          if (a.conj.empty()) continue;
          for (size_t j = i + 1; j < n.children.size(); ++j) {
            const PackNode& b = pack.nodes[n.children[j]];
            if (!b.conj.empty() && a.conj.atoms[0] == b.conj.atoms[0])
              complain("node " + std::to_string(id) + ": children " + std::to_string(i) + " and " +
                       std::to_string(j) + " share their first literal (incomplete sharing)");
          }
        }
        for (size_t i = 0; i < n.children.size(); ++i)
          walk(n.children[i], id, depth + 1, static_cast<int32_t>(i) + 1);
      };
  walk(0, -1, 0, 1);

  if (pack.query_count != leaf_count)
    complain("query count " + std::to_string(pack.query_count) + " != leaf count " +
             std::to_string(leaf_count));
  if (pack.max_branching != max_branch)
    complain("max branching " + std::to_string(pack.max_branching) + " != recomputed " +
             std::to_string(max_branch));
  if (pack.depth != max_depth)
    complain("depth " + std::to_string(pack.depth) + " != recomputed " + std::to_string(max_depth));

  std::vector<int32_t> sorted = leaf_queries;
  std::sort(sorted.begin(), sorted.end());
  for (int32_t i = 0; i < static_cast<int32_t>(sorted.size()); ++i)
    if (sorted[static_cast<size_t>(i)] != i) {
      complain("leaf query ids are not a permutation of 0..n-1");
      break;
    }
  return violations;
}

nlohmann::json pack_to_json(const QueryPack& pack) {
  std::function<nlohmann::json(int32_t)> walk = [&](int32_t id) {
    const PackNode& n = pack.nodes[id];
    nlohmann::json j;
    j["conj"] = nlohmann::json::array();
    for (const Atom& a : n.conj.atoms) j["conj"].push_back(to_string(a));
    j["ch"] = n.child_number;
    if (n.is_leaf()) {
      j["q"] = n.query_number;
    } else {
      j["qp"] = n.qp_number;
      j["children"] = nlohmann::json::array();
      for (int32_t c : n.children) j["children"].push_back(walk(c));
    }
    return j;
  };
  nlohmann::json j;
  j["tree"] = walk(0);
  j["query_count"] = pack.query_count;
  j["bf"] = pack.max_branching;
  j["depth"] = pack.depth;
  if (!pack.key_vars.empty()) {
    j["key"] = nlohmann::json::array();
    for (const Term& k : pack.key_vars) j["key"].push_back(to_string(k));
  }
  return j;
}

}  // namespace qp
