#include "qp/database.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <unordered_set>

namespace qp {

void FactStore::build_index() {
  index_.clear();
  for (uint32_t i = 0; i < facts_.size(); ++i) {
    if (!facts_[i].args.empty()) index_[facts_[i].args[0]].push_back(i);
  }
}

const std::vector<uint32_t>* FactStore::bucket(const Term& first) const {
  auto it = index_.find(first);
  return it == index_.end() ? nullptr : &it->second;
}

void Example::add_fact(Atom fact) {
  PredKey k{fact.pred, fact.arity()};
  local[k].add(std::move(fact));
}

bool operator==(const Example& a, const Example& b) {
  return a.id == b.id && a.key == b.key && a.label == b.label && a.local == b.local;
}

void Database::add_background(Atom fact) {
  if (!fact.ground()) throw NonGroundFactError("non-ground fact: " + to_string(fact));
  PredKey k{fact.pred, fact.arity()};
  background_[k].add(std::move(fact));
}

void Database::add_rule(Clause rule) { rules_.push_back(std::move(rule)); }

void Database::set_key_arity(int32_t k) {
  examples_.key_arity = k;
  examples_.key_vars.clear();
  for (int32_t i = 0; i < k; ++i)
    examples_.key_vars.push_back(Term::variable(i, "K" + std::to_string(i + 1)));
}

Example& Database::add_example(int32_t id, std::vector<Term> key,
                               std::optional<std::string> label) {
  Example e;
  e.id = id;
  e.key = std::move(key);
  e.label = std::move(label);
  examples_.examples.push_back(std::move(e));
  return examples_.examples.back();
}

void Database::set_example_label(size_t index, std::string label) {
  examples_.examples.at(index).label = std::move(label);
}

namespace {

// Cycle detection over the rule dependency graph (head pred -> body preds,
// restricted to rule-defined predicates). Returns the cycle as "p -> q -> p".
std::optional<std::string> find_rule_cycle(
    const std::vector<Clause>& rules,
    const std::unordered_map<PredKey, std::vector<uint32_t>, PredKeyHash>& by_pred) {
  std::unordered_map<PredKey, int, PredKeyHash> state;  // 0 new, 1 open, 2 done
  std::vector<PredKey> path;
  std::optional<std::string> cycle;

  auto pred_name = [](PredKey k) {
    return symbol_name(k.pred) + "/" + std::to_string(k.arity);
  };

  std::function<bool(PredKey)> visit = [&](PredKey p) -> bool {
    state[p] = 1;
    path.push_back(p);
    auto it = by_pred.find(p);
    if (it != by_pred.end()) {
      for (uint32_t ri : it->second) {
        for (const Atom& body_atom : rules[ri].body.atoms) {
          if (body_atom.builtin) continue;
          PredKey q{body_atom.pred, body_atom.arity()};
          if (by_pred.find(q) == by_pred.end()) continue;
          int s = state.count(q) ? state[q] : 0;
          if (s == 1) {
            std::string msg = pred_name(q);
            for (auto pit = path.rbegin(); pit != path.rend(); ++pit) {
              msg = pred_name(*pit) + " -> " + msg;
              if (*pit == q) break;
            }
            cycle = msg;
            return true;
          }
          if (s == 0 && visit(q)) return true;
        }
      }
    }
    path.pop_back();
    state[p] = 2;
    return false;
  };

  for (const Clause& r : rules) {
    PredKey p{r.head.pred, r.head.arity()};
    if ((state.count(p) ? state[p] : 0) == 0 && visit(p)) return cycle;
  }
  return std::nullopt;
}

}  // namespace

void Database::finalize() {
  // Recursion check (also covers self-recursive clauses).
  rules_by_pred_.clear();
  for (uint32_t i = 0; i < rules_.size(); ++i) {
    const Clause& r = rules_[i];
    rules_by_pred_[PredKey{r.head.pred, r.head.arity()}].push_back(i);
  }
  if (auto cycle = find_rule_cycle(rules_, rules_by_pred_))
    throw RecursionError("recursive predicate definition: " + *cycle);

  // Range restriction: every head variable must occur in the body, so rule
  // solutions can never surface unbound variables.
  for (const Clause& r : rules_) {
    std::vector<int32_t> body_vars = variables_of(r.body);
    for (const Term& t : r.head.args) {
      if (t.is_var() &&
          std::find(body_vars.begin(), body_vars.end(), t.var_id()) == body_vars.end())
        throw Error("head variable not bound by body in rule for " + symbol_name(r.head.pred) +
                    "/" + std::to_string(r.head.arity()));
    }
  }

  // Example keys: correct arity, ground, pairwise distinct.
  std::set<std::vector<std::pair<int, int32_t>>> seen_keys;
  for (const Example& e : examples_.examples) {
    if (static_cast<int32_t>(e.key.size()) != examples_.key_arity)
      throw KeyArityMismatch("example " + std::to_string(e.id) + " key arity " +
                             std::to_string(e.key.size()) + ", declared " +
                             std::to_string(examples_.key_arity));
    std::vector<std::pair<int, int32_t>> k;
    for (const Term& t : e.key) {
      if (t.is_var()) throw NonGroundFactError("non-ground example key");
      k.emplace_back(static_cast<int>(t.kind), t.value);
    }
    if (examples_.key_arity > 0 && !seen_keys.insert(k).second)
      throw Error("duplicate example key for example " + std::to_string(e.id));
  }

  for (auto& [k, store] : background_) store.build_index();
  for (Example& e : examples_.examples)
    for (auto& [k, store] : e.local) store.build_index();
  finalized_ = true;
}

const FactStore* Database::background(PredKey k) const {
  auto it = background_.find(k);
  return it == background_.end() ? nullptr : &it->second;
}

const std::vector<uint32_t>* Database::rules_for(PredKey k) const {
  auto it = rules_by_pred_.find(k);
  return it == rules_by_pred_.end() ? nullptr : &it->second;
}

std::vector<PredKey> Database::background_predicates() const {
  std::vector<PredKey> keys;
  keys.reserve(background_.size());
  for (const auto& [k, _] : background_) keys.push_back(k);
  std::sort(keys.begin(), keys.end(), [](PredKey a, PredKey b) {
    const std::string& an = symbol_name(a.pred);
    const std::string& bn = symbol_name(b.pred);
    return an != bn ? an < bn : a.arity < b.arity;
  });
  return keys;
}

bool operator==(const Database& a, const Database& b) {
  return a.background_ == b.background_ && a.rules_ == b.rules_ && a.examples_ == b.examples_;
}

std::vector<Atom> facts_visible(const Database& db, const Example& e, PredKey pred) {
  std::vector<Atom> out;
  if (const FactStore* bg = db.background(pred))
    out.insert(out.end(), bg->facts().begin(), bg->facts().end());
  auto it = e.local.find(pred);
  if (it != e.local.end())
    out.insert(out.end(), it->second.facts().begin(), it->second.facts().end());
  return out;
}

std::vector<PredKey> local_predicates_sorted(const Example& e) {
  std::vector<PredKey> keys;
  keys.reserve(e.local.size());
  for (const auto& [k, _] : e.local) keys.push_back(k);
  std::sort(keys.begin(), keys.end(), [](PredKey a, PredKey b) {
    const std::string& an = symbol_name(a.pred);
    const std::string& bn = symbol_name(b.pred);
    return an != bn ? an < bn : a.arity < b.arity;
  });
  return keys;
}

}  // namespace qp
