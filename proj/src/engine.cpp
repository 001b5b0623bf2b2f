#include "qp/engine.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <ostream>

#include <nlohmann/json.hpp>

#include "qp/errors.hpp"

namespace qp {

// ---------------------------------------------------------------------------
// BindingEnv

void BindingEnv::reset(size_t nvars) {
  trail_.clear();
  slots_.clear();
  slots_.reserve(nvars);
  for (size_t i = 0; i < nvars; ++i) slots_.push_back(Term::variable(static_cast<int32_t>(i)));
}

void BindingEnv::ensure(size_t nvars) {
  while (slots_.size() < nvars) slots_.push_back(Term::variable(static_cast<int32_t>(slots_.size())));
}

int32_t BindingEnv::fresh_block(int32_t count) {
  int32_t base = static_cast<int32_t>(slots_.size());
  for (int32_t i = 0; i < count; ++i) slots_.push_back(Term::variable(base + i));
  return base;
}

Term BindingEnv::deref(Term t) const {
  while (t.is_var()) {
    const Term& b = slots_[static_cast<size_t>(t.var_id())];
    if (b.is_var() && b.var_id() == t.var_id()) return t;  // unbound
    t = b;
  }
  return t;
}

void BindingEnv::bind(int32_t var, const Term& value) {
  slots_[static_cast<size_t>(var)] = value;
  trail_.push_back(var);
}

bool BindingEnv::unify(Term a, Term b) {
  a = deref(a);
  b = deref(b);
  if (a == b) return true;
  if (a.is_var()) {
    bind(a.var_id(), b);
    return true;
  }
  if (b.is_var()) {
    bind(b.var_id(), a);
    return true;
  }
  return false;
}

bool BindingEnv::unify_args(const Atom& goal, const Atom& head) {
  for (size_t i = 0; i < goal.args.size(); ++i)
    if (!unify(goal.args[i], head.args[i])) return false;
  return true;
}

void BindingEnv::undo_to(size_t mark) {
  while (trail_.size() > mark) {
    int32_t v = trail_.back();
    trail_.pop_back();
    slots_[static_cast<size_t>(v)] = Term::variable(v);
  }
}

void BindingEnv::shrink_vars(size_t count) {
  if (slots_.size() > count) slots_.resize(count);
}

// ---------------------------------------------------------------------------
// WorkCounters

void WorkCounters::init_for_pack(const QueryPack& pack) {
  nodes_.assign(pack.nodes.size(), NodeCounters{});
  node_depths_.clear();
  node_depths_.reserve(pack.nodes.size());
  for (const PackNode& n : pack.nodes) node_depths_.push_back(n.depth);
}

std::vector<double> WorkCounters::level_sums() const {
  int32_t max_depth = 0;
  for (int32_t d : node_depths_) max_depth = std::max(max_depth, d);
  std::vector<double> sums(static_cast<size_t>(max_depth) + 1, 0.0);
  for (size_t i = 0; i < nodes_.size(); ++i)
    sums[static_cast<size_t>(node_depths_[i])] += static_cast<double>(nodes_[i].literal_calls);
  return sums;
}

void WorkCounters::merge(const WorkCounters& other) {
  unify_attempts += other.unify_attempts;
  fact_lookups += other.fact_lookups;
  builtin_evals += other.builtin_evals;
  rule_expansions += other.rule_expansions;
  leaf_successes += other.leaf_successes;
  duplicate_reports += other.duplicate_reports;
  invariant_violations += other.invariant_violations;
  if (nodes_.empty()) {
    nodes_ = other.nodes_;
    node_depths_ = other.node_depths_;
    return;
  }
  assert(nodes_.size() == other.nodes_.size());
  for (size_t i = 0; i < nodes_.size() && i < other.nodes_.size(); ++i) {
    nodes_[i].entries += other.nodes_[i].entries;
    nodes_[i].solutions += other.nodes_[i].solutions;
    nodes_[i].literal_calls += other.nodes_[i].literal_calls;
  }
}

nlohmann::json work_report(const WorkCounters& wc) {
  nlohmann::json j;
  j["global"] = {
      {"unify_attempts", wc.unify_attempts},
      {"fact_lookups", wc.fact_lookups},
      {"builtin_evals", wc.builtin_evals},
      {"rule_expansions", wc.rule_expansions},
      {"leaf_successes", wc.leaf_successes},
      {"duplicate_reports", wc.duplicate_reports},
      {"invariant_violations", wc.invariant_violations},
  };
  j["work_units"] = wc.work_units();
  if (wc.has_nodes()) {
    j["nodes"] = nlohmann::json::array();
    const auto& depths = wc.node_depths();
    for (size_t i = 0; i < wc.nodes().size(); ++i) {
      const NodeCounters& n = wc.nodes()[i];
      j["nodes"].push_back({{"node", i},
                            {"depth", depths[i]},
                            {"entries", n.entries},
                            {"solutions", n.solutions},
                            {"literal_calls", n.literal_calls}});
    }
    j["level_sums"] = wc.level_sums();
  }
  return j;
}

// ---------------------------------------------------------------------------
// ResultSet

ResultSet::ResultSet(int32_t query_count, int32_t example_count)
    : query_count_(query_count),
      example_count_(example_count),
      stride_((static_cast<size_t>(std::max(example_count, 0)) + 63) / 64),
      bits_(static_cast<size_t>(std::max(query_count, 0)) * stride_, 0) {}

bool ResultSet::get(int32_t query, int32_t example) const {
  size_t idx = static_cast<size_t>(query) * stride_ + static_cast<size_t>(example) / 64;
  return (bits_[idx] >> (static_cast<size_t>(example) % 64)) & 1u;
}

bool ResultSet::set(int32_t query, int32_t example) {
  size_t idx = static_cast<size_t>(query) * stride_ + static_cast<size_t>(example) / 64;
  uint64_t mask = uint64_t{1} << (static_cast<size_t>(example) % 64);
  bool prev = bits_[idx] & mask;
  bits_[idx] |= mask;
  return prev;
}

uint64_t ResultSet::row_popcount(int32_t query) const {
  uint64_t count = 0;
  size_t base = static_cast<size_t>(query) * stride_;
  for (size_t w = 0; w < stride_; ++w) count += static_cast<uint64_t>(std::popcount(bits_[base + w]));
  return count;
}

void ResultSet::write_csv(std::ostream& out, const Database& db) const {
  out << "query_id,example_id\n";
  for (int32_t q = 0; q < query_count_; ++q)
    for (int32_t e = 0; e < example_count_; ++e)
      if (get(q, e)) out << q << "," << db.examples().examples[static_cast<size_t>(e)].id << "\n";
}

void ResultSet::write_bitmap(std::ostream& out) const {
  auto write_u64 = [&](uint64_t v) {
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  write_u64(static_cast<uint64_t>(query_count_));
  write_u64(static_cast<uint64_t>(example_count_));
  size_t row_bytes = (static_cast<size_t>(example_count_) + 7) / 8;
  for (int32_t q = 0; q < query_count_; ++q) {
    size_t base = static_cast<size_t>(q) * stride_;
    for (size_t b = 0; b < row_bytes; ++b) {
      uint64_t word = bits_[base + b / 8];
      out.put(static_cast<char>((word >> (8 * (b % 8))) & 0xFF));
    }
  }
}

std::optional<Strategy> strategy_from_string(std::string_view s) {
  if (s == "separate") return Strategy::Separate;
  if (s == "disjoint") return Strategy::Disjoint;
  if (s == "packed") return Strategy::Packed;
  return std::nullopt;
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Separate:
      return "separate";
    case Strategy::Disjoint:
      return "disjoint";
    case Strategy::Packed:
      return "packed";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// SolutionCursor

namespace {

Atom rename_vars(const Atom& a, int32_t base) {
  Atom out = a;
  for (Term& t : out.args)
    if (t.is_var()) t.value += base;
  return out;
}

}  // namespace

SolutionCursor::SolutionCursor(EvalContext ctx, const Conjunction& conj, int32_t node)
    : ctx_(ctx) {
  goals_.reserve(conj.atoms.size());
  for (const Atom& a : conj.atoms) goals_.push_back({&a, node});
  entry_trail_ = ctx_.env->mark();
  entry_vars_ = ctx_.env->var_count();
}

SolutionCursor::SolutionCursor(EvalContext ctx, std::vector<Goal> goals)
    : ctx_(ctx), goals_(std::move(goals)) {
  entry_trail_ = ctx_.env->mark();
  entry_vars_ = ctx_.env->var_count();
}

SolutionCursor::~SolutionCursor() {
  if (!finished_) rollback_all();
}

void SolutionCursor::rollback_all() {
  ctx_.env->undo_to(entry_trail_);
  ctx_.env->shrink_vars(entry_vars_);
  overlay_.clear();
  cps_.clear();
}

SolutionCursor::GoalRef SolutionCursor::next_of(GoalRef g) const {
  if (g.cell) return g.cell->next;
  return GoalRef{nullptr, g.base + 1};
}

const Atom* SolutionCursor::atom_at(GoalRef g, int32_t* node) const {
  if (g.cell) {
    *node = g.cell->node;
    return &g.cell->atom;
  }
  *node = goals_[g.base].node;
  return goals_[g.base].atom;
}

bool SolutionCursor::eval_builtin(const Atom& goal) {
  BindingEnv& env = *ctx_.env;
  Term l = env.deref(goal.args[0]);
  Term r = env.deref(goal.args[1]);
  int32_t p = goal.pred;
  if (p == builtins::eq()) return env.unify(l, r);
  if (!l.is_ground() || !r.is_ground())
    throw BuiltinModeError("comparison on unbound variable in '" + to_string(goal) + "'");
  if (p == builtins::neq()) return !(l == r);
  int c = Term::compare_ground(l, r);
  return p == builtins::lt() ? c < 0 : c <= 0;
}

bool SolutionCursor::advance(ChoicePoint& cp, GoalRef& cont) {
  BindingEnv& env = *ctx_.env;
  WorkCounters& wc = *ctx_.wc;
  const Atom& goal = *cp.atom;
  const bool charge_node = cp.node >= 0 && wc.has_nodes();

  if (goal.builtin) {
    if (cp.builtin_done) return false;
    cp.builtin_done = true;
    ++wc.builtin_evals;
    if (charge_node) ++wc.node(cp.node).literal_calls;
    if (eval_builtin(goal)) {
      cont = next_of(cp.goal);
      return true;
    }
    env.undo_to(cp.trail_mark);
    return false;
  }

  for (;;) {
    if (cp.stage < 2) {
      const FactStore* store = cp.stores[cp.stage];
      if (store) {
        const std::vector<uint32_t>* bucket = cp.buckets[cp.stage];
        size_t limit = cp.use_bucket ? (bucket ? bucket->size() : 0) : store->size();
        while (cp.pos < limit) {
          const Atom& fact =
              cp.use_bucket ? store->facts()[(*bucket)[cp.pos]] : store->facts()[cp.pos];
          ++cp.pos;
          ++wc.fact_lookups;
          ++wc.unify_attempts;
          if (charge_node) ++wc.node(cp.node).literal_calls;
          if (env.unify_args(goal, fact)) {
            cont = next_of(cp.goal);
            return true;
          }
          env.undo_to(cp.trail_mark);
        }
      }
      ++cp.stage;
      cp.pos = 0;
      continue;
    }
    // Rules.
    if (cp.rules) {
      while (cp.pos < cp.rules->size()) {
        const Clause& rule = ctx_.db->rules()[(*cp.rules)[cp.pos]];
        ++cp.pos;
        ++wc.rule_expansions;
        ++wc.unify_attempts;
        if (charge_node) ++wc.node(cp.node).literal_calls;
        int32_t base = env.fresh_block(rule.var_count);
        Atom head = rename_vars(rule.head, base);
        if (env.unify_args(goal, head)) {
          GoalRef c = next_of(cp.goal);
          for (auto it = rule.body.atoms.rbegin(); it != rule.body.atoms.rend(); ++it) {
            overlay_.push_back(GoalCell{rename_vars(*it, base), cp.node, c});
            c = GoalRef{&overlay_.back(), 0};
          }
          cont = c;
          return true;
        }
        env.undo_to(cp.trail_mark);
        env.shrink_vars(cp.var_mark);
      }
    }
    return false;
  }
}

bool SolutionCursor::next() {
  if (finished_) return false;
  BindingEnv& env = *ctx_.env;
  GoalRef g{nullptr, 0};
  bool redo = started_;
  started_ = true;

  for (;;) {
    if (redo) {
      if (cps_.empty()) {
        finished_ = true;
        rollback_all();
        return false;
      }
      ChoicePoint& cp = cps_.back();
      env.undo_to(cp.trail_mark);
      env.shrink_vars(cp.var_mark);
      overlay_.resize(cp.overlay_mark);
      if (advance(cp, g))
        redo = false;
      else
        cps_.pop_back();
      continue;
    }
    if (!g.cell && g.base >= goals_.size()) return true;  // all goals solved

    ChoicePoint cp;
    cp.goal = g;
    cp.atom = atom_at(g, &cp.node);
    cp.trail_mark = env.mark();
    cp.var_mark = env.var_count();
    cp.overlay_mark = overlay_.size();
    if (!cp.atom->builtin) {
      PredKey key{cp.atom->pred, cp.atom->arity()};
      cp.stores[0] = ctx_.db->background(key);
      cp.stores[1] = nullptr;
      if (ctx_.example) {
        auto it = ctx_.example->local.find(key);
        if (it != ctx_.example->local.end()) cp.stores[1] = &it->second;
      }
      if (cp.atom->arity() >= 1) {
        Term first = env.deref(cp.atom->args[0]);
        if (first.is_ground()) {
          cp.use_bucket = true;
          for (int s = 0; s < 2; ++s)
            cp.buckets[s] = cp.stores[s] ? cp.stores[s]->bucket(first) : nullptr;
        }
      }
      cp.rules = ctx_.db->rules_for(key);
    }
    cps_.push_back(cp);
    redo = true;
  }
}

Substitution SolutionCursor::snapshot(std::span<const int32_t> vars) const {
  Substitution s;
  for (int32_t v : vars) {
    Term t = ctx_.env->deref(Term::variable(v));
    if (!(t.is_var() && t.var_id() == v)) s.bind(v, t);
  }
  return s;
}

std::optional<Substitution> next_solution(SolutionCursor& cursor, std::span<const int32_t> vars) {
  if (!cursor.next()) return std::nullopt;
  return cursor.snapshot(vars);
}

// ---------------------------------------------------------------------------
// PackState

PackState::PackState(const QueryPack& pack)
    : pack_(&pack), links_(pack.nodes.size()), heads_(pack.nodes.size()) {}

void PackState::touch(int32_t node) {
  Head& h = heads_[static_cast<size_t>(node)];
  if (h.epoch == epoch_) return;
  const std::vector<int32_t>& children = pack_->nodes[static_cast<size_t>(node)].children;
  h.epoch = epoch_;
  h.count = static_cast<int32_t>(children.size());
  h.first = children.empty() ? -1 : children.front();
  for (size_t i = 0; i < children.size(); ++i) {
    Links& l = links_[static_cast<size_t>(children[i])];
    l.epoch = epoch_;
    l.removed = false;
    l.prev = i == 0 ? -1 : children[i - 1];
    l.next = i + 1 == children.size() ? -1 : children[i + 1];
  }
}

int32_t PackState::first_alive(int32_t node) {
  touch(node);
  return heads_[static_cast<size_t>(node)].first;
}

int32_t PackState::next_alive(int32_t child) const {
  const Links& l = links_[static_cast<size_t>(child)];
  assert(l.epoch == epoch_);
  return l.next;
}

bool PackState::has_alive_children(int32_t node) { return alive_count(node) > 0; }

int32_t PackState::alive_count(int32_t node) {
  touch(node);
  return heads_[static_cast<size_t>(node)].count;
}

bool PackState::removed(int32_t node) const {
  const Links& l = links_[static_cast<size_t>(node)];
  return l.epoch == epoch_ && l.removed;
}

void PackState::remove(int32_t child) {
  int32_t parent = pack_->nodes[static_cast<size_t>(child)].parent;
  if (parent < 0) return;  // the root is never removed
  touch(parent);
  Links& l = links_[static_cast<size_t>(child)];
  if (l.removed) return;
  if (l.prev != -1)
    links_[static_cast<size_t>(l.prev)].next = l.next;
  else
    heads_[static_cast<size_t>(parent)].first = l.next;
  if (l.next != -1) links_[static_cast<size_t>(l.next)].prev = l.prev;
  l.removed = true;
  --heads_[static_cast<size_t>(parent)].count;
}

// ---------------------------------------------------------------------------
// PackEvaluator

PackEvaluator::PackEvaluator(const QueryPack& pack, const Database& db, WorkCounters& wc,
                             EvalOptions options)
    : pack_(pack), db_(db), wc_(wc), options_(options), state_(pack) {
  if (!wc_.has_nodes()) wc_.init_for_pack(pack);
}

bool PackEvaluator::run_example(const Example& example, ResultSet& out, int32_t example_index) {
  example_ = &example;
  out_ = &out;
  example_index_ = example_index;
  state_.reset();
  env_.reset(static_cast<size_t>(pack_.var_count));
  const std::vector<Term>& kv = pack_.key_vars;
  if (kv.size() != example.key.size())
    throw KeyArityMismatch("pack key arity " + std::to_string(kv.size()) + ", example key arity " +
                           std::to_string(example.key.size()));
  for (size_t i = 0; i < kv.size(); ++i)
    if (!env_.unify(kv[i], example.key[i])) return false;  // inconsistent repeated key variable
  return execute_node(0);
}

// The while-loop over the node's solutions with recursive child execution;
// a child that succeeds is destructively removed for the rest of the
// example, and the loop stops requesting solutions once no child is left.
bool PackEvaluator::execute_node(int32_t node_id) {
  const PackNode& node = pack_.nodes[static_cast<size_t>(node_id)];
  wc_.node(node_id).entries++;
  EvalContext ctx{&db_, example_, &env_, &wc_};
  SolutionCursor cur(ctx, node.conj, node_id);
  bool first = true;

  for (;;) {
    if (options_.check_invariants && !first && !node.is_leaf() &&
        !state_.has_alive_children(node_id))
      ++wc_.invariant_violations;  // conj re-solicited with no alive children
    if (!cur.next()) return false;
    first = false;
    wc_.node(node_id).solutions++;
    if (options_.check_invariants && state_.removed(node_id))
      ++wc_.invariant_violations;  // solution event on a pruned node

    if (node.is_leaf()) {
      if (out_->set(node.leaf_query, example_index_)) ++wc_.duplicate_reports;
      ++wc_.leaf_successes;
      return true;
    }
    for (int32_t c = state_.first_alive(node_id); c != -1;) {
      int32_t next = state_.next_alive(c);
      if (execute_node(c)) state_.remove(c);
      c = next;
    }
    if (!state_.has_alive_children(node_id)) return true;
  }
}

// ---------------------------------------------------------------------------
// Strategy drivers

std::vector<bool> evaluate_separate(std::span<const Conjunction> queries, const Database& db,
                                    const Example& example, WorkCounters& wc,
                                    std::span<const Term> key_vars) {
  int32_t nvars = 0;
  for (const Conjunction& q : queries) nvars = std::max(nvars, max_var_id(q) + 1);
  for (const Term& k : key_vars) nvars = std::max(nvars, k.var_id() + 1);

  BindingEnv env;
  std::vector<bool> bits;
  bits.reserve(queries.size());
  for (const Conjunction& q : queries) {
    env.reset(static_cast<size_t>(nvars));
    bool keys_ok = true;
    for (size_t i = 0; i < key_vars.size(); ++i)
      if (!env.unify(key_vars[i], example.key[i])) keys_ok = false;
    if (!keys_ok) {
      bits.push_back(false);
      continue;
    }
    EvalContext ctx{&db, &example, &env, &wc};
    SolutionCursor cur(ctx, q, -1);
    bits.push_back(cur.next());
  }
  return bits;
}

std::vector<bool> evaluate_disjoint(const QueryPack& pack, const Database& db,
                                    const Example& example, WorkCounters& wc) {
  BindingEnv env;
  std::vector<bool> bits;
  for (int32_t leaf : pack.leaf_ids()) {
    std::vector<int32_t> path;
    for (int32_t p = leaf; p != -1; p = pack.nodes[static_cast<size_t>(p)].parent)
      path.push_back(p);
    std::reverse(path.begin(), path.end());
    std::vector<SolutionCursor::Goal> goals;
    for (int32_t id : path)
      for (const Atom& a : pack.nodes[static_cast<size_t>(id)].conj.atoms)
        goals.push_back({&a, id});

    env.reset(static_cast<size_t>(pack.var_count));
    bool keys_ok = true;
    for (size_t i = 0; i < pack.key_vars.size(); ++i)
      if (!env.unify(pack.key_vars[i], example.key[i])) keys_ok = false;
    if (!keys_ok) {
      bits.push_back(false);
      continue;
    }
    EvalContext ctx{&db, &example, &env, &wc};
    SolutionCursor cur(ctx, std::move(goals));
    bits.push_back(cur.next());
  }
  return bits;
}

EvalResult evaluate_pack_on_examples(const QueryPack& pack, const Database& db, Strategy strategy,
                                     EvalOptions options) {
  const ExampleSet& es = db.examples();
  if (static_cast<int32_t>(pack.key_vars.size()) != es.key_arity)
    throw KeyArityMismatch("pack declares " + std::to_string(pack.key_vars.size()) +
                           " key variables, database key arity is " +
                           std::to_string(es.key_arity));

  EvalResult res;
  res.results = ResultSet(pack.query_count, static_cast<int32_t>(es.examples.size()));
  res.counters.init_for_pack(pack);

  std::vector<int32_t> leaf_rows;  // leaf order -> result row
  for (int32_t leaf : pack.leaf_ids()) leaf_rows.push_back(pack.nodes[static_cast<size_t>(leaf)].leaf_query);

  switch (strategy) {
    case Strategy::Packed: {
      PackEvaluator evaluator(pack, db, res.counters, options);
      for (size_t i = 0; i < es.examples.size(); ++i) {
        try {
          evaluator.run_example(es.examples[i], res.results, static_cast<int32_t>(i));
        } catch (const EvalError&) {
          throw;
        } catch (const Error& e) {
          throw EvalError(es.examples[i].id, e.what());
        }
      }
      break;
    }
    case Strategy::Disjoint: {
      for (size_t i = 0; i < es.examples.size(); ++i) {
        try {
          std::vector<bool> bits = evaluate_disjoint(pack, db, es.examples[i], res.counters);
          for (size_t q = 0; q < bits.size(); ++q)
            if (bits[q]) res.results.set(leaf_rows[q], static_cast<int32_t>(i));
        } catch (const EvalError&) {
          throw;
        } catch (const Error& e) {
          throw EvalError(es.examples[i].id, e.what());
        }
      }
      break;
    }
    case Strategy::Separate: {
      std::vector<Conjunction> queries = dependent_queries(pack, 0);
      for (size_t i = 0; i < es.examples.size(); ++i) {
        try {
          std::vector<bool> bits =
              evaluate_separate(queries, db, es.examples[i], res.counters, pack.key_vars);
          for (size_t q = 0; q < bits.size(); ++q)
            if (bits[q]) res.results.set(leaf_rows[q], static_cast<int32_t>(i));
        } catch (const EvalError&) {
          throw;
        } catch (const Error& e) {
          throw EvalError(es.examples[i].id, e.what());
        }
      }
      break;
    }
  }
  return res;
}

}  // namespace qp
