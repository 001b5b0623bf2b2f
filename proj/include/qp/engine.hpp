#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qp/database.hpp"
#include "qp/pack.hpp"
#include "qp/term.hpp"

namespace qp {

// Mutable variable bindings with a trail for backtracking. One env per
// evaluator; never shared between workers.
class BindingEnv {
 public:
  void reset(size_t nvars);
  void ensure(size_t nvars);
  int32_t fresh_block(int32_t count);  // contiguous fresh variables, returns the first id
  Term deref(Term t) const;
  void bind(int32_t var, const Term& value);  // var must be unbound after deref
  bool unify(Term a, Term b);
  bool unify_args(const Atom& goal, const Atom& head);  // equal pred/arity assumed

  size_t mark() const { return trail_.size(); }
  void undo_to(size_t mark);
  size_t var_count() const { return slots_.size(); }
  void shrink_vars(size_t count);

 private:
  std::vector<Term> slots_;  // slot i: binding of variable i; self-variable = unbound
  std::vector<int32_t> trail_;
};

struct NodeCounters {
  uint64_t entries = 0;        // times the node was entered for execution
  uint64_t solutions = 0;      // solutions produced by the node's conjunction
  uint64_t literal_calls = 0;  // resolution attempts charged to this node
};

// Instrumented work measurements. One work unit = one literal resolution
// attempt (a fact lookup, a builtin evaluation, or a rule head resolution).
class WorkCounters {
 public:
  uint64_t unify_attempts = 0;
  uint64_t fact_lookups = 0;
  uint64_t builtin_evals = 0;
  uint64_t rule_expansions = 0;
  uint64_t leaf_successes = 0;
  uint64_t duplicate_reports = 0;      // leaf reported twice for one example
  uint64_t invariant_violations = 0;   // pruning-invariant monitor hits

  void init_for_pack(const QueryPack& pack);
  bool has_nodes() const { return !nodes_.empty(); }
  NodeCounters& node(int32_t id) { return nodes_[static_cast<size_t>(id)]; }
  const NodeCounters& node(int32_t id) const { return nodes_[static_cast<size_t>(id)]; }
  const std::vector<NodeCounters>& nodes() const { return nodes_; }
  const std::vector<int32_t>& node_depths() const { return node_depths_; }

  uint64_t work_units() const { return fact_lookups + builtin_evals + rule_expansions; }
  // Sum of literal calls per node depth; index = depth.
  std::vector<double> level_sums() const;
  void merge(const WorkCounters& other);

 private:
  std::vector<NodeCounters> nodes_;
  std::vector<int32_t> node_depths_;
};

nlohmann::json work_report(const WorkCounters& wc);

// Bit matrix (query x example) of evaluation outcomes.
class ResultSet {
 public:
  ResultSet() = default;
  ResultSet(int32_t query_count, int32_t example_count);

  int32_t query_count() const { return query_count_; }
  int32_t example_count() const { return example_count_; }
  bool get(int32_t query, int32_t example) const;
  bool set(int32_t query, int32_t example);  // returns previous value
  uint64_t row_popcount(int32_t query) const;

  void write_csv(std::ostream& out, const Database& db) const;
  // Raw dump: two little-endian uint64 dimension prefixes (queries, examples)
  // followed by query-major rows of ceil(examples/8) bytes, LSB-first bits.
  void write_bitmap(std::ostream& out) const;

  friend bool operator==(const ResultSet& a, const ResultSet& b) {
    return a.query_count_ == b.query_count_ && a.example_count_ == b.example_count_ &&
           a.bits_ == b.bits_;
  }

 private:
  int32_t query_count_ = 0;
  int32_t example_count_ = 0;
  size_t stride_ = 0;  // words per query row
  std::vector<uint64_t> bits_;
};

enum class Strategy { Separate, Disjoint, Packed };
std::optional<Strategy> strategy_from_string(std::string_view s);
std::string to_string(Strategy s);

struct EvalOptions {
  bool check_invariants = false;  // count pruning-invariant violations
};

struct EvalContext {
  const Database* db = nullptr;
  const Example* example = nullptr;  // nullptr: background facts only
  BindingEnv* env = nullptr;
  WorkCounters* wc = nullptr;
};

// Resumable enumerator of the SLD solutions of a goal sequence, left to
// right, in fact load order. Choice points record the remaining fact/rule
// alternatives per literal; rule bodies are spliced in with fresh variables.
// The destructor undoes every binding the cursor introduced.
class SolutionCursor {
 public:
  struct Goal {
    const Atom* atom;
    int32_t node;  // pack node charged for this literal's work, -1 = none
  };

  SolutionCursor(EvalContext ctx, const Conjunction& conj, int32_t node = -1);
  SolutionCursor(EvalContext ctx, std::vector<Goal> goals);
  ~SolutionCursor();

  SolutionCursor(const SolutionCursor&) = delete;
  SolutionCursor& operator=(const SolutionCursor&) = delete;

  // Advances to the next solution; while true, the bindings are live in the
  // env. After false the env is restored to its entry state.
  bool next();

  // Bindings of the given variables in the current solution.
  Substitution snapshot(std::span<const int32_t> vars) const;

 private:
  struct GoalCell;
  struct GoalRef {
    const GoalCell* cell = nullptr;  // non-null: spliced rule-body literal
    size_t base = 0;                 // otherwise index into goals_
  };
  struct GoalCell {
    Atom atom;
    int32_t node;
    GoalRef next;
  };
  struct ChoicePoint {
    GoalRef goal;
    const Atom* atom = nullptr;
    int32_t node = -1;
    int stage = 0;  // 0 background facts, 1 example facts, 2 rules
    uint32_t pos = 0;
    bool builtin_done = false;
    bool use_bucket = false;  // first argument ground at call time
    const FactStore* stores[2] = {nullptr, nullptr};
    const std::vector<uint32_t>* buckets[2] = {nullptr, nullptr};
    const std::vector<uint32_t>* rules = nullptr;
    size_t trail_mark = 0;
    size_t var_mark = 0;
    size_t overlay_mark = 0;
  };

  GoalRef next_of(GoalRef g) const;
  const Atom* atom_at(GoalRef g, int32_t* node) const;
  bool advance(ChoicePoint& cp, GoalRef& cont);
  bool eval_builtin(const Atom& goal);
  void rollback_all();

  EvalContext ctx_;
  std::vector<Goal> goals_;
  std::deque<GoalCell> overlay_;
  std::vector<ChoicePoint> cps_;
  size_t entry_trail_ = 0;
  size_t entry_vars_ = 0;
  bool started_ = false;
  bool finished_ = false;
};

// Spec-shaped wrapper: next solution restricted to the cursor's goal
// variables, or nullopt when exhausted.
std::optional<Substitution> next_solution(SolutionCursor& cursor,
                                          std::span<const int32_t> vars);

// Per-evaluation alive-children structure: an intrusive doubly linked list
// per node with epoch-stamped lazy initialization, giving O(1) removal and
// O(1) per-example reset. Removal survives backtracking within an epoch.
class PackState {
 public:
  explicit PackState(const QueryPack& pack);

  void reset() { ++epoch_; }  // next example
  int32_t first_alive(int32_t node);
  int32_t next_alive(int32_t child) const;
  bool has_alive_children(int32_t node);
  int32_t alive_count(int32_t node);
  bool removed(int32_t node) const;  // true once pruned in the current epoch
  void remove(int32_t child);

 private:
  void touch(int32_t node);

  struct Links {
    int32_t prev = -1, next = -1;
    uint64_t epoch = 0;
    bool removed = false;
  };
  struct Head {
    int32_t first = -1;
    int32_t count = 0;
    uint64_t epoch = 0;
  };

  const QueryPack* pack_;
  std::vector<Links> links_;
  std::vector<Head> heads_;
  uint64_t epoch_ = 1;
};

// Executes a pack on one example at a time with recursive success pruning.
// Owns all mutable evaluation state; one instance per worker.
class PackEvaluator {
 public:
  PackEvaluator(const QueryPack& pack, const Database& db, WorkCounters& wc,
                EvalOptions options = {});

  // Evaluates every member query on the example; sets bits in column
  // `example_index` of `out` for leaves that succeed. Returns true iff the
  // whole pack succeeded (every leaf reported success).
  bool run_example(const Example& example, ResultSet& out, int32_t example_index);

  PackState& state() { return state_; }

 private:
  bool execute_node(int32_t node_id);

  const QueryPack& pack_;
  const Database& db_;
  WorkCounters& wc_;
  EvalOptions options_;
  PackState state_;
  BindingEnv env_;
  const Example* example_ = nullptr;
  ResultSet* out_ = nullptr;
  int32_t example_index_ = 0;
};

// Once-semantics evaluation of each query independently; bit i set iff query
// i has at least one solution on the example.
std::vector<bool> evaluate_separate(std::span<const Conjunction> queries, const Database& db,
                                    const Example& example, WorkCounters& wc,
                                    std::span<const Term> key_vars = {});

// Same result bits as evaluate_separate over the pack's member queries, but
// each root-to-leaf path runs through the pack walker with per-node work
// attribution and no sharing: the unshared baseline.
std::vector<bool> evaluate_disjoint(const QueryPack& pack, const Database& db,
                                    const Example& example, WorkCounters& wc);

struct EvalResult {
  ResultSet results;
  WorkCounters counters;
};

// Examples-in-outer-loop driver. Key variables of the pack are bound to each
// example's key tuple before evaluation; pack state resets between examples.
EvalResult evaluate_pack_on_examples(const QueryPack& pack, const Database& db,
                                     Strategy strategy, EvalOptions options = {});

}  // namespace qp
