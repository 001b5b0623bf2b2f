#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qp/errors.hpp"
#include "qp/term.hpp"

namespace qp {

struct PredKey {
  int32_t pred = 0;
  int32_t arity = 0;
  friend bool operator==(const PredKey& a, const PredKey& b) {
    return a.pred == b.pred && a.arity == b.arity;
  }
};

struct PredKeyHash {
  size_t operator()(const PredKey& k) const {
    return static_cast<size_t>(static_cast<uint32_t>(k.pred)) * 1000003u +
           static_cast<uint32_t>(k.arity);
  }
};

// Ground facts of one predicate in load order, with a first-argument hash
// index consulted when the first argument is ground at call time.
class FactStore {
 public:
  void add(Atom fact) { facts_.push_back(std::move(fact)); }
  const std::vector<Atom>& facts() const { return facts_; }
  size_t size() const { return facts_.size(); }

  void build_index();
  // Candidate fact positions whose first argument equals `first`; nullptr
  // means no candidates. Only valid after build_index, arity >= 1.
  const std::vector<uint32_t>* bucket(const Term& first) const;

  friend bool operator==(const FactStore& a, const FactStore& b) { return a.facts_ == b.facts_; }

 private:
  std::vector<Atom> facts_;
  std::unordered_map<Term, std::vector<uint32_t>, TermHash> index_;
};

struct Clause {
  Atom head;
  Conjunction body;
  int32_t var_count = 0;  // variables are normalized to ids 0..var_count-1

  friend bool operator==(const Clause& a, const Clause& b) {
    return a.head == b.head && a.body == b.body;
  }
};

struct Example {
  int32_t id = 0;
  std::vector<Term> key;  // ground tuple, length = ExampleSet key arity
  std::unordered_map<PredKey, FactStore, PredKeyHash> local;
  std::optional<std::string> label;

  void add_fact(Atom fact);
  friend bool operator==(const Example& a, const Example& b);
};

struct ExampleSet {
  int32_t key_arity = 0;
  std::vector<Term> key_vars;  // synthesized K1..Kk variables (ids 0..k-1)
  std::vector<Example> examples;

  friend bool operator==(const ExampleSet& a, const ExampleSet& b) {
    return a.key_arity == b.key_arity && a.examples == b.examples;
  }
};

// Immutable after finalize(); safely shareable across concurrent evaluators.
class Database {
 public:
  void add_background(Atom fact);
  void add_rule(Clause rule);
  void set_key_arity(int32_t k);
  Example& add_example(int32_t id, std::vector<Term> key,
                       std::optional<std::string> label = std::nullopt);
  void set_example_label(size_t index, std::string label);

  // Checks invariants (ground facts, acyclic non-recursive rules, range
  // restriction, distinct example keys) and builds fact indices.
  void finalize();

  const FactStore* background(PredKey k) const;
  const std::vector<uint32_t>* rules_for(PredKey k) const;  // indices into rules()
  const std::vector<Clause>& rules() const { return rules_; }
  const ExampleSet& examples() const { return examples_; }
  bool finalized() const { return finalized_; }

  // Sorted (by name, then arity) predicate keys of the background section.
  std::vector<PredKey> background_predicates() const;

  friend bool operator==(const Database& a, const Database& b);

 private:
  std::unordered_map<PredKey, FactStore, PredKeyHash> background_;
  std::vector<Clause> rules_;
  std::unordered_map<PredKey, std::vector<uint32_t>, PredKeyHash> rules_by_pred_;
  ExampleSet examples_;
  bool finalized_ = false;
};

// Background facts of the predicate followed by the example's local facts;
// facts from other examples are never visible. Unknown predicate => empty.
std::vector<Atom> facts_visible(const Database& db, const Example& e, PredKey pred);

std::vector<PredKey> local_predicates_sorted(const Example& e);

// Program file I/O (grammar in README): facts `p(a,b).`, rules
// `h(X) :- b(X), c(X).`, `% comment`, `#key k`, and
// `#example <id> key(t1,...,tk) [label(name)].` headers starting an
// example's local-fact section.
Database load_program(std::string_view text);
std::string serialize_program(const Database& db);

// Parses a single conjunction, e.g. "p(X), q(X,a), X < 3". Variable ids are
// assigned in first-occurrence order; `seeded_vars` pre-seeds name -> id
// mappings (used to pin key variables to fixed ids).
Conjunction parse_conjunction(std::string_view text,
                              const std::vector<std::pair<std::string, int32_t>>& seeded_vars = {});

}  // namespace qp
