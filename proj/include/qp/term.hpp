#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qp/symbol.hpp"

namespace qp {

enum class TermKind : uint8_t { Constant, Int, Variable };

// Function-free term: an interned constant, a machine integer, or a variable.
// Variable identity is the numeric id; the display name is carried only for
// printing and never takes part in comparisons.
struct Term {
  TermKind kind = TermKind::Constant;
  int32_t value = 0;  // symbol id | integer value | variable id
  int32_t name = -1;  // interned display name for variables, -1 = synthesized

  static Term constant(std::string_view s) { return {TermKind::Constant, intern(s), -1}; }
  static Term constant(int32_t sym) { return {TermKind::Constant, sym, -1}; }
  static Term integer(int32_t v) { return {TermKind::Int, v, -1}; }
  static Term variable(int32_t id) { return {TermKind::Variable, id, -1}; }
  static Term variable(int32_t id, std::string_view display) {
    return {TermKind::Variable, id, intern(display)};
  }

  bool is_var() const { return kind == TermKind::Variable; }
  bool is_ground() const { return kind != TermKind::Variable; }
  int32_t var_id() const { return value; }

  friend bool operator==(const Term& a, const Term& b) {
    return a.kind == b.kind && a.value == b.value;
  }
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }
  // Total order over ground terms: integers first (numeric), then constants
  // by name. Used by the < and =< builtins and by canonical sorting.
  static int compare_ground(const Term& a, const Term& b);
};

struct TermHash {
  size_t operator()(const Term& t) const {
    return (static_cast<size_t>(t.kind) << 32) ^ static_cast<size_t>(static_cast<uint32_t>(t.value));
  }
};

struct Atom {
  int32_t pred = 0;
  bool builtin = false;
  std::vector<Term> args;

  Atom() = default;
  Atom(std::string_view p, std::vector<Term> a) : pred(intern(p)), args(std::move(a)) {
    builtin = builtins::is_builtin(pred) && args.size() == 2;
  }
  Atom(int32_t p, std::vector<Term> a) : pred(p), args(std::move(a)) {
    builtin = builtins::is_builtin(pred) && args.size() == 2;
  }

  int arity() const { return static_cast<int>(args.size()); }
  bool ground() const;

  friend bool operator==(const Atom& a, const Atom& b) {
    return a.pred == b.pred && a.builtin == b.builtin && a.args == b.args;
  }
  friend bool operator!=(const Atom& a, const Atom& b) { return !(a == b); }
};

// Ordered conjunction of atoms; evaluation order is list order.
struct Conjunction {
  std::vector<Atom> atoms;

  Conjunction() = default;
  explicit Conjunction(std::vector<Atom> a) : atoms(std::move(a)) {}

  bool empty() const { return atoms.empty(); }
  size_t size() const { return atoms.size(); }

  friend bool operator==(const Conjunction& a, const Conjunction& b) { return a.atoms == b.atoms; }
  friend bool operator!=(const Conjunction& a, const Conjunction& b) { return !(a == b); }
};

// Variable bindings, fully dereferenced on read: walk() follows chains so a
// bound term never exposes an intermediate bound variable.
class Substitution {
 public:
  bool contains(int32_t var) const { return bindings_.count(var) != 0; }
  void bind(int32_t var, const Term& t) { bindings_.emplace(var, t); }
  // Follows binding chains; an unbound variable is returned as-is.
  Term walk(Term t) const;
  size_t size() const { return bindings_.size(); }
  bool empty() const { return bindings_.empty(); }
  const std::map<int32_t, Term>& bindings() const { return bindings_; }

  friend bool operator==(const Substitution& a, const Substitution& b);

 private:
  std::map<int32_t, Term> bindings_;
};

// Most general unifier of two atoms, extending `seed`. Fails (nullopt) on
// predicate/arity mismatch or a ground clash; `seed` is never mutated.
std::optional<Substitution> unify(const Atom& a, const Atom& b, const Substitution& seed);
bool unify_terms(Term a, Term b, Substitution& s);

Term apply(const Substitution& s, const Term& t);
Atom apply(const Substitution& s, const Atom& a);
Conjunction apply(const Substitution& s, const Conjunction& c);

std::string to_string(const Term& t);
std::string to_string(const Atom& a);
std::string to_string(const Conjunction& c);

// Variable ids occurring in the conjunction, in first-occurrence order.
std::vector<int32_t> variables_of(const Conjunction& c);
// Same, but as terms carrying their display names.
std::vector<Term> variable_terms_of(const Conjunction& c);
int32_t max_var_id(const Conjunction& c);  // -1 when ground

// Text with variables renamed to A, B, C, ... in first-occurrence order.
// Variables listed in `fixed` keep their display name; used by the miner to
// keep key variables distinguishable in duplicate tests.
std::string canonical_text(const Conjunction& c, std::span<const Term> fixed = {});

}  // namespace qp
