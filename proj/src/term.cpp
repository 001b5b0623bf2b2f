#include "qp/term.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <unordered_map>

namespace qp {

namespace {

class SymbolTable {
 public:
  static SymbolTable& instance() {
    static SymbolTable table;
    return table;
  }

  int32_t intern(std::string_view name) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    names_.emplace_back(name);
    int32_t id = static_cast<int32_t>(names_.size()) - 1;
    ids_.emplace(names_.back(), id);
    return id;
  }

  const std::string& name(int32_t sym) {
    std::lock_guard<std::mutex> lock(mu_);
    return names_.at(static_cast<size_t>(sym));
  }

 private:
  std::mutex mu_;
  std::deque<std::string> names_;  // deque: stable references for the map keys
  std::unordered_map<std::string_view, int32_t> ids_;
};

}  // namespace

int32_t intern(std::string_view name) { return SymbolTable::instance().intern(name); }
const std::string& symbol_name(int32_t sym) { return SymbolTable::instance().name(sym); }

namespace builtins {
int32_t eq() {
  static const int32_t s = intern("=");
  return s;
}
int32_t neq() {
  static const int32_t s = intern("\\=");
  return s;
}
int32_t lt() {
  static const int32_t s = intern("<");
  return s;
}
int32_t le() {
  static const int32_t s = intern("=<");
  return s;
}
bool is_builtin(int32_t sym) { return sym == eq() || sym == neq() || sym == lt() || sym == le(); }
}  // namespace builtins

int Term::compare_ground(const Term& a, const Term& b) {
  if (a.kind != b.kind) return a.kind == TermKind::Int ? -1 : 1;
  if (a.kind == TermKind::Int) return a.value < b.value ? -1 : (a.value == b.value ? 0 : 1);
  const std::string& an = symbol_name(a.value);
  const std::string& bn = symbol_name(b.value);
  return an < bn ? -1 : (an == bn ? 0 : 1);
}

bool Atom::ground() const {
  for (const Term& t : args)
    if (t.is_var()) return false;
  return true;
}

Term Substitution::walk(Term t) const {
  while (t.is_var()) {
    auto it = bindings_.find(t.var_id());
    if (it == bindings_.end()) return t;
    t = it->second;
  }
  return t;
}

bool operator==(const Substitution& a, const Substitution& b) {
  return a.bindings_ == b.bindings_;
}

bool unify_terms(Term a, Term b, Substitution& s) {
  a = s.walk(a);
  b = s.walk(b);
  if (a == b) return true;
  if (a.is_var()) {
    s.bind(a.var_id(), b);
    return true;
  }
  if (b.is_var()) {
    s.bind(b.var_id(), a);
    return true;
  }
  return false;
}

std::optional<Substitution> unify(const Atom& a, const Atom& b, const Substitution& seed) {
  if (a.pred != b.pred || a.args.size() != b.args.size()) return std::nullopt;
  Substitution s = seed;
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (!unify_terms(a.args[i], b.args[i], s)) return std::nullopt;
  }
  return s;
}

Term apply(const Substitution& s, const Term& t) { return s.walk(t); }

Atom apply(const Substitution& s, const Atom& a) {
  Atom out = a;
  for (Term& t : out.args) t = s.walk(t);
  return out;
}

Conjunction apply(const Substitution& s, const Conjunction& c) {
  Conjunction out;
  out.atoms.reserve(c.atoms.size());
  for (const Atom& a : c.atoms) out.atoms.push_back(apply(s, a));
  return out;
}

std::string to_string(const Term& t) {
  switch (t.kind) {
    case TermKind::Constant:
      return symbol_name(t.value);
    case TermKind::Int:
      return std::to_string(t.value);
    case TermKind::Variable:
      if (t.name >= 0) return symbol_name(t.name);
      return "_G" + std::to_string(t.value);
  }
  return "?";
}

std::string to_string(const Atom& a) {
  if (a.builtin && a.args.size() == 2)
    return to_string(a.args[0]) + " " + symbol_name(a.pred) + " " + to_string(a.args[1]);
  std::string out = symbol_name(a.pred);
  if (a.args.empty()) return out;
  out += "(";
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ",";
    out += to_string(a.args[i]);
  }
  out += ")";
  return out;
}

std::string to_string(const Conjunction& c) {
  std::string out;
  for (size_t i = 0; i < c.atoms.size(); ++i) {
    if (i) out += ", ";
    out += to_string(c.atoms[i]);
  }
  return out;
}

std::vector<int32_t> variables_of(const Conjunction& c) {
  std::vector<int32_t> out;
  for (const Atom& a : c.atoms)
    for (const Term& t : a.args)
      if (t.is_var() && std::find(out.begin(), out.end(), t.var_id()) == out.end())
        out.push_back(t.var_id());
  return out;
}

std::vector<Term> variable_terms_of(const Conjunction& c) {
  std::vector<Term> out;
  for (const Atom& a : c.atoms)
    for (const Term& t : a.args) {
      if (!t.is_var()) continue;
      bool known = false;
      for (const Term& seen : out)
        if (seen.var_id() == t.var_id()) known = true;
      if (!known) out.push_back(t);
    }
  return out;
}

int32_t max_var_id(const Conjunction& c) {
  int32_t mx = -1;
  for (const Atom& a : c.atoms)
    for (const Term& t : a.args)
      if (t.is_var() && t.var_id() > mx) mx = t.var_id();
  return mx;
}

std::string canonical_text(const Conjunction& c, std::span<const Term> fixed) {
  std::map<int32_t, std::string> names;
  for (const Term& k : fixed)
    if (k.is_var()) names[k.var_id()] = to_string(k);
  int next = 0;
  auto rename = [&](const Term& t) -> std::string {
    if (!t.is_var()) return to_string(t);
    auto it = names.find(t.var_id());
    if (it != names.end()) return it->second;
    std::string n = next < 26 ? std::string(1, static_cast<char>('A' + next))
                              : "V" + std::to_string(next);
    ++next;
    names[t.var_id()] = n;
    return n;
  };
  std::string out;
  for (size_t i = 0; i < c.atoms.size(); ++i) {
    if (i) out += ", ";
    const Atom& a = c.atoms[i];
    if (a.builtin && a.args.size() == 2) {
      out += rename(a.args[0]) + " " + symbol_name(a.pred) + " " + rename(a.args[1]);
      continue;
    }
    out += symbol_name(a.pred);
    if (!a.args.empty()) {
      out += "(";
      for (size_t j = 0; j < a.args.size(); ++j) {
        if (j) out += ",";
        out += rename(a.args[j]);
      }
      out += ")";
    }
  }
  return out;
}

}  // namespace qp
