#include <doctest.h>

#include "qp/rng.hpp"
#include "qp/term.hpp"

using namespace qp;

namespace {

Term var(int32_t id, const char* name) { return Term::variable(id, name); }

// Ground instances of an atom over a tiny universe; used to cross-check that
// a unifier grounds both atoms identically.
std::vector<Atom> ground_instances(const Atom& a, const std::vector<Term>& universe) {
  std::vector<Atom> out{a};
  for (size_t i = 0; i < a.args.size(); ++i) {
    std::vector<Atom> next;
    for (const Atom& partial : out) {
      if (!partial.args[i].is_var()) {
        next.push_back(partial);
        continue;
      }
      for (const Term& u : universe) {
        Atom copy = partial;
        // Substitute every occurrence of that variable.
        Term v = partial.args[i];
        for (Term& t : copy.args)
          if (t.is_var() && t.var_id() == v.var_id()) t = u;
        next.push_back(copy);
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

TEST_CASE("unify: single binding forced") {
  Atom a("p", {var(0, "X")});
  Atom b("p", {Term::constant("a")});
  auto s = unify(a, b, {});
  REQUIRE(s.has_value());
  CHECK(s->walk(var(0, "X")) == Term::constant("a"));
  CHECK(s->size() == 1);
}

TEST_CASE("unify: constant clash fails and leaves seed untouched") {
  Substitution seed;
  seed.bind(5, Term::constant("z"));
  Atom a("p", {Term::constant("a")});
  Atom b("p", {Term::constant("b")});
  CHECK_FALSE(unify(a, b, seed).has_value());
  CHECK(seed.size() == 1);  // not mutated on failure
}

TEST_CASE("unify: q(X,X) with q(a,Y) grounds both atoms identically") {
  Atom a("q", {var(0, "X"), var(0, "X")});
  Atom b("q", {Term::constant("a"), var(1, "Y")});
  auto s = unify(a, b, {});
  REQUIRE(s.has_value());
  CHECK(apply(*s, a) == apply(*s, b));
  CHECK(s->walk(var(0, "X")) == Term::constant("a"));
  CHECK(s->walk(var(1, "Y")) == Term::constant("a"));

  // Brute-force check over universe {a}: the unifier's grounding is the only
  // common ground instance.
  std::vector<Term> universe{Term::constant("a")};
  auto ga = ground_instances(a, universe);
  auto gb = ground_instances(b, universe);
  bool common = false;
  for (const Atom& x : ga)
    for (const Atom& y : gb)
      if (x == y) common = true;
  CHECK(common);
}

TEST_CASE("unify: predicate or arity mismatch") {
  CHECK_FALSE(unify(Atom("p", {var(0, "X")}), Atom("q", {Term::constant("a")}), {}).has_value());
  CHECK_FALSE(unify(Atom("p", {var(0, "X")}),
                    Atom("p", {Term::constant("a"), Term::constant("b")}), {})
                  .has_value());
}

TEST_CASE("apply examples") {
  Substitution s;
  s.bind(0, Term::constant("a"));
  Conjunction c;
  c.atoms.push_back(Atom("p", {var(0, "X")}));
  c.atoms.push_back(Atom("q", {var(0, "X"), var(1, "Y")}));
  Conjunction applied = apply(s, c);
  CHECK(applied.atoms[0] == Atom("p", {Term::constant("a")}));
  CHECK(applied.atoms[1] == Atom("q", {Term::constant("a"), var(1, "Y")}));

  Conjunction identity = apply(Substitution{}, c);
  CHECK(identity == c);
}

TEST_CASE("apply: dereference chain X->Y->b resolves fully") {
  Substitution s;
  s.bind(0, var(1, "Y"));
  s.bind(1, Term::constant("b"));
  Atom p("p", {var(0, "X")});
  Atom applied = apply(s, p);
  CHECK(applied == Atom("p", {Term::constant("b")}));
  // Idempotent: applying twice equals applying once.
  CHECK(apply(s, applied) == applied);
}

TEST_CASE("unify is symmetric in success and grounds atoms identically") {
  Rng rng(2024);
  const char* preds[3] = {"p", "q", "r"};
  auto random_atom = [&]() {
    int arity = static_cast<int>(rng.range(1, 3));
    std::vector<Term> args;
    for (int i = 0; i < arity; ++i) {
      uint64_t roll = rng.below(3);
      if (roll == 0)
        args.push_back(Term::variable(static_cast<int32_t>(rng.below(3))));
      else if (roll == 1)
        args.push_back(Term::constant("c" + std::to_string(rng.below(2))));
      else
        args.push_back(Term::integer(static_cast<int32_t>(rng.below(2))));
    }
    return Atom(preds[rng.below(3)], std::move(args));
  };
  for (int i = 0; i < 500; ++i) {
    Atom a = random_atom();
    Atom b = random_atom();
    auto ab = unify(a, b, {});
    auto ba = unify(b, a, {});
    CHECK(ab.has_value() == ba.has_value());
    if (ab) {
      CHECK(apply(*ab, a) == apply(*ab, b));
      CHECK(apply(*ba, a) == apply(*ba, b));
    }
  }
}

TEST_CASE("canonical_text renames in first-occurrence order") {
  Conjunction c;
  c.atoms.push_back(Atom("p", {var(7, "Foo"), var(3, "Bar")}));
  c.atoms.push_back(Atom("q", {var(3, "Bar")}));
  CHECK(canonical_text(c) == "p(A,B), q(B)");
}
