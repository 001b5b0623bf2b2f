#include "qp/bongard.hpp"

#include <algorithm>
#include <numeric>

#include "qp/engine.hpp"
#include "qp/rng.hpp"

namespace qp {

Conjunction bongard_planted_rule(BongardComplexity complexity) {
  switch (complexity) {
    case BongardComplexity::Simple:
      return parse_conjunction("circle(A), in(A,B)");
    case BongardComplexity::Medium:
      return parse_conjunction("circle(A), in(A,B), triangle(B), leftof(B,C)");
    case BongardComplexity::None:
      return parse_conjunction("circle(A), in(A,B)");  // reported for reference only
  }
  return {};
}

std::optional<BongardComplexity> bongard_complexity_from_string(std::string_view s) {
  if (s == "simple") return BongardComplexity::Simple;
  if (s == "medium") return BongardComplexity::Medium;
  if (s == "none") return BongardComplexity::None;
  return std::nullopt;
}

Database generate_bongard(const BongardConfig& config) {
  Rng rng(config.seed);
  Database db;
  db.set_key_arity(0);

  const char* shapes[3] = {"circle", "triangle", "square"};
  Conjunction rule = bongard_planted_rule(config.complexity);

  for (int ex = 0; ex < config.n_examples; ++ex) {
    Example& e = db.add_example(ex, {});
    int n_objects = static_cast<int>(rng.range(2, 8));

    std::vector<Term> objects;
    std::vector<int> xs, ys;
    for (int i = 0; i < n_objects; ++i) {
      objects.push_back(Term::constant("o" + std::to_string(i + 1)));
      xs.push_back(static_cast<int>(rng.range(0, 15)));
      ys.push_back(static_cast<int>(rng.range(0, 15)));
    }

    for (int i = 0; i < n_objects; ++i)
      e.add_fact(Atom(shapes[rng.below(3)], {objects[static_cast<size_t>(i)]}));

    // Chain relations over the coordinate orderings (ties break by index).
    std::vector<int> order(static_cast<size_t>(n_objects));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return xs[static_cast<size_t>(a)] < xs[static_cast<size_t>(b)];
    });
    for (int i = 0; i + 1 < n_objects; ++i)
      e.add_fact(Atom("leftof", {objects[static_cast<size_t>(order[static_cast<size_t>(i)])],
                                 objects[static_cast<size_t>(order[static_cast<size_t>(i) + 1])]}));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return ys[static_cast<size_t>(a)] > ys[static_cast<size_t>(b)];
    });
    for (int i = 0; i + 1 < n_objects; ++i)
      e.add_fact(Atom("above", {objects[static_cast<size_t>(order[static_cast<size_t>(i)])],
                                objects[static_cast<size_t>(order[static_cast<size_t>(i) + 1])]}));

    // Sparse containment: an object sits inside another with probability 1/4.
    for (int i = 0; i < n_objects; ++i) {
      if (n_objects < 2 || !rng.chance(0.25)) continue;
      int container = static_cast<int>(rng.below(static_cast<uint64_t>(n_objects - 1)));
      if (container >= i) ++container;
      e.add_fact(Atom("in", {objects[static_cast<size_t>(i)], objects[static_cast<size_t>(container)]}));
    }

    if (config.complexity == BongardComplexity::None) {
      e.label = rng.chance(0.5) ? "pos" : "neg";
    } else {
      e.label.reset();  // assigned below, after indices exist
    }
  }
  db.finalize();

  if (config.complexity != BongardComplexity::None) {
    // Label by evaluating the planted rule body on each example.
    WorkCounters wc;
    std::vector<Conjunction> queries{rule};
    for (size_t i = 0; i < db.examples().examples.size(); ++i) {
      std::vector<bool> bits = evaluate_separate(queries, db, db.examples().examples[i], wc);
      db.set_example_label(i, bits[0] ? "pos" : "neg");
    }
  }
  return db;
}

}  // namespace qp
