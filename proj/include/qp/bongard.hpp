#pragma once

#include <cstdint>
#include <string>

#include "qp/database.hpp"
#include "qp/term.hpp"

namespace qp {

enum class BongardComplexity { Simple, Medium, None };

struct BongardConfig {
  int n_examples = 100;
  BongardComplexity complexity = BongardComplexity::Simple;
  uint64_t seed = 1;
};

// Scene generator: each example holds 2..8 objects with one shape fact each
// (circle/triangle/square), chain relations leftof/2 and above/2 over the x
// and y orderings, and sparse containment in/2. Labels follow the planted
// rule for Simple (2 literals) and Medium (4 literals); for None they are
// random. Key arity is 0: each example is its own interpretation.
Database generate_bongard(const BongardConfig& config);

// Body of the rule whose success determines the "pos" label.
Conjunction bongard_planted_rule(BongardComplexity complexity);

std::optional<BongardComplexity> bongard_complexity_from_string(std::string_view s);

}  // namespace qp
