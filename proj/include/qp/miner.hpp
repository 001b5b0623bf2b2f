#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qp/database.hpp"
#include "qp/engine.hpp"
#include "qp/pack.hpp"
#include "qp/term.hpp"

namespace qp {

enum class ArgMode : uint8_t { Input, Fresh, Const };

struct TemplateArg {
  ArgMode mode = ArgMode::Input;
  std::vector<Term> constants;  // Const mode: the enumerated candidate list
};

struct LiteralTemplate {
  int32_t pred = 0;
  std::vector<TemplateArg> args;
};

// Refinement alphabet: literal schemas with per-argument modes plus a cap on
// new variables per refinement step. Input arguments draw from the variables
// already in scope, so every instantiated literal is connected.
struct LanguageBias {
  std::vector<LiteralTemplate> templates;
  int max_new_vars = 8;
};

// Bias file format, one declaration per line:
//   template pred/arity mode1,...,modek     (modes: + input, - new, # const)
//   constants pred/pos v1,v2,...            (1-based position)
//   maxnewvars n
LanguageBias parse_bias(std::string_view text);

struct FrequentQuery {
  Conjunction conj;
  int level = 0;
  int64_t frequency = 0;
};

// All conjunctions obtained from q by appending 1..steps connected literals
// instantiated from the bias templates. Deterministic order: extension
// length, then template order, then argument-choice order. Syntactic
// duplicates are removed.
std::vector<Conjunction> refine(const Conjunction& q, const LanguageBias& bias, int steps,
                                std::span<const Term> key_vars = {});

// Broom-shaped refinement pack: the root ("stick") is q, the branches are
// refine(q, bias, lookahead+1). Throws EmptyRefinementSet when no template
// applies.
QueryPack build_broom(const Conjunction& q, const LanguageBias& bias, int lookahead,
                      std::span<const Term> key_vars = {});

struct LevelStats {
  int level = 0;
  int64_t candidates = 0;
  int64_t frequent = 0;
};

struct WarmrResult {
  std::vector<FrequentQuery> frequent;  // discovery order
  std::vector<LevelStats> levels;
};

// Level-wise frequent-query discovery: alternates pack extension (one literal
// per surviving query) with packed evaluation over all examples, pruning
// infrequent branches. The empty query is not emitted. Candidates that are
// duplicates modulo canonical variable renaming are dropped.
WarmrResult warmr_levelwise(const LanguageBias& bias, const Database& db,
                            std::span<const Term> key_vars, int minfreq, int maxlevel,
                            EvalOptions options = {});

// Number of examples on which the query succeeds (popcount of its row).
int64_t frequency(int32_t query_id, const ResultSet& rs);

// |covered ∩ positives| / |covered|; throws UndefinedAccuracy when the query
// covers no examples. Example ids here are column indices of the ResultSet.
double clause_accuracy(int32_t query_id, const ResultSet& rs,
                       const std::vector<int32_t>& positive_examples);

std::string warmr_to_tsv(const WarmrResult& result, std::span<const Term> key_vars);
nlohmann::json warmr_summary_json(const WarmrResult& result);

}  // namespace qp
