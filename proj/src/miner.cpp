#include "qp/miner.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "qp/errors.hpp"
#include "lexer.hpp"

namespace qp {

LanguageBias parse_bias(std::string_view text) {
  using detail::Lexer;
  using detail::Tok;
  using detail::Token;

  Lexer lx(text, /*modes=*/true);
  LanguageBias bias;
  // Const argument lists arrive via separate `constants` lines; collect the
  // positions first and attach the lists afterwards.
  std::vector<std::pair<std::string, std::vector<Term>>> const_lists;  // "pred/pos"

  auto expect = [&](Tok kind, const char* what) {
    Token t = lx.take();
    if (t.kind != kind) throw ParseError(std::string("expected ") + what, t.line, t.col);
    return t;
  };

  while (lx.peek().kind != Tok::Eof) {
    Token head = expect(Tok::Name, "declaration");
    if (head.text == "template") {
      Token pred = expect(Tok::Name, "predicate name");
      expect(Tok::Slash, "'/'");
      Token arity = expect(Tok::Int, "arity");
      LiteralTemplate tmpl;
      tmpl.pred = intern(pred.text);
      if (arity.number > 0) {
        for (int i = 0; i < arity.number; ++i) {
          if (i) expect(Tok::Comma, "','");
          Token m = expect(Tok::Mode, "mode (+, - or #)");
          TemplateArg arg;
          arg.mode = m.text == "+" ? ArgMode::Input : m.text == "-" ? ArgMode::Fresh : ArgMode::Const;
          tmpl.args.push_back(std::move(arg));
        }
      }
      bias.templates.push_back(std::move(tmpl));
      continue;
    }
    if (head.text == "constants") {
      Token pred = expect(Tok::Name, "predicate name");
      expect(Tok::Slash, "'/'");
      Token pos = expect(Tok::Int, "argument position");
      std::vector<Term> values;
      for (;;) {
        Token v = lx.take();
        if (v.kind == Tok::Name)
          values.push_back(Term::constant(v.text));
        else if (v.kind == Tok::Int)
          values.push_back(Term::integer(v.number));
        else
          throw ParseError("expected constant", v.line, v.col);
        if (lx.peek().kind != Tok::Comma) break;
        lx.take();
      }
      const_lists.emplace_back(pred.text + "/" + std::to_string(pos.number), std::move(values));
      continue;
    }
    if (head.text == "maxnewvars") {
      Token n = expect(Tok::Int, "count");
      bias.max_new_vars = n.number;
      continue;
    }
    throw ParseError("unknown bias declaration '" + head.text + "'", head.line, head.col);
  }

  for (LiteralTemplate& tmpl : bias.templates) {
    for (size_t i = 0; i < tmpl.args.size(); ++i) {
      if (tmpl.args[i].mode != ArgMode::Const) continue;
      std::string key = symbol_name(tmpl.pred) + "/" + std::to_string(i + 1);
      bool found = false;
      for (const auto& [k, values] : const_lists)
        if (k == key) {
          tmpl.args[i].constants = values;
          found = true;
          break;
        }
      if (!found)
        throw ParseError("no constants declared for " + key, 0, 0);
    }
  }
  return bias;
}

namespace {

struct RefineState {
  const LanguageBias* bias;
  std::vector<Term> avail;  // key vars, then query vars, then extension vars
  int32_t next_var;
  std::vector<Conjunction> out;
  std::unordered_set<std::string> seen;  // extension texts, syntactic dedup
};

// Enumerates instantiations of one template over the variables in scope;
// calls `emit` for each complete literal together with its fresh variables.
void instantiate(const LiteralTemplate& tmpl, RefineState& st, int new_budget, size_t arg_index,
                 Atom& partial, std::vector<Term>& fresh,
                 const std::function<void(const Atom&, const std::vector<Term>&)>& emit) {
  if (arg_index == tmpl.args.size()) {
    // Connectedness: the literal must share a variable with what is already
    // in scope, unless nothing is in scope yet.
    if (!st.avail.empty()) {
      bool connected = false;
      for (const Term& a : partial.args) {
        if (!a.is_var()) continue;
        for (const Term& v : st.avail)
          if (v.var_id() == a.var_id()) {
            connected = true;
            break;
          }
        if (connected) break;
      }
      if (!connected) return;
    }
    emit(partial, fresh);
    return;
  }
  const TemplateArg& arg = tmpl.args[arg_index];
  switch (arg.mode) {
    case ArgMode::Input:
      // By index: the emit callback recurses into extend(), which grows and
      // shrinks st.avail back to this size.
      for (size_t vi = 0, limit = st.avail.size(); vi < limit; ++vi) {
        partial.args[arg_index] = st.avail[vi];
        instantiate(tmpl, st, new_budget, arg_index + 1, partial, fresh, emit);
      }
      break;
    case ArgMode::Fresh: {
      if (new_budget <= 0) return;
      int32_t id = st.next_var + static_cast<int32_t>(fresh.size());
      Term v = Term::variable(id, "V" + std::to_string(id));
      partial.args[arg_index] = v;
      fresh.push_back(v);
      instantiate(tmpl, st, new_budget - 1, arg_index + 1, partial, fresh, emit);
      fresh.pop_back();
      break;
    }
    case ArgMode::Const:
      for (const Term& c : arg.constants) {
        partial.args[arg_index] = c;
        instantiate(tmpl, st, new_budget, arg_index + 1, partial, fresh, emit);
      }
      break;
  }
}

void extend(RefineState& st, const Conjunction& q, Conjunction& ext, int new_vars_used,
            int steps_left) {
  if (steps_left == 0) return;
  for (const LiteralTemplate& tmpl : st.bias->templates) {
    Atom partial;
    partial.pred = tmpl.pred;
    partial.args.assign(tmpl.args.size(), Term{});
    std::vector<Term> fresh;
    instantiate(tmpl, st, st.bias->max_new_vars - new_vars_used, 0, partial, fresh,
                [&](const Atom& literal, const std::vector<Term>& new_vars) {
                  ext.atoms.push_back(literal);
                  std::string text = to_string(ext);
                  if (st.seen.insert(text).second) {
                    Conjunction full = q;
                    full.atoms.insert(full.atoms.end(), ext.atoms.begin(), ext.atoms.end());
                    st.out.push_back(std::move(full));
                  }
                  // Recurse with the new variables in scope.
                  size_t avail_mark = st.avail.size();
                  int32_t var_mark = st.next_var;
                  for (const Term& v : new_vars) st.avail.push_back(v);
                  st.next_var += static_cast<int32_t>(new_vars.size());
                  extend(st, q, ext, new_vars_used + static_cast<int>(new_vars.size()),
                         steps_left - 1);
                  st.next_var = var_mark;
                  st.avail.resize(avail_mark);
                  ext.atoms.pop_back();
                });
  }
}

}  // namespace

std::vector<Conjunction> refine(const Conjunction& q, const LanguageBias& bias, int steps,
                                std::span<const Term> key_vars) {
  RefineState st;
  st.bias = &bias;
  int32_t max_id = max_var_id(q);
  for (const Term& k : key_vars) {
    st.avail.push_back(k);
    max_id = std::max(max_id, k.var_id());
  }
  for (const Term& v : variable_terms_of(q)) {
    bool is_key = false;
    for (const Term& k : key_vars)
      if (k.var_id() == v.var_id()) is_key = true;
    if (!is_key) st.avail.push_back(v);
  }
  st.next_var = max_id + 1;

  Conjunction ext;
  extend(st, q, ext, 0, steps);
  // Depth-first generation order: an extension precedes its own extensions,
  // so prefix groups stay contiguous and pack building preserves the order.
  return st.out;
}

QueryPack build_broom(const Conjunction& q, const LanguageBias& bias, int lookahead,
                      std::span<const Term> key_vars) {
  std::vector<Conjunction> refinements = refine(q, bias, lookahead + 1, key_vars);
  if (refinements.empty()) throw EmptyRefinementSet("build_broom: no refinement applies");
  QueryPack pack = build_pack(refinements);
  pack.key_vars.assign(key_vars.begin(), key_vars.end());
  refresh_pack_stats(pack);
  label_pack(pack);
  return pack;
}

WarmrResult warmr_levelwise(const LanguageBias& bias, const Database& db,
                            std::span<const Term> key_vars, int minfreq, int maxlevel,
                            EvalOptions options) {
  if (minfreq < 1) throw std::invalid_argument("warmr_levelwise: minfreq must be >= 1");
  WarmrResult result;
  std::vector<Conjunction> frontier;  // frequent queries of the previous level
  frontier.emplace_back();            // level 0: the empty query (never emitted)
  std::unordered_set<std::string> seen_candidates;  // canonical forms across the run

  for (int level = 1; level <= maxlevel; ++level) {
    std::vector<Conjunction> candidates;
    for (const Conjunction& q : frontier) {
      for (Conjunction& ext : refine(q, bias, 1, key_vars)) {
        std::string canon = canonical_text(ext, key_vars);
        if (!seen_candidates.insert(canon).second) continue;  // duplicate modulo renaming
        candidates.push_back(std::move(ext));
      }
    }
    if (candidates.empty()) break;

    QueryPack pack = build_pack(candidates);
    pack.key_vars.assign(key_vars.begin(), key_vars.end());
    refresh_pack_stats(pack);
    label_pack(pack);
    EvalResult eval = evaluate_pack_on_examples(pack, db, Strategy::Packed, options);

    LevelStats stats;
    stats.level = level;
    stats.candidates = static_cast<int64_t>(candidates.size());
    std::vector<Conjunction> next_frontier;
    for (size_t i = 0; i < candidates.size(); ++i) {
      int64_t freq = frequency(static_cast<int32_t>(i), eval.results);
      if (freq < minfreq) continue;  // infrequent branch: never extended again
      ++stats.frequent;
      result.frequent.push_back({candidates[i], level, freq});
      next_frontier.push_back(candidates[i]);
    }
    result.levels.push_back(stats);
    frontier = std::move(next_frontier);
    if (frontier.empty()) break;
  }
  return result;
}

int64_t frequency(int32_t query_id, const ResultSet& rs) {
  if (query_id < 0 || query_id >= rs.query_count())
    throw std::out_of_range("frequency: query id out of range");
  return static_cast<int64_t>(rs.row_popcount(query_id));
}

double clause_accuracy(int32_t query_id, const ResultSet& rs,
                       const std::vector<int32_t>& positive_examples) {
  if (query_id < 0 || query_id >= rs.query_count())
    throw std::out_of_range("clause_accuracy: query id out of range");
  int64_t covered = 0, covered_positive = 0;
  for (int32_t e = 0; e < rs.example_count(); ++e) {
    if (!rs.get(query_id, e)) continue;
    ++covered;
    if (std::find(positive_examples.begin(), positive_examples.end(), e) !=
        positive_examples.end())
      ++covered_positive;
  }
  if (covered == 0) throw UndefinedAccuracy("clause_accuracy: query covers no examples");
  return static_cast<double>(covered_positive) / static_cast<double>(covered);
}

std::string warmr_to_tsv(const WarmrResult& result, std::span<const Term> key_vars) {
  std::string out;
  for (const FrequentQuery& fq : result.frequent) {
    out += std::to_string(fq.level);
    out += "\t";
    out += std::to_string(fq.frequency);
    out += "\t";
    out += canonical_text(fq.conj, key_vars);
    out += "\n";
  }
  return out;
}

nlohmann::json warmr_summary_json(const WarmrResult& result) {
  nlohmann::json j;
  j["levels"] = nlohmann::json::array();
  int64_t total_candidates = 0, total_frequent = 0;
  for (const LevelStats& s : result.levels) {
    j["levels"].push_back(
        {{"level", s.level}, {"queries", s.candidates}, {"frequent", s.frequent}});
    total_candidates += s.candidates;
    total_frequent += s.frequent;
  }
  j["total_queries"] = total_candidates;
  j["total_frequent"] = total_frequent;
  return j;
}

}  // namespace qp
