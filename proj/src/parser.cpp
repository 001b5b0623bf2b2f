#include <functional>
#include <optional>
#include <sstream>

#include "qp/database.hpp"
#include "lexer.hpp"

namespace qp {

namespace detail {

Term parse_simple_term(Lexer& lx, VarScope& vars) {
  Token t = lx.take();
  switch (t.kind) {
    case Tok::Name:
      return Term::constant(t.text);
    case Tok::Int:
      return Term::integer(t.number);
    case Tok::Var:
      return vars.get(t.text);
    default:
      throw ParseError("expected term, got '" + t.text + "'", t.line, t.col);
  }
}

// literal := term OP term | name ['(' term {',' term} ')']
Atom parse_literal(Lexer& lx, VarScope& vars) {
  const Token& t = lx.peek();
  if (t.kind == Tok::Var || t.kind == Tok::Int) {
    Term lhs = parse_simple_term(lx, vars);
    Token op = lx.take();
    if (op.kind != Tok::Op) throw ParseError("expected comparison operator", op.line, op.col);
    Term rhs = parse_simple_term(lx, vars);
    return Atom(op.text, {lhs, rhs});
  }
  if (t.kind != Tok::Name)
    throw ParseError("expected literal, got '" + t.text + "'", t.line, t.col);
  Token name = lx.take();
  if (lx.peek().kind == Tok::Op) {  // bare constant on the left of a builtin
    Token op = lx.take();
    Term rhs = parse_simple_term(lx, vars);
    return Atom(op.text, {Term::constant(name.text), rhs});
  }
  std::vector<Term> args;
  if (lx.peek().kind == Tok::LParen) {
    lx.take();
    if (lx.peek().kind != Tok::RParen) {
      args.push_back(parse_simple_term(lx, vars));
      while (lx.peek().kind == Tok::Comma) {
        lx.take();
        args.push_back(parse_simple_term(lx, vars));
      }
    }
    Token close = lx.take();
    if (close.kind != Tok::RParen) throw ParseError("expected ')'", close.line, close.col);
  }
  return Atom(name.text, std::move(args));
}

Conjunction parse_conj_until(Lexer& lx, VarScope& vars, Tok stop) {
  Conjunction c;
  c.atoms.push_back(parse_literal(lx, vars));
  while (lx.peek().kind == Tok::Comma) {
    lx.take();
    c.atoms.push_back(parse_literal(lx, vars));
  }
  if (lx.peek().kind != stop) lx.fail("expected end of conjunction");
  return c;
}

}  // namespace detail

using detail::Lexer;
using detail::Tok;
using detail::Token;
using detail::VarScope;

Conjunction parse_conjunction(std::string_view text,
                              const std::vector<std::pair<std::string, int32_t>>& seeded_vars) {
  Lexer lx(text);
  VarScope vars;
  for (const auto& [name, id] : seeded_vars) vars.seed(name, id);
  return detail::parse_conj_until(lx, vars, Tok::Eof);
}

Database load_program(std::string_view text) {
  Lexer lx(text);
  Database db;
  Example* current_example = nullptr;
  bool key_declared = false;

  while (lx.peek().kind != Tok::Eof) {
    if (lx.peek().kind == Tok::Directive) {
      Token d = lx.take();
      if (d.text == "#key") {
        Token n = lx.take();
        if (n.kind != Tok::Int || n.number < 0)
          throw ParseError("#key expects a non-negative arity", n.line, n.col);
        db.set_key_arity(n.number);
        key_declared = true;
        continue;
      }
      if (d.text == "#example") {
        Token idt = lx.take();
        if (idt.kind != Tok::Int) throw ParseError("#example expects an id", idt.line, idt.col);
        Token kw = lx.take();
        if (kw.kind != Tok::Name || kw.text != "key")
          throw ParseError("#example expects key(...)", kw.line, kw.col);
        Token open = lx.take();
        if (open.kind != Tok::LParen) throw ParseError("expected '('", open.line, open.col);
        std::vector<Term> key;
        VarScope dummy;
        if (lx.peek().kind != Tok::RParen) {
          key.push_back(detail::parse_simple_term(lx, dummy));
          while (lx.peek().kind == Tok::Comma) {
            lx.take();
            key.push_back(detail::parse_simple_term(lx, dummy));
          }
        }
        Token close = lx.take();
        if (close.kind != Tok::RParen) throw ParseError("expected ')'", close.line, close.col);
        for (const Term& t : key)
          if (t.is_var()) throw ParseError("example keys must be ground", close.line, close.col);
        std::optional<std::string> label;
        if (lx.peek().kind == Tok::Name && lx.peek().text == "label") {
          lx.take();
          Token lo = lx.take();
          if (lo.kind != Tok::LParen) throw ParseError("expected '('", lo.line, lo.col);
          Token lv = lx.take();
          if (lv.kind != Tok::Name && lv.kind != Tok::Int)
            throw ParseError("label expects a constant", lv.line, lv.col);
          label = lv.text;
          Token lc = lx.take();
          if (lc.kind != Tok::RParen) throw ParseError("expected ')'", lc.line, lc.col);
        }
        Token dot = lx.take();
        if (dot.kind != Tok::Dot) throw ParseError("expected '.'", dot.line, dot.col);
        if (!key_declared) {
          db.set_key_arity(static_cast<int32_t>(key.size()));
          key_declared = true;
        }
        current_example = &db.add_example(idt.number, std::move(key), std::move(label));
        continue;
      }
      throw ParseError("unknown directive " + d.text, d.line, d.col);
    }

    // Clause: fact or rule.
    VarScope vars;
    Token at = lx.peek();
    Atom head = detail::parse_literal(lx, vars);
    if (lx.peek().kind == Tok::Neck) {
      lx.take();
      if (current_example)
        throw ParseError("rules must appear in the background section", at.line, at.col);
      Conjunction body = detail::parse_conj_until(lx, vars, Tok::Dot);
      lx.take();  // '.'
      if (head.builtin) throw ParseError("builtin cannot be a rule head", at.line, at.col);
      db.add_rule(Clause{std::move(head), std::move(body), vars.next_id()});
      continue;
    }
    Token dot = lx.take();
    if (dot.kind != Tok::Dot) throw ParseError("expected '.' or ':-'", dot.line, dot.col);
    if (head.builtin) throw ParseError("builtin cannot be asserted as a fact", at.line, at.col);
    if (!head.ground())
      throw NonGroundFactError("non-ground fact at line " + std::to_string(at.line) + ": " +
                               to_string(head));
    if (current_example)
      current_example->add_fact(std::move(head));
    else
      db.add_background(std::move(head));
  }

  db.finalize();
  return db;
}

namespace {

void emit_fact_block(std::ostringstream& out, const std::vector<PredKey>& preds,
                     const std::function<const FactStore*(PredKey)>& lookup) {
  for (PredKey k : preds) {
    const FactStore* store = lookup(k);
    if (!store) continue;
    for (const Atom& f : store->facts()) out << to_string(f) << ".\n";
  }
}

}  // namespace

std::string serialize_program(const Database& db) {
  std::ostringstream out;
  if (db.examples().key_arity > 0 || !db.examples().examples.empty())
    out << "#key " << db.examples().key_arity << "\n";

  emit_fact_block(out, db.background_predicates(), [&](PredKey k) { return db.background(k); });

  for (const Clause& r : db.rules())
    out << to_string(r.head) << " :- " << to_string(r.body) << ".\n";

  for (const Example& e : db.examples().examples) {
    out << "#example " << e.id << " key(";
    for (size_t i = 0; i < e.key.size(); ++i) {
      if (i) out << ",";
      out << to_string(e.key[i]);
    }
    out << ")";
    if (e.label) out << " label(" << *e.label << ")";
    out << ".\n";
    emit_fact_block(out, local_predicates_sorted(e), [&](PredKey k) -> const FactStore* {
      auto it = e.local.find(k);
      return it == e.local.end() ? nullptr : &it->second;
    });
  }
  return out.str();
}

}  // namespace qp
