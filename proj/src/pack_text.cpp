#include <functional>

#include "qp/errors.hpp"
#include "qp/pack.hpp"
#include "lexer.hpp"

// Pack surface syntax. The written tree shape is preserved (no re-sharing);
// emit produces the canonical spelling of the same shape.

namespace qp {

using detail::Lexer;
using detail::Tok;
using detail::Token;
using detail::VarScope;

namespace {

bool is_or(const Token& t) { return t.kind == Tok::Name && t.text == "or"; }
bool is_true_atom(const Atom& a) {
  static const int32_t sym = intern("true");
  return a.pred == sym && a.args.empty();
}

// pack := '(' alt ')' | conj [',' '(' alt ')']
// alt  := pack ('or' pack)+
int32_t parse_node(QueryPack& pack, Lexer& lx, VarScope& vars);

std::vector<int32_t> parse_alternatives(QueryPack& pack, Lexer& lx, VarScope& vars) {
  std::vector<int32_t> kids;
  kids.push_back(parse_node(pack, lx, vars));
  if (!is_or(lx.peek())) lx.fail("expected 'or'");
  while (is_or(lx.peek())) {
    lx.take();
    kids.push_back(parse_node(pack, lx, vars));
  }
  return kids;
}

int32_t parse_node(QueryPack& pack, Lexer& lx, VarScope& vars) {
  int32_t id = static_cast<int32_t>(pack.nodes.size());
  pack.nodes.emplace_back();

  if (lx.peek().kind == Tok::LParen) {
    lx.take();
    std::vector<int32_t> kids = parse_alternatives(pack, lx, vars);
    Token close = lx.take();
    if (close.kind != Tok::RParen) throw ParseError("expected ')'", close.line, close.col);
    pack.nodes[id].children = std::move(kids);
    return id;
  }

  Conjunction conj;
  for (;;) {
    if (is_or(lx.peek())) lx.fail("unexpected 'or'");
    Atom a = detail::parse_literal(lx, vars);
    if (!is_true_atom(a)) conj.atoms.push_back(std::move(a));
    if (lx.peek().kind != Tok::Comma) {
      pack.nodes[id].conj = std::move(conj);
      return id;  // leaf
    }
    lx.take();
    if (lx.peek().kind == Tok::LParen) {
      lx.take();
      std::vector<int32_t> kids = parse_alternatives(pack, lx, vars);
      Token close = lx.take();
      if (close.kind != Tok::RParen) throw ParseError("expected ')'", close.line, close.col);
      pack.nodes[id].conj = std::move(conj);
      pack.nodes[id].children = std::move(kids);
      return id;
    }
  }
}

}  // namespace

QueryPack parse_pack(std::string_view text) {
  Lexer lx(text);
  QueryPack pack;
  VarScope vars;

  if (lx.peek().kind == Tok::Directive && lx.peek().text == "#key") {
    lx.take();
    for (;;) {
      Token v = lx.take();
      if (v.kind != Tok::Var) throw ParseError("#key expects variable names", v.line, v.col);
      pack.key_vars.push_back(vars.get(v.text));
      if (lx.peek().kind != Tok::Comma) break;
      lx.take();
    }
    Token dot = lx.take();
    if (dot.kind != Tok::Dot) throw ParseError("expected '.' after #key", dot.line, dot.col);
  }

  parse_node(pack, lx, vars);
  if (lx.peek().kind != Tok::Eof) lx.fail("trailing input after pack");

  // Leaf query ids in left-to-right order.
  int32_t next = 0;
  std::function<void(int32_t)> number = [&](int32_t id) {
    PackNode& n = pack.nodes[id];
    if (n.is_leaf()) {
      n.leaf_query = next++;
      return;
    }
    for (int32_t c : n.children) number(c);
  };
  number(0);
  refresh_pack_stats(pack);
  return pack;
}

namespace {

std::string emit_node(const QueryPack& pack, int32_t id) {
  const PackNode& n = pack.nodes[id];
  if (n.is_leaf()) return n.conj.empty() ? "true" : to_string(n.conj);
  std::string kids;
  for (size_t i = 0; i < n.children.size(); ++i) {
    if (i) kids += " or ";
    kids += emit_node(pack, n.children[i]);
  }
  if (n.conj.empty()) return "(" + kids + ")";
  return to_string(n.conj) + ", (" + kids + ")";
}

}  // namespace

std::string emit_pack(const QueryPack& pack) {
  std::string out;
  if (!pack.key_vars.empty()) {
    out += "#key ";
    for (size_t i = 0; i < pack.key_vars.size(); ++i) {
      if (i) out += ", ";
      out += to_string(pack.key_vars[i]);
    }
    out += ".\n";
  }
  out += emit_node(pack, 0);
  out += "\n";
  return out;
}

}  // namespace qp
