#pragma once

// Internal token layer shared by the program, pack, and bias parsers.

#include <cctype>
#include <charconv>
#include <map>
#include <string>
#include <string_view>

#include "qp/errors.hpp"
#include "qp/term.hpp"

namespace qp::detail {

enum class Tok {
  Name,  // lowercase identifier
  Var,   // uppercase/underscore identifier
  Int,
  LParen,
  RParen,
  Comma,
  Dot,
  Slash,
  Neck,       // :-
  Op,         // = \= < =<
  Mode,       // + - # (only meaningful in bias files)
  Directive,  // #key, #example, ...
  Eof,
};

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  int32_t number = 0;
  size_t line = 1, col = 1;
};

class Lexer {
 public:
  // `modes` switches '+'/'-'/'#' to Mode tokens and disables negative
  // integer literals (bias files only).
  explicit Lexer(std::string_view src, bool modes = false) : src_(src), modes_(modes) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, tok_.line, tok_.col);
  }

 private:
  void advance() {
    skip_ws();
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_ = {Tok::Eof, "", 0, line_, col_};
      return;
    }
    char c = src_[pos_];
    if (c == '(') return punct(Tok::LParen, "(");
    if (c == ')') return punct(Tok::RParen, ")");
    if (c == ',') return punct(Tok::Comma, ",");
    if (c == '.') return punct(Tok::Dot, ".");
    if (c == '/') return punct(Tok::Slash, "/");
    if (modes_ && (c == '+' || c == '-')) return punct(Tok::Mode, c == '+' ? "+" : "-");
    if (c == '#') {
      if (modes_) return punct(Tok::Mode, "#");
      size_t start = pos_;
      bump();
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        bump();
      tok_ = {Tok::Directive, std::string(src_.substr(start, pos_ - start)), 0, tok_.line,
              tok_.col};
      return;
    }
    if (c == ':' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '-') {
      bump();
      bump();
      tok_ = {Tok::Neck, ":-", 0, tok_.line, tok_.col};
      return;
    }
    if (c == '=') {
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '<') {
        bump();
        bump();
        tok_ = {Tok::Op, "=<", 0, tok_.line, tok_.col};
        return;
      }
      return punct(Tok::Op, "=");
    }
    if (c == '<') return punct(Tok::Op, "<");
    if (c == '\\' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
      bump();
      bump();
      tok_ = {Tok::Op, "\\=", 0, tok_.line, tok_.col};
      return;
    }
    if ((!modes_ && c == '-') || std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      if (c == '-') bump();
      if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
        throw ParseError("expected digit after '-'", tok_.line, tok_.col);
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
      std::string text(src_.substr(start, pos_ - start));
      int32_t value = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc()) throw ParseError("integer out of range", tok_.line, tok_.col);
      tok_ = {Tok::Int, std::move(text), value, tok_.line, tok_.col};
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        bump();
      std::string text(src_.substr(start, pos_ - start));
      bool var = std::isupper(static_cast<unsigned char>(c)) || c == '_';
      tok_ = {var ? Tok::Var : Tok::Name, std::move(text), 0, tok_.line, tok_.col};
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
  }

  void punct(Tok k, const char* text) {
    bump();
    tok_ = {k, text, 0, tok_.line, tok_.col};
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        bump();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  bool modes_ = false;
  size_t pos_ = 0;
  size_t line_ = 1, col_ = 1;
  Token tok_;
};

// Name -> variable id scope. '_' is anonymous: every occurrence is fresh.
class VarScope {
 public:
  explicit VarScope(int32_t first_id = 0) : next_(first_id) {}

  void seed(const std::string& name, int32_t id) {
    ids_[name] = id;
    next_ = std::max(next_, id + 1);
  }

  Term get(const std::string& name) {
    if (name == "_") return Term::variable(next_++);
    auto it = ids_.find(name);
    if (it != ids_.end()) return Term::variable(it->second, name);
    int32_t id = next_++;
    ids_[name] = id;
    return Term::variable(id, name);
  }

  int32_t next_id() const { return next_; }

 private:
  std::map<std::string, int32_t> ids_;
  int32_t next_;
};

Term parse_simple_term(Lexer& lx, VarScope& vars);
Atom parse_literal(Lexer& lx, VarScope& vars);
Conjunction parse_conj_until(Lexer& lx, VarScope& vars, Tok stop);

}  // namespace qp::detail
