#include "nhsol/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace nhsol {

namespace {

// expr    := term (('+' | '-') term)*
// term    := unary (('*' | '/') unary)*
// unary   := '-' unary | power
// power   := primary ('^' unary)?
// primary := number | name | name '(' expr ')' | '(' expr ')'
class Parser {
 public:
  Parser(std::string_view src, const ParseOptions& opts) : src_(src), opts_(opts) {}

  Expr run() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
    Expr e = expr();
    skip_ws();
    if (pos_ < src_.size())
      throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + term();
      } else if (accept('-')) {
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * unary();
      } else if (accept('/')) {
        lhs = lhs / unary();
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) {
      skip_ws();
      const std::size_t at = pos_;
      Expr ex = unary();
      if (!ex.is_const()) throw ParseError("exponent must be a constant expression", at);
      return Expr::binary(Op::Pow, base, ex);
    }
    return base;
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
      if (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) {
        pos_ = q;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    const char* first = src_.data() + start;
    const char* last = src_.data() + pos_;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw ParseError("malformed number", start);
    return Expr(v);
  }

  Expr name() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string_view id = src_.substr(start, pos_ - start);

    static const std::pair<const char*, Op> functions[] = {
        {"sin", Op::Sin},   {"cos", Op::Cos},   {"exp", Op::Exp},
        {"log", Op::Log},   {"sqrt", Op::Sqrt}, {"sinh", Op::Sinh},
        {"cosh", Op::Cosh}, {"tanh", Op::Tanh},
    };
    for (const auto& [fname, op] : functions) {
      if (id == fname) {
        if (!accept('(')) throw ParseError("expected '(' after function name", pos_);
        Expr arg = expr();
        if (!accept(')')) throw ParseError("expected ')'", pos_);
        return Expr::unary(op, arg);
      }
    }
    if (id == "pi") return Expr(std::numbers::pi);
    if (auto it = opts_.aliases.find(id); it != opts_.aliases.end()) return Expr(it->second);

    if (id.size() >= 2 && (id[0] == 'x' || id[0] == 'y')) {
      const std::string_view digits = id.substr(1);
      bool all_digits = true;
      for (char d : digits) all_digits = all_digits && std::isdigit(static_cast<unsigned char>(d));
      if (all_digits && digits[0] != '0') {
        int idx = 0;
        auto res = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
        if (res.ec != std::errc()) throw ParseError("variable index too large", start);
        const bool base = id[0] == 'x';
        const int limit = base ? opts_.max_base : opts_.max_fiber;
        if (limit > 0 && idx > limit)
          throw ParseError("variable index out of range: " + std::string(id) + " (max " +
                               std::to_string(limit) + ")",
                           start);
        return base ? Expr(Var::x(idx - 1)) : Expr(Var::y(idx - 1));
      }
    }
    throw ParseError("unknown identifier '" + std::string(id) + "'", start);
  }

  std::string_view src_;
  const ParseOptions& opts_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view source, const ParseOptions& opts) {
  return Parser(source, opts).run();
}

LagrangianSpec parse(std::string_view source, int n, int m) {
  if (n < 2) throw std::invalid_argument("base dimension n must be at least 2");
  if (m < n) throw std::invalid_argument("fiber dimension m must be at least n");
  ParseOptions opts;
  opts.max_base = n;
  opts.max_fiber = m;
  LagrangianSpec spec;
  spec.n = n;
  spec.m = m;
  spec.body = parse_expr(source, opts);
  spec.source = std::string(source);
  return spec;
}

}  // namespace nhsol
