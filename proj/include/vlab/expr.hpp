#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>

#include "vlab/core.hpp"

// Recursive-descent parser for the scalar composition functions the CLI
// accepts: expressions over t, abs, sign, min, max, pow (or ^), the four
// arithmetic operators and numeric constants. Parsing yields a plain
// std::function so parsed and built-in functions share one call type.

namespace vlab {

namespace detail {

template <typename Scalar>
class ExprParser {
 public:
  using Fn = std::function<Scalar(Scalar)>;

  explicit ExprParser(const std::string& src) : src_(src) {}

  Fn parse() {
    Fn f = expression();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  Fn expression() {
    Fn lhs = term();
    for (;;) {
      skip_ws();
      if (consume('+')) {
        Fn rhs = term();
        lhs = [lhs, rhs](Scalar t) { return lhs(t) + rhs(t); };
      } else if (consume('-')) {
        Fn rhs = term();
        lhs = [lhs, rhs](Scalar t) { return lhs(t) - rhs(t); };
      } else {
        return lhs;
      }
    }
  }

  Fn term() {
    Fn lhs = unary();
    for (;;) {
      skip_ws();
      if (consume('*')) {
        Fn rhs = unary();
        lhs = [lhs, rhs](Scalar t) { return lhs(t) * rhs(t); };
      } else if (consume('/')) {
        Fn rhs = unary();
        lhs = [lhs, rhs](Scalar t) { return lhs(t) / rhs(t); };
      } else {
        return lhs;
      }
    }
  }

  Fn unary() {
    skip_ws();
    if (consume('-')) {
      Fn inner = unary();
      return [inner](Scalar t) { return -inner(t); };
    }
    if (consume('+')) return unary();
    return power();
  }

  Fn power() {
    Fn base = primary();
    skip_ws();
    if (consume('^')) {
      Fn exp = unary();  // right associative, exponent may carry a sign
      return [base, exp](Scalar t) { return std::pow(base(t), exp(t)); };
    }
    return base;
  }

  Fn primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of expression");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (consume('(')) {
      Fn inner = expression();
      expect(')');
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::string name = identifier();
      if (name == "t") return [](Scalar t) { return t; };
      expect('(');
      Fn a = expression();
      if (name == "abs" || name == "sign") {
        expect(')');
        if (name == "abs") return [a](Scalar t) { return std::abs(a(t)); };
        return [a](Scalar t) {
          const Scalar v = a(t);
          return v > Scalar(0) ? Scalar(1) : (v < Scalar(0) ? Scalar(-1) : Scalar(0));
        };
      }
      if (name == "min" || name == "max" || name == "pow") {
        expect(',');
        Fn b = expression();
        expect(')');
        if (name == "min") return [a, b](Scalar t) { return std::min(a(t), b(t)); };
        if (name == "max") return [a, b](Scalar t) { return std::max(a(t), b(t)); };
        return [a, b](Scalar t) { return std::pow(a(t), b(t)); };
      }
      fail("unknown function '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
    return {};
  }

  Fn number() {
    const char* begin = src_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return [v](Scalar) { return Scalar(v); };
  }

  std::string identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    return src_.substr(start, pos_ - start);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError("expression error at position " + std::to_string(pos_) + ": " + msg +
                     " in \"" + src_ + "\"");
  }

  std::string src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <typename Scalar = double>
std::function<Scalar(Scalar)> parse_expression(const std::string& src) {
  return detail::ExprParser<Scalar>(src).parse();
}

}  // namespace vlab
