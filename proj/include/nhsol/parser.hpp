#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "nhsol/expr.hpp"

namespace nhsol {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " (byte " + std::to_string(offset) + ")"),
        message_(msg),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  std::size_t offset_;
};

struct ParseOptions {
  int max_base = 0;   // x1..x<max_base>; 0 means unbounded
  int max_fiber = 0;  // y1..y<max_fiber>; 0 means unbounded
  // Extra names resolved to variables, e.g. "l" -> x1 for flow initial data.
  std::map<std::string, Var, std::less<>> aliases;
};

Expr parse_expr(std::string_view source, const ParseOptions& opts = {});

struct LagrangianSpec {
  int n = 0;
  int m = 0;
  Expr body;
  std::string source;
};

// Checks n >= 2, m >= n and that every variable index is in range.
LagrangianSpec parse(std::string_view source, int n, int m);

}  // namespace nhsol
