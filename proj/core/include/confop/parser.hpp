#pragma once

#include <string>

#include "confop/expr.hpp"

namespace confop {

struct ParseError : std::runtime_error {
  int line = 0, column = 0;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " at line " + std::to_string(line_) + ", column " + std::to_string(col_)),
        line(line_),
        column(col_) {}
};

// Parses the expression DSL. Lines hold terms joined by '+' and '-';
// '#' starts a comment. See the README for the grammar.
LinearCombination parse(const std::string& text);

// Parses a single rational-function literal over n and w, e.g. "-n/2+1".
Coefficient parse_coefficient(const std::string& text);

// Deterministic text form; parse(print(L)) is structurally identical to L.
std::string print(const LinearCombination& L);
std::string print(const Term& t);

}  // namespace confop
