#pragma once

// A small expression language for functionals in experiment configs:
//
//   expr    := ['-'] term (('+' | '-') term)*
//   term    := number ['*' primary] | primary
//   primary := name '(' number (',' number)* ')' | '(' expr ')'
//
// Builtins: const(v), count(i), count_sq(i), indicator_le(i, k),
// indicator_ge(i, k), exp_neg(a, i), table(i, v0, ...), cumsum_g(i, g0, ...),
// cumsum_ind(i, M), max_radius_gt(t, r_0, ..., r_{m-1}).

#include <stdexcept>
#include <string>

#include "pspace/functional.hpp"

namespace pspace {

class DslError : public std::runtime_error {
 public:
  DslError(const std::string& message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }
  /// The message without the line:column prefix.
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  int line_;
  int column_;
};

struct ParsedFunctional {
  Functional functional;
  /// Normalised source text; parsing it again gives the same canonical form.
  std::string canonical;
};

/// Parses `source` for a space with `atom_count` atoms. Throws DslError.
ParsedFunctional parse_functional(const std::string& source, std::size_t atom_count);

}  // namespace pspace
