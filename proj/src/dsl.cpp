#include "pspace/dsl.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>

namespace pspace {

DslError::DslError(const std::string& message, int line, int column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      message_(message),
      line_(line),
      column_(column) {}

namespace {

// Shortest decimal that reads back to the same double.
std::string shortest(double v) {
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

struct Node {
  Functional functional;
  std::string text;
  bool compound = false;  // a sum, needs parentheses when scaled
};

class Parser {
 public:
  Parser(const std::string& src, std::size_t atoms) : src_(src), atoms_(atoms) {}

  ParsedFunctional run() {
    skip_space();
    if (at_end()) fail("empty functional");
    Node n = expr();
    skip_space();
    if (!at_end()) fail(std::string("unexpected '") + src_[pos_] + "'");
    return {n.functional.with_description(n.text), n.text};
  }

 private:
  const std::string& src_;
  std::size_t atoms_;
  std::size_t pos_ = 0;

  bool at_end() const { return pos_ >= src_.size(); }

  [[noreturn]] void fail(const std::string& message) const { fail_at(pos_, message); }

  [[noreturn]] void fail_at(std::size_t at, const std::string& message) const {
    int line = 1, column = 1;
    for (std::size_t k = 0; k < at && k < src_.size(); ++k) {
      if (src_[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw DslError(message, line, column);
  }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char ch) {
    skip_space();
    if (!at_end() && src_[pos_] == ch) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char ch) {
    if (!accept(ch)) fail(std::string("expected '") + ch + "'");
  }

  bool number_ahead() {
    skip_space();
    if (at_end()) return false;
    const char ch = src_[pos_];
    return std::isdigit(static_cast<unsigned char>(ch)) || ch == '.';
  }

  double number() {
    skip_space();
    const std::size_t start = pos_;
    if (!at_end() && (src_[pos_] == '-' || src_[pos_] == '+')) ++pos_;
    const char* begin = src_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail_at(start, "expected a number");
    pos_ += static_cast<std::size_t>(end - begin);
    if (!std::isfinite(v)) fail_at(start, "number out of range");
    return src_[start] == '-' ? -v : v;
  }

  Node expr() {
    std::vector<std::pair<double, Node>> terms;
    double sign = accept('-') ? -1.0 : 1.0;
    while (true) {
      auto [coef, node] = term();
      terms.emplace_back(sign * coef, std::move(node));
      if (accept('+')) {
        sign = 1.0;
      } else if (accept('-')) {
        sign = -1.0;
      } else {
        break;
      }
    }
    if (terms.size() == 1 && terms[0].first == 1.0) return terms[0].second;

    std::vector<std::pair<double, Functional>> parts;
    std::string text;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const auto& [coef, node] = terms[k];
      const double mag = std::abs(coef);
      if (k == 0) text += coef < 0 ? "-" : "";
      else text += coef < 0 ? " - " : " + ";
      const std::string inner = node.compound ? "(" + node.text + ")" : node.text;
      text += mag == 1.0 ? inner : shortest(mag) + "*" + inner;
      parts.emplace_back(coef, node.functional);
    }
    return {affine(parts), text, terms.size() > 1 || terms[0].first != 1.0};
  }

  std::pair<double, Node> term() {
    if (number_ahead()) {
      const double c = number();
      if (accept('*')) return {c, primary()};
      return {c, {Functional::constant(1.0), "const(1)", false}};
    }
    return {1.0, primary()};
  }

  Node primary() {
    skip_space();
    if (accept('(')) {
      Node n = expr();
      expect(')');
      return n;
    }
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    const std::string name = src_.substr(start, pos_ - start);
    if (name.empty()) fail("expected a functional name");
    expect('(');
    std::vector<double> args;
    std::vector<std::size_t> where;
    if (!accept(')')) {
      do {
        skip_space();
        where.push_back(pos_);
        args.push_back(number());
      } while (accept(','));
      expect(')');
    }
    return builtin(name, start, args, where);
  }

  std::size_t atom_arg(const std::vector<double>& args, const std::vector<std::size_t>& where, std::size_t k) {
    const double v = args[k];
    if (v != std::floor(v) || v < 0 || v >= static_cast<double>(atoms_))
      fail_at(where[k], "atom index must be an integer in [0, " + std::to_string(atoms_) + ")");
    return static_cast<std::size_t>(v);
  }

  int int_arg(const std::vector<double>& args, const std::vector<std::size_t>& where, std::size_t k) {
    const double v = args[k];
    if (v != std::floor(v) || std::abs(v) > 1e9) fail_at(where[k], "expected an integer");
    return static_cast<int>(v);
  }

  Node builtin(const std::string& name, std::size_t at, const std::vector<double>& args,
               const std::vector<std::size_t>& where) {
    auto arity = [&](std::size_t lo, std::size_t hi) {
      if (args.size() < lo || args.size() > hi)
        fail_at(at, name + " takes " +
                        (lo == hi ? std::to_string(lo) : std::to_string(lo) + " or more") + " arguments");
    };
    auto rest = [&](std::size_t from) { return std::vector<double>(args.begin() + static_cast<long>(from), args.end()); };
    std::string text = name + "(";
    for (std::size_t k = 0; k < args.size(); ++k) text += (k ? ", " : "") + shortest(args[k]);
    text += ")";

    try {
      if (name == "const") {
        arity(1, 1);
        return {Functional::constant(args[0]), text};
      }
      if (name == "count") {
        arity(1, 1);
        return {Functional::count(atom_arg(args, where, 0)), text};
      }
      if (name == "count_sq") {
        arity(1, 1);
        return {Functional::count_squared(atom_arg(args, where, 0)), text};
      }
      if (name == "indicator_le" || name == "indicator_ge") {
        arity(2, 2);
        const auto i = atom_arg(args, where, 0);
        const int k = int_arg(args, where, 1);
        return {name == "indicator_le" ? Functional::indicator_le(i, k) : Functional::indicator_ge(i, k), text};
      }
      if (name == "exp_neg") {
        arity(2, 2);
        return {Functional::exp_neg(args[0], atom_arg(args, where, 1)), text};
      }
      if (name == "table") {
        arity(2, SIZE_MAX);
        return {Functional::tabulated(atom_arg(args, where, 0), rest(1)), text};
      }
      if (name == "cumsum_g") {
        arity(2, SIZE_MAX);
        return {Functional::cumulative(atom_arg(args, where, 0), rest(1)), text};
      }
      if (name == "cumsum_ind") {
        arity(2, 2);
        const auto i = atom_arg(args, where, 0);
        const int M = int_arg(args, where, 1);
        if (M < 0) fail_at(where[1], "M must be non-negative");
        std::vector<double> g(static_cast<std::size_t>(M) + 2, 1.0);
        g.back() = 0.0;
        return {Functional::cumulative(i, std::move(g)), text};
      }
      if (name == "max_radius_gt") {
        arity(1 + atoms_, 1 + atoms_);
        const double t = args[0];
        std::vector<bool> outside(atoms_);
        for (std::size_t i = 0; i < atoms_; ++i) outside[i] = args[i + 1] > t;
        Functional f(
            [outside](const Configuration& c) {
              for (std::size_t i = 0; i < outside.size(); ++i)
                if (outside[i] && c.counts[i] > 0) return 1.0;
              return 0.0;
            },
            text);
        return {f.with_signs(Sign::nonneg, Sign::nonpos).with_bound(1.0), text};
      }
    } catch (const DslError&) {
      throw;
    } catch (const std::exception& e) {
      fail_at(at, e.what());
    }
    fail_at(at, "unknown functional '" + name + "'");
  }
};

}  // namespace

ParsedFunctional parse_functional(const std::string& source, std::size_t atom_count) {
  if (atom_count == 0) throw PreconditionError("atom count must be positive");
  return Parser(source, atom_count).run();
}

}  // namespace pspace
