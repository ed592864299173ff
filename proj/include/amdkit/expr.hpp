#pragma once

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "amdkit/errors.hpp"
#include "amdkit/jet.hpp"

// Analytic expression language used by scene files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' ['-'] INTEGER | '^' '(' ['-'] INTEGER ')')?
//   primary := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'
//   FUNC    := sin | cos | sinh | cosh | tanh | exp | sqrt
//
// `pi` is a reserved constant. Exponents are integers so every expression
// stays single-valued under complex continuation.
namespace amdkit::expr {

enum class Op { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Fn { Sin, Cos, Sinh, Cosh, Tanh, Exp, Sqrt };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Number;
  double number = 0.0;  // Number
  int slot = -1;        // Variable: index into the declared variable list
  int exponent = 0;     // Pow
  Fn fn = Fn::Sin;      // Call
  NodePtr lhs;          // operand of unary nodes, left operand of binary ones
  NodePtr rhs;
};

const char* function_name(Fn fn);

class SyntaxError : public Error {
 public:
  SyntaxError(int line, int column, std::vector<std::string> expected, const std::string& what);
  int line() const { return line_; }
  int column() const { return column_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  int line_;
  int column_;
  std::vector<std::string> expected_;
};

class UnknownIdentifier : public Error {
 public:
  UnknownIdentifier(std::string name, std::vector<std::string> declared, int line, int column);
  const std::string& name() const { return name_; }
  const std::vector<std::string>& declared() const { return declared_; }

 private:
  std::string name_;
  std::vector<std::string> declared_;
};

/// Domain error during evaluation; `subtree` is the printed offending node.
class EvalError : public Error {
 public:
  EvalError(const std::string& what, std::string subtree)
      : Error(what + " in '" + subtree + "'"), subtree_(std::move(subtree)) {}
  const std::string& subtree() const { return subtree_; }

 private:
  std::string subtree_;
};

class Expression {
 public:
  const Node& root() const { return *root_; }
  const std::vector<std::string>& variables() const { return variables_; }

  /// Minimal-parenthesis infix form that re-parses to an equal tree.
  std::string to_string() const;
  static std::string to_string(const Node& node, const std::vector<std::string>& variables);

  /// Same tree shape, literals and variable names.
  bool structurally_equal(const Expression& other) const;

  /// Evaluates over any supported ring: double, std::complex<double>,
  /// Jet<double>, Jet<std::complex<double>>. `bindings[i]` binds
  /// `variables()[i]`.
  template <class T>
  T eval(std::span<const T> bindings) const;

  double eval(std::initializer_list<double> bindings) const {
    return eval<double>(std::span<const double>(bindings.begin(), bindings.size()));
  }

  bool is_constant() const;

 private:
  friend Expression parse(std::string_view text, std::vector<std::string> variables);
  friend Expression parse(std::string_view text);

  struct Instr {
    Op op;
    Fn fn;
    double number;
    int slot;
    int exponent;
    const Node* node;
  };

  Expression(NodePtr root, std::vector<std::string> variables);
  void compile(const Node& node);
  [[noreturn]] void fail(const std::string& what, const Node* node) const;

  NodePtr root_;
  std::vector<std::string> variables_;
  std::vector<Instr> program_;
};

/// Parses `text` with the given declared variables; any other identifier is
/// an UnknownIdentifier error.
Expression parse(std::string_view text, std::vector<std::string> variables);

/// Parses `text`, declaring free identifiers in order of first appearance.
Expression parse(std::string_view text);

// ---------------------------------------------------------------------------

namespace detail {

template <class T>
T constant(double c) {
  if constexpr (is_jet<T>::value) {
    using S = decltype(T{}.value);
    return T(S(c));
  } else {
    return T(c);
  }
}

template <class T>
auto value_of(const T& x) {
  if constexpr (is_jet<T>::value) {
    return x.value;
  } else {
    return x;
  }
}

template <class T>
constexpr bool is_real_ring() {
  using V = decltype(value_of(T{}));
  return std::is_same_v<V, double>;
}

}  // namespace detail

template <class T>
T Expression::eval(std::span<const T> bindings) const {
  using std::cos, std::cosh, std::exp, std::sin, std::sinh, std::sqrt, std::tanh;
  if (bindings.size() < variables_.size()) {
    throw EvalError("unbound variable '" + variables_[bindings.size()] + "'", to_string());
  }
  thread_local std::vector<T> stack;
  stack.clear();
  for (const Instr& in : program_) {
    switch (in.op) {
      case Op::Number:
        stack.push_back(detail::constant<T>(in.number));
        break;
      case Op::Variable:
        stack.push_back(bindings[static_cast<std::size_t>(in.slot)]);
        break;
      case Op::Neg:
        stack.back() = -stack.back();
        break;
      case Op::Pow: {
        T& x = stack.back();
        if (in.exponent < 0 && detail::value_of(x) == decltype(detail::value_of(x))(0)) {
          fail("negative power of zero", in.node);
        }
        x = ipow(x, in.exponent);
        break;
      }
      case Op::Call: {
        T& x = stack.back();
        switch (in.fn) {
          case Fn::Sin: x = sin(x); break;
          case Fn::Cos: x = cos(x); break;
          case Fn::Sinh: x = sinh(x); break;
          case Fn::Cosh: x = cosh(x); break;
          case Fn::Tanh: x = tanh(x); break;
          case Fn::Exp: x = exp(x); break;
          case Fn::Sqrt: {
            const auto v = detail::value_of(x);
            if constexpr (detail::is_real_ring<T>()) {
              if (v < 0.0) fail("sqrt of negative value", in.node);
              if constexpr (is_jet<T>::value) {
                if (v == 0.0) fail("sqrt is not differentiable at zero", in.node);
              }
            } else if constexpr (is_jet<T>::value) {
              if (v == decltype(v)(0)) fail("sqrt is not differentiable at zero", in.node);
            }
            x = sqrt(x);
            break;
          }
        }
        break;
      }
      default: {
        T rhs = std::move(stack.back());
        stack.pop_back();
        T& lhs = stack.back();
        switch (in.op) {
          case Op::Add: lhs = lhs + rhs; break;
          case Op::Sub: lhs = lhs - rhs; break;
          case Op::Mul: lhs = lhs * rhs; break;
          case Op::Div: {
            const auto v = detail::value_of(rhs);
            if (v == decltype(v)(0)) fail("division by zero", in.node);
            lhs = lhs / rhs;
            break;
          }
          default: break;
        }
      }
    }
  }
  return stack.back();
}

}  // namespace amdkit::expr
