#include "amdkit/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>

namespace amdkit::expr {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

std::optional<Fn> lookup_function(std::string_view name) {
  if (name == "sin") return Fn::Sin;
  if (name == "cos") return Fn::Cos;
  if (name == "sinh") return Fn::Sinh;
  if (name == "cosh") return Fn::Cosh;
  if (name == "tanh") return Fn::Tanh;
  if (name == "exp") return Fn::Exp;
  if (name == "sqrt") return Fn::Sqrt;
  return std::nullopt;
}

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind;
  std::string_view text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= text_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      const char c = text_[pos_];
      const std::size_t start = pos_;
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
        t.kind = Tok::Number;
        lex_number();
        t.text = text_.substr(start, pos_ - start);
        const std::string copy(t.text);
        t.number = std::strtod(copy.c_str(), nullptr);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::Ident;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
          advance();
        }
        t.text = text_.substr(start, pos_ - start);
      } else {
        switch (c) {
          case '+': t.kind = Tok::Plus; break;
          case '-': t.kind = Tok::Minus; break;
          case '*': t.kind = Tok::Star; break;
          case '/': t.kind = Tok::Slash; break;
          case '^': t.kind = Tok::Caret; break;
          case '(': t.kind = Tok::LParen; break;
          case ')': t.kind = Tok::RParen; break;
          default:
            throw SyntaxError(line_, column_, {"number", "identifier", "operator", "(", ")"},
                              std::string("unexpected character '") + c + "'");
        }
        advance();
        t.text = text_.substr(start, 1);
      }
      out.push_back(t);
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
  }

  void digits() {
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
  }

  void lex_number() {
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      advance();
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        while (pos_ < look) advance();
        digits();
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

const char* describe(Tok k) {
  switch (k) {
    case Tok::Number: return "number";
    case Tok::Ident: return "identifier";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Caret: return "'^'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::End: return "end of input";
  }
  return "?";
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<std::string>* variables, bool declare_free)
      : tokens_(std::move(tokens)), variables_(variables), declare_free_(declare_free) {}

  NodePtr run() {
    NodePtr e = expression();
    if (peek().kind != Tok::End) {
      unexpected({"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"});
    }
    return e;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& take() { return tokens_[pos_++]; }

  [[noreturn]] void unexpected(std::vector<std::string> expected) const {
    const Token& t = peek();
    throw SyntaxError(t.line, t.column, expected,
                      std::string("unexpected ") + describe(t.kind) +
                          (t.kind == Tok::End ? "" : " '" + std::string(t.text) + "'"));
  }

  void expect(Tok k) {
    if (peek().kind != k) unexpected({describe(k)});
    ++pos_;
  }

  static NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }

  NodePtr expression() {
    NodePtr lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const Op op = take().kind == Tok::Plus ? Op::Add : Op::Sub;
      lhs = make_binary(op, lhs, term());
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const Op op = take().kind == Tok::Star ? Op::Mul : Op::Div;
      lhs = make_binary(op, lhs, unary());
    }
    return lhs;
  }

  NodePtr unary() {
    if (peek().kind == Tok::Minus) {
      take();
      auto n = std::make_shared<Node>();
      n->op = Op::Neg;
      n->lhs = unary();
      return n;
    }
    return power();
  }

  int integer_exponent() {
    bool negative = false;
    if (peek().kind == Tok::Minus) {
      take();
      negative = true;
    }
    const Token& t = peek();
    if (t.kind != Tok::Number || t.text.find_first_of(".eE") != std::string_view::npos) {
      throw SyntaxError(t.line, t.column, {"integer"}, "exponent must be an integer literal");
    }
    take();
    int value = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc()) throw SyntaxError(t.line, t.column, {"integer"}, "exponent out of range");
    return negative ? -value : value;
  }

  NodePtr power() {
    NodePtr base = primary();
    if (peek().kind != Tok::Caret) return base;
    take();
    int e = 0;
    if (peek().kind == Tok::LParen) {
      take();
      e = integer_exponent();
      expect(Tok::RParen);
    } else {
      e = integer_exponent();
    }
    auto n = std::make_shared<Node>();
    n->op = Op::Pow;
    n->exponent = e;
    n->lhs = std::move(base);
    return n;
  }

  NodePtr primary() {
    const Token t = peek();
    switch (t.kind) {
      case Tok::Number: {
        take();
        auto n = std::make_shared<Node>();
        n->op = Op::Number;
        n->number = t.number;
        return n;
      }
      case Tok::LParen: {
        take();
        NodePtr e = expression();
        expect(Tok::RParen);
        return e;
      }
      case Tok::Ident: {
        take();
        if (auto fn = lookup_function(t.text)) {
          if (peek().kind != Tok::LParen) {
            unexpected({"'('"});
          }
          take();
          auto n = std::make_shared<Node>();
          n->op = Op::Call;
          n->fn = *fn;
          n->lhs = expression();
          expect(Tok::RParen);
          return n;
        }
        if (t.text == "pi") {
          auto n = std::make_shared<Node>();
          n->op = Op::Number;
          n->number = std::numbers::pi;
          n->slot = -2;  // printed back as `pi`
          return n;
        }
        auto it = std::find(variables_->begin(), variables_->end(), t.text);
        int slot = static_cast<int>(it - variables_->begin());
        if (it == variables_->end()) {
          if (!declare_free_) throw UnknownIdentifier(std::string(t.text), *variables_, t.line, t.column);
          variables_->emplace_back(t.text);
        }
        auto n = std::make_shared<Node>();
        n->op = Op::Variable;
        n->slot = slot;
        return n;
      }
      default:
        unexpected({"number", "identifier", "'('", "'-'"});
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<std::string>* variables_;
  bool declare_free_;
};

int precedence(const Node& n) {
  switch (n.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Number: return n.number < 0 ? 0 : 5;
    default: return 5;
  }
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  // Prefer the shortest representation that round-trips.
  for (int digits = 1; digits <= 17; ++digits) {
    char shorter[40];
    std::snprintf(shorter, sizeof shorter, "%.*g", digits, x);
    if (std::strtod(shorter, nullptr) == x) return shorter;
  }
  return buf;
}

void print(const Node& n, const std::vector<std::string>& vars, std::string& out);

void print_child(const Node& child, int min_prec, const std::vector<std::string>& vars, std::string& out) {
  if (precedence(child) < min_prec) {
    out += '(';
    print(child, vars, out);
    out += ')';
  } else {
    print(child, vars, out);
  }
}

void print(const Node& n, const std::vector<std::string>& vars, std::string& out) {
  switch (n.op) {
    case Op::Number:
      out += n.slot == -2 ? "pi" : format_number(n.number);
      return;
    case Op::Variable:
      out += vars.at(static_cast<std::size_t>(n.slot));
      return;
    case Op::Neg:
      out += '-';
      print_child(*n.lhs, 3, vars, out);
      return;
    case Op::Pow:
      print_child(*n.lhs, 5, vars, out);
      out += '^';
      if (n.exponent < 0) {
        out += "(" + std::to_string(n.exponent) + ")";
      } else {
        out += std::to_string(n.exponent);
      }
      return;
    case Op::Call:
      out += function_name(n.fn);
      out += '(';
      print(*n.lhs, vars, out);
      out += ')';
      return;
    default: {
      const int p = precedence(n);
      print_child(*n.lhs, p, vars, out);
      switch (n.op) {
        case Op::Add: out += " + "; break;
        case Op::Sub: out += " - "; break;
        case Op::Mul: out += "*"; break;
        default: out += "/"; break;
      }
      print_child(*n.rhs, p + 1, vars, out);
    }
  }
}

bool equal_nodes(const Node& a, const std::vector<std::string>& va, const Node& b,
                 const std::vector<std::string>& vb) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::Number:
      return a.number == b.number;
    case Op::Variable:
      return va.at(static_cast<std::size_t>(a.slot)) == vb.at(static_cast<std::size_t>(b.slot));
    case Op::Neg:
      return equal_nodes(*a.lhs, va, *b.lhs, vb);
    case Op::Pow:
      return a.exponent == b.exponent && equal_nodes(*a.lhs, va, *b.lhs, vb);
    case Op::Call:
      return a.fn == b.fn && equal_nodes(*a.lhs, va, *b.lhs, vb);
    default:
      return equal_nodes(*a.lhs, va, *b.lhs, vb) && equal_nodes(*a.rhs, va, *b.rhs, vb);
  }
}

bool has_variables(const Node& n) {
  if (n.op == Op::Variable) return true;
  return (n.lhs && has_variables(*n.lhs)) || (n.rhs && has_variables(*n.rhs));
}

}  // namespace

const char* function_name(Fn fn) {
  switch (fn) {
    case Fn::Sin: return "sin";
    case Fn::Cos: return "cos";
    case Fn::Sinh: return "sinh";
    case Fn::Cosh: return "cosh";
    case Fn::Tanh: return "tanh";
    case Fn::Exp: return "exp";
    case Fn::Sqrt: return "sqrt";
  }
  return "?";
}

SyntaxError::SyntaxError(int line, int column, std::vector<std::string> expected, const std::string& what)
    : Error("syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
            what + "; expected one of: " + join(expected)),
      line_(line),
      column_(column),
      expected_(std::move(expected)) {}

UnknownIdentifier::UnknownIdentifier(std::string name, std::vector<std::string> declared, int line, int column)
    : Error("unknown identifier '" + name + "' at line " + std::to_string(line) + ", column " +
            std::to_string(column) + "; declared variables: [" + join(declared) + "]"),
      name_(std::move(name)),
      declared_(std::move(declared)) {}

Expression::Expression(NodePtr root, std::vector<std::string> variables)
    : root_(std::move(root)), variables_(std::move(variables)) {
  compile(*root_);
}

void Expression::compile(const Node& n) {
  if (n.lhs) compile(*n.lhs);
  if (n.rhs) compile(*n.rhs);
  program_.push_back(Instr{n.op, n.fn, n.number, n.slot, n.exponent, &n});
}

void Expression::fail(const std::string& what, const Node* node) const {
  throw EvalError(what, to_string(*node, variables_));
}

std::string Expression::to_string(const Node& node, const std::vector<std::string>& variables) {
  std::string out;
  print(node, variables, out);
  return out;
}

std::string Expression::to_string() const { return to_string(*root_, variables_); }

bool Expression::structurally_equal(const Expression& other) const {
  return equal_nodes(*root_, variables_, *other.root_, other.variables_);
}

bool Expression::is_constant() const { return !has_variables(*root_); }

Expression parse(std::string_view text, std::vector<std::string> variables) {
  for (const auto& v : variables) {
    if (v == "pi" || v == "sin" || v == "cos" || v == "sinh" || v == "cosh" || v == "tanh" || v == "exp" || v == "sqrt") {
      throw InvalidInput("'" + v + "' is reserved and cannot be declared as a variable");
    }
  }
  Parser p(Lexer(text).run(), &variables, false);
  NodePtr root = p.run();
  return Expression(std::move(root), std::move(variables));
}

Expression parse(std::string_view text) {
  std::vector<std::string> variables;
  Parser p(Lexer(text).run(), &variables, true);
  NodePtr root = p.run();
  return Expression(std::move(root), std::move(variables));
}

}  // namespace amdkit::expr
