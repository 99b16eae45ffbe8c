#include "ndde/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>
#include <system_error>
#include <utility>

#include "ndde/error.hpp"

namespace ndde {

namespace {

const char* op_name(Op op) {
  switch (op) {
    case Op::Neg: return "neg";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Pow: return "^";
    default: return "?";
  }
}

[[noreturn]] void domain_fail(std::size_t offset, double t, const char* what) {
  throw DomainError(offset, t, what);
}

inline double checked(double r, std::size_t offset, double t, Op op) {
  if (!std::isfinite(r)) {
    domain_fail(offset, t, (std::string("non-finite result of ") + op_name(op)).c_str());
  }
  return r;
}

double apply_unary(Op op, double x, std::size_t offset, double t) {
  switch (op) {
    case Op::Neg: return -x;
    case Op::Sin: return std::sin(x);
    case Op::Cos: return std::cos(x);
    case Op::Exp: return checked(std::exp(x), offset, t, op);
    case Op::Log:
      if (!(x > 0.0)) domain_fail(offset, t, "log of non-positive value");
      return std::log(x);
    case Op::Sqrt:
      if (x < 0.0) domain_fail(offset, t, "sqrt of negative value");
      return std::sqrt(x);
    case Op::Abs: return std::fabs(x);
    default: break;
  }
  domain_fail(offset, t, "internal: not a unary operator");
}

double apply_binary(Op op, double a, double b, std::size_t offset, double t) {
  switch (op) {
    case Op::Add: return checked(a + b, offset, t, op);
    case Op::Sub: return checked(a - b, offset, t, op);
    case Op::Mul: return checked(a * b, offset, t, op);
    case Op::Div:
      if (b == 0.0) domain_fail(offset, t, "division by zero");
      return checked(a / b, offset, t, op);
    default: break;
  }
  domain_fail(offset, t, "internal: not a binary operator");
}

double apply_pow(double base, double k, std::size_t offset, double t) {
  if (base == 0.0 && k < 0.0) domain_fail(offset, t, "zero raised to a negative power");
  if (base < 0.0 && k != std::floor(k)) {
    domain_fail(offset, t, "negative base raised to a non-integer power");
  }
  return checked(std::pow(base, k), offset, t, Op::Pow);
}

bool is_const(const NodePtr& n) { return n->op == Op::Const; }
bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

NodePtr make_const(double v, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  n->offset = offset;
  return n;
}

NodePtr make_var(std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->offset = offset;
  return n;
}

// `simplify` enables identity rewrites (x+0, 1*x, ...) on top of constant
// folding. The parser folds only; differentiation also simplifies.
NodePtr make_unary(Op op, NodePtr a, std::size_t offset, bool simplify) {
  if (is_const(a)) {
    try {
      const double v = apply_unary(op, a->value, offset, 0.0);
      if (std::isfinite(v)) return make_const(v, offset);
    } catch (const DomainError&) {
      // left unfolded; evaluation reports the error
    }
  }
  if (simplify && op == Op::Neg && a->op == Op::Neg) return a->lhs;
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->offset = offset;
  return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b, std::size_t offset, bool simplify) {
  if (is_const(a) && is_const(b)) {
    try {
      return make_const(apply_binary(op, a->value, b->value, offset, 0.0), offset);
    } catch (const DomainError&) {
    }
  }
  if (simplify) {
    switch (op) {
      case Op::Add:
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
        break;
      case Op::Sub:
        if (is_const(b, 0.0)) return a;
        if (is_const(a, 0.0)) return make_unary(Op::Neg, std::move(b), offset, true);
        break;
      case Op::Mul:
        if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0, offset);
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
        if (is_const(a, -1.0)) return make_unary(Op::Neg, std::move(b), offset, true);
        if (is_const(b, -1.0)) return make_unary(Op::Neg, std::move(a), offset, true);
        break;
      case Op::Div:
        if (is_const(b, 1.0)) return a;
        if (is_const(a, 0.0)) return make_const(0.0, offset);
        break;
      default: break;
    }
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  n->offset = offset;
  return n;
}

NodePtr make_pow(NodePtr base, double k, std::size_t offset, bool simplify) {
  if (is_const(base)) {
    try {
      return make_const(apply_pow(base->value, k, offset, 0.0), offset);
    } catch (const DomainError&) {
    }
  }
  if (simplify) {
    if (k == 1.0) return base;
    if (k == 0.0) return make_const(1.0, offset);
  }
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->lhs = std::move(base);
  n->value = k;
  n->offset = offset;
  return n;
}

bool has_var(const Node& n) {
  if (n.op == Op::Var) return true;
  if (n.lhs && has_var(*n.lhs)) return true;
  if (n.rhs && has_var(*n.rhs)) return true;
  return false;
}

bool has_abs(const Node& n) {
  if (n.op == Op::Abs) return true;
  if (n.lhs && has_abs(*n.lhs)) return true;
  if (n.rhs && has_abs(*n.rhs)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr run() {
    advance();
    if (tok_.kind == Tok::End) {
      throw ParseError(ParseError::Kind::Syntax, tok_.offset, "empty expression");
    }
    NodePtr n = expr();
    if (tok_.kind != Tok::End) unexpected();
    return n;
  }

 private:
  enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

  struct Token {
    Tok kind = Tok::End;
    std::size_t offset = 0;
    double number = 0.0;
    std::string_view text;
  };

  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  void advance() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r')) {
      ++pos_;
    }
    tok_ = Token{};
    tok_.offset = pos_;
    if (pos_ >= text_.size()) return;

    const char c = text_[pos_];
    if (is_digit(c) || c == '.') {
      const char* first = text_.data() + pos_;
      const char* last = text_.data() + text_.size();
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::general);
      if (ec != std::errc() || ptr == first) {
        throw ParseError(ParseError::Kind::Syntax, pos_, "malformed number");
      }
      tok_.kind = Tok::Number;
      tok_.number = v;
      tok_.text = text_.substr(pos_, static_cast<std::size_t>(ptr - first));
      pos_ += tok_.text.size();
      return;
    }
    if (is_ident_start(c)) {
      std::size_t end = pos_ + 1;
      while (end < text_.size() && (is_ident_start(text_[end]) || is_digit(text_[end]))) ++end;
      tok_.kind = Tok::Ident;
      tok_.text = text_.substr(pos_, end - pos_);
      pos_ = end;
      return;
    }
    switch (c) {
      case '+': tok_.kind = Tok::Plus; break;
      case '-': tok_.kind = Tok::Minus; break;
      case '*': tok_.kind = Tok::Star; break;
      case '/': tok_.kind = Tok::Slash; break;
      case '^': tok_.kind = Tok::Caret; break;
      case '(': tok_.kind = Tok::LParen; break;
      case ')': tok_.kind = Tok::RParen; break;
      case ',': tok_.kind = Tok::Comma; break;
      default:
        throw ParseError(ParseError::Kind::Syntax, pos_,
                         std::string("unexpected character '") + c + "'");
    }
    tok_.text = text_.substr(pos_, 1);
    ++pos_;
  }

  [[noreturn]] void unexpected() const {
    if (tok_.kind == Tok::End) {
      throw ParseError(ParseError::Kind::Syntax, tok_.offset, "unexpected end of input");
    }
    throw ParseError(ParseError::Kind::Syntax, tok_.offset,
                     "unexpected '" + std::string(tok_.text) + "'");
  }

  void expect(Tok kind) {
    if (tok_.kind != kind) unexpected();
    advance();
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (tok_.kind == Tok::Plus || tok_.kind == Tok::Minus) {
      const Op op = tok_.kind == Tok::Plus ? Op::Add : Op::Sub;
      const std::size_t off = tok_.offset;
      advance();
      lhs = make_binary(op, lhs, term(), off, false);
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (tok_.kind == Tok::Star || tok_.kind == Tok::Slash) {
      const Op op = tok_.kind == Tok::Star ? Op::Mul : Op::Div;
      const std::size_t off = tok_.offset;
      advance();
      lhs = make_binary(op, lhs, unary(), off, false);
    }
    return lhs;
  }

  NodePtr unary() {
    if (tok_.kind == Tok::Minus) {
      const std::size_t off = tok_.offset;
      advance();
      return make_unary(Op::Neg, unary(), off, false);
    }
    if (tok_.kind == Tok::Plus) {
      advance();
      return unary();
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (tok_.kind != Tok::Caret) return base;
    const std::size_t off = tok_.offset;
    advance();
    const std::size_t exp_off = tok_.offset;
    NodePtr exponent = unary();
    if (!is_const(exponent)) {
      throw ParseError(ParseError::Kind::NonConstantExponent, exp_off,
                       "exponent must be a constant");
    }
    return make_pow(base, exponent->value, off, false);
  }

  NodePtr primary() {
    switch (tok_.kind) {
      case Tok::Number: {
        NodePtr n = make_const(tok_.number, tok_.offset);
        advance();
        return n;
      }
      case Tok::LParen: {
        advance();
        NodePtr n = expr();
        expect(Tok::RParen);
        return n;
      }
      case Tok::Ident: return identifier();
      default: unexpected();
    }
  }

  NodePtr identifier() {
    const std::string_view name = tok_.text;
    const std::size_t off = tok_.offset;
    advance();

    Op fn = Op::Const;
    if (name == "sin") fn = Op::Sin;
    else if (name == "cos") fn = Op::Cos;
    else if (name == "exp") fn = Op::Exp;
    else if (name == "log") fn = Op::Log;
    else if (name == "sqrt") fn = Op::Sqrt;
    else if (name == "abs") fn = Op::Abs;

    if (fn == Op::Const) {
      if (tok_.kind == Tok::LParen && (name == "t" || name == "pi" || name == "e")) {
        throw ParseError(ParseError::Kind::Arity, off,
                         "'" + std::string(name) + "' is not a function");
      }
      if (name == "t") return make_var(off);
      if (name == "pi") return make_const(std::numbers::pi, off);
      if (name == "e") return make_const(std::numbers::e, off);
      throw ParseError(ParseError::Kind::UnknownIdentifier, off,
                       "unknown identifier '" + std::string(name) + "'");
    }

    if (tok_.kind != Tok::LParen) {
      throw ParseError(ParseError::Kind::Arity, off,
                       "function '" + std::string(name) + "' expects 1 argument");
    }
    advance();
    std::vector<NodePtr> args;
    if (tok_.kind != Tok::RParen) {
      args.push_back(expr());
      while (tok_.kind == Tok::Comma) {
        advance();
        args.push_back(expr());
      }
    }
    expect(Tok::RParen);
    if (args.size() != 1) {
      throw ParseError(ParseError::Kind::Arity, off,
                       "function '" + std::string(name) + "' expects 1 argument, got " +
                           std::to_string(args.size()));
    }
    return make_unary(fn, std::move(args.front()), off, false);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Token tok_;
};

// ---------------------------------------------------------------------------
// Differentiation

NodePtr derive(const NodePtr& n) {
  const std::size_t off = n->offset;
  auto c = [off](double v) { return make_const(v, off); };
  auto add = [off](NodePtr a, NodePtr b) { return make_binary(Op::Add, a, b, off, true); };
  auto sub = [off](NodePtr a, NodePtr b) { return make_binary(Op::Sub, a, b, off, true); };
  auto mul = [off](NodePtr a, NodePtr b) { return make_binary(Op::Mul, a, b, off, true); };
  auto div = [off](NodePtr a, NodePtr b) { return make_binary(Op::Div, a, b, off, true); };
  auto un = [off](Op op, NodePtr a) { return make_unary(op, a, off, true); };

  switch (n->op) {
    case Op::Const: return c(0.0);
    case Op::Var: return c(1.0);
    case Op::Neg: return un(Op::Neg, derive(n->lhs));
    case Op::Sin: return mul(un(Op::Cos, n->lhs), derive(n->lhs));
    case Op::Cos: return mul(un(Op::Neg, un(Op::Sin, n->lhs)), derive(n->lhs));
    case Op::Exp: return mul(n, derive(n->lhs));
    case Op::Log: return div(derive(n->lhs), n->lhs);
    case Op::Sqrt: return div(derive(n->lhs), mul(c(2.0), n));
    case Op::Abs: throw DifferentiationError(off, "abs is not differentiable");
    case Op::Add: return add(derive(n->lhs), derive(n->rhs));
    case Op::Sub: return sub(derive(n->lhs), derive(n->rhs));
    case Op::Mul:
      return add(mul(derive(n->lhs), n->rhs), mul(n->lhs, derive(n->rhs)));
    case Op::Div:
      return div(sub(mul(derive(n->lhs), n->rhs), mul(n->lhs, derive(n->rhs))),
                 make_pow(n->rhs, 2.0, off, true));
    case Op::Pow:
      return mul(mul(c(n->value), make_pow(n->lhs, n->value - 1.0, off, true)),
                 derive(n->lhs));
  }
  return c(0.0);
}

// ---------------------------------------------------------------------------
// Printing

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string print_node(const Node& n) {
  switch (n.op) {
    case Op::Const: {
      std::string s = format_number(n.value);
      return std::signbit(n.value) ? "(" + s + ")" : s;
    }
    case Op::Var: return "t";
    case Op::Neg: return "(-" + print_node(*n.lhs) + ")";
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
    case Op::Abs: return std::string(op_name(n.op)) + "(" + print_node(*n.lhs) + ")";
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      return "(" + print_node(*n.lhs) + " " + op_name(n.op) + " " + print_node(*n.rhs) + ")";
    case Op::Pow: {
      Node k;
      k.value = n.value;
      return "(" + print_node(*n.lhs) + "^" + print_node(k) + ")";
    }
  }
  return "?";
}

void emit(const Node& n, std::vector<std::pair<Op, std::pair<double, std::size_t>>>& out) {
  if (n.lhs) emit(*n.lhs, out);
  if (n.rhs) emit(*n.rhs, out);
  out.push_back({n.op, {n.value, n.offset}});
}

}  // namespace

// ---------------------------------------------------------------------------
// Expr

Expr::Expr() : Expr(make_const(0.0, 0)) {}

Expr::Expr(NodePtr root) : root_(std::move(root)), program_(compile(*root_)) {}

Expr Expr::constant(double value) { return Expr(make_const(value, 0)); }
Expr Expr::variable() { return Expr(make_var(0)); }

std::shared_ptr<const Expr::Program> Expr::compile(const Node& root) {
  std::vector<std::pair<Op, std::pair<double, std::size_t>>> flat;
  emit(root, flat);
  auto prog = std::make_shared<Program>();
  prog->code.reserve(flat.size());
  std::size_t depth = 0;
  for (const auto& [op, data] : flat) {
    prog->code.push_back({op, data.first, static_cast<std::uint32_t>(data.second)});
    switch (op) {
      case Op::Const:
      case Op::Var: ++depth; break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: --depth; break;
      default: break;
    }
    prog->max_depth = std::max(prog->max_depth, depth);
  }
  return prog;
}

double Expr::eval(double t) const {
  constexpr std::size_t kInline = 32;
  double inline_stack[kInline] = {};
  std::vector<double> heap;
  double* st = inline_stack;
  if (program_->max_depth > kInline) {
    heap.resize(program_->max_depth);
    st = heap.data();
  }
  std::size_t sp = 0;
  for (const Instr& in : program_->code) {
    switch (in.op) {
      case Op::Const: st[sp++] = in.value; break;
      case Op::Var: st[sp++] = t; break;
      case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
      case Op::Sin:
      case Op::Cos:
      case Op::Exp:
      case Op::Log:
      case Op::Sqrt:
      case Op::Abs: st[sp - 1] = apply_unary(in.op, st[sp - 1], in.offset, t); break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: {
        const double b = st[--sp];
        st[sp - 1] = apply_binary(in.op, st[sp - 1], b, in.offset, t);
        break;
      }
      case Op::Pow: st[sp - 1] = apply_pow(st[sp - 1], in.value, in.offset, t); break;
    }
  }
  return st[0];
}

std::optional<double> Expr::as_constant() const {
  if (root_->op == Op::Const) return root_->value;
  if (has_var(*root_)) return std::nullopt;
  try {
    return eval(0.0);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

bool Expr::contains_abs() const { return has_abs(*root_); }

Expr parse(std::string_view text) { return Expr(Parser(text).run()); }

double eval(const Expr& e, double t) { return e.eval(t); }

Expr differentiate(const Expr& e) { return Expr(derive(e.root_ptr())); }

std::optional<double> as_constant(const Expr& e) { return e.as_constant(); }

std::string print(const Expr& e) { return print_node(e.root()); }

}  // namespace ndde
