#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ndde {

enum class Op : std::uint8_t {
  Const,
  Var,
  Neg,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Abs,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // lhs ^ value, exponent is always a constant
};

struct Node {
  Op op = Op::Const;
  double value = 0.0;  // constant value, or the exponent of Pow
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
  std::size_t offset = 0;  // byte offset of the originating token
};

using NodePtr = std::shared_ptr<const Node>;

/// Immutable scalar function of t. Holds the expression tree (used for
/// printing and differentiation) and a flattened postfix program used for
/// evaluation. Copies share both.
class Expr {
 public:
  /// The constant 0.
  Expr();
  explicit Expr(NodePtr root);

  static Expr constant(double value);
  static Expr variable();

  double operator()(double t) const { return eval(t); }
  double eval(double t) const;

  /// Value of the expression when it does not depend on t.
  std::optional<double> as_constant() const;

  bool contains_abs() const;
  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

 private:
  struct Instr {
    Op op;
    double value;
    std::uint32_t offset;
  };
  struct Program {
    std::vector<Instr> code;
    std::size_t max_depth = 0;
  };

  static std::shared_ptr<const Program> compile(const Node& root);

  NodePtr root_;
  std::shared_ptr<const Program> program_;
};

/// Infix grammar, see docs/expression_grammar.md. Throws ParseError.
Expr parse(std::string_view text);

/// Throws DomainError.
double eval(const Expr& e, double t);

/// Exact derivative with respect to t. Throws DifferentiationError on abs.
Expr differentiate(const Expr& e);

std::optional<double> as_constant(const Expr& e);

/// Fully parenthesised text that parses back to an identical tree.
std::string print(const Expr& e);

}  // namespace ndde
