#pragma once

// Real-valued arithmetic expressions over named variables.
//
// Grammar (see docs/grammar.md):
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | name | 'pi' | func '(' args ')' | '(' expr ')'

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace bundlekit::expr {

enum class Op { Lit, Var, Add, Sub, Mul, Div, Pow, Neg, Call };
enum class Func { Sin, Cos, Tan, Exp, Ln, Sqrt, Atan2, Abs };

std::string_view func_name(Func f);
int func_arity(Func f);

struct Node;

class Expr {
 public:
  Expr();  // literal 0
  explicit Expr(double value);

  static Expr lit(double value);
  static Expr var(std::string name);
  static Expr call(Func f, std::vector<Expr> args);
  // Tree builders without any folding; the parser uses these so that
  // printed and re-parsed trees match node for node.
  static Expr raw_binary(Op op, Expr a, Expr b);
  static Expr raw_neg(Expr a);

  Op op() const;
  double value() const;
  const std::string& name() const;
  Func func() const;
  const std::vector<Expr>& args() const;
  const Node* node() const noexcept { return node_.get(); }

  bool is_lit() const { return op() == Op::Lit; }
  bool is_lit(double v) const { return is_lit() && value() == v; }

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct Node {
  Op op = Op::Lit;
  double value = 0.0;
  std::string name;
  Func func = Func::Sin;
  std::vector<Expr> args;
};

// Simplifying builders: fold literal subtrees and drop neutral elements.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, const Expr& b);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr tan(const Expr& a);
Expr exp(const Expr& a);
Expr ln(const Expr& a);
Expr sqrt(const Expr& a);
Expr atan2(const Expr& y, const Expr& x);
Expr abs(const Expr& a);

inline constexpr int kMaxDepth = 64;

/// Throws SyntaxError (with byte offset) or UnknownIdentifier.
Expr parse(std::string_view text, const std::vector<std::string>& declared_vars);

std::string print(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);
std::set<std::string> free_variables(const Expr& e);
bool depends_on(const Expr& e, const std::string& var);
int depth(const Expr& e);

using EvalContext = std::map<std::string, double, std::less<>>;

/// Throws MissingVariable or EvalDomainError; never returns NaN or inf.
double eval(const Expr& e, const EvalContext& ctx);

Expr deriv(const Expr& e, const std::string& var);
/// Simultaneous substitution of variables by expressions.
Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings);

/// Applies a real function with the language's domain rules.
double apply_func(Func f, double a, double b = 0.0);
double apply_binary(Op op, double a, double b);

}  // namespace bundlekit::expr
