#include "bundlekit/expr.hpp"

#include "bundlekit/error.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <unordered_map>

namespace bundlekit::expr {

namespace {

struct FuncEntry {
  std::string_view name;
  Func func;
  int arity;
};

constexpr FuncEntry kFuncs[] = {
    {"sin", Func::Sin, 1},   {"cos", Func::Cos, 1},   {"tan", Func::Tan, 1},
    {"exp", Func::Exp, 1},   {"ln", Func::Ln, 1},     {"sqrt", Func::Sqrt, 1},
    {"atan2", Func::Atan2, 2}, {"abs", Func::Abs, 1},
};

const FuncEntry* find_func(std::string_view name) {
  for (const auto& f : kFuncs) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::shared_ptr<Node> make_node(Op op) {
  auto n = std::make_shared<Node>();
  n->op = op;
  return n;
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) fail(ErrorKind::EvalDomainError, std::string(what) + " is not finite");
  return v;
}

}  // namespace

std::string_view func_name(Func f) {
  for (const auto& e : kFuncs) {
    if (e.func == f) return e.name;
  }
  return "?";
}

int func_arity(Func f) { return f == Func::Atan2 ? 2 : 1; }

double apply_func(Func f, double a, double b) {
  switch (f) {
    case Func::Sin: return std::sin(a);
    case Func::Cos: return std::cos(a);
    case Func::Tan: {
      if (std::cos(a) == 0.0) fail(ErrorKind::EvalDomainError, "tan at a pole");
      return checked(std::tan(a), "tan");
    }
    case Func::Exp: return checked(std::exp(a), "exp");
    case Func::Ln:
      if (!(a > 0.0)) fail(ErrorKind::EvalDomainError, "ln of non-positive value " + std::to_string(a));
      return std::log(a);
    case Func::Sqrt:
      if (a < 0.0) fail(ErrorKind::EvalDomainError, "sqrt of negative value " + std::to_string(a));
      return std::sqrt(a);
    case Func::Atan2: return std::atan2(a, b);
    case Func::Abs: return std::abs(a);
  }
  return 0.0;
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return checked(a + b, "sum");
    case Op::Sub: return checked(a - b, "difference");
    case Op::Mul: return checked(a * b, "product");
    case Op::Div:
      if (b == 0.0) fail(ErrorKind::EvalDomainError, "division by zero");
      return checked(a / b, "quotient");
    case Op::Pow: {
      if (a == 0.0 && b < 0.0) fail(ErrorKind::EvalDomainError, "zero to a negative power");
      const double r = std::pow(a, b);
      if (std::isnan(r)) fail(ErrorKind::EvalDomainError, "negative base with non-integer exponent");
      return checked(r, "power");
    }
    default: break;
  }
  return 0.0;
}

Expr::Expr() : Expr(0.0) {}

Expr::Expr(double value) {
  auto n = make_node(Op::Lit);
  n->value = value;
  node_ = std::move(n);
}

Expr Expr::lit(double value) { return Expr(value); }

Expr Expr::var(std::string name) {
  auto n = make_node(Op::Var);
  n->name = std::move(name);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::call(Func f, std::vector<Expr> args) {
  auto n = make_node(Op::Call);
  n->func = f;
  n->args = std::move(args);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::raw_binary(Op op, Expr a, Expr b) {
  auto n = make_node(op);
  n->args = {std::move(a), std::move(b)};
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::raw_neg(Expr a) {
  auto n = make_node(Op::Neg);
  n->args = {std::move(a)};
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
Func Expr::func() const { return node_->func; }
const std::vector<Expr>& Expr::args() const { return node_->args; }

// Folding only fires when the literal result is finite, so domain errors in
// constant subtrees still surface at evaluation time.
namespace {

bool fold_binary(Op op, const Expr& a, const Expr& b, Expr& out) {
  if (!a.is_lit() || !b.is_lit()) return false;
  try {
    out = Expr(apply_binary(op, a.value(), b.value()));
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
  Expr r;
  if (fold_binary(Op::Add, a, b, r)) return r;
  if (a.is_lit(0.0)) return b;
  if (b.is_lit(0.0)) return a;
  if (b.op() == Op::Neg) return a - b.args()[0];
  return Expr::raw_binary(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  Expr r;
  if (fold_binary(Op::Sub, a, b, r)) return r;
  if (b.is_lit(0.0)) return a;
  if (a.is_lit(0.0)) return -b;
  if (b.op() == Op::Neg) return a + b.args()[0];
  return Expr::raw_binary(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  Expr r;
  if (fold_binary(Op::Mul, a, b, r)) return r;
  if (a.is_lit(0.0) || b.is_lit(0.0)) return Expr(0.0);
  if (a.is_lit(1.0)) return b;
  if (b.is_lit(1.0)) return a;
  if (a.is_lit(-1.0)) return -b;
  if (b.is_lit(-1.0)) return -a;
  if (a.op() == Op::Neg && b.op() == Op::Neg) return a.args()[0] * b.args()[0];
  if (a.op() == Op::Neg) return -(a.args()[0] * b);
  if (b.op() == Op::Neg) return -(a * b.args()[0]);
  return Expr::raw_binary(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  Expr r;
  if (fold_binary(Op::Div, a, b, r)) return r;
  if (a.is_lit(0.0) && !b.is_lit(0.0)) return Expr(0.0);
  if (b.is_lit(1.0)) return a;
  if (b.is_lit(-1.0)) return -a;
  if (a.op() == Op::Neg) return -(a.args()[0] / b);
  return Expr::raw_binary(Op::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (a.is_lit()) return Expr(-a.value());
  if (a.op() == Op::Neg) return a.args()[0];
  if (a.op() == Op::Sub) return Expr::raw_binary(Op::Sub, a.args()[1], a.args()[0]);
  return Expr::raw_neg(a);
}

Expr pow(const Expr& a, const Expr& b) {
  Expr r;
  if (fold_binary(Op::Pow, a, b, r)) return r;
  if (b.is_lit(0.0)) return Expr(1.0);
  if (b.is_lit(1.0)) return a;
  if (a.is_lit(1.0)) return Expr(1.0);
  return Expr::raw_binary(Op::Pow, a, b);
}

namespace {

Expr call1(Func f, const Expr& a) {
  if (a.is_lit()) {
    try {
      return Expr(apply_func(f, a.value()));
    } catch (const Error&) {
    }
  }
  return Expr::call(f, {a});
}

}  // namespace

Expr sin(const Expr& a) { return call1(Func::Sin, a); }
Expr cos(const Expr& a) { return call1(Func::Cos, a); }
Expr tan(const Expr& a) { return call1(Func::Tan, a); }
Expr exp(const Expr& a) { return call1(Func::Exp, a); }
Expr ln(const Expr& a) { return call1(Func::Ln, a); }
Expr sqrt(const Expr& a) { return call1(Func::Sqrt, a); }
Expr abs(const Expr& a) { return call1(Func::Abs, a); }

Expr atan2(const Expr& y, const Expr& x) {
  if (y.is_lit() && x.is_lit()) return Expr(std::atan2(y.value(), x.value()));
  return Expr::call(Func::Atan2, {y, x});
}

// ---------------------------------------------------------------- parser

namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& vars) : text_(text), vars_(vars) {}

  Expr run() {
    skip_ws();
    if (pos_ >= text_.size()) throw Error(ErrorKind::SyntaxError, "empty expression", pos_);
    Expr e = parse_binary(0, 1);
    skip_ws();
    if (pos_ < text_.size()) {
      throw Error(ErrorKind::SyntaxError, std::string("unexpected '") + text_[pos_] + "'", pos_);
    }
    return e;
  }

 private:
  static int binding_power(char c) {
    switch (c) {
      case '+': case '-': return 1;
      case '*': case '/': return 2;
      case '^': return 4;
      default: return -1;
    }
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void enter(int level) {
    if (level > 4 * kMaxDepth) throw Error(ErrorKind::SyntaxError, "expression nested too deeply", pos_);
  }

  Expr parse_binary(int min_bp, int level) {
    enter(level);
    Expr left = parse_prefix(level);
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) break;
      const char c = text_[pos_];
      const int bp = binding_power(c);
      if (bp <= min_bp) break;
      ++pos_;
      Op op = Op::Add;
      switch (c) {
        case '+': op = Op::Add; break;
        case '-': op = Op::Sub; break;
        case '*': op = Op::Mul; break;
        case '/': op = Op::Div; break;
        default: op = Op::Pow; break;
      }
      // '^' is right-associative and admits a unary minus in its exponent.
      Expr right = parse_binary(op == Op::Pow ? 3 : bp, level + 1);
      left = Expr::raw_binary(op, std::move(left), std::move(right));
    }
    return left;
  }

  Expr parse_prefix(int level) {
    skip_ws();
    if (pos_ >= text_.size()) throw Error(ErrorKind::SyntaxError, "unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      Expr operand = parse_binary(3, level + 1);
      if (operand.is_lit() && !std::signbit(operand.value())) return Expr(-operand.value());
      return Expr::raw_neg(std::move(operand));
    }
    if (c == '(') {
      const std::size_t open = pos_;
      ++pos_;
      Expr inner = parse_binary(0, level + 1);
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != ')') {
        throw Error(ErrorKind::SyntaxError, "missing ')' for '(' at offset " + std::to_string(open), pos_);
      }
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name(level);
    throw Error(ErrorKind::SyntaxError, std::string("unexpected '") + c + "'", pos_);
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ - start == 1 && text_[start] == '.') throw Error(ErrorKind::SyntaxError, "lone '.'", start);
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[p]))) {
        throw Error(ErrorKind::SyntaxError, "malformed exponent", pos_);
      }
      while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) ++p;
      pos_ = p;
    }
    const std::string digits(text_.substr(start, pos_ - start));
    const double v = std::strtod(digits.c_str(), nullptr);
    if (!std::isfinite(v)) throw Error(ErrorKind::SyntaxError, "literal out of range", start);
    return Expr(v);
  }

  Expr parse_name(int level) {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    if (const FuncEntry* f = find_func(name)) {
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != '(') {
        throw Error(ErrorKind::SyntaxError, "expected '(' after " + std::string(name), pos_);
      }
      ++pos_;
      std::vector<Expr> args;
      for (;;) {
        args.push_back(parse_binary(0, level + 1));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        break;
      }
      if (pos_ >= text_.size() || text_[pos_] != ')') {
        throw Error(ErrorKind::SyntaxError, "expected ')' closing " + std::string(name), pos_);
      }
      if (static_cast<int>(args.size()) != f->arity) {
        throw Error(ErrorKind::SyntaxError,
                    std::string(name) + " takes " + std::to_string(f->arity) + " argument(s)", start);
      }
      ++pos_;
      return Expr::call(f->func, std::move(args));
    }
    if (name == "pi") return Expr(std::numbers::pi);
    for (const auto& v : vars_) {
      if (v == name) return Expr::var(std::string(name));
    }
    throw Error(ErrorKind::UnknownIdentifier, "unknown identifier '" + std::string(name) + "'", start);
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, const std::vector<std::string>& declared_vars) {
  Expr e = Parser(text, declared_vars).run();
  if (depth(e) > kMaxDepth) {
    throw Error(ErrorKind::SyntaxError, "expression tree deeper than " + std::to_string(kMaxDepth), 0);
  }
  return e;
}

// ---------------------------------------------------------------- printing

namespace {

int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Add: case Op::Sub: return 1;
    case Op::Mul: case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

std::string format_literal(double v) {
  if (v == std::numbers::pi) return "pi";
  if (v == -std::numbers::pi) return "(-pi)";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Shortest form that still round-trips exactly.
  for (int digits = 1; digits < 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    if (std::strtod(buf, nullptr) == v) {
      s = buf;
      break;
    }
  }
  if (std::signbit(v)) return "(" + s + ")";
  return s;
}

void print_into(const Expr& e, std::string& out);

void print_child(const Expr& e, bool paren, std::string& out) {
  if (paren) out += '(';
  print_into(e, out);
  if (paren) out += ')';
}

void print_into(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::Lit: out += format_literal(e.value()); return;
    case Op::Var: out += e.name(); return;
    case Op::Neg:
      out += '-';
      print_child(e.args()[0], precedence(e.args()[0]) < 3, out);
      return;
    case Op::Call:
      out += func_name(e.func());
      out += '(';
      for (std::size_t i = 0; i < e.args().size(); ++i) {
        if (i) out += ", ";
        print_into(e.args()[i], out);
      }
      out += ')';
      return;
    case Op::Pow:
      print_child(e.args()[0], precedence(e.args()[0]) <= 4, out);
      out += '^';
      print_child(e.args()[1], precedence(e.args()[1]) < 3, out);
      return;
    default: break;
  }
  const int p = precedence(e);
  const char* sym = e.op() == Op::Add ? " + " : e.op() == Op::Sub ? " - " : e.op() == Op::Mul ? "*" : "/";
  print_child(e.args()[0], precedence(e.args()[0]) < p, out);
  out += sym;
  print_child(e.args()[1], precedence(e.args()[1]) <= p, out);
}

}  // namespace

std::string print(const Expr& e) {
  std::string out;
  print_into(e, out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node() == b.node()) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::Lit: return a.value() == b.value() && std::signbit(a.value()) == std::signbit(b.value());
    case Op::Var: return a.name() == b.name();
    case Op::Call:
      if (a.func() != b.func()) return false;
      break;
    default: break;
  }
  if (a.args().size() != b.args().size()) return false;
  for (std::size_t i = 0; i < a.args().size(); ++i) {
    if (!structurally_equal(a.args()[i], b.args()[i])) return false;
  }
  return true;
}

namespace {

void collect_vars(const Expr& e, std::set<std::string>& out, std::unordered_map<const Node*, bool>& seen) {
  if (!seen.emplace(e.node(), true).second) return;
  if (e.op() == Op::Var) out.insert(e.name());
  for (const auto& a : e.args()) collect_vars(a, out, seen);
}

}  // namespace

std::set<std::string> free_variables(const Expr& e) {
  std::set<std::string> out;
  std::unordered_map<const Node*, bool> seen;
  collect_vars(e, out, seen);
  return out;
}

bool depends_on(const Expr& e, const std::string& var) { return free_variables(e).count(var) > 0; }

int depth(const Expr& e) {
  int d = 0;
  for (const auto& a : e.args()) d = std::max(d, depth(a));
  return d + 1;
}

// ---------------------------------------------------------------- evaluation

double eval(const Expr& e, const EvalContext& ctx) {
  switch (e.op()) {
    case Op::Lit: return e.value();
    case Op::Var: {
      const auto it = ctx.find(e.name());
      if (it == ctx.end()) fail(ErrorKind::MissingVariable, "no value for '" + e.name() + "'");
      return it->second;
    }
    case Op::Neg: return -eval(e.args()[0], ctx);
    case Op::Call: {
      const double a = eval(e.args()[0], ctx);
      const double b = e.args().size() > 1 ? eval(e.args()[1], ctx) : 0.0;
      return apply_func(e.func(), a, b);
    }
    default: break;
  }
  return apply_binary(e.op(), eval(e.args()[0], ctx), eval(e.args()[1], ctx));
}

// ---------------------------------------------------------------- calculus

namespace {

class Differentiator {
 public:
  explicit Differentiator(const std::string& var) : var_(var) {}

  Expr d(const Expr& e) {
    const auto it = memo_.find(e.node());
    if (it != memo_.end()) return it->second;
    Expr r = compute(e);
    memo_.emplace(e.node(), r);
    keep_.push_back(e);
    return r;
  }

 private:
  Expr compute(const Expr& e) {
    switch (e.op()) {
      case Op::Lit: return Expr(0.0);
      case Op::Var: return Expr(e.name() == var_ ? 1.0 : 0.0);
      case Op::Neg: return -d(e.args()[0]);
      case Op::Add: return d(e.args()[0]) + d(e.args()[1]);
      case Op::Sub: return d(e.args()[0]) - d(e.args()[1]);
      case Op::Mul: {
        const Expr& a = e.args()[0];
        const Expr& b = e.args()[1];
        return d(a) * b + a * d(b);
      }
      case Op::Div: {
        const Expr& a = e.args()[0];
        const Expr& b = e.args()[1];
        return d(a) / b - a * d(b) / (b * b);
      }
      case Op::Pow: {
        const Expr& a = e.args()[0];
        const Expr& b = e.args()[1];
        if (!depends_on(b, var_)) return b * pow(a, b - Expr(1.0)) * d(a);
        return e * (d(b) * ln(a) + b * d(a) / a);
      }
      case Op::Call: break;
    }
    const Expr& a = e.args()[0];
    const Expr da = d(a);
    switch (e.func()) {
      case Func::Sin: return cos(a) * da;
      case Func::Cos: return -(sin(a) * da);
      case Func::Tan: return da / (cos(a) * cos(a));
      case Func::Exp: return e * da;
      case Func::Ln: return da / a;
      case Func::Sqrt: return da / (Expr(2.0) * e);
      case Func::Abs: return a / e * da;
      case Func::Atan2: {
        const Expr& x = e.args()[1];
        const Expr dx = d(x);
        return (x * da - a * dx) / (x * x + a * a);
      }
    }
    return Expr(0.0);
  }

  const std::string& var_;
  std::unordered_map<const Node*, Expr> memo_;
  std::vector<Expr> keep_;
};

class Substituter {
 public:
  explicit Substituter(const std::map<std::string, Expr>& b) : bindings_(b) {}

  Expr s(const Expr& e) {
    const auto it = memo_.find(e.node());
    if (it != memo_.end()) return it->second;
    Expr r = compute(e);
    memo_.emplace(e.node(), r);
    keep_.push_back(e);
    return r;
  }

 private:
  Expr compute(const Expr& e) {
    switch (e.op()) {
      case Op::Lit: return e;
      case Op::Var: {
        const auto it = bindings_.find(e.name());
        return it == bindings_.end() ? e : it->second;
      }
      case Op::Neg: return -s(e.args()[0]);
      case Op::Add: return s(e.args()[0]) + s(e.args()[1]);
      case Op::Sub: return s(e.args()[0]) - s(e.args()[1]);
      case Op::Mul: return s(e.args()[0]) * s(e.args()[1]);
      case Op::Div: return s(e.args()[0]) / s(e.args()[1]);
      case Op::Pow: return pow(s(e.args()[0]), s(e.args()[1]));
      case Op::Call: break;
    }
    if (e.func() == Func::Atan2) return atan2(s(e.args()[0]), s(e.args()[1]));
    return call1(e.func(), s(e.args()[0]));
  }

  const std::map<std::string, Expr>& bindings_;
  std::unordered_map<const Node*, Expr> memo_;
  std::vector<Expr> keep_;
};

}  // namespace

Expr deriv(const Expr& e, const std::string& var) { return Differentiator(var).d(e); }

Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings) {
  if (bindings.empty()) return e;
  return Substituter(bindings).s(e);
}

}  // namespace bundlekit::expr
