#include "bundlekit/program.hpp"

#include "bundlekit/error.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <tuple>
#include <unordered_map>

namespace bundlekit::expr {

namespace {

class Compiler {
 public:
  Compiler(const std::vector<std::string>& inputs, std::vector<double>& constants,
           std::vector<std::tuple<Op, Func, int, int>>& code)
      : inputs_(inputs), constants_(constants), code_(code) {}

  int emit(const Expr& e) {
    if (const auto it = by_node_.find(e.node()); it != by_node_.end()) return it->second;
    const int slot = lower(e);
    by_node_.emplace(e.node(), slot);
    return slot;
  }

  // Computed slot indices are offset once all constants are known.
  static constexpr int kComputed = 1 << 28;

 private:
  int lower(const Expr& e) {
    switch (e.op()) {
      case Op::Lit: {
        const auto bits = std::bit_cast<std::uint64_t>(e.value());
        if (const auto it = consts_.find(bits); it != consts_.end()) return it->second;
        const int slot = static_cast<int>(inputs_.size() + constants_.size());
        constants_.push_back(e.value());
        consts_.emplace(bits, slot);
        return slot;
      }
      case Op::Var:
        for (std::size_t i = 0; i < inputs_.size(); ++i) {
          if (inputs_[i] == e.name()) return static_cast<int>(i);
        }
        fail(ErrorKind::MissingVariable, "expression uses '" + e.name() + "' which is not an input");
      default: break;
    }
    const int a = emit(e.args()[0]);
    const int b = e.args().size() > 1 ? emit(e.args()[1]) : -1;
    const Func f = e.op() == Op::Call ? e.func() : Func::Sin;
    const auto key = std::make_tuple(e.op(), f, a, b);
    if (const auto it = cse_.find(key); it != cse_.end()) return it->second;
    const int slot = kComputed + static_cast<int>(code_.size());
    code_.push_back(key);
    cse_.emplace(key, slot);
    return slot;
  }

  const std::vector<std::string>& inputs_;
  std::vector<double>& constants_;
  std::vector<std::tuple<Op, Func, int, int>>& code_;
  std::unordered_map<const Node*, int> by_node_;
  std::unordered_map<std::uint64_t, int> consts_;
  std::map<std::tuple<Op, Func, int, int>, int> cse_;
};

}  // namespace

Program::Program(const std::vector<Expr>& outputs, const std::vector<std::string>& inputs)
    : num_inputs_(inputs.size()) {
  std::vector<std::tuple<Op, Func, int, int>> raw;
  Compiler compiler(inputs, constants_, raw);
  std::vector<int> out_slots;
  out_slots.reserve(outputs.size());
  for (const auto& e : outputs) out_slots.push_back(compiler.emit(e));

  const int base = static_cast<int>(num_inputs_ + constants_.size());
  auto fix = [&](int s) { return s >= Compiler::kComputed ? s - Compiler::kComputed + base : s; };
  code_.reserve(raw.size());
  for (const auto& [op, f, a, b] : raw) code_.push_back({op, f, fix(a), b < 0 ? -1 : fix(b)});
  for (int s : out_slots) outputs_.push_back(fix(s));
}

void Program::run(std::span<const double> inputs, std::span<double> outputs) const {
  if (inputs.size() != num_inputs_ || outputs.size() != outputs_.size()) {
    fail(ErrorKind::ShapeMismatch, "program called with wrong input/output sizes");
  }
  thread_local std::vector<double> slots;
  slots.resize(num_inputs_ + constants_.size() + code_.size());
  std::copy(inputs.begin(), inputs.end(), slots.begin());
  std::copy(constants_.begin(), constants_.end(), slots.begin() + static_cast<std::ptrdiff_t>(num_inputs_));
  std::size_t k = num_inputs_ + constants_.size();
  for (const Instr& in : code_) {
    const double a = slots[static_cast<std::size_t>(in.a)];
    double r = 0.0;
    switch (in.op) {
      case Op::Add: r = a + slots[static_cast<std::size_t>(in.b)]; break;
      case Op::Sub: r = a - slots[static_cast<std::size_t>(in.b)]; break;
      case Op::Mul: r = a * slots[static_cast<std::size_t>(in.b)]; break;
      case Op::Neg: r = -a; break;
      case Op::Div:
      case Op::Pow: r = apply_binary(in.op, a, slots[static_cast<std::size_t>(in.b)]); break;
      case Op::Call: r = apply_func(in.func, a, in.b >= 0 ? slots[static_cast<std::size_t>(in.b)] : 0.0); break;
      default: break;
    }
    if (!std::isfinite(r)) fail(ErrorKind::EvalDomainError, "non-finite intermediate value");
    slots[k++] = r;
  }
  for (std::size_t i = 0; i < outputs_.size(); ++i) outputs[i] = slots[static_cast<std::size_t>(outputs_[i])];
}

std::vector<double> Program::operator()(std::span<const double> inputs) const {
  std::vector<double> out(outputs_.size());
  run(inputs, out);
  return out;
}

}  // namespace bundlekit::expr
