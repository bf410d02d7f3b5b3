#include "reeb/fields.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "reeb/errors.hpp"
#include "reeb/strings.hpp"

namespace reeb {

namespace {

constexpr int kMaxStack = 48;

using Op = ScalarField::Op;
using Instr = ScalarField::Instr;

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& variables)
      : text_(text), vars_(variables) {}

  std::vector<Instr> run() {
    expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("expression '" + std::string(text_) + "' at " + std::to_string(pos_) + ": " + msg);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char ch) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ch) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expr() {
    term();
    for (;;) {
      if (accept('+')) {
        term();
        out_.push_back({Op::add});
      } else if (accept('-')) {
        term();
        out_.push_back({Op::sub});
      } else {
        return;
      }
    }
  }

  void term() {
    unary();
    for (;;) {
      if (accept('*')) {
        unary();
        out_.push_back({Op::mul});
      } else if (accept('/')) {
        unary();
        out_.push_back({Op::div});
      } else {
        return;
      }
    }
  }

  void unary() {
    if (accept('-')) {
      unary();
      out_.push_back({Op::neg});
      return;
    }
    if (accept('+')) {
      unary();
      return;
    }
    power();
  }

  void power() {
    atom();
    if (accept('^')) {
      unary();
      out_.push_back({Op::pow});
    }
  }

  void atom() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end");
    char ch = text_[pos_];
    if (ch == '(') {
      ++pos_;
      expr();
      if (!accept(')')) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      std::string token(text_.substr(pos_));
      char* end = nullptr;
      double v = std::strtod(token.c_str(), &end);
      if (end == token.c_str()) fail("bad number");
      pos_ += static_cast<std::size_t>(end - token.c_str());
      out_.push_back({Op::constant, 0, v});
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      std::string name(text_.substr(start, pos_ - start));
      static const std::array<std::pair<const char*, Op>, 5> funcs{
          {{"sin", Op::sin}, {"cos", Op::cos}, {"exp", Op::exp}, {"log", Op::log}, {"sqrt", Op::sqrt}}};
      for (const auto& [fname, op] : funcs) {
        if (name == fname) {
          if (!accept('(')) fail("expected '(' after " + name);
          expr();
          if (!accept(')')) fail("expected ')'");
          out_.push_back({op});
          return;
        }
      }
      auto it = std::find(vars_.begin(), vars_.end(), name);
      if (it != vars_.end()) {
        out_.push_back({Op::variable, static_cast<int>(it - vars_.begin())});
        return;
      }
      if (name == "pi") {
        out_.push_back({Op::constant, 0, std::numbers::pi});
        return;
      }
      fail("unknown identifier '" + name + "'");
    }
    fail("unexpected '" + std::string(1, ch) + "'");
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  std::vector<Instr> out_;
  std::size_t pos_ = 0;
};

int stack_effect(Op op) {
  switch (op) {
    case Op::constant:
    case Op::variable:
      return 1;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::pow:
      return -1;
    default:
      return 0;
  }
}

}  // namespace

ScalarField::ScalarField() : ScalarField({{Op::constant, 0, 0.0}}, 0, "0") {}

ScalarField::ScalarField(std::vector<Instr> program, int arity, std::string text)
    : program_(std::move(program)), arity_(arity), text_(std::move(text)) {
  compute_depth();
}

void ScalarField::compute_depth() {
  int depth = 0;
  depth_ = 0;
  for (const auto& ins : program_) {
    depth += stack_effect(ins.op);
    depth_ = std::max(depth_, depth);
  }
  if (depth != 1) throw ParseError("malformed expression program");
  if (depth_ > kMaxStack) throw ParseError("expression too deeply nested: " + text_);
}

ScalarField ScalarField::parse(std::string_view text, const std::vector<std::string>& variables) {
  Parser parser(text, variables);
  return ScalarField(parser.run(), static_cast<int>(variables.size()), trim(text));
}

ScalarField ScalarField::parse(std::string_view text, const ManifoldModel& model) {
  return parse(text, model.coordinate_names());
}

ScalarField ScalarField::constant(double value, int arity) {
  std::ostringstream out;
  out.precision(17);
  out << value;
  return ScalarField({{Op::constant, 0, value}}, arity, out.str());
}

ScalarField ScalarField::coordinate(int index, int arity) {
  return ScalarField({{Op::variable, index}}, arity, "#" + std::to_string(index));
}

bool ScalarField::is_constant() const {
  return std::none_of(program_.begin(), program_.end(),
                      [](const Instr& ins) { return ins.op == Op::variable; });
}

ScalarField ScalarField::combine(const ScalarField& a, const ScalarField& b, Op op, const char* symbol) {
  std::vector<Instr> program = a.program_;
  program.insert(program.end(), b.program_.begin(), b.program_.end());
  program.push_back({op});
  return ScalarField(std::move(program), std::max(a.arity_, b.arity_),
                     "(" + a.text_ + ")" + symbol + "(" + b.text_ + ")");
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) { return ScalarField::combine(a, b, Op::add, "+"); }
ScalarField operator-(const ScalarField& a, const ScalarField& b) { return ScalarField::combine(a, b, Op::sub, "-"); }
ScalarField operator*(const ScalarField& a, const ScalarField& b) { return ScalarField::combine(a, b, Op::mul, "*"); }
ScalarField operator*(double c, const ScalarField& a) { return ScalarField::constant(c, a.arity_) * a; }
ScalarField operator-(const ScalarField& a) {
  std::vector<Instr> program = a.program_;
  program.push_back({Op::neg});
  return ScalarField(std::move(program), a.arity_, "-(" + a.text_ + ")");
}

double ScalarField::value(const Vec& x) const {
  std::array<double, kMaxStack> stack;
  int top = -1;
  for (const auto& ins : program_) {
    switch (ins.op) {
      case Op::constant: stack[++top] = ins.value; break;
      case Op::variable: stack[++top] = x[ins.index]; break;
      case Op::add: stack[top - 1] += stack[top]; --top; break;
      case Op::sub: stack[top - 1] -= stack[top]; --top; break;
      case Op::mul: stack[top - 1] *= stack[top]; --top; break;
      case Op::div: stack[top - 1] /= stack[top]; --top; break;
      case Op::pow: stack[top - 1] = std::pow(stack[top - 1], stack[top]); --top; break;
      case Op::neg: stack[top] = -stack[top]; break;
      case Op::sin: stack[top] = std::sin(stack[top]); break;
      case Op::cos: stack[top] = std::cos(stack[top]); break;
      case Op::exp: stack[top] = std::exp(stack[top]); break;
      case Op::log: stack[top] = std::log(stack[top]); break;
      case Op::sqrt: stack[top] = std::sqrt(stack[top]); break;
    }
  }
  return stack[0];
}

Jet ScalarField::eval(const Vec& x) const {
  if (x.size() < arity_) throw DomainError("field '" + text_ + "' needs " + std::to_string(arity_) + " coordinates");
  const Eigen::Index n = x.size();
  std::array<double, kMaxStack> val;
  std::array<Vec, kMaxStack> grad;
  int top = -1;
  for (const auto& ins : program_) {
    switch (ins.op) {
      case Op::constant:
        ++top;
        val[top] = ins.value;
        grad[top] = Vec::Zero(n);
        break;
      case Op::variable:
        ++top;
        val[top] = x[ins.index];
        grad[top] = Vec::Unit(n, ins.index);
        break;
      case Op::add:
        val[top - 1] += val[top];
        grad[top - 1] += grad[top];
        --top;
        break;
      case Op::sub:
        val[top - 1] -= val[top];
        grad[top - 1] -= grad[top];
        --top;
        break;
      case Op::mul:
        grad[top - 1] = val[top] * grad[top - 1] + val[top - 1] * grad[top];
        val[top - 1] *= val[top];
        --top;
        break;
      case Op::div: {
        const double b = val[top];
        grad[top - 1] = (grad[top - 1] - (val[top - 1] / b) * grad[top]) / b;
        val[top - 1] /= b;
        --top;
        break;
      }
      case Op::pow: {
        const double a = val[top - 1], b = val[top];
        const double p = std::pow(a, b);
        Vec g = (b == 0.0 ? 0.0 : b * std::pow(a, b - 1.0)) * grad[top - 1];
        if (!grad[top].isZero(0.0)) g += p * std::log(a) * grad[top];
        grad[top - 1] = g;
        val[top - 1] = p;
        --top;
        break;
      }
      case Op::neg:
        val[top] = -val[top];
        grad[top] = -grad[top];
        break;
      case Op::sin:
        grad[top] *= std::cos(val[top]);
        val[top] = std::sin(val[top]);
        break;
      case Op::cos:
        grad[top] *= -std::sin(val[top]);
        val[top] = std::cos(val[top]);
        break;
      case Op::exp:
        val[top] = std::exp(val[top]);
        grad[top] *= val[top];
        break;
      case Op::log:
        grad[top] /= val[top];
        val[top] = std::log(val[top]);
        break;
      case Op::sqrt:
        val[top] = std::sqrt(val[top]);
        grad[top] /= 2.0 * val[top];
        break;
    }
  }
  return {val[0], grad[0]};
}

double gradient_self_test(const ScalarField& f, const Vec& x, double step) {
  Jet jet = f.eval(x);
  double worst = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    double fd = (f.value(xp) - f.value(xm)) / (2.0 * step);
    double scale = std::max(1.0, std::abs(jet.grad[i]));
    worst = std::max(worst, std::abs(fd - jet.grad[i]) / scale);
  }
  return worst;
}

OneFormField::OneFormField(std::vector<ScalarField> coefficients)
    : coefficients_(std::move(coefficients)), coord_count_(static_cast<int>(coefficients_.size())) {}

OneFormField::OneFormField(Numeric numeric, int coord_count)
    : numeric_(std::move(numeric)), coord_count_(coord_count) {}

OneFormField OneFormField::parse(std::string_view text, const ManifoldModel& model) {
  std::string body = trim(text);
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']') body = body.substr(1, body.size() - 2);
  auto parts = split_top_level(body, ',');
  if (static_cast<int>(parts.size()) != model.coord_count()) {
    throw ParseError("one-form needs " + std::to_string(model.coord_count()) + " coefficients, got " +
                     std::to_string(parts.size()));
  }
  std::vector<ScalarField> coeffs;
  for (const auto& p : parts) coeffs.push_back(ScalarField::parse(p, model));
  return OneFormField(std::move(coeffs));
}

Vec OneFormField::value(const Vec& x) const {
  if (numeric_) return numeric_(x);
  Vec out(coord_count_);
  for (int i = 0; i < coord_count_; ++i) out[i] = coefficients_[static_cast<std::size_t>(i)].value(x);
  return out;
}

Mat OneFormField::exterior_derivative(const Vec& x) const {
  const int c = coord_count_;
  Mat jac(c, c);  // jac(i, j) = ∂_i α_j
  if (!numeric_) {
    for (int j = 0; j < c; ++j) jac.col(j) = coefficients_[static_cast<std::size_t>(j)].eval(x).grad.head(c);
  } else {
    // fourth-order central stencil at h and h/2, Richardson-combined
    auto stencil = [&](int i, double h) {
      Vec e = Vec::Unit(c, i);
      return Vec((-numeric_(x + 2 * h * e) + 8.0 * numeric_(x + h * e) - 8.0 * numeric_(x - h * e) +
                  numeric_(x - 2 * h * e)) /
                 (12.0 * h));
    };
    constexpr double h = 1e-4;
    for (int i = 0; i < c; ++i) {
      Vec coarse = stencil(i, h);
      Vec fine = stencil(i, h / 2);
      jac.row(i) = ((16.0 * fine - coarse) / 15.0).transpose();
    }
  }
  return jac - jac.transpose();
}

std::string OneFormField::text() const {
  if (numeric_) return "<numeric>";
  std::string out = "[";
  for (std::size_t i = 0; i < coefficients_.size(); ++i) {
    if (i) out += ",";
    out += coefficients_[i].text();
  }
  return out + "]";
}

OneFormField operator*(const ScalarField& h, const OneFormField& alpha) {
  if (alpha.is_numeric()) {
    auto inner = alpha.numeric_;
    return OneFormField([h, inner](const Vec& x) { return Vec(h.value(x) * inner(x)); }, alpha.coord_count_);
  }
  std::vector<ScalarField> coeffs;
  for (const auto& c : alpha.coefficients_) coeffs.push_back(h * c);
  return OneFormField(std::move(coeffs));
}

}  // namespace reeb
