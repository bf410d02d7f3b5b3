#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "reeb/geometry.hpp"
#include "reeb/linalg.hpp"

namespace reeb {

/// Value and exact gradient of a scalar field at a point.
struct Jet {
  double value = 0.0;
  Vec grad;
};

/// Closed-form scalar function of the model coordinates with exact first
/// derivatives.
///
/// Grammar (usual precedence, `^` right associative):
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := '-' unary | power
///   power  := atom ('^' unary)?
///   atom   := number | 'pi' | variable | func '(' expr ')' | '(' expr ')'
///   func   := sin | cos | exp | log | sqrt
/// Expressions compile to a postfix program evaluated with forward-mode
/// gradients.
class ScalarField {
 public:
  ScalarField();  // the zero field over zero variables

  static ScalarField parse(std::string_view text, const std::vector<std::string>& variables);
  static ScalarField parse(std::string_view text, const ManifoldModel& model);
  static ScalarField constant(double value, int arity);
  static ScalarField coordinate(int index, int arity);

  double value(const Vec& x) const;
  Jet eval(const Vec& x) const;
  double value(const Point& x) const { return value(x.coords); }
  Jet eval(const Point& x) const { return eval(x.coords); }

  int arity() const { return arity_; }
  /// True when the program contains no variable.
  bool is_constant() const;
  const std::string& text() const { return text_; }

  friend ScalarField operator+(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator-(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator*(double c, const ScalarField& a);
  friend ScalarField operator-(const ScalarField& a);

  enum class Op : unsigned char { constant, variable, add, sub, mul, div, pow, neg, sin, cos, exp, log, sqrt };
  struct Instr {
    Op op;
    int index = 0;
    double value = 0.0;
  };

 private:
  ScalarField(std::vector<Instr> program, int arity, std::string text);
  static ScalarField combine(const ScalarField& a, const ScalarField& b, Op op, const char* symbol);
  void compute_depth();

  std::vector<Instr> program_;
  int arity_ = 0;
  int depth_ = 0;
  std::string text_;
};

/// Largest relative gap between the exact gradient and central differences
/// with the given step; scale floor 1.
double gradient_self_test(const ScalarField& f, const Vec& x, double step = 1e-5);

/// One-form on the coordinate space: either closed-form coefficients or a
/// numeric callable. The exterior derivative is exact for the former and
/// uses fourth-order central differences with one Richardson level for the
/// latter.
class OneFormField {
 public:
  using Numeric = std::function<Vec(const Vec&)>;

  OneFormField() = default;
  explicit OneFormField(std::vector<ScalarField> coefficients);
  OneFormField(Numeric numeric, int coord_count);

  /// Comma separated coefficient expressions, one per coordinate.
  static OneFormField parse(std::string_view text, const ManifoldModel& model);

  /// Coefficients in the coordinate coframe.
  Vec value(const Vec& x) const;
  /// Antisymmetric matrix (dα)_{ij} = ∂_i α_j - ∂_j α_i.
  Mat exterior_derivative(const Vec& x) const;

  bool is_numeric() const { return static_cast<bool>(numeric_); }
  int coord_count() const { return coord_count_; }
  const std::vector<ScalarField>& coefficients() const { return coefficients_; }
  std::string text() const;

  /// h·α for closed-form coefficients.
  friend OneFormField operator*(const ScalarField& h, const OneFormField& alpha);

 private:
  std::vector<ScalarField> coefficients_;
  Numeric numeric_;
  int coord_count_ = 0;
};

}  // namespace reeb
