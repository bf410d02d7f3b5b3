#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "reeb/conformal.hpp"

namespace reeb {

/// Tangent direction α at λ: α = h·λ (kernel preserved) or an arbitrary
/// one-form.
class PerturbationDirection {
 public:
  enum class Kind { scaled_form, additive };

  static PerturbationDirection scaled_form(ScalarField h);
  static PerturbationDirection additive(OneFormField alpha);
  /// `h=<expr>` or `alpha=[e1,...]`.
  static PerturbationDirection parse(std::string_view text, const ManifoldModel& model);

  Kind kind() const { return kind_; }
  const ScalarField& h() const { return h_; }
  const OneFormField& alpha() const { return alpha_; }
  std::string describe() const;

  /// α and dα at x in coordinates, for the form being varied.
  CoordinateFormValue value(const ContactForm& form, const Vec& x) const;
  /// λ + sα.
  ContactForm apply(const ContactForm& form, double s) const;

 private:
  Kind kind_ = Kind::scaled_form;
  ScalarField h_;
  OneFormField alpha_;
};

/// Y_α from Y⌟λ = -α(R), Y⌟dλ = -R⌟dα.
TangentVector reeb_variation(const ContactForm& form, const PerturbationDirection& dir, const Point& x);

struct HamiltonianVariation {
  TangentVector system;                 ///< Z_α from the linearized defining system
  std::optional<TangentVector> closed;  ///< -(h X_H^π + H X_h^π) + hH R, kernel-preserving directions
  double agreement = 0.0;               ///< |system - closed|
};

inline constexpr double kVariationAgreementGate = 1e-9;

/// Z_α solving Z⌟λ = -α(X_H), Z⌟dλ = -X_H⌟dα - Y_α[H]λ - R[H]α. Throws
/// GateError when the closed form disagrees beyond 1e-9.
HamiltonianVariation hamiltonian_field_variation(const ContactForm& form, const ScalarField& h,
                                                 const PerturbationDirection& dir, const Point& x);

/// h_α = α(R_λ).
double reeb_component(const ContactForm& form, const PerturbationDirection& dir, const Point& x);

/// δΓ(α)(x) = h_α(ψ(x)) - h_α(x) with ψ held fixed.
double exponent_variation(const ContactForm& form, const PointMap& psi, const PerturbationDirection& dir,
                          const Point& x);
double exponent_variation(const ContactForm& form, const ScalarField& h, const PerturbationDirection& dir,
                          const Point& x, double duration = 1.0, const IntegratorConfig& cfg = {});

/// Quantity differentiated by the oracle.
struct ReebQuantity {};
struct HamiltonianQuantity {
  ScalarField h;
};
struct ExponentQuantity {
  PointMap psi;
};
using VariedQuantity = std::variant<ReebQuantity, HamiltonianQuantity, ExponentQuantity>;

struct FiniteDifferenceEstimate {
  Vec estimate;   ///< Richardson combination of the two central differences
  Vec coarse;     ///< central difference at s₀
  Vec fine;       ///< central difference at s₀/2
  double order = 0.0;  ///< log₂ ratio of successive differences; NaN below the noise floor
  std::vector<double> steps;
};

inline const std::vector<double> kDefaultVariationSteps{1e-2, 5e-3};
/// Differences between steps below this (relative) are round-off: the
/// quantity is linear in s there and no order is observable.
inline constexpr double kOrderNoiseFloor = 1e-10;

/// d/ds Q(λ + sα) at s = 0 by central differences. A third, halved step is
/// evaluated for the observed order. A degenerate perturbed form shrinks
/// every step by 4 once before the error propagates.
FiniteDifferenceEstimate finite_difference_oracle(const ContactForm& form, const PerturbationDirection& dir,
                                                  const VariedQuantity& quantity, const Point& x,
                                                  const std::vector<double>& steps = kDefaultVariationSteps);

/// Candidate closed forms for the Reeb variation along α = hλ.
enum class ReebVariant { minus_horizontal, minus_full, plus_horizontal };
inline constexpr std::array<ReebVariant, 3> kReebVariants{ReebVariant::minus_horizontal, ReebVariant::minus_full,
                                                          ReebVariant::plus_horizontal};

std::string to_string(ReebVariant v);
TangentVector reeb_variant(const ContactForm& form, const ScalarField& h, ReebVariant v, const Point& x);

struct VariantScore {
  ReebVariant variant;
  double max_relative_error = 0.0;
};

struct VariantReport {
  std::vector<VariantScore> scores;
  ReebVariant winner;
};

/// Each candidate against the finite-difference oracle over the cases.
VariantReport score_reeb_variants(const ContactForm& form, const std::vector<ScalarField>& hs,
                                  const std::vector<Point>& points);

/// |a - b| / max(1, |b|).
double relative_error(const Vec& a, const Vec& b);

}  // namespace reeb
