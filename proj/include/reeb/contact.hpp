#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reeb/fields.hpp"
#include "reeb/geometry.hpp"

namespace reeb {

enum class BaseForm {
  darboux,          ///< dz - Σ p_i dq_i
  torus_tight,      ///< cos(mz) dx + sin(mz) dy on T^3
  sphere_standard,  ///< Σ x_i dy_i - y_i dx_i restricted to S^{2n+1}
};

/// One deformation step applied to the form built so far.
struct Perturbation {
  enum class Kind {
    conformal,    ///< λ -> e^{s f} λ
    scaled_form,  ///< λ -> (1 + s h) λ
    additive,     ///< λ -> λ + s α
  };

  Kind kind;
  ScalarField factor;  ///< f or h
  OneFormField form;   ///< α
  double s = 0.0;

  static Perturbation conformal(ScalarField f, double s);
  static Perturbation scaled_form(ScalarField h, double s);
  static Perturbation additive(OneFormField alpha, double s);

  /// `conformal:f=<expr>,s=<num>`, `scaled:h=<expr>,s=<num>`,
  /// `additive:alpha=[e1,...],s=<num>`.
  static Perturbation parse(std::string_view text, const ManifoldModel& model);
  std::string describe() const;
};

/// λ and dλ in coordinates: covector and antisymmetric matrix.
struct CoordinateFormValue {
  Vec lambda;
  Mat dlambda;
};

/// Contact form on a model manifold: a base form followed by a sequence of
/// perturbations. Construction checks nondegeneracy on a seeded sample.
class ContactForm {
 public:
  ContactForm(ManifoldModel manifold, BaseForm base, int winding = 1, std::vector<Perturbation> perturbations = {});

  static ContactForm darboux(int n = 1);
  static ContactForm torus_tight(int winding = 1);
  static ContactForm sphere_standard(int n = 1);

  /// `darboux`, `darboux:n=1,box=0..1`, `t3:m=1`, `s3`; optional
  /// perturbation string as accepted by Perturbation::parse.
  static ContactForm parse(std::string_view form, std::string_view perturbation = "");

  ContactForm perturbed(const Perturbation& p) const;

  const ManifoldModel& manifold() const { return manifold_; }
  BaseForm base() const { return base_; }
  int winding() const { return winding_; }
  const std::vector<Perturbation>& perturbations() const { return perturbations_; }
  bool is_perturbed() const { return !perturbations_.empty(); }

  /// Unperturbed λ₀ as closed-form coordinate coefficients.
  OneFormField base_one_form() const;

  CoordinateFormValue coordinate_value(const Vec& x) const;
  std::string describe() const;

 private:
  void validate_sample() const;

  ManifoldModel manifold_;
  BaseForm base_;
  int winding_;
  std::vector<Perturbation> perturbations_;
};

/// λ_x and dλ_x in the tangent frame at x, with the coordinate values kept
/// for ambient computations.
struct FormValue {
  Point base;
  Mat frame;           ///< coord_count x dim, columns orthonormal
  CovectorValue lambda;
  BilinearValue dlambda;
  CoordinateFormValue coords;
  /// Smallest singular value of dλ restricted to ker λ.
  double kernel_min_singular = 0.0;
};

inline constexpr double kNondegeneracyFloor = 1e-8;
inline constexpr double kContactResidualGate = 1e-9;

/// Throws DegenerateFormError when dλ|ker λ has a singular value below 1e-8.
FormValue eval_form(const ContactForm& form, const Point& x);

/// Pointwise contact calculus at one x: one factorization of the stacked
/// system [λ; ·⌟dλ] shared by every solve.
class LocalCalculus {
 public:
  LocalCalculus(const ContactForm& form, const Point& x);
  LocalCalculus(const ContactForm& form, FormValue value);

  const FormValue& form_value() const { return value_; }
  const Point& base() const { return value_.base; }

  /// Frame coefficients c with X = frame·c solving X⌟λ = a, X⌟dλ = β
  /// (β in frame components), least squares with a residual gate.
  Vec solve(double a, const Vec& beta_frame) const;
  double last_residual() const { return last_residual_; }

  /// Reeb vector in coordinates.
  const Vec& reeb() const { return reeb_; }
  /// Covector (coordinate components) restricted to the frame.
  Vec restrict(const Vec& coord_covector) const { return value_.frame.transpose() * coord_covector; }
  Vec to_coords(const Vec& frame_coeffs) const { return value_.frame * frame_coeffs; }
  Vec to_frame(const Vec& coord_vector) const { return value_.frame.transpose() * coord_vector; }

  /// λ(v) for a coordinate vector v.
  double lambda_of(const Vec& v) const { return value_.coords.lambda.dot(v); }
  /// X_H in coordinates from the jet of H.
  Vec hamiltonian(const Jet& h) const;
  /// (X^π, λ(X)) with X = X^π + λ(X) R.
  std::pair<Vec, double> split(const Vec& v) const;

 private:
  void factor();

  const ContactForm* form_;
  FormValue value_;
  Eigen::ColPivHouseholderQR<Mat> qr_;
  Mat system_;
  Vec reeb_;
  mutable double last_residual_ = 0.0;
};

TangentVector reeb_field(const ContactForm& form, const Point& x);
TangentVector hamiltonian_field(const ContactForm& form, const ScalarField& h, const Point& x);
/// df_x(R_λ(x)).
double reeb_derivative(const ContactForm& form, const ScalarField& f, const Point& x);

struct VectorSplit {
  TangentVector horizontal;  ///< v^π ∈ ker λ
  double vertical;           ///< λ(v)
};
VectorSplit decompose_vector(const ContactForm& form, const Point& x, const TangentVector& v);

struct OneFormSplit {
  TangentVector horizontal;  ///< V^π with V^π⌟dλ = β - β(R)λ
  double reeb_component;     ///< h = β(R)
};
/// β given by frame components at x.
OneFormSplit decompose_oneform(const ContactForm& form, const Point& x, const CovectorValue& beta);

/// |λ ∧ (dλ)^n| on an orthonormal frame: n! |Pf [[0, -λᵀ], [λ, dλ]]|.
double liouville_density(const FormValue& value);

}  // namespace reeb
