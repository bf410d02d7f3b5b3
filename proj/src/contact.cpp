#include "reeb/contact.hpp"

#include <cmath>
#include <sstream>

#include "reeb/errors.hpp"
#include "reeb/strings.hpp"

namespace reeb {

namespace {

constexpr std::size_t kValidationSample = 64;
constexpr std::uint64_t kValidationSeed = 0x5eed;

std::string number(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

/// Orthonormal basis of the complement of unit vector `u` (Householder).
Mat complement_basis(const Vec& u) {
  const Eigen::Index d = u.size();
  Eigen::Index k = 0;
  u.cwiseAbs().maxCoeff(&k);
  Vec v = u;
  v[k] += u[k] >= 0.0 ? 1.0 : -1.0;
  Mat h = Mat::Identity(d, d) - (2.0 / v.squaredNorm()) * v * v.transpose();
  Mat out(d, d - 1);
  for (Eigen::Index j = 0, col = 0; j < d; ++j) {
    if (j != k) out.col(col++) = h.col(j);
  }
  return out;
}

/// Pfaffian of an even-dimensional antisymmetric matrix by expansion along
/// the first row (sizes here are at most 8).
double pfaffian(const Mat& a) {
  const Eigen::Index n = a.rows();
  if (n == 0) return 1.0;
  if (n == 2) return a(0, 1);
  double total = 0.0;
  for (Eigen::Index j = 1; j < n; ++j) {
    if (a(0, j) == 0.0) continue;
    Mat minor(n - 2, n - 2);
    for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
      if (r == 0 || r == j) continue;
      for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
        if (c == 0 || c == j) continue;
        minor(rr, cc++) = a(r, c);
      }
      ++rr;
    }
    const double sign = (j % 2 == 1) ? 1.0 : -1.0;
    total += sign * a(0, j) * pfaffian(minor);
  }
  return total;
}

}  // namespace

Perturbation Perturbation::conformal(ScalarField f, double s) {
  return {Kind::conformal, std::move(f), {}, s};
}

Perturbation Perturbation::scaled_form(ScalarField h, double s) {
  return {Kind::scaled_form, std::move(h), {}, s};
}

Perturbation Perturbation::additive(OneFormField alpha, double s) {
  return {Kind::additive, ScalarField(), std::move(alpha), s};
}

Perturbation Perturbation::parse(std::string_view text, const ManifoldModel& model) {
  auto [head, options] = split_head(text);
  std::optional<std::string> expr;
  double s = 1.0;
  std::string expr_key = head == "additive" ? "alpha" : (head == "conformal" ? "f" : "h");
  if (head != "conformal" && head != "scaled" && head != "scaled_form" && head != "additive") {
    throw ParseError("unknown perturbation '" + head + "'");
  }
  for (const auto& [key, value] : options) {
    if (key == expr_key) {
      expr = value;
    } else if (key == "s") {
      s = parse_double(value, "s");
    } else {
      throw ParseError("unknown perturbation option '" + key + "'");
    }
  }
  if (!expr) throw ParseError("perturbation '" + head + "' needs " + expr_key + "=...");
  if (head == "conformal") return conformal(ScalarField::parse(*expr, model), s);
  if (head == "additive") return additive(OneFormField::parse(*expr, model), s);
  return scaled_form(ScalarField::parse(*expr, model), s);
}

std::string Perturbation::describe() const {
  switch (kind) {
    case Kind::conformal:
      return "conformal:f=" + factor.text() + ",s=" + number(s);
    case Kind::scaled_form:
      return "scaled:h=" + factor.text() + ",s=" + number(s);
    case Kind::additive:
      return "additive:alpha=" + form.text() + ",s=" + number(s);
  }
  return "?";
}

ContactForm::ContactForm(ManifoldModel manifold, BaseForm base, int winding, std::vector<Perturbation> perturbations)
    : manifold_(std::move(manifold)), base_(base), winding_(winding), perturbations_(std::move(perturbations)) {
  const ModelKind kind = manifold_.kind();
  if ((base_ == BaseForm::darboux && kind != ModelKind::darboux) ||
      (base_ == BaseForm::torus_tight && kind != ModelKind::torus) ||
      (base_ == BaseForm::sphere_standard && kind != ModelKind::sphere)) {
    throw DomainError("base form does not live on " + manifold_.describe());
  }
  if (base_ == BaseForm::torus_tight && manifold_.half_dim() != 1) {
    throw DomainError("torus_tight is defined on T^3 only");
  }
  if (base_ == BaseForm::torus_tight && winding_ == 0) throw DomainError("torus winding m must be nonzero");
  for (const auto& p : perturbations_) {
    if (p.kind == Perturbation::Kind::additive && p.form.coord_count() != manifold_.coord_count()) {
      throw DomainError("additive one-form has the wrong number of coefficients");
    }
  }
  validate_sample();
}

ContactForm ContactForm::darboux(int n) { return ContactForm(ManifoldModel::darboux(n), BaseForm::darboux); }

ContactForm ContactForm::torus_tight(int winding) {
  return ContactForm(ManifoldModel::torus(1, 2.0 * M_PI), BaseForm::torus_tight, winding);
}

ContactForm ContactForm::sphere_standard(int n) {
  return ContactForm(ManifoldModel::sphere(n), BaseForm::sphere_standard);
}

ContactForm ContactForm::parse(std::string_view form, std::string_view perturbation) {
  auto [head, options] = split_head(form);
  int winding = 1;
  std::string manifold_text = head;
  std::string sep = ":";
  for (const auto& [key, value] : options) {
    if (key == "m") {
      winding = parse_int(value, "m");
    } else {
      manifold_text += sep + key + "=" + value;
      sep = ",";
    }
  }
  ManifoldModel model = ManifoldModel::parse(manifold_text);
  BaseForm base = model.kind() == ModelKind::darboux ? BaseForm::darboux
                  : model.kind() == ModelKind::torus ? BaseForm::torus_tight
                                                     : BaseForm::sphere_standard;
  if (winding != 1 && base != BaseForm::torus_tight) throw ParseError("option m applies to the torus only");
  std::vector<Perturbation> perturbations;
  if (!trim(perturbation).empty()) {
    for (const auto& item : split_top_level(perturbation, ';')) {
      perturbations.push_back(Perturbation::parse(item, model));
    }
  }
  return ContactForm(std::move(model), base, winding, std::move(perturbations));
}

ContactForm ContactForm::perturbed(const Perturbation& p) const {
  auto list = perturbations_;
  list.push_back(p);
  return ContactForm(manifold_, base_, winding_, std::move(list));
}

OneFormField ContactForm::base_one_form() const {
  const int c = manifold_.coord_count();
  const int n = manifold_.half_dim();
  std::vector<ScalarField> coeffs(static_cast<std::size_t>(c), ScalarField::constant(0.0, c));
  switch (base_) {
    case BaseForm::darboux:
      for (int i = 0; i < n; ++i) coeffs[static_cast<std::size_t>(i)] = -ScalarField::coordinate(n + i, c);
      coeffs[static_cast<std::size_t>(2 * n)] = ScalarField::constant(1.0, c);
      break;
    case BaseForm::torus_tight: {
      const auto& names = manifold_.coordinate_names();
      std::string arg = std::to_string(winding_) + "*" + names[2];
      coeffs[0] = ScalarField::parse("cos(" + arg + ")", names);
      coeffs[1] = ScalarField::parse("sin(" + arg + ")", names);
      break;
    }
    case BaseForm::sphere_standard:
      for (int i = 0; i <= n; ++i) {
        coeffs[static_cast<std::size_t>(2 * i)] = -ScalarField::coordinate(2 * i + 1, c);
        coeffs[static_cast<std::size_t>(2 * i + 1)] = ScalarField::coordinate(2 * i, c);
      }
      break;
  }
  return OneFormField(std::move(coeffs));
}

CoordinateFormValue ContactForm::coordinate_value(const Vec& x) const {
  const int c = manifold_.coord_count();
  const int n = manifold_.half_dim();
  CoordinateFormValue out{Vec::Zero(c), Mat::Zero(c, c)};
  switch (base_) {
    case BaseForm::darboux:
      for (int i = 0; i < n; ++i) {
        out.lambda[i] = -x[n + i];
        out.dlambda(i, n + i) = 1.0;
        out.dlambda(n + i, i) = -1.0;
      }
      out.lambda[2 * n] = 1.0;
      break;
    case BaseForm::torus_tight: {
      const double m = winding_;
      const double cz = std::cos(m * x[2]), sz = std::sin(m * x[2]);
      out.lambda[0] = cz;
      out.lambda[1] = sz;
      out.dlambda(2, 0) = -m * sz;
      out.dlambda(0, 2) = m * sz;
      out.dlambda(2, 1) = m * cz;
      out.dlambda(1, 2) = -m * cz;
      break;
    }
    case BaseForm::sphere_standard:
      for (int i = 0; i <= n; ++i) {
        out.lambda[2 * i] = -x[2 * i + 1];
        out.lambda[2 * i + 1] = x[2 * i];
        out.dlambda(2 * i, 2 * i + 1) = 2.0;
        out.dlambda(2 * i + 1, 2 * i) = -2.0;
      }
      break;
  }
  for (const auto& p : perturbations_) {
    switch (p.kind) {
      case Perturbation::Kind::conformal: {
        Jet f = p.factor.eval(x);
        const double factor = std::exp(p.s * f.value);
        Vec dfactor = (p.s * factor) * f.grad.head(c);
        out.dlambda = wedge(dfactor, out.lambda) + factor * out.dlambda;
        out.lambda *= factor;
        break;
      }
      case Perturbation::Kind::scaled_form: {
        Jet h = p.factor.eval(x);
        const double factor = 1.0 + p.s * h.value;
        Vec dfactor = p.s * h.grad.head(c);
        out.dlambda = wedge(dfactor, out.lambda) + factor * out.dlambda;
        out.lambda *= factor;
        break;
      }
      case Perturbation::Kind::additive:
        out.lambda += p.s * p.form.value(x);
        out.dlambda += p.s * p.form.exterior_derivative(x);
        break;
    }
  }
  return out;
}

std::string ContactForm::describe() const {
  std::string out;
  switch (base_) {
    case BaseForm::darboux:
      out = "darboux[" + manifold_.describe() + "]";
      break;
    case BaseForm::torus_tight:
      out = "torus_tight(m=" + std::to_string(winding_) + ")[" + manifold_.describe() + "]";
      break;
    case BaseForm::sphere_standard:
      out = "sphere_std[" + manifold_.describe() + "]";
      break;
  }
  for (const auto& p : perturbations_) out += " + " + p.describe();
  return out;
}

void ContactForm::validate_sample() const {
  ManifoldModel sample_model =
      manifold_.bounded() ? manifold_ : ManifoldModel::darboux(manifold_.half_dim(), -1.0, 1.0);
  for (const auto& x : sample_points(sample_model, kValidationSample, kValidationSeed)) {
    (void)eval_form(*this, x);
  }
}

FormValue eval_form(const ContactForm& form, const Point& x) {
  const ManifoldModel& m = form.manifold();
  FormValue fv;
  fv.base = x;
  fv.frame = tangent_frame(m, x);
  fv.coords = form.coordinate_value(x.coords);
  fv.lambda = {x, fv.frame.transpose() * fv.coords.lambda};
  fv.dlambda = {x, fv.frame.transpose() * fv.coords.dlambda * fv.frame};

  const double lambda_norm = fv.lambda.comps.norm();
  if (!(lambda_norm > kNondegeneracyFloor)) {
    throw DegenerateFormError("λ vanishes at x", lambda_norm);
  }
  Mat kernel = complement_basis(Vec(fv.lambda.comps / lambda_norm));
  Mat restricted = kernel.transpose() * fv.dlambda.comps * kernel;
  Eigen::JacobiSVD<Mat> svd(restricted);
  fv.kernel_min_singular = svd.singularValues().minCoeff();
  if (!(fv.kernel_min_singular > kNondegeneracyFloor)) {
    throw DegenerateFormError("dλ is degenerate on ker λ", fv.kernel_min_singular);
  }
  return fv;
}

double liouville_density(const FormValue& value) {
  const Eigen::Index d = value.lambda.comps.size();
  Mat bordered = Mat::Zero(d + 1, d + 1);
  bordered.block(0, 1, 1, d) = -value.lambda.comps.transpose();
  bordered.block(1, 0, d, 1) = value.lambda.comps;
  bordered.block(1, 1, d, d) = value.dlambda.comps;
  const Eigen::Index n = (d - 1) / 2;
  double factorial = 1.0;
  for (Eigen::Index k = 2; k <= n; ++k) factorial *= static_cast<double>(k);
  return factorial * std::abs(pfaffian(bordered));
}

LocalCalculus::LocalCalculus(const ContactForm& form, const Point& x) : LocalCalculus(form, eval_form(form, x)) {}

LocalCalculus::LocalCalculus(const ContactForm& form, FormValue value) : form_(&form), value_(std::move(value)) {
  factor();
}

void LocalCalculus::factor() {
  const Eigen::Index d = value_.lambda.comps.size();
  system_.resize(d + 1, d);
  system_.row(0) = value_.lambda.comps.transpose();
  system_.bottomRows(d) = value_.dlambda.comps.transpose();
  qr_.compute(system_);
  Vec reeb_frame = solve(1.0, Vec::Zero(d));
  reeb_ = to_coords(reeb_frame);
}

Vec LocalCalculus::solve(double a, const Vec& beta_frame) const {
  const Eigen::Index d = value_.lambda.comps.size();
  Vec rhs(d + 1);
  rhs[0] = a;
  rhs.tail(d) = beta_frame;
  Vec c = qr_.solve(rhs);
  last_residual_ = (system_ * c - rhs).norm();
  if (!(last_residual_ < kContactResidualGate * (1.0 + rhs.norm()))) {
    throw DegenerateFormError("contact system residual above gate", last_residual_);
  }
  return c;
}

Vec LocalCalculus::hamiltonian(const Jet& h) const {
  const Eigen::Index c = value_.coords.lambda.size();
  Vec grad = h.grad.head(c);
  const double reeb_h = grad.dot(reeb_);
  Vec beta = restrict(grad) - reeb_h * value_.lambda.comps;
  return to_coords(solve(-h.value, beta));
}

std::pair<Vec, double> LocalCalculus::split(const Vec& v) const {
  const double a = lambda_of(v);
  return {Vec(v - a * reeb_), a};
}

TangentVector reeb_field(const ContactForm& form, const Point& x) {
  LocalCalculus calc(form, x);
  return {x, calc.reeb()};
}

TangentVector hamiltonian_field(const ContactForm& form, const ScalarField& h, const Point& x) {
  LocalCalculus calc(form, x);
  return {x, calc.hamiltonian(h.eval(x))};
}

double reeb_derivative(const ContactForm& form, const ScalarField& f, const Point& x) {
  LocalCalculus calc(form, x);
  return f.eval(x).grad.head(x.coords.size()).dot(calc.reeb());
}

VectorSplit decompose_vector(const ContactForm& form, const Point& x, const TangentVector& v) {
  LocalCalculus calc(form, x);
  auto [horizontal, vertical] = calc.split(v.comps);
  return {{x, horizontal}, vertical};
}

OneFormSplit decompose_oneform(const ContactForm& form, const Point& x, const CovectorValue& beta) {
  LocalCalculus calc(form, x);
  const Vec reeb_frame = calc.to_frame(calc.reeb());
  const double h = beta.comps.dot(reeb_frame);
  Vec rest = beta.comps - h * calc.form_value().lambda.comps;
  Vec v = calc.solve(0.0, rest);
  return {{x, calc.to_coords(v)}, h};
}

}  // namespace reeb
