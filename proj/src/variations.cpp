#include "reeb/variations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reeb/errors.hpp"
#include "reeb/strings.hpp"

namespace reeb {

PerturbationDirection PerturbationDirection::scaled_form(ScalarField h) {
  PerturbationDirection d;
  d.kind_ = Kind::scaled_form;
  d.h_ = std::move(h);
  return d;
}

PerturbationDirection PerturbationDirection::additive(OneFormField alpha) {
  PerturbationDirection d;
  d.kind_ = Kind::additive;
  d.alpha_ = std::move(alpha);
  return d;
}

PerturbationDirection PerturbationDirection::parse(std::string_view text, const ManifoldModel& model) {
  std::string t = trim(text);
  auto eq = t.find('=');
  if (eq == std::string::npos) throw ParseError("direction must be h=<expr> or alpha=[...], got '" + t + "'");
  std::string key = trim(t.substr(0, eq));
  std::string value = trim(t.substr(eq + 1));
  if (key == "h") return scaled_form(ScalarField::parse(value, model));
  if (key == "alpha") return additive(OneFormField::parse(value, model));
  throw ParseError("unknown direction key '" + key + "'");
}

std::string PerturbationDirection::describe() const {
  return kind_ == Kind::scaled_form ? "h=" + h_.text() : "alpha=" + alpha_.text();
}

CoordinateFormValue PerturbationDirection::value(const ContactForm& form, const Vec& x) const {
  if (kind_ == Kind::additive) return {alpha_.value(x), alpha_.exterior_derivative(x)};
  CoordinateFormValue lam = form.coordinate_value(x);
  Jet h = h_.eval(x);
  Vec grad = h.grad.head(x.size());
  return {h.value * lam.lambda, Mat(wedge(grad, lam.lambda) + h.value * lam.dlambda)};
}

ContactForm PerturbationDirection::apply(const ContactForm& form, double s) const {
  if (kind_ == Kind::scaled_form) return form.perturbed(Perturbation::scaled_form(h_, s));
  return form.perturbed(Perturbation::additive(alpha_, s));
}

namespace {

/// ι_v ω for a coordinate two-form ω, as a coordinate covector.
Vec contract(const Vec& v, const Mat& omega) { return omega.transpose() * v; }

Vec reeb_variation_coords(const LocalCalculus& calc, const CoordinateFormValue& alpha) {
  const Vec& r = calc.reeb();
  return calc.to_coords(calc.solve(-alpha.lambda.dot(r), calc.restrict(Vec(-contract(r, alpha.dlambda)))));
}

}  // namespace

TangentVector reeb_variation(const ContactForm& form, const PerturbationDirection& dir, const Point& x) {
  LocalCalculus calc(form, x);
  return {x, reeb_variation_coords(calc, dir.value(form, x.coords))};
}

HamiltonianVariation hamiltonian_field_variation(const ContactForm& form, const ScalarField& h,
                                                 const PerturbationDirection& dir, const Point& x) {
  LocalCalculus calc(form, x);
  CoordinateFormValue alpha = dir.value(form, x.coords);
  Jet hj = h.eval(x);
  const Vec grad = hj.grad.head(x.coords.size());
  const Vec& r = calc.reeb();
  const Vec xh = calc.hamiltonian(hj);
  const Vec y = reeb_variation_coords(calc, alpha);

  const double a = -alpha.lambda.dot(xh);
  Vec beta = -contract(xh, alpha.dlambda) - grad.dot(y) * calc.form_value().coords.lambda - grad.dot(r) * alpha.lambda;
  HamiltonianVariation out;
  out.system = {x, calc.to_coords(calc.solve(a, calc.restrict(beta)))};

  if (dir.kind() == PerturbationDirection::Kind::scaled_form) {
    Jet hh = dir.h().eval(x);
    const Vec xh_pi = calc.split(xh).first;
    const Vec xf_pi = calc.split(calc.hamiltonian(hh)).first;
    Vec closed = -(hh.value * xh_pi + hj.value * xf_pi) + hh.value * hj.value * r;
    out.closed = TangentVector{x, closed};
    out.agreement = (closed - out.system.comps).norm();
    if (!(out.agreement < kVariationAgreementGate * std::max(1.0, closed.norm()))) {
      throw GateError("closed form and linear system disagree", out.agreement);
    }
  }
  return out;
}

double reeb_component(const ContactForm& form, const PerturbationDirection& dir, const Point& x) {
  if (dir.kind() == PerturbationDirection::Kind::scaled_form) return dir.h().value(x);
  const FormValue fv = eval_form(form, x);
  CovectorValue beta{x, fv.frame.transpose() * dir.alpha().value(x.coords)};
  return decompose_oneform(form, x, beta).reeb_component;
}

double exponent_variation(const ContactForm& form, const PointMap& psi, const PerturbationDirection& dir,
                          const Point& x) {
  return reeb_component(form, dir, psi(x)) - reeb_component(form, dir, x);
}

double exponent_variation(const ContactForm& form, const ScalarField& h, const PerturbationDirection& dir,
                          const Point& x, double duration, const IntegratorConfig& cfg) {
  return exponent_variation(form, hamiltonian_map(form, h, duration, cfg), dir, x);
}

namespace {

Vec evaluate(const ContactForm& form, const VariedQuantity& q, const Point& x) {
  if (std::holds_alternative<ReebQuantity>(q)) return reeb_field(form, x).comps;
  if (auto* ham = std::get_if<HamiltonianQuantity>(&q)) return hamiltonian_field(form, ham->h, x).comps;
  Vec g(1);
  g[0] = conformal_exponent_direct(form, std::get<ExponentQuantity>(q).psi, x).g;
  return g;
}

Vec central(const ContactForm& form, const PerturbationDirection& dir, const VariedQuantity& q, const Point& x,
            double s) {
  Vec plus = evaluate(dir.apply(form, s), q, x);
  Vec minus = evaluate(dir.apply(form, -s), q, x);
  return (plus - minus) / (2.0 * s);
}

}  // namespace

FiniteDifferenceEstimate finite_difference_oracle(const ContactForm& form, const PerturbationDirection& dir,
                                                  const VariedQuantity& quantity, const Point& x,
                                                  const std::vector<double>& steps) {
  if (steps.size() != 2 || !(steps[0] > 0.0) || !(steps[1] > 0.0)) {
    throw DomainError("finite-difference oracle needs two positive steps");
  }
  auto attempt = [&](double scale) {
    FiniteDifferenceEstimate est;
    est.steps = {steps[0] * scale, steps[1] * scale};
    const double ratio = est.steps[1] / est.steps[0];
    est.coarse = central(form, dir, quantity, x, est.steps[0]);
    est.fine = central(form, dir, quantity, x, est.steps[1]);
    Vec finest = central(form, dir, quantity, x, est.steps[1] * ratio);
    const double r2 = ratio * ratio;
    est.estimate = (est.fine - r2 * est.coarse) / (1.0 - r2);
    const double upper = (est.coarse - est.fine).norm();
    const double lower = (est.fine - finest).norm();
    const double floor = kOrderNoiseFloor * std::max(1.0, est.estimate.norm());
    est.order = (upper > floor && lower > 0.0) ? std::log(upper / lower) / std::log(1.0 / ratio)
                                               : std::numeric_limits<double>::quiet_NaN();
    return est;
  };
  try {
    return attempt(1.0);
  } catch (const DegenerateFormError&) {
    return attempt(0.25);
  }
}

std::string to_string(ReebVariant v) {
  switch (v) {
    case ReebVariant::minus_horizontal:
      return "-X_h^pi - h R";
    case ReebVariant::minus_full:
      return "-X_h - h R";
    case ReebVariant::plus_horizontal:
      return "X_h^pi - h R";
  }
  return "?";
}

TangentVector reeb_variant(const ContactForm& form, const ScalarField& h, ReebVariant v, const Point& x) {
  LocalCalculus calc(form, x);
  Jet hj = h.eval(x);
  const Vec xh = calc.hamiltonian(hj);
  const Vec& r = calc.reeb();
  switch (v) {
    case ReebVariant::minus_horizontal:
      return {x, Vec(-calc.split(xh).first - hj.value * r)};
    case ReebVariant::minus_full:
      return {x, Vec(-xh - hj.value * r)};
    case ReebVariant::plus_horizontal:
      return {x, Vec(calc.split(xh).first - hj.value * r)};
  }
  return {x, Vec::Zero(x.coords.size())};
}

VariantReport score_reeb_variants(const ContactForm& form, const std::vector<ScalarField>& hs,
                                  const std::vector<Point>& points) {
  VariantReport report;
  for (ReebVariant v : kReebVariants) report.scores.push_back({v, 0.0});
  for (const auto& h : hs) {
    auto dir = PerturbationDirection::scaled_form(h);
    for (const auto& x : points) {
      Vec oracle = finite_difference_oracle(form, dir, ReebQuantity{}, x).estimate;
      for (auto& score : report.scores) {
        const double err = relative_error(reeb_variant(form, h, score.variant, x).comps, oracle);
        score.max_relative_error = std::max(score.max_relative_error, err);
      }
    }
  }
  auto best = std::min_element(report.scores.begin(), report.scores.end(),
                               [](const auto& a, const auto& b) { return a.max_relative_error < b.max_relative_error; });
  report.winner = best->variant;
  return report;
}

double relative_error(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace reeb
