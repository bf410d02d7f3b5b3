#include "reeb/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "reeb/errors.hpp"

namespace reeb {

std::string to_string(Relation r) {
  switch (r) {
    case Relation::less:
      return "<";
    case Relation::less_equal:
      return "<=";
    case Relation::equal:
      return "==";
    case Relation::greater:
      return ">";
    case Relation::greater_equal:
      return ">=";
  }
  return "?";
}

Check make_check(std::string suite, std::string name, double value, double tolerance, Relation relation) {
  Check c{std::move(suite), std::move(name), value, tolerance, relation, false};
  switch (relation) {
    case Relation::less:
      c.pass = value < tolerance;
      break;
    case Relation::less_equal:
      c.pass = value <= tolerance;
      break;
    case Relation::equal:
      c.pass = value == tolerance;
      break;
    case Relation::greater:
      c.pass = value > tolerance;
      break;
    case Relation::greater_equal:
      c.pass = value >= tolerance;
      break;
  }
  return c;
}

bool SuiteReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

void SuiteReport::append(const SuiteReport& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  manifest.insert(manifest.end(), other.manifest.begin(), other.manifest.end());
  diagnostics.insert(diagnostics.end(), other.diagnostics.begin(), other.diagnostics.end());
}

ScalarField default_hamiltonian(const ContactForm& form) {
  const auto& m = form.manifold();
  if (m.half_dim() != 1) {
    return ScalarField::parse(m.kind() == ModelKind::sphere ? "0.1*x1 + 0.2*y1*y2" : "0.2*z + 0.1*q1*p2", m);
  }
  switch (m.kind()) {
    case ModelKind::darboux:
      return ScalarField::parse("0.2*z + 0.1*q*p", m);
    case ModelKind::torus:
      return ScalarField::parse("0.1*sin(x)", m);
    case ModelKind::sphere:
      return ScalarField::parse("0.1*x", m);
  }
  return ScalarField::constant(-1.0, m.coord_count());
}

std::vector<Point> probe_points(const ContactForm& form, std::size_t count, std::uint64_t seed) {
  const auto& m = form.manifold();
  if (m.kind() == ModelKind::darboux && !m.bounded()) {
    return sample_points(ManifoldModel::darboux(m.half_dim(), -1.0, 1.0), count, seed);
  }
  return sample_points(m, count, seed);
}

namespace {

class Suite {
 public:
  explicit Suite(std::string name) : name_(std::move(name)) {}

  void check(const std::string& identity, double value, double tolerance, Relation rel = Relation::less) {
    report_.checks.push_back(make_check(name_, identity, value, tolerance, rel));
    report_.manifest.push_back({name_, identity, true, ""});
  }
  void skip(const std::string& identity, const std::string& reason) {
    report_.manifest.push_back({name_, identity, false, reason});
  }
  void note(const std::string& name, double value, std::string text = "") {
    report_.diagnostics.push_back({name_, name, value, std::move(text)});
  }
  SuiteReport take() { return std::move(report_); }

 private:
  std::string name_;
  SuiteReport report_;
};

IntegratorConfig coarse_integrator() {
  IntegratorConfig c;
  c.step = 1e-2;
  c.record_path = false;
  return c;
}

ScalarField hamiltonian_of(const VerifyConfig& cfg) {
  return cfg.hamiltonian ? *cfg.hamiltonian : default_hamiltonian(cfg.form);
}

std::string default_perturbation(const ManifoldModel& m) {
  switch (m.kind()) {
    case ModelKind::darboux:
      return m.half_dim() == 1 ? "conformal:f=0.2*sin(z) + 0.1*q*p,s=1" : "conformal:f=0.1*q1*p2,s=1";
    case ModelKind::torus:
      return "conformal:f=0.3*sin(x)*cos(y),s=1";
    case ModelKind::sphere:
      return m.half_dim() == 1 ? "conformal:f=x,s=0.1" : "conformal:f=x1,s=0.1";
  }
  return "";
}

/// A Reeb-invariant Hamiltonian of the unperturbed model, -1 otherwise.
ScalarField strict_hamiltonian(const ContactForm& form) {
  const auto& m = form.manifold();
  if (form.is_perturbed() || m.half_dim() != 1) return ScalarField::constant(-1.0, m.coord_count());
  switch (m.kind()) {
    case ModelKind::darboux:
      return ScalarField::parse("q", m);
    case ModelKind::torus:
      return form.winding() == 1 ? ScalarField::parse("sin(z)", m) : ScalarField::constant(-1.0, 3);
    case ModelKind::sphere:
      return ScalarField::parse("x*u + y*v", m);
  }
  return ScalarField::constant(-1.0, m.coord_count());
}

/// Second Hamiltonian for composed maps.
ScalarField companion_hamiltonian(const ContactForm& form) {
  const auto& m = form.manifold();
  if (m.half_dim() != 1) return ScalarField::constant(-0.5, m.coord_count());
  switch (m.kind()) {
    case ModelKind::darboux:
      return ScalarField::parse("0.1*p - 0.1*z", m);
    case ModelKind::torus:
      return ScalarField::parse("0.2*cos(y)", m);
    case ModelKind::sphere:
      return ScalarField::parse("0.2*y*u", m);
  }
  return ScalarField::constant(-0.5, m.coord_count());
}

std::vector<std::string> variation_directions(const ManifoldModel& m) {
  if (m.half_dim() != 1) return {"0.3", "0.2*" + m.coordinate_names()[0]};
  switch (m.kind()) {
    case ModelKind::darboux:
      return {"q", "0.3*sin(z) + p*q", "exp(0.2*p)", "0.5*z - q^2", "cos(p)*0.4"};
    case ModelKind::torus:
      return {"cos(y)", "0.5*sin(x+z)", "0.3*cos(x)*sin(y)", "sin(z)", "0.2 + 0.4*cos(2*x)"};
    case ModelKind::sphere:
      return {"x*v", "0.4*u - y^2", "x", "0.3*y*u + v", "x^2 - v^2"};
  }
  return {"1"};
}

double max_over(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

double strictness(const ContactForm& form, const ScalarField& h, const std::vector<Point>& pts) {
  double m = 0.0;
  for (const auto& x : pts) m = std::max(m, std::abs(reeb_derivative(form, h, x)));
  return m;
}

}  // namespace

ContactResiduals contact_residuals(const ContactForm& form, const ScalarField& h, const std::vector<Point>& points) {
  ContactResiduals r;
  const auto& m = form.manifold();
  const int c = m.coord_count();
  r.min_ample_rank = m.dim();
  for (const auto& x : points) {
    LocalCalculus calc(form, x);
    const FormValue& fv = calc.form_value();
    const Vec& reeb = calc.reeb();
    auto contract = [&](const Vec& v) { return Vec(fv.frame.transpose() * fv.coords.dlambda.transpose() * v); };
    r.reeb_normalization = std::max(r.reeb_normalization, std::abs(fv.coords.lambda.dot(reeb) - 1.0));
    r.reeb_kernel = std::max(r.reeb_kernel, contract(reeb).norm());

    Jet jet = h.eval(x);
    const Vec grad = jet.grad.head(c);
    const Vec xh = calc.hamiltonian(jet);
    const double rh = grad.dot(reeb);
    const Vec dh = fv.frame.transpose() * grad;
    r.ham_lambda = std::max(r.ham_lambda, std::abs(fv.coords.lambda.dot(xh) + jet.value));
    r.ham_dlambda = std::max(r.ham_dlambda, (contract(xh) - dh + rh * fv.lambda.comps).norm());
    auto [horizontal, vertical] = calc.split(xh);
    r.dh_reconstruction =
        std::max(r.dh_reconstruction, (contract(horizontal) + rh * fv.lambda.comps - dh).norm());
    r.decomposition = std::max(r.decomposition, (horizontal + vertical * reeb - xh).norm());

    Mat span(c, c + 1);
    span.col(0) = calc.hamiltonian(ScalarField::constant(-1.0, c).eval(x));
    for (int i = 0; i < c; ++i) span.col(i + 1) = calc.hamiltonian(ScalarField::coordinate(i, c).eval(x));
    Eigen::JacobiSVD<Mat> svd(span);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) rank += sv[i] > 1e-9 * sv[0];
    r.min_ample_rank = std::min(r.min_ample_rank, rank);
  }
  return r;
}

SuiteReport verify_geometry(const VerifyConfig& cfg) {
  Suite s("geometry");
  const auto& m = cfg.form.manifold();
  auto pts = probe_points(cfg.form, cfg.samples, cfg.seed);
  double ortho = 0.0, tangent = 0.0, roundtrip = 0.0;
  const double t = 1e-3;
  for (const auto& x : pts) {
    Mat f = tangent_frame(m, x);
    ortho = std::max(ortho, (f.transpose() * f - Mat::Identity(f.cols(), f.cols())).cwiseAbs().maxCoeff());
    if (m.kind() == ModelKind::sphere) tangent = std::max(tangent, (x.coords.transpose() * f).cwiseAbs().maxCoeff());
    Vec v = f * Vec::Ones(f.cols());
    Point y = displace(m, displace(m, x, v, t), v, -t);
    roundtrip = std::max(roundtrip, distance(m, x, y));
  }
  s.check("frame_orthonormal", ortho, 1e-12);
  s.check("frame_tangent", tangent, 1e-10);
  s.check("displace_roundtrip", roundtrip, m.kind() == ModelKind::sphere ? 10 * t * t : 1e-12);
  auto a = probe_points(cfg.form, 16, cfg.seed + 1);
  auto b = probe_points(cfg.form, 16, cfg.seed + 1);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, (a[i].coords - b[i].coords).cwiseAbs().maxCoeff());
  s.check("sample_reproducible", diff, 0.0, Relation::equal);
  return s.take();
}

SuiteReport verify_contact(const VerifyConfig& cfg) {
  Suite s("contact");
  const auto& m = cfg.form.manifold();
  auto h = hamiltonian_of(cfg);
  auto pts = probe_points(cfg.form, cfg.samples, cfg.seed);
  std::vector<std::pair<std::string, ContactForm>> forms{{"", cfg.form}};
  if (!cfg.form.is_perturbed()) forms.emplace_back("[perturbed]", cfg.form.perturbed(Perturbation::parse(default_perturbation(m), m)));
  for (const auto& [tag, form] : forms) {
    auto r = contact_residuals(form, h, pts);
    s.check("reeb_normalization" + tag, r.reeb_normalization, kContactResidualGate);
    s.check("reeb_kernel" + tag, r.reeb_kernel, kContactResidualGate);
    s.check("hamiltonian_lambda" + tag, r.ham_lambda, kContactResidualGate);
    s.check("hamiltonian_dlambda" + tag, r.ham_dlambda, kContactResidualGate);
    s.check("dH_reconstruction" + tag, r.dh_reconstruction, kContactResidualGate);
    s.check("decompose_recompose" + tag, r.decomposition, 1e-12);
    s.check("hamiltonian_ampleness_rank" + tag, r.min_ample_rank, m.dim(), Relation::equal);
  }
  if (forms.size() == 1) s.note("perturbed_copy", 0.0, "form is already perturbed");
  return s.take();
}

SuiteReport verify_flows(const VerifyConfig& cfg) {
  Suite s("flows");
  const auto& form = cfg.form;
  const auto& m = form.manifold();
  auto h = hamiltonian_of(cfg);
  auto field = FieldSpec::hamiltonian(h);
  auto pts = probe_points(form, 10, cfg.seed);
  IntegratorConfig ic;
  ic.record_path = false;

  auto composed = map_indices(pts.size(), [&](std::size_t i) {
    Point a = flow_map(form, field, flow_map(form, field, pts[i], 0.5, ic), 0.3, ic);
    return distance(m, a, flow_map(form, field, pts[i], 0.8, ic));
  }, cfg.execution);
  s.check("flow_property", max_over(composed), 1e-7);

  auto strict = map_indices(pts.size(), [&](std::size_t i) {
    return std::abs(conformal_exponent_direct(form, reeb_map(form, 0.7, ic), pts[i]).g);
  }, cfg.execution);
  s.check("reeb_flow_strict", max_over(strict), 1e-7);

  auto transport = map_indices(std::min<std::size_t>(pts.size(), 5), [&](std::size_t i) {
    auto first = linearized_transport(form, field, pts[i], 0.4, ic);
    auto second = linearized_transport(form, field, first.end, 0.6, ic);
    auto whole = linearized_transport(form, field, pts[i], 1.0, ic);
    return (whole.matrix - second.matrix * first.matrix).norm();
  }, cfg.execution);
  s.check("transport_composes", max_over(transport), 1e-5);

  auto drift = map_indices(pts.size(), [&](std::size_t i) {
    return std::abs(h.value(flow_map(form, field, pts[i], 1.0, ic)) - h.value(pts[i]));
  }, cfg.execution);
  s.note("hamiltonian_drift", max_over(drift), "max |H(psi_H^1 x) - H(x)|, not asserted");
  return s.take();
}

SuiteReport verify_conformal(const VerifyConfig& cfg) {
  Suite s("conformal");
  const auto& form = cfg.form;
  const auto& m = form.manifold();
  auto h = hamiltonian_of(cfg);
  auto pts = probe_points(form, 20, cfg.seed);
  const auto ic = coarse_integrator();
  auto psi = hamiltonian_map(form, h, 1.0, ic);

  auto lie = map_indices(pts.size(), [&](std::size_t i) { return lie_derivative_residual(form, h, pts[i]); },
                         cfg.execution);
  s.check("lie_derivative_lambda", max_over(lie), 1e-5);

  auto agree = map_indices(pts.size(), [&](std::size_t i) {
    return std::abs(conformal_exponent(form, h, pts[i], 1.0, ic).g - conformal_exponent_direct(form, psi, pts[i]).g);
  }, cfg.execution);
  s.check("method_agreement", max_over(agree), 1e-5);

  std::vector<Point> few(pts.begin(), pts.begin() + 10);
  auto dgdt = map_indices(few.size(), [&](std::size_t i) {
    const double dt = 1e-3;
    const double plus = conformal_exponent(form, h, few[i], 1.0 + dt, ic).g;
    const double minus = conformal_exponent(form, h, few[i], 1.0 - dt, ic).g;
    Point y = flow_map(form, FieldSpec::hamiltonian(h), few[i], 1.0, ic);
    return std::abs((plus - minus) / (2 * dt) + reeb_derivative(form, h, y));
  }, cfg.execution);
  s.check("exponent_time_derivative", max_over(dgdt), 1e-5);

  auto rho = reeb_map(form, 0.6, ic);
  auto action = map_indices(few.size(), [&](std::size_t i) {
    return std::abs(conformal_exponent_direct(form, compose(psi, rho), few[i]).g -
                    conformal_exponent_direct(form, psi, rho(few[i])).g);
  }, cfg.execution);
  s.check("right_reeb_action", max_over(action), 1e-5);

  auto phi = hamiltonian_map(form, companion_hamiltonian(form), 1.0, ic);
  s.check("cocycle", cocycle_residual(form, phi, psi, few), 1e-5);
  s.check("inverse", inverse_residual(form, psi, hamiltonian_map(form, h, -1.0, ic), few), 1e-5);

  auto strict = strict_hamiltonian(form);
  auto strict_field = FieldSpec::hamiltonian(strict);
  auto flat = map_indices(few.size(), [&](std::size_t i) {
    return std::abs(conformal_exponent(form, strict, few[i], 1.0, ic).g);
  }, cfg.execution);
  s.check("strict_pair_exponent", max_over(flat), 1e-7);
  auto bracket = map_indices(few.size(), [&](std::size_t i) {
    return lie_bracket(form, FieldSpec::reeb(), strict_field, few[i]).norm();
  }, cfg.execution);
  s.check("strict_pair_commutator", max_over(bracket), 1e-5);
  s.note("strict_hamiltonian", 0.0, strict.text());

  if (!m.compact()) {
    s.skip("discriminant_nonempty", "model is not compact");
  } else if (strictness(form, h, pts) < 1e-12) {
    s.skip("discriminant_nonempty", "H is strict: g vanishes identically");
  } else {
    DiscriminantConfig dc;
    dc.execution = cfg.execution;
    auto scan = discriminant_scan(form, h, 4, dc);
    s.check("discriminant_nonempty", static_cast<double>(scan.classified.size()), 1.0, Relation::greater_equal);
    s.note("discriminant_regular_zeros", static_cast<double>(scan.regular_count()));
  }
  return s.take();
}

SuiteReport verify_variations(const VerifyConfig& cfg) {
  Suite s("variations");
  const auto& form = cfg.form;
  const auto& m = form.manifold();
  auto ham = hamiltonian_of(cfg);
  auto texts = variation_directions(m);
  auto pts = probe_points(form, cfg.cases, cfg.seed);
  auto minus_one = ScalarField::constant(-1.0, m.coord_count());

  struct CaseResult {
    double reeb = 0.0, ham = 0.0, same_path = 0.0, closed = 0.0, order = 0.0;
  };
  auto results = map_indices(pts.size(), [&](std::size_t k) {
    auto dir = PerturbationDirection::parse("h=" + texts[k % texts.size()], m);
    const Point& x = pts[k];
    CaseResult r;
    Vec y = reeb_variation(form, dir, x).comps;
    auto fd_r = finite_difference_oracle(form, dir, ReebQuantity{}, x);
    r.reeb = relative_error(y, fd_r.estimate);
    auto z = hamiltonian_field_variation(form, ham, dir, x);
    auto fd_h = finite_difference_oracle(form, dir, HamiltonianQuantity{ham}, x);
    r.ham = relative_error(z.system.comps, fd_h.estimate);
    r.closed = z.agreement;
    r.same_path = (hamiltonian_field_variation(form, minus_one, dir, x).system.comps - y).norm();
    for (double o : {fd_r.order, fd_h.order}) {
      if (std::isfinite(o)) r.order = std::max(r.order, std::abs(o - 2.0));
    }
    return r;
  }, cfg.execution);
  double reeb = 0, hamv = 0, same = 0, closed = 0, order = 0;
  for (const auto& r : results) {
    reeb = std::max(reeb, r.reeb);
    hamv = std::max(hamv, r.ham);
    same = std::max(same, r.same_path);
    closed = std::max(closed, r.closed);
    order = std::max(order, r.order);
  }
  s.check("reeb_variation_vs_fd", reeb, 1e-4);
  s.check("hamiltonian_variation_vs_fd", hamv, 1e-4);
  s.check("reeb_equals_hamiltonian_minus_one", same, 1e-12);
  s.check("closed_form_vs_system", closed, kVariationAgreementGate);

  const auto ic = coarse_integrator();
  auto psi = hamiltonian_map(form, ham, 1.0, ic);
  auto exps = map_indices(pts.size(), [&](std::size_t k) {
    auto dir = PerturbationDirection::parse("h=" + texts[k % texts.size()], m);
    auto fd = finite_difference_oracle(form, dir, ExponentQuantity{psi}, pts[k]);
    const double value = exponent_variation(form, psi, dir, pts[k]);
    const double err = std::abs(value - fd.estimate[0]) / std::max(1.0, std::abs(fd.estimate[0]));
    return std::pair<double, double>{err, std::isfinite(fd.order) ? std::abs(fd.order - 2.0) : 0.0};
  }, cfg.execution);
  double exp_err = 0.0;
  for (const auto& [e, o] : exps) {
    exp_err = std::max(exp_err, e);
    order = std::max(order, o);
  }
  s.check("exponent_variation_vs_fd", exp_err, 1e-4);
  s.check("fd_order_deviation", order, 0.2, Relation::less_equal);

  auto grad_err = map_indices(std::min<std::size_t>(pts.size(), 10), [&](std::size_t k) {
    auto h = ScalarField::parse(texts[k % texts.size()], m);
    auto dir = PerturbationDirection::scaled_form(h);
    const Point& x = pts[k];
    const double step = 1e-4;
    const int c = m.coord_count();
    Mat frame = tangent_frame(m, x);
    Point y = psi(x);
    Vec dh_y = h.eval(y).grad.head(c);
    Vec dh_x = h.eval(x).grad.head(c);
    double err = 0.0;
    for (Eigen::Index j = 0; j < frame.cols(); ++j) {
      Vec e = frame.col(j);
      Point xp = displace(m, x, e, step), xm = displace(m, x, e, -step);
      const double grad = (exponent_variation(form, psi, dir, xp) - exponent_variation(form, psi, dir, xm)) / (2 * step);
      const double expected = dh_y.dot(difference(m, psi(xp), psi(xm)) / (2 * step)) - dh_x.dot(e);
      err = std::max(err, std::abs(grad - expected));
    }
    return err;
  }, cfg.execution);
  s.check("exponent_variation_gradient", max_over(grad_err), 1e-4);

  if (form.is_perturbed()) {
    s.skip("additive_matches_scaled", "needs the closed-form unperturbed one-form");
  } else {
    auto lambda0 = form.base_one_form();
    double worst = 0.0;
    for (std::size_t k = 0; k < std::min<std::size_t>(pts.size(), 10); ++k) {
      auto h = ScalarField::parse(texts[k % texts.size()], m);
      auto scaled = PerturbationDirection::scaled_form(h);
      auto additive = PerturbationDirection::additive(h * lambda0);
      worst = std::max(worst, (reeb_variation(form, scaled, pts[k]).comps - reeb_variation(form, additive, pts[k]).comps).norm());
      worst = std::max(worst, (hamiltonian_field_variation(form, ham, scaled, pts[k]).system.comps -
                               hamiltonian_field_variation(form, ham, additive, pts[k]).system.comps)
                                  .norm());
    }
    s.check("additive_matches_scaled", worst, 1e-9);
  }

  std::vector<ScalarField> hs;
  for (const auto& t : texts) hs.push_back(ScalarField::parse(t, m));
  std::vector<Point> few(pts.begin(), pts.begin() + std::min<std::size_t>(pts.size(), 5));
  auto variants = score_reeb_variants(form, hs, few);
  for (const auto& sc : variants.scores) s.note("reeb_variant_error", sc.max_relative_error, to_string(sc.variant));
  s.note("reeb_variant_winner", 0.0, to_string(variants.winner));
  double winner_err = 0.0;
  for (const auto& sc : variants.scores) {
    if (sc.variant == variants.winner) winner_err = sc.max_relative_error;
  }
  s.check("reeb_variant_winner_vs_fd", winner_err, 1e-4);
  return s.take();
}

namespace {

/// Closed-form Liouville mass of the unperturbed compact models.
double expected_mass(const ContactForm& form) {
  const auto& m = form.manifold();
  if (m.kind() == ModelKind::torus) return form.winding() * std::pow(m.period(), 3);
  // ∫ λ∧(dλ)ⁿ over S^{2n+1} = (2π)^{n+1}
  return std::pow(2.0 * std::numbers::pi, m.half_dim() + 1);
}

struct TestPair {
  std::string f, l;
};

TestPair identity_functions(const ManifoldModel& m) {
  if (m.kind() == ModelKind::torus) return {"sin(x)", "cos(y)"};
  if (m.half_dim() == 1) return {"x*y + u", "v - x*x"};
  return {"x1*y2 + x2", "y1 - x1^2"};
}

}  // namespace

SuiteReport verify_integrals(const VerifyConfig& cfg) {
  Suite s("integrals");
  const auto& form = cfg.form;
  const auto& m = form.manifold();
  if (!m.compact()) {
    for (const char* id : {"liouville_mass", "compatibility", "skew_adjoint", "volume"}) s.skip(id, "model is not compact");
    return s.take();
  }
  auto scheme = liouville_quadrature(form, cfg.quadrature, cfg.seed);
  s.note("mass", scheme.mass);
  s.note("mass_sigma", scheme.mass_sigma);
  if (form.is_perturbed()) {
    s.skip("liouville_mass", "no closed-form volume for a perturbed form");
  } else {
    s.check("liouville_mass", std::abs(scheme.mass - expected_mass(form)),
            3.0 * scheme.mass_sigma + kQuadratureFloor * scheme.mass, Relation::less_equal);
  }
  auto fl = identity_functions(m);
  IdentityArgs compat;
  compat.f = ScalarField::parse(fl.f, m);
  auto cr = integral_identity_residual(form, IdentityKind::compatibility, compat, scheme, cfg.execution);
  s.check("compatibility", cr.residual, cr.tolerance, Relation::less_equal);

  IdentityArgs skew;
  skew.f = ScalarField::parse(fl.f, m);
  skew.l = ScalarField::parse(fl.l, m);
  auto sr = integral_identity_residual(form, IdentityKind::skew, skew, scheme, cfg.execution);
  s.check("skew_adjoint", sr.residual, sr.tolerance, Relation::less_equal);

  IdentityArgs vol;
  vol.f = hamiltonian_of(cfg);
  auto vr = integral_identity_residual(form, IdentityKind::volume, vol, scheme, cfg.execution);
  s.check("volume", vr.residual, vr.tolerance, Relation::less_equal);
  s.note("volume_sigma", vr.sigma);
  return s.take();
}

SuiteReport verify_operator(const VerifyConfig& cfg) {
  Suite s("operator");
  const auto& form = cfg.form;
  const auto& m = form.manifold();
  if (!m.compact()) {
    for (const char* id : {"h0_equals_h1", "skew_adjoint_matrix", "compatibility_columns", "kernel_reconstruction",
                           "kernel_stability"}) {
      s.skip(id, "model is not compact");
    }
    return s.take();
  }
  const bool sphere = m.kind() == ModelKind::sphere;
  auto basis = sphere ? FunctionBasis::sphere_monomials(m, cfg.degree) : FunctionBasis::torus_modes(m, cfg.modes);
  auto scheme = (!sphere && !form.is_perturbed()) ? trapezoid_quadrature(form, cfg.trapezoid)
                                                  : liouville_quadrature(form, cfg.quadrature, cfg.seed);
  auto op = assemble_operator(form, basis, scheme, cfg.execution);
  auto k = kernel_dimensions(op);
  auto lsq = residual_kernel_dimension(op);
  s.note("h0", static_cast<double>(k.h0));
  s.note("h1", static_cast<double>(k.h1));
  s.note("gap", k.gap, k.ambiguous ? "ambiguous rank" : "");
  s.note("h0_least_squares", static_cast<double>(lsq.h0));
  s.note("gap_least_squares", lsq.gap);
  s.check("h0_equals_h1", static_cast<double>(k.h0), static_cast<double>(k.h1), Relation::equal);

  if (form.is_perturbed()) {
    s.skip("skew_adjoint_matrix", "quadrature is R-invariant only in the limit");
  } else {
    s.check("skew_adjoint_matrix", skew_defect(op), 1e-6);
  }

  double failing = 0.0;
  for (Eigen::Index j = 0; j < op.reeb_integrals.size(); ++j) {
    const double tol = 3.0 * op.reeb_integral_sigma[j] + kQuadratureFloor * op.raw.cwiseAbs().maxCoeff() * scheme.mass;
    if (std::abs(op.reeb_integrals[j]) > tol) failing += 1.0;
  }
  s.check("compatibility_columns_failing", failing, 0.0, Relation::equal);

  if (!sphere || form.is_perturbed()) {
    s.skip("kernel_reconstruction", "exact finite model only for the standard sphere");
    s.skip("kernel_stability", "exact finite model only for the standard sphere");
    return s.take();
  }
  double worst = 0.0;
  VecX values;
  MatX grads;
  for (Eigen::Index c = 0; c < k.kernel.cols(); ++c) {
    double sup_f = 0.0, sup_rf = 0.0;
    for (const auto& x : scheme.points) {
      basis.evaluate(x.coords, values, grads);
      VecX r = LocalCalculus(form, x).reeb();
      sup_f = std::max(sup_f, std::abs(values.dot(k.kernel.col(c))));
      sup_rf = std::max(sup_rf, std::abs((grads * r).dot(k.kernel.col(c))));
    }
    worst = std::max(worst, sup_rf / sup_f);
  }
  s.check("kernel_reconstruction", worst, 1e-5);
  double spread = 0.0;
  for (std::size_t n : {std::size_t{20000}, std::size_t{100000}}) {
    auto other = assemble_operator(form, basis, liouville_quadrature(form, n, cfg.seed), cfg.execution);
    spread = std::max(spread, std::abs(static_cast<double>(kernel_dimensions(other).h0) - static_cast<double>(k.h0)));
  }
  s.check("kernel_stability", spread, 0.0, Relation::equal);
  return s.take();
}

SuiteReport verify_characteristic(const VerifyConfig&) {
  Suite s("characteristic");
  auto box = ContactForm::parse("darboux:box=0..1");
  const auto& m = box.manifold();
  auto zero = ScalarField::constant(0.0, 3);
  auto cosz = ScalarField::parse("cos(z)", m);

  auto sol = solve_characteristic(box, cosz, zero, {64, false});
  double err = 0.0;
  for (std::size_t i = 0; i < sol.points.size(); ++i) {
    err = std::max(err, std::abs(sol.values[i] - std::sin(sol.points[i].coords[2])));
  }
  s.check("manufactured_solution", err, 1e-8);
  s.check("fd_check_residual", sol.check_residual, 1e-6);

  auto f0 = ScalarField::parse("q*q - p", m);
  auto trivial = solve_characteristic(box, zero, f0, {16, false});
  double diff = 0.0;
  for (std::size_t i = 0; i < trivial.points.size(); ++i) {
    diff = std::max(diff, std::abs(trivial.values[i] - f0.value(trivial.points[i])));
  }
  s.check("zero_source_returns_f0", diff, 0.0, Relation::equal);

  auto open = ContactForm::darboux();
  auto blocked = solve_characteristic(open, ScalarField::constant(1.0, 3), zero, {32, true});
  s.check("periodic_mean_obstruction", blocked.solvable ? 0.0 : 1.0, 1.0, Relation::equal);
  auto wave = solve_characteristic(open, cosz, zero, {128, true});
  s.check("periodic_solvable", wave.solvable ? 1.0 : 0.0, 1.0, Relation::equal);
  s.check("periodic_fd_check_residual", wave.check_residual, 1e-6);
  return s.take();
}

SuiteReport run_suites(const VerifyConfig& cfg, const std::vector<std::string>& suites) {
  for (const auto& name : suites) {
    if (std::find(kSuites.begin(), kSuites.end(), name) != kSuites.end()) continue;
    throw DomainError("unknown suite '" + name + "'");
  }
  using Runner = SuiteReport (*)(const VerifyConfig&);
  const Runner runners[] = {verify_geometry,   verify_contact,   verify_flows,    verify_conformal,
                            verify_variations, verify_integrals, verify_operator, verify_characteristic};
  SuiteReport all;
  for (std::size_t i = 0; i < kSuites.size(); ++i) {
    if (std::find(suites.begin(), suites.end(), kSuites[i]) == suites.end()) continue;
    all.append(runners[i](cfg));
  }
  return all;
}

}  // namespace reeb
