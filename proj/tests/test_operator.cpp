#include <cmath>
#include <numbers>
#include <string>

#include "doctest.h"
#include "reeb/errors.hpp"
#include "reeb/operator.hpp"

using namespace reeb;

namespace {

constexpr double kPi = std::numbers::pi;

bool within_sigma(double value, double target, double sigma, double scale) {
  return std::abs(value - target) <= 3.0 * sigma + kQuadratureFloor * scale;
}

/// |z-mode| of a torus basis label such as "cos(1x)*sin(2z)".
int z_mode(const std::string& label) {
  auto pos = label.find("z)");
  if (pos == std::string::npos) return 0;
  auto open = label.rfind('(', pos);
  return std::stoi(label.substr(open + 1, pos - open - 1));
}

double sup_reeb_derivative(const ContactForm& form, const FunctionBasis& basis, const QuadratureScheme& scheme,
                           const VecX& coeffs, double& sup_f) {
  double sup_rf = 0.0;
  sup_f = 0.0;
  VecX values;
  MatX grads;
  for (const auto& x : scheme.points) {
    basis.evaluate(x.coords, values, grads);
    VecX r = LocalCalculus(form, x).reeb();
    sup_f = std::max(sup_f, std::abs(values.dot(coeffs)));
    sup_rf = std::max(sup_rf, std::abs((grads * r).dot(coeffs)));
  }
  return sup_rf;
}

}  // namespace

TEST_CASE("liouville masses") {
  auto torus = ContactForm::torus_tight();
  auto t = liouville_quadrature(torus, 20000, 42);
  CHECK(within_sigma(t.mass, std::pow(2 * kPi, 3), t.mass_sigma, t.mass));
  for (double w : t.weights) CHECK(w > 0.0);

  auto sphere = ContactForm::sphere_standard();
  auto s = liouville_quadrature(sphere, 20000, 42);
  CHECK(s.size() == 20000);
  CHECK(s.group_count() == 2500);
  CHECK(within_sigma(s.mass, 4 * kPi * kPi, s.mass_sigma, s.mass));

  auto box = ContactForm::parse("darboux:box=0..1");
  auto b = liouville_quadrature(box, 1000, 3);
  CHECK(b.mass == doctest::Approx(1.0).epsilon(1e-12));

  auto grid = trapezoid_quadrature(torus, 8);
  CHECK(grid.method == DensityMethod::analytic);
  CHECK(std::abs(grid.mass - std::pow(2 * kPi, 3)) < 1e-10 * grid.mass);

  CHECK_THROWS_AS(liouville_quadrature(ContactForm::darboux(), 10, 1), DomainError);
  CHECK_THROWS_AS(trapezoid_quadrature(sphere, 8), DomainError);
  CHECK(base_volume(ManifoldModel::sphere(2)) == doctest::Approx(kPi * kPi * kPi));
}

TEST_CASE("integrate") {
  auto torus = ContactForm::torus_tight();
  auto s = liouville_quadrature(torus, 20000, 7);
  auto one = integrate(s, [](const Point&) { return 1.0; });
  CHECK(one.value == doctest::Approx(s.mass).epsilon(1e-14));

  auto odd = integrate(s, [](const Point& x) { return std::sin(x.coords[0]); });
  CHECK(std::abs(odd.value) < 3.0 * odd.sigma);

  auto square = integrate(s, [](const Point& x) { return std::pow(std::cos(x.coords[1]) - 0.3, 2); });
  CHECK(square.value >= 0.0);

  auto grid = trapezoid_quadrature(torus, 12);
  auto exact = integrate(grid, [](const Point& x) { return std::cos(2 * x.coords[2]) * std::sin(x.coords[0]); });
  CHECK(std::abs(exact.value) < 1e-10);
  CHECK(exact.sigma == 0.0);

  CHECK_THROWS_AS(integrate(s, std::vector<double>(3, 1.0)), DomainError);
}

TEST_CASE("integral identities") {
  auto torus = ContactForm::torus_tight();
  const auto& tm = torus.manifold();
  auto ts = liouville_quadrature(torus, 20000, 42);

  IdentityArgs compat;
  compat.f = ScalarField::parse("sin(x)", tm);
  CHECK(integral_identity_residual(torus, IdentityKind::compatibility, compat, ts).pass);

  IdentityArgs skew;
  skew.f = ScalarField::parse("sin(x)", tm);
  skew.l = ScalarField::parse("cos(y)", tm);
  auto sr = integral_identity_residual(torus, IdentityKind::skew, skew, ts);
  CHECK(sr.pass);
  CHECK(sr.sigma > 0.0);

  IdentityArgs vol;
  vol.f = ScalarField::parse("0.1*sin(x)", tm);
  auto small = liouville_quadrature(torus, 2000, 42);
  auto vr = integral_identity_residual(torus, IdentityKind::volume, vol, small);
  CHECK(vr.pass);
  CHECK(vr.sigma > 0.0);

  // strict pair: the integrand vanishes identically and only the floor remains
  vol.f = ScalarField::parse("0.1*sin(z)", tm);
  auto strict = integral_identity_residual(torus, IdentityKind::volume, vol, small);
  CHECK(strict.pass);
  CHECK(strict.residual < 1e-9);

  auto sphere = ContactForm::parse("s3", "conformal:f=x,s=0.1");
  auto ss = liouville_quadrature(sphere, 4000, 42);
  IdentityArgs sc;
  sc.f = ScalarField::parse("x*y + u", sphere.manifold());
  sc.l = ScalarField::parse("v - x*x", sphere.manifold());
  CHECK(integral_identity_residual(sphere, IdentityKind::compatibility, sc, ss).pass);
  CHECK(integral_identity_residual(sphere, IdentityKind::skew, sc, ss).pass);
  IdentityArgs sv;
  sv.f = ScalarField::parse("0.1*x", sphere.manifold());
  CHECK(integral_identity_residual(sphere, IdentityKind::volume, sv, ss).pass);
}

TEST_CASE("function bases") {
  auto sm = ManifoldModel::sphere(1);
  auto b = FunctionBasis::sphere_monomials(sm, 2);
  CHECK(b.size() == 15);
  CHECK(b.label(0) == "1");

  VecX values;
  MatX grads;
  Vec x(4);
  x << 0.5, -0.5, 0.1, 0.7;
  b.evaluate(x, values, grads);
  for (std::size_t j = 0; j < b.size(); ++j) {
    for (int i = 0; i < 4; ++i) {
      Vec hi = x, lo = x;
      hi[i] += 1e-6;
      lo[i] -= 1e-6;
      VecX vh, vl;
      MatX g;
      b.evaluate(hi, vh, g);
      b.evaluate(lo, vl, g);
      const auto row = static_cast<Eigen::Index>(j);
      CHECK(std::abs((vh[row] - vl[row]) / 2e-6 - grads(row, i)) < 1e-8);
    }
  }

  auto t = FunctionBasis::torus_modes(ManifoldModel::torus(1, 2 * kPi), 2);
  CHECK(t.size() == 125);
  Vec y(3);
  y << 0.3, 1.1, -2.0;
  t.evaluate(y, values, grads);
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (t.label(j) == "cos(1x)*sin(2z)") {
      CHECK(values[static_cast<Eigen::Index>(j)] == doctest::Approx(std::cos(0.3) * std::sin(-4.0)));
      CHECK(grads(static_cast<Eigen::Index>(j), 2) == doctest::Approx(2 * std::cos(0.3) * std::cos(-4.0)));
    }
  }

  CHECK_THROWS_AS(FunctionBasis::sphere_monomials(ManifoldModel::torus(1, 1.0), 2), DomainError);
  CHECK_THROWS_AS(FunctionBasis::torus_modes(sm, 2), DomainError);
}

TEST_CASE("standard sphere kernel") {
  auto sphere = ContactForm::sphere_standard();
  auto basis = FunctionBasis::sphere_monomials(sphere.manifold(), 2);
  auto scheme = liouville_quadrature(sphere, 20000, 1);
  auto op = assemble_operator(sphere, basis, scheme);

  CHECK(op.rank == 14);
  CHECK(skew_defect(op) < 1e-6);
  CHECK(op.raw.col(0).norm() < 1e-14 * op.raw.norm());

  auto k = kernel_dimensions(op);
  CHECK(k.h0 == 4);
  CHECK(k.h1 == k.h0);
  CHECK(k.gap > 1e3);
  CHECK_FALSE(k.ambiguous);

  for (Eigen::Index c = 0; c < k.kernel.cols(); ++c) {
    double sup_f = 0.0;
    const double sup_rf = sup_reeb_derivative(sphere, basis, scheme, k.kernel.col(c), sup_f);
    CHECK(sup_rf < 1e-5 * sup_f);
  }

  for (Eigen::Index j = 0; j < op.reeb_integrals.size(); ++j) {
    CHECK(std::abs(op.reeb_integrals[j]) <= 3.0 * op.reeb_integral_sigma[j] + 1e-12);
  }

  auto lsq = residual_kernel_dimension(op);
  CHECK(lsq.h0 == 4);

  auto larger = assemble_operator(sphere, basis, liouville_quadrature(sphere, 100000, 1));
  CHECK(kernel_dimensions(larger).h0 == 4);
}

TEST_CASE("perturbed sphere kernel") {
  auto sphere = ContactForm::parse("s3", "conformal:f=x,s=0.1");
  auto basis = FunctionBasis::sphere_monomials(sphere.manifold(), 2);
  auto scheme = liouville_quadrature(sphere, 20000, 42);
  auto op = assemble_operator(sphere, basis, scheme);
  CHECK(op.rank == 14);

  // the quadrature measure is R-invariant only in the limit, so A is skew up
  // to sampling error; skew matrices of even size have paired singular values
  CHECK(skew_defect(op) < 1e-2);
  const auto& s = op.singular_values;
  const Eigen::Index r = s.size();
  CHECK(s[r - 1] < 1e-10 * s[0]);
  CHECK(s[r - 2] < 1e-4 * s[0]);
  CHECK(s[r - 3] > 1e-4 * s[0]);

  auto lsq = residual_kernel_dimension(op);
  CHECK(lsq.h0 == 1);
  CHECK(lsq.gap > 1e3);
  double sup_f = 0.0;
  const double sup_rf = sup_reeb_derivative(sphere, basis, scheme, lsq.kernel.col(0), sup_f);
  CHECK(sup_rf < 1e-5 * sup_f);
}

TEST_CASE("torus kernel") {
  auto torus = ContactForm::torus_tight();
  auto basis = FunctionBasis::torus_modes(torus.manifold(), 3);
  auto scheme = trapezoid_quadrature(torus, 16);
  auto op = assemble_operator(torus, basis, scheme);
  CHECK(op.rank == basis.size());
  CHECK(skew_defect(op) < 1e-6);

  const double scale = op.raw.cwiseAbs().maxCoeff();
  bool band = true;
  for (Eigen::Index i = 0; i < op.raw.rows(); ++i) {
    for (Eigen::Index j = 0; j < op.raw.cols(); ++j) {
      if (std::abs(op.raw(i, j)) < 1e-10 * scale) continue;
      const int mi = z_mode(basis.label(static_cast<std::size_t>(i)));
      const int mj = z_mode(basis.label(static_cast<std::size_t>(j)));
      band = band && std::abs(mi - mj) == 1;
    }
  }
  CHECK(band);

  auto k = kernel_dimensions(op);
  CHECK(k.h0 >= 7);
  CHECK(k.h1 == k.h0);
  CHECK(residual_kernel_dimension(op).h0 == 7);
}

TEST_CASE("parallel assembly matches serial") {
  auto sphere = ContactForm::sphere_standard();
  auto basis = FunctionBasis::sphere_monomials(sphere.manifold(), 2);
  auto scheme = liouville_quadrature(sphere, 8000, 5);
  auto a = assemble_operator(sphere, basis, scheme, Execution::parallel);
  auto b = assemble_operator(sphere, basis, scheme, Execution::serial);
  CHECK(a.raw == b.raw);
  CHECK(a.gram == b.gram);
  CHECK(a.singular_values == b.singular_values);

  auto f = [](const Point& x) { return std::exp(x.coords[0]) * x.coords[3]; };
  auto pa = integrate(scheme, f, Execution::parallel);
  auto pb = integrate(scheme, f, Execution::serial);
  CHECK(pa.value == pb.value);
  CHECK(pa.sigma == pb.sigma);
}

TEST_CASE("characteristic solver") {
  auto darboux = ContactForm::darboux();
  const auto& dm = darboux.manifold();
  auto zero = ScalarField::constant(0.0, 3);

  auto sol = solve_characteristic(darboux, ScalarField::parse("cos(z)", dm), zero, {});
  CHECK(sol.solvable);
  double err = 0.0;
  for (std::size_t i = 0; i < sol.points.size(); ++i) {
    err = std::max(err, std::abs(sol.values[i] - std::sin(sol.points[i].coords[2])));
  }
  CHECK(err < 1e-8);
  CHECK(sol.check_residual < 1e-6);

  auto f0 = ScalarField::parse("q*q - p", dm);
  auto trivial = solve_characteristic(darboux, zero, f0, {16, false});
  for (std::size_t i = 0; i < trivial.points.size(); ++i) {
    const auto& c = trivial.points[i].coords;
    CHECK(trivial.values[i] == c[0] * c[0] - c[1]);
  }

  auto boxed = ContactForm::parse("darboux:box=-1..2");
  auto mixed = solve_characteristic(boxed, ScalarField::parse("q*cos(z) + p", boxed.manifold()), zero, {33, false});
  err = 0.0;
  for (std::size_t i = 0; i < mixed.points.size(); ++i) {
    const auto& c = mixed.points[i].coords;
    err = std::max(err, std::abs(mixed.values[i] - (c[0] * std::sin(c[2]) + c[1] * c[2])));
  }
  CHECK(err < 1e-7);

  CharacteristicGrid periodic{128, true};
  auto blocked = solve_characteristic(darboux, ScalarField::constant(1.0, 3), zero, periodic);
  CHECK_FALSE(blocked.solvable);
  CHECK(blocked.fiber_means[0] == doctest::Approx(1.0));

  auto wave = solve_characteristic(darboux, ScalarField::parse("cos(z)", dm), zero, periodic);
  CHECK(wave.solvable);
  CHECK(wave.check_residual < 1e-6);
  err = 0.0;
  for (std::size_t i = 0; i < wave.points.size(); ++i) {
    err = std::max(err, std::abs(wave.values[i] - std::sin(wave.points[i].coords[2])));
  }
  CHECK(err < 1e-8);

  CHECK_THROWS_AS(solve_characteristic(ContactForm::torus_tight(), zero, zero, {}), DomainError);
  CHECK_THROWS_AS(solve_characteristic(darboux, zero, zero, {3, false}), DomainError);
}
