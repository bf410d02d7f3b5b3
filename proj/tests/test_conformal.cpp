#include <cmath>

#include "doctest.h"
#include "reeb/conformal.hpp"
#include "reeb/errors.hpp"

using namespace reeb;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

IntegratorConfig coarse() {
  IntegratorConfig c;
  c.step = 1e-2;
  return c;
}

}  // namespace

TEST_CASE("payoff integral") {
  auto sphere = ContactForm::sphere_standard();
  auto strict = ScalarField::parse("x*u + y*v", sphere.manifold());
  for (const auto& x : sample_points(sphere.manifold(), 10, 4)) {
    CHECK(std::abs(conformal_exponent(sphere, strict, x, 1.0, coarse()).g) < 1e-8);
  }

  auto darboux = ContactForm::darboux();
  auto h = ScalarField::parse("z", darboux.manifold());
  for (double t : {0.25, 1.0, 2.0}) {
    auto rec = conformal_exponent(darboux, h, Point{vec({0.1, 0.7, -0.4})}, t);
    CHECK(rec.g == doctest::Approx(-t).epsilon(1e-10));
    CHECK(rec.method == ExponentMethod::integral);
    CHECK((rec.image.coords - vec({0.1, 0.7 * std::exp(-t), -0.4 * std::exp(-t)})).norm() < 1e-8);
  }

  auto torus = ContactForm::parse("t3", "conformal:f=sin(y),s=0.2");
  auto minus_one = ScalarField::constant(-1.0, 3);
  for (const auto& x : sample_points(torus.manifold(), 5, 8)) {
    CHECK(std::abs(conformal_exponent(torus, minus_one, x, 3.0, coarse()).g) < 1e-12);
  }
}

TEST_CASE("pullback exponent") {
  auto darboux = ContactForm::darboux();
  const auto& dm = darboux.manifold();
  Point x{vec({0.3, -0.2, 0.5})};

  auto identity = [](const Point& p) { return p; };
  CHECK(std::abs(conformal_exponent_direct(darboux, identity, x).g) < 1e-12);

  auto torus = ContactForm::parse("t3", "conformal:f=cos(x)*sin(z),s=0.3");
  for (const auto& p : sample_points(torus.manifold(), 5, 1)) {
    CHECK(std::abs(conformal_exponent_direct(torus, reeb_map(torus, 0.8), p).g) < 1e-6);
  }

  auto psi = hamiltonian_map(darboux, ScalarField::parse("z", dm));
  auto direct = conformal_exponent_direct(darboux, psi, x);
  CHECK(direct.g == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(direct.residual < 1e-8);

  SUBCASE("maps that are not contactomorphisms") {
    auto flip = [](const Point& p) { return Point{vec({p.coords[0], -p.coords[1], -p.coords[2]})}; };
    try {
      conformal_exponent_direct(darboux, flip, x);
      FAIL("expected NotContactError");
    } catch (const NotContactError& e) {
      CHECK(e.reason() == NotContactError::Reason::coorientation_reversed);
    }
    auto stretch = [](const Point& p) { return Point{vec({p.coords[0], 2 * p.coords[1], p.coords[2]})}; };
    try {
      conformal_exponent_direct(darboux, stretch, x);
      FAIL("expected NotContactError");
    } catch (const NotContactError& e) {
      CHECK(e.reason() == NotContactError::Reason::not_conformal);
      CHECK(e.value() > 0.1);
    }
  }
}

TEST_CASE("integral and pullback agree") {
  struct Case {
    ContactForm form;
    std::string h;
  };
  std::vector<Case> cases{{ContactForm::torus_tight(1), "0.5*sin(x) + 0.2*cos(y+z)"},
                          {ContactForm::torus_tight(2), "cos(x)*sin(y)"},
                          {ContactForm::sphere_standard(), "x + 0.5*y*v"},
                          {ContactForm::parse("s3", "scaled:h=0.3*u,s=1"), "x*y - v"},
                          {ContactForm::parse("t3", "additive:alpha=[0,0,0.2*cos(x)],s=1"), "sin(y)"}};
  for (const auto& [form, text] : cases) {
    auto h = ScalarField::parse(text, form.manifold());
    for (const auto& x : sample_points(form.manifold(), 4, 12)) {
      for (double t : {0.5, 1.0}) {
        const double integral = conformal_exponent(form, h, x, t, coarse()).g;
        const double pullback = conformal_exponent_direct(form, hamiltonian_map(form, h, t, coarse()), x).g;
        CHECK_MESSAGE(std::abs(integral - pullback) < 1e-5, form.describe() << " H=" << text);
      }
    }
  }
}

TEST_CASE("cocycle identities") {
  auto darboux = ContactForm::darboux();
  std::vector<Point> points{Point{vec({0.1, 0.2, 0.3})}, Point{vec({-1, 0.5, 2})}};
  auto psi = hamiltonian_map(darboux, ScalarField::parse("z", darboux.manifold()));
  CHECK(cocycle_residual(darboux, psi, psi, points) < 1e-5);
  CHECK(conformal_exponent_direct(darboux, compose(psi, psi), points[0]).g == doctest::Approx(-2.0).epsilon(1e-6));

  auto sphere = ContactForm::sphere_standard();
  auto rot = reeb_map(sphere, 0.7, coarse());
  CHECK(cocycle_residual(sphere, rot, rot, sample_points(sphere.manifold(), 3, 2)) < 1e-6);

  auto torus = ContactForm::torus_tight(1);
  const auto& tm = torus.manifold();
  auto phi = hamiltonian_map(torus, ScalarField::parse("0.4*sin(x)", tm), 1.0, coarse());
  auto chi = hamiltonian_map(torus, ScalarField::parse("0.3*cos(y) + 0.2*sin(z)", tm), 1.0, coarse());
  auto samples = sample_points(tm, 4, 6);
  CHECK(cocycle_residual(torus, phi, chi, samples) < 1e-4);

  auto back = hamiltonian_map(torus, ScalarField::parse("0.4*sin(x)", tm), -1.0, coarse());
  CHECK(inverse_residual(torus, phi, back, samples) < 1e-5);
}

TEST_CASE("time derivative of the exponent") {
  // d/dt g_t(x) = -R_λ[H](ψ_t x)
  auto form = ContactForm::parse("s3", "conformal:f=y,s=0.2");
  auto h = ScalarField::parse("0.3*x + u*v", form.manifold());
  const double dt = 1e-3;
  for (const auto& x : sample_points(form.manifold(), 4, 30)) {
    for (double t : {0.5, 1.0}) {
      const double plus = conformal_exponent(form, h, x, t + dt, coarse()).g;
      const double minus = conformal_exponent(form, h, x, t - dt, coarse()).g;
      Point y = flow_map(form, FieldSpec::hamiltonian(h), x, t, coarse());
      CHECK(std::abs((plus - minus) / (2 * dt) + reeb_derivative(form, h, y)) < 1e-5);
    }
  }
}

TEST_CASE("right Reeb action") {
  // g_{ψ∘φ_R^t} = g_ψ ∘ φ_R^t
  auto torus = ContactForm::parse("t3", "scaled:h=0.2*sin(y),s=1");
  const auto& m = torus.manifold();
  auto psi = hamiltonian_map(torus, ScalarField::parse("0.5*cos(x)", m), 1.0, coarse());
  auto rho = reeb_map(torus, 0.6, coarse());
  for (const auto& x : sample_points(m, 4, 5)) {
    const double composed = conformal_exponent_direct(torus, compose(psi, rho), x).g;
    const double shifted = conformal_exponent_direct(torus, psi, rho(x)).g;
    CHECK(std::abs(composed - shifted) < 1e-5);
  }
}

TEST_CASE("Lie derivative of λ along X_H") {
  struct Case {
    ContactForm form;
    std::string h;
  };
  std::vector<Case> cases{{ContactForm::darboux(), "q*p + sin(z)"},
                          {ContactForm::torus_tight(1), "0.5*sin(x)*cos(z)"},
                          {ContactForm::parse("s3", "conformal:f=x*u,s=0.3"), "y - 0.4*v^2"}};
  for (const auto& [form, text] : cases) {
    auto h = ScalarField::parse(text, form.manifold());
    std::vector<Point> pts = form.manifold().compact() ? sample_points(form.manifold(), 3, 9)
                                                       : std::vector<Point>{Point{vec({0.2, -0.3, 0.4})}};
    for (const auto& x : pts) CHECK(lie_derivative_residual(form, h, x) < 1e-5);
  }
}

TEST_CASE("strict pair commutes with the Reeb field") {
  auto sphere = ContactForm::sphere_standard();
  const auto& m = sphere.manifold();
  auto strict = FieldSpec::hamiltonian(ScalarField::parse("x*u + y*v", m));
  auto loose = FieldSpec::hamiltonian(ScalarField::parse("x", m));
  for (const auto& x : sample_points(m, 10, 3)) {
    CHECK(lie_bracket(sphere, FieldSpec::reeb(), strict, x).norm() < 1e-5);
  }
  Point x = make_point(m, vec({0.5, 0.5, 0.5, 0.5}));
  CHECK(lie_bracket(sphere, FieldSpec::reeb(), loose, x).norm() > 0.1);
}

TEST_CASE("discriminant scan") {
  SUBCASE("Darboux box with uniform contraction has no zeros") {
    auto boxed = ContactForm::parse("darboux:box=0..1");
    auto scan = discriminant_scan(boxed, ScalarField::parse("z", boxed.manifold()), 3);
    CHECK(scan.nodes.size() == 27);
    CHECK(scan.classified.empty());
    CHECK(scan.negative == 27);
    for (double g : scan.values) CHECK(g == doctest::Approx(-1.0).epsilon(1e-9));
  }
  SUBCASE("strict pair: the discriminant is everything") {
    auto sphere = ContactForm::sphere_standard();
    auto h = ScalarField::parse("x*u + y*v", sphere.manifold());
    auto scan = discriminant_scan(sphere, h, sample_points(sphere.manifold(), 6, 77));
    REQUIRE(scan.classified.size() == 6);
    for (const auto& s : scan.classified) {
      CHECK(std::abs(s.g) < 1e-7);
      CHECK(s.dg_norm < 1e-4);
      CHECK(s.critical);
      CHECK_FALSE(s.regular);
    }
  }
  SUBCASE("Hamiltonian invariant under the Reeb flow on the torus") {
    // R = cos z ∂x + sin z ∂y kills any function of z alone
    auto torus = ContactForm::torus_tight(1);
    auto scan = discriminant_scan(torus, ScalarField::parse("0.3*sin(z)", torus.manifold()), 3);
    CHECK(scan.positive + scan.negative == 0);
    CHECK(scan.classified.size() == 27);
    CHECK(scan.regular_count() == 0);
  }
  SUBCASE("non-strict torus pair has a regular zero set") {
    auto torus = ContactForm::torus_tight(1);
    auto h = ScalarField::parse("0.3*sin(x)", torus.manifold());
    DiscriminantConfig cfg;
    auto scan = discriminant_scan(torus, h, 4, cfg);
    CHECK(scan.positive > 0);
    CHECK(scan.negative > 0);
    REQUIRE_FALSE(scan.segments.empty());
    CHECK(scan.regular_count() > 0);
    for (const auto& s : scan.classified) {
      CHECK(std::abs(s.g) < cfg.tol_zero);
      CHECK(s.zero);
    }
    for (const auto& seg : scan.segments) {
      CHECK(scan.values[seg.from] * scan.values[seg.to] < 0);
    }

    cfg.execution = Execution::serial;
    auto serial = discriminant_scan(torus, h, 4, cfg);
    CHECK(serial.values == scan.values);
    REQUIRE(serial.classified.size() == scan.classified.size());
    for (std::size_t i = 0; i < scan.classified.size(); ++i) {
      CHECK(serial.classified[i].x.coords == scan.classified[i].x.coords);
    }
  }
  SUBCASE("sphere grid in Hopf coordinates") {
    auto sphere = ContactForm::sphere_standard();
    auto scan = discriminant_scan(sphere, ScalarField::parse("0.2*x", sphere.manifold()), 3);
    CHECK(scan.nodes.size() == 27);
    for (const auto& p : scan.nodes) CHECK(std::abs(p.coords.norm() - 1.0) < 1e-14);
    CHECK(scan.positive > 0);
    CHECK(scan.negative > 0);
    CHECK_FALSE(scan.classified.empty());
  }
  CHECK_THROWS_AS(discriminant_scan(ContactForm::darboux(), ScalarField::constant(1.0, 3), 3), DomainError);
}

TEST_CASE("fixed points are classified") {
  // X_{p/2} = ∂q/2 moves every point; H ≡ 0 is the identity
  auto boxed = ContactForm::parse("darboux:box=-1..1");
  auto s = classify_point(boxed, ScalarField::parse("0.5*p", boxed.manifold()), Point{vec({0, 0, 0})});
  CHECK_FALSE(s.fixed);
  CHECK(s.displacement == doctest::Approx(0.5).epsilon(1e-12));
  auto still = classify_point(boxed, ScalarField::constant(0.0, 3), Point{vec({0.1, 0.2, 0.3})});
  CHECK(still.fixed);
  CHECK(still.zero);
  CHECK_FALSE(still.regular);
  CHECK_FALSE(still.nondegenerate_fixed);
  CHECK(std::string(still.label()) == "fixed");
}
