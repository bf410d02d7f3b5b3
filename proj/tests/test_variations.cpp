#include <cmath>

#include "doctest.h"
#include "reeb/errors.hpp"
#include "reeb/variations.hpp"

using namespace reeb;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

struct Model {
  ContactForm form;
  std::vector<std::string> hs;
  std::vector<Point> points;
};

std::vector<Model> models() {
  auto darboux = ContactForm::darboux();
  std::vector<Point> box{Point{vec({0.2, -0.4, 0.7})}, Point{vec({-1.1, 0.3, 0.1})}, Point{vec({0.5, 0.9, -0.6})}};
  auto torus = ContactForm::parse("t3", "conformal:f=0.3*sin(x),s=1");
  auto sphere = ContactForm::parse("s3", "scaled:h=0.2*y*u,s=1");
  return {{darboux, {"q", "0.3*sin(z) + p*q", "exp(0.2*p)"}, box},
          {torus, {"cos(y)", "0.5*sin(x+z)"}, sample_points(torus.manifold(), 3, 2)},
          {sphere, {"x*v", "0.4*u - y^2"}, sample_points(sphere.manifold(), 3, 3)}};
}

}  // namespace

TEST_CASE("directions") {
  auto m = ManifoldModel::darboux(1);
  auto d = PerturbationDirection::parse("h=q^2", m);
  CHECK(d.kind() == PerturbationDirection::Kind::scaled_form);
  CHECK(d.describe() == "h=q^2");
  auto a = PerturbationDirection::parse("alpha=[0, z, 0]", m);
  CHECK(a.kind() == PerturbationDirection::Kind::additive);
  CHECK_THROWS_AS(PerturbationDirection::parse("beta=[1,2,3]", m), ParseError);
  CHECK_THROWS_AS(PerturbationDirection::parse("q", m), ParseError);

  // α = hλ: value hλ and d(hλ) = dh∧λ + h dλ
  auto form = ContactForm::darboux();
  auto v = d.value(form, vec({2, 3, 5}));
  CHECK((v.lambda - vec({-12, 0, 4})).norm() < 1e-14);
  CHECK(v.dlambda(0, 2) == doctest::Approx(4.0));  // dq∧dz coefficient 2q
  CHECK(v.dlambda(0, 1) == doctest::Approx(4.0));  // q² dq∧dp
}

TEST_CASE("reeb_variation reference values") {
  auto darboux = ContactForm::darboux();
  const auto& m = darboux.manifold();
  for (const Point& x : {Point{vec({0.3, 1.2, -0.5})}, Point{vec({-2, 0.1, 4})}}) {
    // R of (1+sq)(dz - p dq) differentiated at s = 0
    auto y = reeb_variation(darboux, PerturbationDirection::parse("h=q", m), x);
    CHECK((y.comps - vec({0, -1, -x.coords[0]})).norm() < 1e-12);
    auto c = reeb_variation(darboux, PerturbationDirection::parse("h=2.5", m), x);
    CHECK((c.comps - vec({0, 0, -2.5})).norm() < 1e-12);
    auto zero = reeb_variation(darboux, PerturbationDirection::parse("alpha=[0,0,0]", m), x);
    CHECK(zero.comps.norm() == 0.0);
  }
  auto sphere = ContactForm::sphere_standard();
  for (const auto& x : sample_points(sphere.manifold(), 5, 1)) {
    auto y = reeb_variation(sphere, PerturbationDirection::scaled_form(ScalarField::constant(0.5, 4)), x);
    CHECK((y.comps + 0.5 * reeb_field(sphere, x).comps).norm() < 1e-12);
  }
}

TEST_CASE("hamiltonian_field_variation") {
  auto darboux = ContactForm::darboux();
  const auto& m = darboux.manifold();
  Point x{vec({0.4, -0.7, 1.3})};

  SUBCASE("H = -1 reduces to the Reeb variation") {
    for (const auto& model : models()) {
      auto minus_one = ScalarField::constant(-1.0, model.form.manifold().coord_count());
      for (const auto& text : model.hs) {
        auto dir = PerturbationDirection::parse("h=" + text, model.form.manifold());
        for (const auto& p : model.points) {
          auto z = hamiltonian_field_variation(model.form, minus_one, dir, p);
          CHECK(z.system.comps == reeb_variation(model.form, dir, p).comps);
          REQUIRE(z.closed);
          CHECK(z.agreement < 1e-9);
        }
      }
    }
  }
  SUBCASE("H = z, h = 1") {
    // X_z = -p∂p - z∂z, X_1^π = 0: Z = -X_z^π + zR = p∂p + z∂z
    auto z = hamiltonian_field_variation(darboux, ScalarField::parse("z", m), PerturbationDirection::parse("h=1", m), x);
    CHECK((z.system.comps - vec({0, x.coords[1], x.coords[2]})).norm() < 1e-12);
    auto fd = finite_difference_oracle(darboux, PerturbationDirection::parse("h=1", m),
                                       HamiltonianQuantity{ScalarField::parse("z", m)}, x);
    CHECK(relative_error(z.system.comps, fd.estimate) < 1e-4);
  }
  SUBCASE("zero direction") {
    auto z = hamiltonian_field_variation(darboux, ScalarField::parse("q*p", m),
                                         PerturbationDirection::parse("alpha=[0,0,0]", m), x);
    CHECK(z.system.comps.norm() == 0.0);
    CHECK_FALSE(z.closed);
  }
  SUBCASE("additive α = hλ matches the kernel-preserving path") {
    for (const auto& model : models()) {
      if (model.form.is_perturbed()) continue;
      auto lambda0 = model.form.base_one_form();
      auto h = ScalarField::parse(model.hs[1], model.form.manifold());
      auto scaled = PerturbationDirection::scaled_form(h);
      auto additive = PerturbationDirection::additive(h * lambda0);
      auto ham = ScalarField::parse("q + z*p", model.form.manifold());
      for (const auto& p : model.points) {
        CHECK((reeb_variation(model.form, scaled, p).comps - reeb_variation(model.form, additive, p).comps).norm() <
              1e-9);
        CHECK((hamiltonian_field_variation(model.form, ham, scaled, p).system.comps -
               hamiltonian_field_variation(model.form, ham, additive, p).system.comps)
                  .norm() < 1e-9);
        CHECK(std::abs(reeb_component(model.form, scaled, p) - reeb_component(model.form, additive, p)) < 1e-12);
      }
    }
  }
}

TEST_CASE("variations match the finite-difference oracle") {
  for (const auto& model : models()) {
    const auto& m = model.form.manifold();
    auto ham = ScalarField::parse(m.kind() == ModelKind::darboux ? "z + 0.5*q*p"
                                  : m.kind() == ModelKind::torus ? "sin(x) + 0.3*cos(z)"
                                                                 : "x*u + 0.3*y",
                                  m);
    for (const auto& text : model.hs) {
      auto dir = PerturbationDirection::parse("h=" + text, m);
      for (const auto& x : model.points) {
        auto fd_reeb = finite_difference_oracle(model.form, dir, ReebQuantity{}, x);
        CHECK(relative_error(reeb_variation(model.form, dir, x).comps, fd_reeb.estimate) < 1e-4);
        CHECK(fd_reeb.order == doctest::Approx(2.0).epsilon(0.1));

        auto fd_ham = finite_difference_oracle(model.form, dir, HamiltonianQuantity{ham}, x);
        CHECK(relative_error(hamiltonian_field_variation(model.form, ham, dir, x).system.comps, fd_ham.estimate) <
              1e-4);
      }
    }
  }
  SUBCASE("additive directions") {
    auto torus = ContactForm::torus_tight(1);
    auto dir = PerturbationDirection::parse("alpha=[0.2*sin(y), 0, 0.3*cos(x)]", torus.manifold());
    auto ham = ScalarField::parse("cos(x+y)", torus.manifold());
    for (const auto& x : sample_points(torus.manifold(), 4, 10)) {
      auto fd = finite_difference_oracle(torus, dir, ReebQuantity{}, x);
      CHECK(relative_error(reeb_variation(torus, dir, x).comps, fd.estimate) < 1e-4);
      auto fh = finite_difference_oracle(torus, dir, HamiltonianQuantity{ham}, x);
      CHECK(relative_error(hamiltonian_field_variation(torus, ham, dir, x).system.comps, fh.estimate) < 1e-4);
    }
  }
  SUBCASE("constant quantity") {
    auto darboux = ContactForm::darboux();
    auto identity = [](const Point& p) { return p; };
    auto fd = finite_difference_oracle(darboux, PerturbationDirection::parse("h=q", darboux.manifold()),
                                       ExponentQuantity{identity}, Point{vec({0.1, 0.2, 0.3})});
    CHECK(std::abs(fd.estimate[0]) < 1e-10);
  }
  CHECK_THROWS_AS(finite_difference_oracle(ContactForm::darboux(), PerturbationDirection::parse("h=q", ManifoldModel::darboux(1)),
                                           ReebQuantity{}, Point{vec({0, 0, 0})}, {1e-2}),
                  DomainError);
}

TEST_CASE("exponent_variation") {
  auto darboux = ContactForm::darboux();
  const auto& m = darboux.manifold();
  auto dir = PerturbationDirection::parse("h=z", m);
  for (const Point& x : {Point{vec({0.1, 0.5, 0.8})}, Point{vec({1, -1, -2})}}) {
    CHECK(exponent_variation(darboux, ScalarField::parse("z", m), dir, x, 0.0) == 0.0);
    const double z = x.coords[2];
    CHECK(exponent_variation(darboux, ScalarField::parse("z", m), dir, x) == doctest::Approx(std::exp(-1.0) * z - z).epsilon(1e-9));
  }

  auto sphere = ContactForm::sphere_standard();
  auto invariant = PerturbationDirection::parse("h=x^2 + y^2 - 0.3*(x*v - y*u)", sphere.manifold());
  auto rot = reeb_map(sphere, 1.3);
  for (const auto& x : sample_points(sphere.manifold(), 5, 4)) {
    CHECK(std::abs(exponent_variation(sphere, rot, invariant, x)) < 1e-6);
  }

  SUBCASE("frozen-map oracle") {
    IntegratorConfig cfg;
    cfg.step = 1e-2;
    for (const auto& model : models()) {
      const auto& mm = model.form.manifold();
      auto ham = ScalarField::parse(mm.kind() == ModelKind::darboux ? "0.5*z + q"
                                    : mm.kind() == ModelKind::torus ? "0.4*sin(x)"
                                                                    : "0.3*x + y*u",
                                    mm);
      auto psi = hamiltonian_map(model.form, ham, 1.0, cfg);
      for (const auto& text : model.hs) {
        auto d = PerturbationDirection::parse("h=" + text, mm);
        for (const auto& x : model.points) {
          auto fd = finite_difference_oracle(model.form, d, ExponentQuantity{psi}, x);
          const double value = exponent_variation(model.form, psi, d, x);
          CHECK(std::abs(value - fd.estimate[0]) < 1e-4 * std::max(1.0, std::abs(value)));
          if (std::abs(value) < 1e-12) {
            CHECK(std::isnan(fd.order));
          } else {
            CHECK(fd.order == doctest::Approx(2.0).epsilon(0.1));
          }
        }
      }
    }
  }
  SUBCASE("spatial gradient of δΓ is ψ*(dh) - dh") {
    auto torus = ContactForm::parse("t3", "conformal:f=0.3*sin(x),s=1");
    const auto& tm = torus.manifold();
    auto psi = hamiltonian_map(torus, ScalarField::parse("0.5*cos(y)", tm));
    auto h = ScalarField::parse("sin(x)*cos(z)", tm);
    auto d = PerturbationDirection::scaled_form(h);
    for (const auto& x : sample_points(tm, 3, 8)) {
      const double step = 1e-4;
      Vec grad(3), expected(3);
      Point y = psi(x);
      Vec dh_y = h.eval(y).grad.head(3);
      Vec dh_x = h.eval(x).grad.head(3);
      for (int j = 0; j < 3; ++j) {
        Vec e = Vec::Unit(3, j);
        Point xp = displace(tm, x, e, step), xm = displace(tm, x, e, -step);
        grad[j] = (exponent_variation(torus, psi, d, xp) - exponent_variation(torus, psi, d, xm)) / (2 * step);
        expected[j] = dh_y.dot(difference(tm, psi(xp), psi(xm)) / (2 * step)) - dh_x[j];
      }
      CHECK((grad - expected).norm() < 1e-4);
    }
  }
}

TEST_CASE("closed-form Reeb variants against the oracle") {
  auto darboux = ContactForm::darboux();
  const auto& m = darboux.manifold();
  std::vector<ScalarField> hs{ScalarField::parse("q", m), ScalarField::parse("p*z + 0.2", m)};
  std::vector<Point> pts{Point{vec({0.3, -0.2, 0.5})}, Point{vec({1.0, 0.7, -0.1})}};
  auto report = score_reeb_variants(darboux, hs, pts);
  REQUIRE(report.scores.size() == 3);
  CHECK(report.winner == ReebVariant::plus_horizontal);
  for (const auto& s : report.scores) {
    if (s.variant == ReebVariant::plus_horizontal) {
      CHECK(s.max_relative_error < 1e-6);
    } else {
      CHECK(s.max_relative_error > 0.1);
    }
  }
  CHECK(to_string(ReebVariant::plus_horizontal) == "X_h^pi - h R");
}
