#include <cmath>
#include <random>

#include "doctest.h"
#include "reeb/errors.hpp"
#include "reeb/fields.hpp"

using namespace reeb;

namespace {
const std::vector<std::string> kVars{"x", "y", "z"};

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}
}  // namespace

TEST_CASE("expression values") {
  CHECK(ScalarField::parse("1 + 2*3", kVars).value(vec3(0, 0, 0)) == 7.0);
  CHECK(ScalarField::parse("2^3^2", kVars).value(vec3(0, 0, 0)) == 512.0);
  CHECK(ScalarField::parse("-x^2", kVars).value(vec3(3, 0, 0)) == -9.0);
  CHECK(ScalarField::parse("x - y - z", kVars).value(vec3(1, 2, 3)) == -4.0);
  CHECK(ScalarField::parse("x / y / z", kVars).value(vec3(8, 2, 2)) == 2.0);
  CHECK(ScalarField::parse("sin(pi/2) + cos(0) + exp(0)", kVars).value(vec3(0, 0, 0)) == doctest::Approx(3.0));
  CHECK(ScalarField::parse("1e-1*x", kVars).value(vec3(2, 0, 0)) == doctest::Approx(0.2));
  CHECK(ScalarField::parse("3", kVars).is_constant());
  CHECK_FALSE(ScalarField::parse("3*y", kVars).is_constant());
}

TEST_CASE("expression errors") {
  CHECK_THROWS_AS(ScalarField::parse("w + 1", kVars), ParseError);
  CHECK_THROWS_AS(ScalarField::parse("sin x", kVars), ParseError);
  CHECK_THROWS_AS(ScalarField::parse("(x", kVars), ParseError);
  CHECK_THROWS_AS(ScalarField::parse("x +", kVars), ParseError);
  CHECK_THROWS_AS(ScalarField::parse("x y", kVars), ParseError);
}

TEST_CASE("exact gradients") {
  auto f = ScalarField::parse("x*y + z^2", kVars);
  Jet j = f.eval(vec3(1, 2, 3));
  CHECK(j.value == 11.0);
  CHECK(j.grad[0] == 2.0);
  CHECK(j.grad[1] == 1.0);
  CHECK(j.grad[2] == 6.0);

  auto g = ScalarField::parse("z^2", kVars);
  CHECK(g.eval(vec3(0, 0, 3)).grad[2] == 6.0);
}

TEST_CASE("gradient self-test against central differences") {
  const char* exprs[] = {"sin(x)*cos(y) + exp(0.3*z)", "x^3 - 2*y/(1+z^2)", "sqrt(2 + x*x) * log(3 + y^2)",
                         "exp(sin(x*y)) - cos(z)^2", "x^y + 1"};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.2, 1.5);
  for (const char* text : exprs) {
    auto f = ScalarField::parse(text, kVars);
    for (int k = 0; k < 20; ++k) {
      CHECK_MESSAGE(gradient_self_test(f, vec3(u(rng), u(rng), u(rng))) < 1e-7, text);
    }
  }
}

TEST_CASE("field arithmetic") {
  auto a = ScalarField::parse("x", kVars);
  auto b = ScalarField::parse("y", kVars);
  auto c = 2.0 * (a * b) - (-a) + b;
  Jet j = c.eval(vec3(3, 5, 0));
  CHECK(j.value == 2 * 15 + 3 + 5);
  CHECK(j.grad[0] == 11.0);
  CHECK(j.grad[1] == 7.0);
}

TEST_CASE("one-form exterior derivative") {
  auto model = ManifoldModel::torus(1, 6.283185307179586);
  auto alpha = OneFormField::parse("[cos(z), sin(z), 0]", model);
  Mat d = alpha.exterior_derivative(vec3(0.2, 0.4, M_PI / 2));
  // d(cos z dx + sin z dy) = -sin z dz∧dx + cos z dz∧dy
  CHECK(d(2, 0) == doctest::Approx(-1.0));
  CHECK(d(0, 2) == doctest::Approx(1.0));
  CHECK(std::abs(d(2, 1)) < 1e-15);
  CHECK((d + d.transpose()).norm() == 0.0);

  SUBCASE("numeric coefficients agree with the closed form") {
    OneFormField numeric([&](const Vec& x) { return alpha.value(x); }, 3);
    for (double z : {0.0, 0.7, 2.5}) {
      Vec x = vec3(0.1, 0.3, z);
      CHECK((numeric.exterior_derivative(x) - alpha.exterior_derivative(x)).norm() < 1e-10);
    }
  }
  CHECK_THROWS_AS(OneFormField::parse("[1, 2]", model), ParseError);
}
