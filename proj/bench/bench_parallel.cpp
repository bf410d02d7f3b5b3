// Wall time of the OpenMP kernels against their serial reference.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "reeb/operator.hpp"

using namespace reeb;

namespace {

double seconds(const std::function<void()>& body, int repeats) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    body();
    std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    best = std::min(best, dt.count());
  }
  return best;
}

void row(const char* name, const std::function<void(Execution)>& kernel, int repeats) {
  const double serial = seconds([&] { kernel(Execution::serial); }, repeats);
  const double parallel = seconds([&] { kernel(Execution::parallel); }, repeats);
  std::printf("%-28s %10.4f %10.4f %8.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 40000;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  if (argc > 3) set_thread_count(std::atoi(argv[3]));

  std::printf("threads %d, N %zu, best of %d\n", thread_count(), n, repeats);
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial[s]", "omp[s]", "speedup");

  auto sphere = ContactForm::parse("s3", "conformal:f=x,s=0.1");
  auto scheme = liouville_quadrature(sphere, n, 42);
  auto basis = FunctionBasis::sphere_monomials(sphere.manifold(), 2);
  row("assemble_operator s3 d=2", [&](Execution m) { assemble_operator(sphere, basis, scheme, m); }, repeats);

  IdentityArgs skew;
  skew.f = ScalarField::parse("x*y + u", sphere.manifold());
  skew.l = ScalarField::parse("v - x*x", sphere.manifold());
  row("skew identity s3", [&](Execution m) { integral_identity_residual(sphere, IdentityKind::skew, skew, scheme, m); },
      repeats);

  auto torus = ContactForm::torus_tight();
  auto small = liouville_quadrature(torus, n / 40, 42);
  IdentityArgs vol;
  vol.f = ScalarField::parse("0.1*sin(x)", torus.manifold());
  row("volume identity t3 (N/40)",
      [&](Execution m) { integral_identity_residual(torus, IdentityKind::volume, vol, small, m); }, repeats);

  DiscriminantConfig cfg;
  auto h = ScalarField::parse("0.3*sin(x)", torus.manifold());
  row("discriminant scan t3 6^3", [&](Execution m) {
    cfg.execution = m;
    discriminant_scan(torus, h, 6, cfg);
  }, repeats);
  return 0;
}
