#pragma once

#include <functional>
#include <vector>

#include "reeb/flows.hpp"
#include "reeb/parallel.hpp"

namespace reeb {

using PointMap = std::function<Point(const Point&)>;

/// x ↦ ψ_H^T(x) and x ↦ φ_R^t(x) as callable maps.
PointMap hamiltonian_map(const ContactForm& form, const ScalarField& h, double duration = 1.0,
                         const IntegratorConfig& cfg = {});
PointMap reeb_map(const ContactForm& form, double duration, const IntegratorConfig& cfg = {});
PointMap compose(PointMap outer, PointMap inner);

enum class ExponentMethod { integral, pullback };

struct ExponentRecord {
  Point x;
  double duration = 1.0;
  double g = 0.0;
  ExponentMethod method = ExponentMethod::integral;
  Point image;  ///< ψ(x)
  long steps = 0;
};

/// g_{(ψ_H^T;λ)}(x) = ∫₀ᵀ -R_λ[H](ψ_H^u x) du, accumulated with the flow.
ExponentRecord conformal_exponent(const ContactForm& form, const ScalarField& h, const Point& x,
                                  double duration = 1.0, const IntegratorConfig& cfg = {});

struct PullbackOptions {
  double fd_step = 1e-4;
  double gate = 1e-5;
};

/// (ψ*λ)_x in frame components, dψ by central differences along the frame.
Vec pullback_covector(const ContactForm& form, const PointMap& psi, const Point& x, double fd_step = 1e-4);

struct DirectExponent {
  double g = 0.0;
  double residual = 0.0;  ///< |ψ*λ - e^g λ| on the frame, relative
};

/// g from ψ*λ = e^g λ at x, measured along v = λ♯/|λ|. Throws
/// NotContactError when the ratio is not positive or the remaining frame
/// fails the consistency gate.
DirectExponent conformal_exponent_direct(const ContactForm& form, const PointMap& psi, const Point& x,
                                         const PullbackOptions& opts = {});

/// max |g_{φ∘ψ}(x) - g_φ(ψ(x)) - g_ψ(x)| by the direct method.
double cocycle_residual(const ContactForm& form, const PointMap& phi, const PointMap& psi,
                        const std::vector<Point>& points, const PullbackOptions& opts = {});
/// max |g_{ψ⁻¹}(x) + g_ψ(ψ⁻¹(x))| by the direct method.
double inverse_residual(const ContactForm& form, const PointMap& psi, const PointMap& psi_inverse,
                        const std::vector<Point>& points, const PullbackOptions& opts = {});

/// |ℒ_{X_H}λ + R_λ[H]λ| at x, ℒ by central differences in t of ψ_t*λ with
/// one Richardson level.
double lie_derivative_residual(const ContactForm& form, const ScalarField& h, const Point& x, double dt = 1e-3,
                               const IntegratorConfig& cfg = {});

struct DiscriminantConfig {
  double duration = 1.0;
  double tol_zero = 1e-8;
  double tol_reg = 1e-4;
  double fixed_threshold = 1e-6;
  double nondegeneracy_threshold = 1e-6;
  double dg_step = 1e-3;
  int max_bisections = 80;
  IntegratorConfig integrator = scan_integrator();
  Execution execution = Execution::parallel;

  static IntegratorConfig scan_integrator() {
    IntegratorConfig c;
    c.step = 1e-2;
    c.record_path = false;
    return c;
  }
};

struct DiscriminantSample {
  Point x;
  double g = 0.0;
  CovectorValue dg;
  double dg_norm = 0.0;
  double displacement = 0.0;  ///< dist(ψ(x), x)
  bool zero = false;
  bool fixed = false;
  bool regular = false;
  bool critical = false;
  bool nondegenerate_fixed = false;
  double fixed_sigma_min = 0.0;  ///< σ_min(dψ - I), fixed points only

  const char* label() const;
};

/// A grid edge with a sign change of g and the zero located on it.
struct CrossingSegment {
  std::size_t from = 0;  ///< grid node indices
  std::size_t to = 0;
  std::size_t zero = 0;  ///< index into DiscriminantScan::classified
};

struct DiscriminantScan {
  std::vector<Point> nodes;
  std::vector<double> values;  ///< g at nodes
  /// grid mode: located zeros; sample mode: every sample
  std::vector<DiscriminantSample> classified;
  std::vector<CrossingSegment> segments;
  std::size_t positive = 0;
  std::size_t negative = 0;

  std::size_t regular_count() const;
};

/// Fills g, dg, fixed and the derived flags at one point.
DiscriminantSample classify_point(const ContactForm& form, const ScalarField& h, const Point& x,
                                  const DiscriminantConfig& cfg = {});

/// Uniform grid with `resolution` nodes per parameter: periodic on the
/// torus, the closed box for bounded Darboux, Hopf coordinates
/// (η, ξ₁, ξ₂) on S³. Sign changes along edges are bisected to
/// |g| < tol_zero; nodes with |g| < tol_zero count as zeros too.
DiscriminantScan discriminant_scan(const ContactForm& form, const ScalarField& h, int resolution,
                                   const DiscriminantConfig& cfg = {});
/// Classification of every sample; no edges, no bisection.
DiscriminantScan discriminant_scan(const ContactForm& form, const ScalarField& h, const std::vector<Point>& samples,
                                   const DiscriminantConfig& cfg = {});

}  // namespace reeb
