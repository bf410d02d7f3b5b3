#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reeb/conformal.hpp"

namespace reeb {

enum class DensityMethod { analytic, monte_carlo };

/// Weighted point set for ∫ · dμ_λ. Weights are the Liouville density times
/// the base-measure weight. Samples are grouped into independent blocks; the
/// standard error comes from the spread of block sums.
struct QuadratureScheme {
  std::vector<Point> points;
  std::vector<double> weights;
  std::vector<std::size_t> group_start;  ///< block i covers [group_start[i], group_start[i+1])
  double mass = 0.0;
  double mass_sigma = 0.0;
  DensityMethod method = DensityMethod::monte_carlo;
  std::string rule;

  std::size_t size() const { return points.size(); }
  std::size_t group_count() const { return group_start.empty() ? 0 : group_start.size() - 1; }
};

/// Monte Carlo against the Liouville measure. Torus and box: uniform
/// samples. Sphere: round samples, each replicated along `orbit_copies`
/// equispaced circles of the diagonal circle action.
QuadratureScheme liouville_quadrature(const ContactForm& form, std::size_t n, std::uint64_t seed,
                                      int orbit_copies = 8);
/// Product trapezoid rule with `per_axis` nodes on the torus.
QuadratureScheme trapezoid_quadrature(const ContactForm& form, int per_axis);

/// Closed-form volume of the base measure: (period)^3, box volume, or the
/// round sphere volume.
double base_volume(const ManifoldModel& m);

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
  double scale = 0.0;  ///< Σ w|f|, for round-off floors
};

Estimate integrate(const QuadratureScheme& scheme, const std::vector<double>& values);
Estimate integrate(const QuadratureScheme& scheme, const std::function<double(const Point&)>& f,
                   Execution mode = Execution::parallel);

enum class IdentityKind { compatibility, skew, volume };
std::string to_string(IdentityKind k);

struct IdentityArgs {
  ScalarField f;  ///< compatibility: f; skew: H; volume: H
  ScalarField l;  ///< skew: ℓ
  double duration = 1.0;
  IntegratorConfig integrator = volume_integrator();

  static IntegratorConfig volume_integrator() {
    IntegratorConfig c;
    c.step = 0.05;
    c.tolerance = 1e-9;
    c.record_path = false;
    return c;
  }
};

/// Round-off allowance added to the 3σ test: 1e-10 Σ w|integrand|.
inline constexpr double kQuadratureFloor = 1e-10;

struct IdentityResidual {
  IdentityKind kind;
  double residual = 0.0;  ///< |estimate|
  double sigma = 0.0;
  double tolerance = 0.0;  ///< 3σ + floor
  bool pass = false;
};

/// compatibility: ∫R[f]dμ; skew: ∫R[H]ℓ dμ + ∫H R[ℓ]dμ; volume:
/// ∫(e^{(n+1)g} - 1)dμ with g = g_{(ψ_H^T;λ)} by the payoff integral.
IdentityResidual integral_identity_residual(const ContactForm& form, IdentityKind kind, const IdentityArgs& args,
                                            const QuadratureScheme& scheme, Execution mode = Execution::parallel);

/// Trial functions with exact gradients.
class FunctionBasis {
 public:
  /// Ambient monomials of degree ≤ d restricted to the sphere.
  static FunctionBasis sphere_monomials(const ManifoldModel& m, int degree);
  /// Products of 1, cos(k·), sin(k·) per axis with k ≤ K: (2K+1)^3 functions.
  static FunctionBasis torus_modes(const ManifoldModel& m, int max_mode);

  std::size_t size() const { return size_; }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  /// values (size) and gradients (size × coord_count) at x.
  void evaluate(const Vec& x, VecX& values, MatX& gradients) const;

 private:
  enum class Family { monomial, trig };
  Family family_ = Family::monomial;
  int coords_ = 0;
  int max_mode_ = 0;
  double frequency_ = 1.0;
  std::size_t size_ = 0;
  std::vector<std::vector<int>> exponents_;  ///< monomial powers or signed modes per axis
  std::vector<std::string> labels_;
};

inline constexpr double kGramCut = 1e-10;

struct OperatorMatrix {
  MatX gram;         ///< ⟨b_i, b_j⟩
  MatX raw;          ///< ⟨b_i, R[b_j]⟩
  MatX residual;     ///< ⟨R[b_i], R[b_j]⟩
  MatX transform;    ///< basis → orthonormal functions, columns
  MatX matrix;       ///< A on the orthonormal functions
  VecX singular_values;  ///< descending
  VecX residual_singular_values;  ///< of f ↦ R[f] into L², descending
  std::size_t rank = 0;
  VecX reeb_integrals;   ///< ∫R[b_j]dμ per raw basis function
  VecX reeb_integral_sigma;
};

/// Chunked accumulation over the scheme; chunk partial sums are reduced in
/// chunk order.
OperatorMatrix assemble_operator(const ContactForm& form, const FunctionBasis& basis,
                                 const QuadratureScheme& scheme, Execution mode = Execution::parallel);

struct KernelEstimate {
  std::size_t h0 = 0;
  std::size_t h1 = 0;
  double threshold = 0.0;
  double gap = 0.0;  ///< smallest kept / largest cut singular value
  bool ambiguous = false;
  MatX kernel;  ///< raw-basis coefficients of kernel functions, columns
};

inline constexpr double kKernelRelTol = 1e-6;
inline constexpr double kMinimumGap = 10.0;

KernelEstimate kernel_dimensions(const OperatorMatrix& op, double rel_tol = kKernelRelTol);

/// Kernel of f ↦ R[f] without projecting back onto the basis: counts
/// residual singular values below rel_tol times the largest.
KernelEstimate residual_kernel_dimension(const OperatorMatrix& op, double rel_tol = kKernelRelTol);

/// ‖A + Aᵀ‖ / ‖A‖ (Frobenius).
double skew_defect(const OperatorMatrix& op);

struct CharacteristicGrid {
  int nodes = 64;          ///< per axis
  bool periodic = false;   ///< z ∈ [0, 2π) with wrap-around
};

struct CharacteristicSolution {
  std::vector<Point> points;  ///< z fastest
  std::vector<double> values;
  std::vector<double> fiber_means;  ///< per (q,p) fiber, periodic grids only
  bool solvable = true;
  double check_residual = 0.0;  ///< max |∂z f - u| at interior nodes, fourth-order differences
};

/// R_λ[f] = u for the unperturbed Darboux form (R = ∂z). Open fibers:
/// f = f₀ + ∫₀ᶻ u dζ by composite Simpson. Periodic fibers: solvable iff the
/// fiber mean of u vanishes within 1e-8‖u‖∞; the mean-zero antiderivative
/// plus f₀ is returned.
CharacteristicSolution solve_characteristic(const ContactForm& form, const ScalarField& u, const ScalarField& f0,
                                            const CharacteristicGrid& grid);

}  // namespace reeb
