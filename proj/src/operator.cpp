#include "reeb/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "reeb/errors.hpp"

namespace reeb {

double base_volume(const ManifoldModel& m) {
  switch (m.kind()) {
    case ModelKind::torus:
      return std::pow(m.period(), m.dim());
    case ModelKind::darboux: {
      if (!m.bounded()) throw DomainError("an unbounded Darboux chart has infinite volume");
      double v = 1.0;
      for (int i = 0; i < m.dim(); ++i) v *= m.upper(i) - m.lower(i);
      return v;
    }
    case ModelKind::sphere: {
      // |S^{2n+1}| = 2π^{n+1}/n!
      const int n = m.half_dim();
      return 2.0 * std::pow(std::numbers::pi, n + 1) / std::tgamma(n + 1.0);
    }
  }
  return 0.0;
}

namespace {

void finish_scheme(const ContactForm& form, QuadratureScheme& s, const std::vector<double>& base_weights) {
  s.weights.resize(s.points.size());
  auto densities = map_indices(s.points.size(), [&](std::size_t i) {
    return liouville_density(eval_form(form, s.points[i]));
  });
  for (std::size_t i = 0; i < s.points.size(); ++i) s.weights[i] = densities[i] * base_weights[i];
  std::vector<double> ones(s.points.size(), 1.0);
  Estimate e = integrate(s, ones);
  s.mass = e.value;
  s.mass_sigma = e.sigma;
}

}  // namespace

QuadratureScheme liouville_quadrature(const ContactForm& form, std::size_t n, std::uint64_t seed, int orbit_copies) {
  const ManifoldModel& m = form.manifold();
  if (n == 0) throw DomainError("quadrature needs at least one point");
  QuadratureScheme s;
  s.method = DensityMethod::monte_carlo;
  const double volume = base_volume(m);
  if (m.kind() == ModelKind::sphere) {
    if (orbit_copies < 1) throw DomainError("orbit_copies must be positive");
    const std::size_t base_count = (n + static_cast<std::size_t>(orbit_copies) - 1) / orbit_copies;
    auto base = sample_points(m, base_count, seed);
    for (std::size_t b = 0; b < base_count; ++b) {
      s.group_start.push_back(s.points.size());
      for (int k = 0; k < orbit_copies; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / orbit_copies;
        const double c = std::cos(theta), sn = std::sin(theta);
        Vec x = base[b].coords;
        for (int j = 0; j + 1 < x.size(); j += 2) {
          const double a = x[j], bb = x[j + 1];
          x[j] = c * a - sn * bb;
          x[j + 1] = sn * a + c * bb;
        }
        s.points.push_back(make_point(m, x));
      }
    }
    s.rule = "monte_carlo_orbits";
  } else {
    s.points = sample_points(m, n, seed);
    for (std::size_t i = 0; i < n; ++i) s.group_start.push_back(i);
    s.rule = "monte_carlo";
  }
  s.group_start.push_back(s.points.size());
  std::vector<double> base_w(s.points.size(), volume / static_cast<double>(s.points.size()));
  finish_scheme(form, s, base_w);
  return s;
}

QuadratureScheme trapezoid_quadrature(const ContactForm& form, int per_axis) {
  const ManifoldModel& m = form.manifold();
  if (m.kind() != ModelKind::torus) throw DomainError("trapezoid quadrature is defined on the torus");
  if (per_axis < 1) throw DomainError("trapezoid quadrature needs nodes");
  QuadratureScheme s;
  s.method = DensityMethod::analytic;
  s.rule = "trapezoid";
  const double h = m.period() / per_axis;
  for (int i = 0; i < per_axis; ++i) {
    for (int j = 0; j < per_axis; ++j) {
      for (int k = 0; k < per_axis; ++k) {
        s.points.push_back(make_point(m, std::vector<double>{i * h, j * h, k * h}));
      }
    }
  }
  s.group_start = {0, s.points.size()};
  std::vector<double> base_w(s.points.size(), h * h * h);
  finish_scheme(form, s, base_w);
  s.mass_sigma = 0.0;
  return s;
}

Estimate integrate(const QuadratureScheme& scheme, const std::vector<double>& values) {
  if (values.size() != scheme.size()) throw DomainError("integrand size does not match the scheme");
  Estimate e;
  const std::size_t groups = scheme.group_count();
  std::vector<double> sums(groups, 0.0);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = scheme.group_start[g]; i < scheme.group_start[g + 1]; ++i) {
      sums[g] += scheme.weights[i] * values[i];
      e.scale += scheme.weights[i] * std::abs(values[i]);
    }
    e.value += sums[g];
  }
  if (scheme.method == DensityMethod::monte_carlo && groups > 1) {
    const double mean = e.value / static_cast<double>(groups);
    double ss = 0.0;
    for (double v : sums) ss += (v - mean) * (v - mean);
    // variance of a sum of G iid block sums
    e.sigma = std::sqrt(ss * static_cast<double>(groups) / static_cast<double>(groups - 1));
  }
  return e;
}

Estimate integrate(const QuadratureScheme& scheme, const std::function<double(const Point&)>& f, Execution mode) {
  auto values = map_indices(scheme.size(), [&](std::size_t i) { return f(scheme.points[i]); }, mode);
  return integrate(scheme, values);
}

std::string to_string(IdentityKind k) {
  switch (k) {
    case IdentityKind::compatibility:
      return "compatibility";
    case IdentityKind::skew:
      return "skew";
    case IdentityKind::volume:
      return "volume";
  }
  return "?";
}

IdentityResidual integral_identity_residual(const ContactForm& form, IdentityKind kind, const IdentityArgs& args,
                                            const QuadratureScheme& scheme, Execution mode) {
  const ManifoldModel& m = form.manifold();
  std::function<double(const Point&)> integrand;
  switch (kind) {
    case IdentityKind::compatibility:
      integrand = [&](const Point& x) { return reeb_derivative(form, args.f, x); };
      break;
    case IdentityKind::skew:
      integrand = [&](const Point& x) {
        return reeb_derivative(form, args.f, x) * args.l.value(x) + args.f.value(x) * reeb_derivative(form, args.l, x);
      };
      break;
    case IdentityKind::volume: {
      const double power = m.half_dim() + 1.0;
      integrand = [&, power](const Point& x) {
        return std::expm1(power * conformal_exponent(form, args.f, x, args.duration, args.integrator).g);
      };
      break;
    }
  }
  Estimate e = integrate(scheme, integrand, mode);
  IdentityResidual r;
  r.kind = kind;
  r.residual = std::abs(e.value);
  r.sigma = e.sigma;
  r.tolerance = 3.0 * e.sigma + kQuadratureFloor * e.scale;
  r.pass = r.residual <= r.tolerance;
  return r;
}

FunctionBasis FunctionBasis::sphere_monomials(const ManifoldModel& m, int degree) {
  if (m.kind() != ModelKind::sphere) throw DomainError("monomial basis lives on the sphere");
  if (degree < 0) throw DomainError("degree must be nonnegative");
  FunctionBasis b;
  b.family_ = Family::monomial;
  b.coords_ = m.coord_count();
  const auto names = m.coordinate_names();
  for (int d = 0; d <= degree; ++d) {
    // all exponent vectors of total degree d, lexicographically descending
    std::vector<int> e(b.coords_, 0);
    std::function<void(int, int)> fill = [&](int pos, int left) {
      if (pos == b.coords_ - 1) {
        e[pos] = left;
        b.exponents_.push_back(e);
        return;
      }
      for (int k = left; k >= 0; --k) {
        e[pos] = k;
        fill(pos + 1, left - k);
      }
    };
    fill(0, d);
  }
  for (const auto& e : b.exponents_) {
    std::string label;
    for (int i = 0; i < b.coords_; ++i) {
      if (e[i] == 0) continue;
      if (!label.empty()) label += "*";
      label += names[i] + (e[i] > 1 ? "^" + std::to_string(e[i]) : "");
    }
    b.labels_.push_back(label.empty() ? "1" : label);
  }
  b.size_ = b.exponents_.size();
  return b;
}

FunctionBasis FunctionBasis::torus_modes(const ManifoldModel& m, int max_mode) {
  if (m.kind() != ModelKind::torus) throw DomainError("trigonometric basis lives on the torus");
  if (max_mode < 0) throw DomainError("mode bound must be nonnegative");
  FunctionBasis b;
  b.family_ = Family::trig;
  b.coords_ = m.coord_count();
  b.max_mode_ = max_mode;
  b.frequency_ = 2.0 * std::numbers::pi / m.period();
  const auto names = m.coordinate_names();
  // signed mode k per axis: 0 → 1, k > 0 → cos(k·), k < 0 → sin(|k|·)
  const int width = 2 * max_mode + 1;
  const int total = width * width * width;
  for (int idx = 0; idx < total; ++idx) {
    std::vector<int> e(3);
    int rest = idx;
    for (int a = 2; a >= 0; --a) {
      const int slot = rest % width;
      rest /= width;
      e[a] = slot <= max_mode ? slot : -(slot - max_mode);
    }
    std::string label;
    for (int a = 0; a < 3; ++a) {
      if (e[a] == 0) continue;
      if (!label.empty()) label += "*";
      label += std::string(e[a] > 0 ? "cos(" : "sin(") + std::to_string(std::abs(e[a])) + names[a] + ")";
    }
    b.exponents_.push_back(e);
    b.labels_.push_back(label.empty() ? "1" : label);
  }
  b.size_ = b.exponents_.size();
  return b;
}

void FunctionBasis::evaluate(const Vec& x, VecX& values, MatX& gradients) const {
  values.resize(static_cast<Eigen::Index>(size_));
  gradients.resize(static_cast<Eigen::Index>(size_), coords_);
  if (family_ == Family::monomial) {
    for (std::size_t j = 0; j < size_; ++j) {
      const auto& e = exponents_[j];
      const auto row = static_cast<Eigen::Index>(j);
      double v = 1.0;
      for (int i = 0; i < coords_; ++i) v *= std::pow(x[i], e[i]);
      values[row] = v;
      for (int i = 0; i < coords_; ++i) {
        if (e[i] == 0) {
          gradients(row, i) = 0.0;
          continue;
        }
        double g = e[i] * std::pow(x[i], e[i] - 1);
        for (int k = 0; k < coords_; ++k) {
          if (k != i) g *= std::pow(x[k], e[k]);
        }
        gradients(row, i) = g;
      }
    }
    return;
  }
  // per-axis factor tables: value and derivative of each signed mode
  const int width = 2 * max_mode_ + 1;
  std::vector<double> val(3 * width), der(3 * width);
  auto slot = [&](int k) { return k >= 0 ? k : max_mode_ - k; };
  for (int a = 0; a < 3; ++a) {
    for (int k = -max_mode_; k <= max_mode_; ++k) {
      const double w = std::abs(k) * frequency_;
      const double c = std::cos(w * x[a]), s = std::sin(w * x[a]);
      const int i = a * width + slot(k);
      if (k == 0) {
        val[i] = 1.0;
        der[i] = 0.0;
      } else if (k > 0) {
        val[i] = c;
        der[i] = -w * s;
      } else {
        val[i] = s;
        der[i] = w * c;
      }
    }
  }
  for (std::size_t j = 0; j < size_; ++j) {
    const auto& e = exponents_[j];
    const auto row = static_cast<Eigen::Index>(j);
    const double f0 = val[slot(e[0])], f1 = val[width + slot(e[1])], f2 = val[2 * width + slot(e[2])];
    values[row] = f0 * f1 * f2;
    gradients(row, 0) = der[slot(e[0])] * f1 * f2;
    gradients(row, 1) = f0 * der[width + slot(e[1])] * f2;
    gradients(row, 2) = f0 * f1 * der[2 * width + slot(e[2])];
  }
}

namespace {

struct ChunkSums {
  MatX gram;
  MatX raw;
  MatX residual;
  VecX reeb;
  VecX reeb_abs;
  std::vector<VecX> group_reeb;  ///< per-group ∫R[b_j] contributions
};

constexpr std::size_t kChunkGroups = 256;

}  // namespace

OperatorMatrix assemble_operator(const ContactForm& form, const FunctionBasis& basis,
                                 const QuadratureScheme& scheme, Execution mode) {
  const ManifoldModel& m = form.manifold();
  if (!m.compact()) throw DomainError("operator assembly needs a compact model");
  const auto nb = static_cast<Eigen::Index>(basis.size());
  const std::size_t groups = scheme.group_count();
  const std::size_t chunks = (groups + kChunkGroups - 1) / kChunkGroups;

  auto chunk_sums = map_indices(
      chunks,
      [&](std::size_t c) {
        ChunkSums out;
        out.gram = MatX::Zero(nb, nb);
        out.raw = MatX::Zero(nb, nb);
        out.residual = MatX::Zero(nb, nb);
        out.reeb = VecX::Zero(nb);
        VecX values, reeb_values;
        MatX grads;
        const std::size_t g_end = std::min(groups, (c + 1) * kChunkGroups);
        for (std::size_t g = c * kChunkGroups; g < g_end; ++g) {
          VecX group_sum = VecX::Zero(nb);
          for (std::size_t i = scheme.group_start[g]; i < scheme.group_start[g + 1]; ++i) {
            const Point& x = scheme.points[i];
            basis.evaluate(x.coords, values, grads);
            VecX r = LocalCalculus(form, x).reeb();
            reeb_values = grads * r;
            const double w = scheme.weights[i];
            out.gram.selfadjointView<Eigen::Lower>().rankUpdate(values, w);
            out.raw.noalias() += w * values * reeb_values.transpose();
            out.residual.selfadjointView<Eigen::Lower>().rankUpdate(reeb_values, w);
            group_sum += w * reeb_values;
          }
          out.reeb += group_sum;
          out.group_reeb.push_back(std::move(group_sum));
        }
        return out;
      },
      mode);

  OperatorMatrix op;
  op.gram = MatX::Zero(nb, nb);
  op.raw = MatX::Zero(nb, nb);
  op.residual = MatX::Zero(nb, nb);
  op.reeb_integrals = VecX::Zero(nb);
  std::vector<VecX> group_reeb;
  for (auto& c : chunk_sums) {
    op.gram += c.gram;
    op.raw += c.raw;
    op.residual += c.residual;
    op.reeb_integrals += c.reeb;
    for (auto& g : c.group_reeb) group_reeb.push_back(std::move(g));
  }
  MatX full = op.gram.selfadjointView<Eigen::Lower>();
  op.gram = std::move(full);
  full = op.residual.selfadjointView<Eigen::Lower>();
  op.residual = std::move(full);

  op.reeb_integral_sigma = VecX::Zero(nb);
  if (scheme.method == DensityMethod::monte_carlo && groups > 1) {
    const VecX mean = op.reeb_integrals / static_cast<double>(groups);
    for (const auto& g : group_reeb) op.reeb_integral_sigma += (g - mean).cwiseAbs2();
    op.reeb_integral_sigma =
        (op.reeb_integral_sigma * static_cast<double>(groups) / static_cast<double>(groups - 1)).cwiseSqrt();
  }

  Eigen::SelfAdjointEigenSolver<MatX> eig(op.gram);
  const VecX& lam = eig.eigenvalues();
  const double top = lam.maxCoeff();
  if (!(top > 0.0)) throw BasisError("Gram matrix vanishes");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = nb - 1; i >= 0; --i) {
    if (lam[i] > kGramCut * top) keep.push_back(i);
  }
  op.rank = keep.size();
  op.transform.resize(nb, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    op.transform.col(static_cast<Eigen::Index>(k)) = eig.eigenvectors().col(keep[k]) / std::sqrt(lam[keep[k]]);
  }
  op.matrix = op.transform.transpose() * op.raw * op.transform;
  Eigen::BDCSVD<MatX> svd(op.matrix);
  op.singular_values = svd.singularValues();
  Eigen::SelfAdjointEigenSolver<MatX> res(op.transform.transpose() * op.residual * op.transform);
  op.residual_singular_values = res.eigenvalues().cwiseMax(0.0).cwiseSqrt().reverse();
  return op;
}

KernelEstimate kernel_dimensions(const OperatorMatrix& op, double rel_tol) {
  KernelEstimate k;
  const VecX& s = op.singular_values;
  const Eigen::Index r = s.size();
  if (r == 0) return k;
  k.threshold = rel_tol * s[0];
  std::size_t cut = 0;
  for (Eigen::Index i = 0; i < r; ++i) {
    if (s[i] < k.threshold) ++cut;
  }
  k.h0 = cut;

  Eigen::BDCSVD<MatX> adjoint(op.matrix.transpose());
  const VecX& sa = adjoint.singularValues();
  k.h1 = static_cast<std::size_t>((sa.array() < rel_tol * sa[0]).count());

  const Eigen::Index kept = r - static_cast<Eigen::Index>(cut);
  if (cut == 0) {
    k.gap = s[r - 1] > 0.0 ? s[r - 1] / k.threshold : 0.0;
  } else if (kept == 0) {
    k.gap = 0.0;
  } else {
    const double largest_cut = s[kept];
    k.gap = largest_cut > 0.0 ? s[kept - 1] / largest_cut : std::numeric_limits<double>::infinity();
  }
  k.ambiguous = k.gap < kMinimumGap;

  // right singular vectors of A for the cut values, mapped to the raw basis
  Eigen::BDCSVD<MatX> forward(op.matrix, Eigen::ComputeFullV);
  k.kernel = op.transform * forward.matrixV().rightCols(static_cast<Eigen::Index>(cut));
  return k;
}

KernelEstimate residual_kernel_dimension(const OperatorMatrix& op, double rel_tol) {
  KernelEstimate k;
  const VecX& s = op.residual_singular_values;
  const Eigen::Index r = s.size();
  if (r == 0) return k;
  k.threshold = rel_tol * s[0];
  const auto cut = static_cast<std::size_t>((s.array() < k.threshold).count());
  k.h0 = k.h1 = cut;
  const Eigen::Index kept = r - static_cast<Eigen::Index>(cut);
  if (cut == 0) {
    k.gap = s[r - 1] / k.threshold;
  } else if (kept == 0) {
    k.gap = 0.0;
  } else {
    k.gap = s[kept] > 0.0 ? s[kept - 1] / s[kept] : std::numeric_limits<double>::infinity();
  }
  k.ambiguous = k.gap < kMinimumGap;
  Eigen::SelfAdjointEigenSolver<MatX> res(op.transform.transpose() * op.residual * op.transform);
  k.kernel = op.transform * res.eigenvectors().leftCols(static_cast<Eigen::Index>(cut));
  return k;
}

double skew_defect(const OperatorMatrix& op) {
  const double norm = op.matrix.norm();
  return norm > 0.0 ? (op.matrix + op.matrix.transpose()).norm() / norm : 0.0;
}

namespace {

double node_coord(double lo, double hi, int nodes, int k) { return lo + (hi - lo) * k / (nodes - 1); }

}  // namespace

CharacteristicSolution solve_characteristic(const ContactForm& form, const ScalarField& u, const ScalarField& f0,
                                            const CharacteristicGrid& grid) {
  const ManifoldModel& m = form.manifold();
  if (form.base() != BaseForm::darboux || form.is_perturbed()) {
    throw DomainError("characteristic solver needs the unperturbed Darboux form, where R = ∂z");
  }
  if (grid.nodes < 5) throw DomainError("characteristic grid needs at least 5 nodes per axis");
  const int dim = m.dim();
  const int zi = dim - 1;
  auto lower = [&](int i) { return std::isfinite(m.lower(i)) ? m.lower(i) : 0.0; };
  auto upper = [&](int i) { return std::isfinite(m.upper(i)) ? m.upper(i) : 1.0; };

  const int nz = grid.nodes;
  const double z0 = grid.periodic ? 0.0 : lower(zi);
  const double dz = grid.periodic ? 2.0 * std::numbers::pi / nz : (upper(zi) - lower(zi)) / (nz - 1);

  std::size_t fibers = 1;
  for (int i = 0; i < zi; ++i) fibers *= static_cast<std::size_t>(grid.nodes);

  CharacteristicSolution sol;
  sol.points.resize(fibers * static_cast<std::size_t>(nz));
  sol.values.resize(sol.points.size());
  if (grid.periodic) sol.fiber_means.resize(fibers);

  struct FiberResult {
    bool solvable = true;
    double mean = 0.0;
    double residual = 0.0;
  };

  auto fiber_results = map_indices(fibers, [&](std::size_t fiber) {
    Vec x(dim);
    std::size_t rest = fiber;
    for (int i = 0; i < zi; ++i) {
      x[i] = node_coord(lower(i), upper(i), grid.nodes, static_cast<int>(rest % grid.nodes));
      rest /= static_cast<std::size_t>(grid.nodes);
    }
    auto u_at = [&](double z) {
      x[zi] = z;
      return u.value(x);
    };
    auto simpson = [&](double a, double b) { return (b - a) / 6.0 * (u_at(a) + 4.0 * u_at(0.5 * (a + b)) + u_at(b)); };

    // F(z_0) = ∫₀^{z_0} u, cells no wider than dz
    double start = 0.0;
    if (z0 != 0.0) {
      const int cells = std::max(1, static_cast<int>(std::ceil(std::abs(z0) / dz)));
      for (int c = 0; c < cells; ++c) start += simpson(z0 * c / cells, z0 * (c + 1) / cells);
    }
    std::vector<double> F(nz), uz(nz);
    F[0] = start;
    for (int k = 0; k < nz; ++k) uz[k] = u_at(z0 + k * dz);
    for (int k = 1; k < nz; ++k) F[k] = F[k - 1] + simpson(z0 + (k - 1) * dz, z0 + k * dz);

    FiberResult res;
    double shift = 0.0;
    if (grid.periodic) {
      const double total = F[nz - 1] + simpson(z0 + (nz - 1) * dz, z0 + nz * dz) - F[0];
      res.mean = total / (2.0 * std::numbers::pi);
      double sup = 0.0;
      for (double v : uz) sup = std::max(sup, std::abs(v));
      res.solvable = std::abs(res.mean) <= 1e-8 * sup || (sup == 0.0 && res.mean == 0.0);
      double avg = 0.0;
      for (double v : F) avg += v;
      shift = -avg / nz;
    }

    const std::size_t base = fiber * static_cast<std::size_t>(nz);
    std::vector<double> f(nz);
    for (int k = 0; k < nz; ++k) {
      x[zi] = z0 + k * dz;
      Vec base_point = x;
      base_point[zi] = 0.0;
      f[k] = f0.value(base_point) + F[k] + shift;
      sol.points[base + static_cast<std::size_t>(k)] = Point{x};
      sol.values[base + static_cast<std::size_t>(k)] = f[k];
    }

    if (res.solvable) {
      auto at = [&](int k) { return grid.periodic ? f[(k % nz + nz) % nz] : f[k]; };
      const int first = grid.periodic ? 0 : 2;
      const int last = grid.periodic ? nz : nz - 2;
      for (int k = first; k < last; ++k) {
        const double d = (-at(k + 2) + 8.0 * at(k + 1) - 8.0 * at(k - 1) + at(k - 2)) / (12.0 * dz);
        res.residual = std::max(res.residual, std::abs(d - uz[k]));
      }
    }
    return res;
  });

  for (std::size_t i = 0; i < fibers; ++i) {
    sol.solvable = sol.solvable && fiber_results[i].solvable;
    sol.check_residual = std::max(sol.check_residual, fiber_results[i].residual);
    if (grid.periodic) sol.fiber_means[i] = fiber_results[i].mean;
  }
  return sol;
}

}  // namespace reeb
