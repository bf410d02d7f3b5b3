#include "reeb/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/SVD>

#include "reeb/errors.hpp"

namespace reeb {

PointMap hamiltonian_map(const ContactForm& form, const ScalarField& h, double duration, const IntegratorConfig& cfg) {
  IntegratorConfig c = cfg;
  c.record_path = false;
  return [form, field = FieldSpec::hamiltonian(h), duration, c](const Point& x) {
    return flow_map(form, field, x, duration, c);
  };
}

PointMap reeb_map(const ContactForm& form, double duration, const IntegratorConfig& cfg) {
  IntegratorConfig c = cfg;
  c.record_path = false;
  return [form, duration, c](const Point& x) { return flow_map(form, FieldSpec::reeb(), x, duration, c); };
}

PointMap compose(PointMap outer, PointMap inner) {
  return [outer = std::move(outer), inner = std::move(inner)](const Point& x) { return outer(inner(x)); };
}

ExponentRecord conformal_exponent(const ContactForm& form, const ScalarField& h, const Point& x, double duration,
                                  const IntegratorConfig& cfg) {
  IntegratorConfig c = cfg;
  c.record_path = false;
  Trajectory traj = integrate_flow(form, FieldSpec::hamiltonian(h), x, duration, c, {true, false});
  if (traj.status == FlowStatus::boundary_exit) throw FlowError("flow left the Darboux box");
  ExponentRecord rec;
  rec.x = x;
  rec.duration = duration;
  rec.g = traj.payoff.back();
  rec.method = ExponentMethod::integral;
  rec.image = traj.end();
  rec.steps = traj.accepted_steps;
  return rec;
}

Vec pullback_covector(const ContactForm& form, const PointMap& psi, const Point& x, double fd_step) {
  const ManifoldModel& m = form.manifold();
  check_point(m, x);
  Point y = psi(x);
  Vec lambda_y = form.coordinate_value(y.coords).lambda;
  Mat frame = tangent_frame(m, x);
  Vec out(m.dim());
  for (int j = 0; j < m.dim(); ++j) {
    Vec e = frame.col(j);
    Point plus = psi(displace(m, x, e, fd_step));
    Point minus = psi(displace(m, x, e, -fd_step));
    out[j] = lambda_y.dot(difference(m, plus, minus)) / (2.0 * fd_step);
  }
  return out;
}

DirectExponent conformal_exponent_direct(const ContactForm& form, const PointMap& psi, const Point& x,
                                         const PullbackOptions& opts) {
  Vec pulled = pullback_covector(form, psi, x, opts.fd_step);
  Vec lambda = tangent_frame(form.manifold(), x).transpose() * form.coordinate_value(x.coords).lambda;
  const double ratio = pulled.dot(lambda) / lambda.squaredNorm();
  if (!(ratio > 0.0)) {
    throw NotContactError("pullback ratio is not positive", NotContactError::Reason::coorientation_reversed, ratio);
  }
  DirectExponent out;
  out.g = std::log(ratio);
  out.residual = (pulled - ratio * lambda).norm() / std::max(1.0, pulled.norm());
  if (out.residual > opts.gate) {
    throw NotContactError("pullback is not a multiple of λ", NotContactError::Reason::not_conformal, out.residual);
  }
  return out;
}

double cocycle_residual(const ContactForm& form, const PointMap& phi, const PointMap& psi,
                        const std::vector<Point>& points, const PullbackOptions& opts) {
  PointMap both = compose(phi, psi);
  double worst = 0.0;
  for (const auto& x : points) {
    const double composed = conformal_exponent_direct(form, both, x, opts).g;
    const double outer = conformal_exponent_direct(form, phi, psi(x), opts).g;
    const double inner = conformal_exponent_direct(form, psi, x, opts).g;
    worst = std::max(worst, std::abs(composed - outer - inner));
  }
  return worst;
}

double inverse_residual(const ContactForm& form, const PointMap& psi, const PointMap& psi_inverse,
                        const std::vector<Point>& points, const PullbackOptions& opts) {
  double worst = 0.0;
  for (const auto& x : points) {
    const double inv = conformal_exponent_direct(form, psi_inverse, x, opts).g;
    const double fwd = conformal_exponent_direct(form, psi, psi_inverse(x), opts).g;
    worst = std::max(worst, std::abs(inv + fwd));
  }
  return worst;
}

double lie_derivative_residual(const ContactForm& form, const ScalarField& h, const Point& x, double dt,
                               const IntegratorConfig& cfg) {
  auto central = [&](double t) -> Vec {
    Vec plus = pullback_covector(form, hamiltonian_map(form, h, t, cfg), x);
    Vec minus = pullback_covector(form, hamiltonian_map(form, h, -t, cfg), x);
    return (plus - minus) / (2.0 * t);
  };
  Vec coarse = central(dt);
  Vec fine = central(dt / 2);
  Vec lie = (4.0 * fine - coarse) / 3.0;
  Vec lambda = tangent_frame(form.manifold(), x).transpose() * form.coordinate_value(x.coords).lambda;
  Vec expected = -reeb_derivative(form, h, x) * lambda;
  return (lie - expected).norm() / std::max(1.0, lambda.norm());
}

const char* DiscriminantSample::label() const {
  if (!zero) return "nonzero";
  if (fixed) return nondegenerate_fixed ? "fixed_nondegenerate" : "fixed";
  if (regular) return "regular";
  if (critical) return "critical";
  return "unresolved";
}

std::size_t DiscriminantScan::regular_count() const {
  return static_cast<std::size_t>(
      std::count_if(classified.begin(), classified.end(), [](const auto& s) { return s.regular; }));
}

namespace {

double exponent_at(const ContactForm& form, const ScalarField& h, const Point& x, const DiscriminantConfig& cfg) {
  return conformal_exponent(form, h, x, cfg.duration, cfg.integrator).g;
}

}  // namespace

DiscriminantSample classify_point(const ContactForm& form, const ScalarField& h, const Point& x,
                                  const DiscriminantConfig& cfg) {
  const ManifoldModel& m = form.manifold();
  DiscriminantSample s;
  s.x = x;
  ExponentRecord rec = conformal_exponent(form, h, x, cfg.duration, cfg.integrator);
  s.g = rec.g;

  Mat frame = tangent_frame(m, x);
  Vec dg(m.dim());
  try {
    const double step = cfg.dg_step;
    for (int j = 0; j < m.dim(); ++j) {
      Vec e = frame.col(j);
      auto at = [&](double t) { return exponent_at(form, h, displace(m, x, e, t), cfg); };
      dg[j] = (-at(2 * step) + 8 * at(step) - 8 * at(-step) + at(-2 * step)) / (12 * step);
    }
  } catch (const FlowError&) {
    dg.setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  s.dg = CovectorValue{x, dg};
  s.dg_norm = dg.norm();

  s.displacement = distance(m, rec.image, x);
  s.fixed = s.displacement < cfg.fixed_threshold;
  if (s.fixed) {
    auto lt = linearized_transport(form, FieldSpec::hamiltonian(h), x, cfg.duration, cfg.integrator);
    Mat shifted = lt.matrix - Mat::Identity(m.dim(), m.dim());
    s.fixed_sigma_min = Eigen::JacobiSVD<Mat>(shifted).singularValues().minCoeff();
    s.nondegenerate_fixed = s.fixed_sigma_min > cfg.nondegeneracy_threshold;
  }
  s.zero = std::abs(s.g) < cfg.tol_zero;
  s.regular = s.zero && s.dg_norm > cfg.tol_reg && !s.fixed;
  s.critical = s.zero && s.dg_norm <= cfg.tol_reg;
  return s;
}

namespace {

struct GridAxis {
  double lo;
  double spacing;
  bool periodic;
};

struct Grid {
  std::vector<GridAxis> axes;
  int resolution;
  std::function<Point(const Vec&)> embed;

  std::size_t size() const {
    std::size_t n = 1;
    for (std::size_t a = 0; a < axes.size(); ++a) n *= static_cast<std::size_t>(resolution);
    return n;
  }
  Vec parameters(std::size_t index) const {
    Vec p(static_cast<int>(axes.size()));
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto k = static_cast<double>(index % static_cast<std::size_t>(resolution));
      index /= static_cast<std::size_t>(resolution);
      p[static_cast<int>(a)] = axes[a].lo + k * axes[a].spacing;
    }
    return p;
  }
  /// Neighbour along axis a, or none at a closed end.
  std::optional<std::size_t> neighbour(std::size_t index, std::size_t a) const {
    std::size_t stride = 1;
    for (std::size_t b = 0; b < a; ++b) stride *= static_cast<std::size_t>(resolution);
    const std::size_t k = (index / stride) % static_cast<std::size_t>(resolution);
    if (k + 1 < static_cast<std::size_t>(resolution)) return index + stride;
    if (axes[a].periodic) return index - k * stride;
    return std::nullopt;
  }
};

Grid make_grid(const ContactForm& form, int resolution) {
  const ManifoldModel& m = form.manifold();
  if (resolution < 2) throw DomainError("scan resolution must be at least 2");
  Grid g;
  g.resolution = resolution;
  const double r = resolution;
  switch (m.kind()) {
    case ModelKind::torus:
      for (int i = 0; i < m.dim(); ++i) g.axes.push_back({0.0, m.period() / r, true});
      g.embed = [m](const Vec& p) { return make_point(m, p); };
      break;
    case ModelKind::darboux:
      if (!m.bounded()) throw DomainError("discriminant scan needs a bounded Darboux box");
      for (int i = 0; i < m.dim(); ++i) g.axes.push_back({m.lower(i), (m.upper(i) - m.lower(i)) / (r - 1), false});
      g.embed = [m](const Vec& p) { return make_point(m, p); };
      break;
    case ModelKind::sphere:
      if (m.half_dim() != 1) throw DomainError("grid scan on the sphere needs n = 1; pass a sample set");
      g.axes.push_back({0.0, (std::numbers::pi / 2) / (r - 1), false});
      g.axes.push_back({0.0, 2 * std::numbers::pi / r, true});
      g.axes.push_back({0.0, 2 * std::numbers::pi / r, true});
      g.embed = [m](const Vec& p) {
        Vec x(4);
        x << std::cos(p[0]) * std::cos(p[1]), std::cos(p[0]) * std::sin(p[1]), std::sin(p[0]) * std::cos(p[2]),
            std::sin(p[0]) * std::sin(p[2]);
        return make_point(m, x);
      };
      break;
  }
  return g;
}

struct Candidate {
  std::size_t from;
  std::size_t to;
  bool node;
};

}  // namespace

DiscriminantScan discriminant_scan(const ContactForm& form, const ScalarField& h, int resolution,
                                   const DiscriminantConfig& cfg) {
  Grid grid = make_grid(form, resolution);
  DiscriminantScan scan;
  const std::size_t count = grid.size();
  std::vector<Vec> params(count);
  for (std::size_t i = 0; i < count; ++i) {
    params[i] = grid.parameters(i);
    scan.nodes.push_back(grid.embed(params[i]));
  }
  scan.values = map_indices(count, [&](std::size_t i) { return exponent_at(form, h, scan.nodes[i], cfg); },
                            cfg.execution);

  std::vector<Candidate> candidates;
  auto is_zero = [&](std::size_t i) { return std::abs(scan.values[i]) < cfg.tol_zero; };
  for (std::size_t i = 0; i < count; ++i) {
    if (is_zero(i)) {
      candidates.push_back({i, i, true});
    } else if (scan.values[i] > 0) {
      ++scan.positive;
    } else {
      ++scan.negative;
    }
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
      auto j = grid.neighbour(i, a);
      if (!j || is_zero(i) || is_zero(*j)) continue;
      if (scan.values[i] * scan.values[*j] < 0) candidates.push_back({i, *j, false});
    }
  }

  auto locate = [&](std::size_t c) -> Point {
    const Candidate& cand = candidates[c];
    if (cand.node) return scan.nodes[cand.from];
    Vec a = params[cand.from];
    Vec b = params[cand.to];
    // unwrap the periodic edge back to the end of its axis
    for (std::size_t k = 0; k < grid.axes.size(); ++k) {
      const int ki = static_cast<int>(k);
      if (b[ki] < a[ki]) b[ki] = a[ki] + grid.axes[k].spacing;
    }
    double lo = 0.0, hi = 1.0;
    double g_lo = scan.values[cand.from];
    Point best = scan.nodes[cand.from];
    for (int it = 0; it < cfg.max_bisections; ++it) {
      const double mid = 0.5 * (lo + hi);
      best = grid.embed(Vec((1 - mid) * a + mid * b));
      const double g_mid = exponent_at(form, h, best, cfg);
      if (std::abs(g_mid) < cfg.tol_zero) break;
      if ((g_mid > 0) == (g_lo > 0)) {
        lo = mid;
        g_lo = g_mid;
      } else {
        hi = mid;
      }
    }
    return best;
  };
  std::vector<Point> zeros = map_indices(candidates.size(), locate, cfg.execution);
  scan.classified =
      map_indices(zeros.size(), [&](std::size_t i) { return classify_point(form, h, zeros[i], cfg); }, cfg.execution);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!candidates[c].node) scan.segments.push_back({candidates[c].from, candidates[c].to, c});
  }
  return scan;
}

DiscriminantScan discriminant_scan(const ContactForm& form, const ScalarField& h, const std::vector<Point>& samples,
                                   const DiscriminantConfig& cfg) {
  DiscriminantScan scan;
  scan.nodes = samples;
  scan.classified = map_indices(
      samples.size(), [&](std::size_t i) { return classify_point(form, h, samples[i], cfg); }, cfg.execution);
  for (const auto& s : scan.classified) {
    scan.values.push_back(s.g);
    if (s.zero) continue;
    if (s.g > 0) {
      ++scan.positive;
    } else {
      ++scan.negative;
    }
  }
  return scan;
}

}  // namespace reeb
