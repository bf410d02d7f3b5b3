#include "reeb/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "reeb/errors.hpp"
#include "reeb/strings.hpp"

namespace reeb {

namespace {

constexpr double kSphereTolerance = 1e-10;

std::vector<std::string> make_names(ModelKind kind, int n) {
  std::vector<std::string> names;
  if (kind == ModelKind::darboux) {
    if (n == 1) return {"q", "p", "z"};
    for (int i = 1; i <= n; ++i) names.push_back("q" + std::to_string(i));
    for (int i = 1; i <= n; ++i) names.push_back("p" + std::to_string(i));
    names.push_back("z");
  } else if (kind == ModelKind::torus) {
    if (n == 1) return {"x", "y", "z"};
    for (int i = 1; i <= 2 * n + 1; ++i) names.push_back("t" + std::to_string(i));
  } else {
    if (n == 1) return {"x", "y", "u", "v"};
    for (int i = 1; i <= n + 1; ++i) {
      names.push_back("x" + std::to_string(i));
      names.push_back("y" + std::to_string(i));
    }
  }
  return names;
}

double wrap(double value, double period) {
  double r = std::fmod(value, period);
  if (r < 0.0) r += period;
  // fmod of a tiny negative can round up to exactly `period`
  if (r >= period) r = 0.0;
  return r;
}

}  // namespace

ManifoldModel::ManifoldModel(ModelKind kind, int n) : kind_(kind), n_(n) {
  if (n < 1 || n > kMaxHalfDim) {
    throw DomainError("half-dimension n must be in [1, " + std::to_string(kMaxHalfDim) +
                      "], got " + std::to_string(n));
  }
  names_ = make_names(kind, n);
  const double inf = std::numeric_limits<double>::infinity();
  lo_.assign(coord_count(), -inf);
  hi_.assign(coord_count(), inf);
}

ManifoldModel ManifoldModel::darboux(int n) { return ManifoldModel(ModelKind::darboux, n); }

ManifoldModel ManifoldModel::darboux(int n, double lo, double hi) {
  if (!(lo < hi)) throw DomainError("Darboux box needs lo < hi");
  ManifoldModel m(ModelKind::darboux, n);
  m.lo_.assign(m.coord_count(), lo);
  m.hi_.assign(m.coord_count(), hi);
  return m;
}

ManifoldModel ManifoldModel::torus(int n, double period) {
  if (!(period > 0.0)) throw DomainError("torus period must be positive");
  ManifoldModel m(ModelKind::torus, n);
  m.period_ = period;
  m.lo_.assign(m.coord_count(), 0.0);
  m.hi_.assign(m.coord_count(), period);
  return m;
}

ManifoldModel ManifoldModel::sphere(int n) {
  ManifoldModel m(ModelKind::sphere, n);
  m.lo_.assign(m.coord_count(), -1.0);
  m.hi_.assign(m.coord_count(), 1.0);
  return m;
}

bool ManifoldModel::bounded() const {
  if (kind_ != ModelKind::darboux) return true;
  for (int i = 0; i < coord_count(); ++i) {
    if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i])) return false;
  }
  return true;
}

ManifoldModel ManifoldModel::parse(std::string_view text) {
  auto [head, options] = split_head(text);
  int default_n = 1;
  ModelKind kind;
  if (head == "darboux") {
    kind = ModelKind::darboux;
  } else if (head == "torus" || (head.size() >= 2 && head[0] == 't' && is_integer(head.substr(1)))) {
    kind = ModelKind::torus;
    if (head != "torus") default_n = (std::stoi(std::string(head.substr(1))) - 1) / 2;
  } else if (head == "sphere" || (head.size() >= 2 && head[0] == 's' && is_integer(head.substr(1)))) {
    kind = ModelKind::sphere;
    if (head != "sphere") default_n = (std::stoi(std::string(head.substr(1))) - 1) / 2;
  } else {
    throw ParseError("unknown manifold '" + std::string(head) + "'");
  }

  int n = default_n;
  double period = 2.0 * std::numbers::pi;
  bool has_box = false;
  double lo = 0.0, hi = 1.0;
  for (const auto& [key, value] : options) {
    if (key == "n") {
      n = parse_int(value, "n");
    } else if (key == "period" && kind == ModelKind::torus) {
      period = parse_double(value, "period");
    } else if (key == "box" && kind == ModelKind::darboux) {
      auto dots = value.find("..");
      if (dots == std::string::npos) throw ParseError("box must be lo..hi");
      lo = parse_double(value.substr(0, dots), "box");
      hi = parse_double(value.substr(dots + 2), "box");
      has_box = true;
    } else {
      throw ParseError("unknown manifold option '" + key + "' for " + std::string(head));
    }
  }
  switch (kind) {
    case ModelKind::darboux:
      return has_box ? darboux(n, lo, hi) : darboux(n);
    case ModelKind::torus:
      return torus(n, period);
    case ModelKind::sphere:
      return sphere(n);
  }
  throw ParseError("unreachable");
}

std::string ManifoldModel::describe() const {
  std::ostringstream out;
  out.precision(17);
  switch (kind_) {
    case ModelKind::darboux:
      out << "darboux:n=" << n_;
      if (bounded()) out << ",box=" << lo_[0] << ".." << hi_[0];
      break;
    case ModelKind::torus:
      out << "t" << dim() << ":n=" << n_ << ",period=" << period_;
      break;
    case ModelKind::sphere:
      out << "s" << dim() << ":n=" << n_;
      break;
  }
  return out.str();
}

Point make_point(const ManifoldModel& m, const Vec& coords) {
  if (coords.size() != m.coord_count()) {
    throw DomainError("expected " + std::to_string(m.coord_count()) + " coordinates, got " +
                      std::to_string(coords.size()));
  }
  if (!coords.allFinite()) throw DomainError("non-finite coordinate");
  Point p{coords};
  if (m.kind() == ModelKind::torus) {
    for (int i = 0; i < coords.size(); ++i) p.coords[i] = wrap(coords[i], m.period());
  } else if (m.kind() == ModelKind::sphere) {
    double norm = coords.norm();
    if (norm == 0.0) throw DomainError("cannot project the origin onto the sphere");
    p.coords /= norm;
  }
  return p;
}

Point make_point(const ManifoldModel& m, const std::vector<double>& coords) {
  Vec v(static_cast<Eigen::Index>(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i) v[static_cast<Eigen::Index>(i)] = coords[i];
  return make_point(m, v);
}

void check_point(const ManifoldModel& m, const Point& x) {
  if (x.coords.size() != m.coord_count()) {
    throw DomainError("point has " + std::to_string(x.coords.size()) + " coordinates, model needs " +
                      std::to_string(m.coord_count()));
  }
  if (!x.coords.allFinite()) throw DomainError("non-finite coordinate");
  if (m.kind() == ModelKind::sphere) {
    double defect = std::abs(x.coords.squaredNorm() - 1.0);
    if (defect > kSphereTolerance) {
      throw DomainError("point off the sphere: | |x|^2 - 1 | = " + std::to_string(defect));
    }
  } else if (m.kind() == ModelKind::torus) {
    for (int i = 0; i < x.coords.size(); ++i) {
      if (x.coords[i] < 0.0 || x.coords[i] >= m.period()) {
        throw DomainError("torus coordinate outside [0, period)");
      }
    }
  }
}

bool inside_box(const ManifoldModel& m, const Point& x) {
  if (m.kind() != ModelKind::darboux) return true;
  for (int i = 0; i < x.coords.size(); ++i) {
    if (x.coords[i] < m.lower(i) || x.coords[i] > m.upper(i)) return false;
  }
  return true;
}

Mat tangent_frame(const ManifoldModel& m, const Point& x) {
  check_point(m, x);
  const int d = m.dim();
  if (m.kind() != ModelKind::sphere) return Mat::Identity(d, d);

  const int c = m.coord_count();
  Eigen::Index k = 0;
  x.coords.cwiseAbs().maxCoeff(&k);
  const double sign = x.coords[k] >= 0.0 ? 1.0 : -1.0;
  Vec v = x.coords;
  v[k] += sign;
  Mat householder = Mat::Identity(c, c) - (2.0 / v.squaredNorm()) * v * v.transpose();
  Mat frame(c, d);
  for (int j = 0, col = 0; j < c; ++j) {
    if (j == k) continue;
    frame.col(col++) = householder.col(j);
  }
  return frame;
}

std::vector<TangentVector> tangent_frame_vectors(const ManifoldModel& m, const Point& x) {
  Mat frame = tangent_frame(m, x);
  std::vector<TangentVector> out;
  out.reserve(static_cast<std::size_t>(frame.cols()));
  for (int j = 0; j < frame.cols(); ++j) out.push_back({x, frame.col(j)});
  return out;
}

Point displace(const ManifoldModel& m, const Point& x, const Vec& v, double t) {
  return make_point(m, Vec(x.coords + t * v));
}

Point displace(const ManifoldModel& m, const Point& x, const TangentVector& v, double t) {
  return displace(m, x, v.comps, t);
}

Vec difference(const ManifoldModel& m, const Point& a, const Point& b) {
  Vec d = a.coords - b.coords;
  if (m.kind() == ModelKind::torus) {
    const double p = m.period();
    for (int i = 0; i < d.size(); ++i) d[i] -= p * std::round(d[i] / p);
  }
  return d;
}

double distance(const ManifoldModel& m, const Point& a, const Point& b) {
  return difference(m, a, b).norm();
}

std::vector<Point> sample_points(const ManifoldModel& m, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point> out;
  out.reserve(count);
  const int c = m.coord_count();
  if (m.kind() == ModelKind::sphere) {
    std::normal_distribution<double> normal(0.0, 1.0);
    while (out.size() < count) {
      Vec g(c);
      for (int i = 0; i < c; ++i) g[i] = normal(rng);
      if (g.norm() < 1e-12) continue;
      out.push_back(make_point(m, g));
    }
    return out;
  }
  if (!m.bounded()) throw DomainError("sampling needs a bounded Darboux box");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t s = 0; s < count; ++s) {
    Vec g(c);
    for (int i = 0; i < c; ++i) g[i] = m.lower(i) + (m.upper(i) - m.lower(i)) * unit(rng);
    out.push_back(make_point(m, g));
  }
  return out;
}

}  // namespace reeb
