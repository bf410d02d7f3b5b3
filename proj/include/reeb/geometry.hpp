#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "reeb/linalg.hpp"

namespace reeb {

enum class ModelKind { darboux, torus, sphere };

/// One of the three model manifolds of dimension 2n+1.
///
/// Darboux boxes and tori use intrinsic coordinates (q_1..q_n, p_1..p_n, z)
/// and (x, y, z) respectively; spheres S^{2n+1} use ambient coordinates
/// (x_1, y_1, ..., x_{n+1}, y_{n+1}) in R^{2n+2}.
class ManifoldModel {
 public:
  /// Unbounded Darboux chart unless bounds are given.
  static ManifoldModel darboux(int n);
  static ManifoldModel darboux(int n, double lo, double hi);
  static ManifoldModel torus(int n, double period);
  static ManifoldModel sphere(int n);

  /// Parses `darboux:n=1,box=0..1`, `t3:n=1,period=6.28`, `s3:n=1`.
  static ManifoldModel parse(std::string_view text);

  ModelKind kind() const { return kind_; }
  int half_dim() const { return n_; }
  int dim() const { return 2 * n_ + 1; }
  /// Number of stored coordinates (2n+1 intrinsic, 2n+2 ambient).
  int coord_count() const { return kind_ == ModelKind::sphere ? 2 * n_ + 2 : 2 * n_ + 1; }
  bool compact() const { return kind_ != ModelKind::darboux; }
  bool bounded() const;

  double lower(int i) const { return lo_[i]; }
  double upper(int i) const { return hi_[i]; }
  double period() const { return period_; }

  /// Variable names used by the expression grammar.
  const std::vector<std::string>& coordinate_names() const { return names_; }
  std::string describe() const;

  friend bool operator==(const ManifoldModel&, const ManifoldModel&) = default;

 private:
  ManifoldModel(ModelKind kind, int n);

  ModelKind kind_;
  int n_;
  double period_ = 0.0;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<std::string> names_;
};

struct Point {
  Vec coords;
};

struct TangentVector {
  Point base;
  Vec comps;
};

/// Covector stored by its components in a tangent frame.
struct CovectorValue {
  Point base;
  Vec comps;
};

/// Antisymmetric bilinear form stored by its matrix in a tangent frame.
struct BilinearValue {
  Point base;
  Mat comps;
};

/// Projects raw coordinates onto the model: torus wrap to [0, period),
/// sphere renormalization. Throws DomainError on wrong size, non-finite
/// values or a zero ambient vector.
Point make_point(const ManifoldModel& m, const Vec& coords);
Point make_point(const ManifoldModel& m, const std::vector<double>& coords);

/// Throws DomainError unless `x` satisfies the model invariants.
void check_point(const ManifoldModel& m, const Point& x);

/// True when `x` lies inside the closed coordinate box (always true for
/// compact models).
bool inside_box(const ManifoldModel& m, const Point& x);

/// Orthonormal basis of T_xM as the columns of a coord_count x dim matrix.
/// Coordinate frame for Darboux/torus; for spheres the columns of the
/// Householder reflection sending x to ±e_k, k = argmax |x_k|, minus column k.
Mat tangent_frame(const ManifoldModel& m, const Point& x);
std::vector<TangentVector> tangent_frame_vectors(const ManifoldModel& m, const Point& x);

/// First-order chart move x + t v followed by wrap or renormalization.
Point displace(const ManifoldModel& m, const Point& x, const Vec& v, double t);
Point displace(const ManifoldModel& m, const Point& x, const TangentVector& v, double t);

/// a - b in coordinates, minimal image on the torus.
Vec difference(const ManifoldModel& m, const Point& a, const Point& b);
/// Minimal-image (torus), chordal (sphere) or Euclidean (Darboux) distance.
double distance(const ManifoldModel& m, const Point& a, const Point& b);

/// Seeded uniform sample: coordinate measure on boxes and tori, round
/// measure on spheres (normalized Gaussian vectors). Darboux models must be
/// bounded.
std::vector<Point> sample_points(const ManifoldModel& m, std::size_t count, std::uint64_t seed);

}  // namespace reeb
