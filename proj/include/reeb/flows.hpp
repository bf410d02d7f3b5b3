#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "reeb/contact.hpp"

namespace reeb {

/// Generator of a flow: the Reeb field or a contact Hamiltonian field X_H.
class FieldSpec {
 public:
  static FieldSpec reeb();
  static FieldSpec hamiltonian(ScalarField h);
  /// `reeb` or `ham:H=<expr>`.
  static FieldSpec parse(std::string_view text, const ManifoldModel& model);

  bool is_reeb() const { return reeb_; }
  const ScalarField& hamiltonian_function() const { return h_; }
  std::string tag() const;

 private:
  bool reeb_ = true;
  ScalarField h_;
};

struct FieldSample {
  Vec velocity;        ///< coordinates
  double payoff_rate;  ///< -R_λ[H] (0 for the Reeb field)
};

FieldSample sample_field(const ContactForm& form, const FieldSpec& field, const Point& x);

/// [A, B] = D_A B - D_B A at x in coordinates, derivatives by central
/// differences along the chart with the given step.
Vec lie_bracket(const ContactForm& form, const FieldSpec& a, const FieldSpec& b, const Point& x, double step = 1e-4);

struct IntegratorConfig {
  double step = 1e-3;
  double tolerance = 1e-10;  ///< step-doubling error per step
  long max_steps = 20'000'000;
  bool record_path = true;    ///< false keeps only the endpoints
  double jacobian_step = 1e-5;

  void validate() const;
};

enum class FlowStatus { completed, boundary_exit };

struct Trajectory {
  std::string field_tag;
  std::vector<double> times;
  std::vector<Point> points;
  std::vector<double> payoff;  ///< ∫ -R_λ[H] along the path, when tracked
  std::vector<Mat> transport;  ///< coordinate Jacobians Φ(t), when tracked
  FlowStatus status = FlowStatus::completed;
  long accepted_steps = 0;
  long rejected_steps = 0;

  const Point& end() const { return points.back(); }
};

struct FlowOptions {
  bool track_payoff = false;
  bool track_transport = false;
};

/// RK4 with per-stage projection onto the model and step-doubling control:
/// a step is accepted when |one step - two half steps| < tolerance,
/// otherwise halved. Leaving a bounded Darboux box stops the integration
/// with status boundary_exit.
Trajectory integrate_flow(const ContactForm& form, const FieldSpec& field, const Point& x0, double duration,
                          const IntegratorConfig& cfg = {}, FlowOptions options = {});

/// Endpoint of the flow; throws FlowError on boundary exit.
Point flow_map(const ContactForm& form, const FieldSpec& field, const Point& x, double duration,
               const IntegratorConfig& cfg = {});
/// ψ_H^1(x).
Point time_one_map(const ContactForm& form, const ScalarField& h, const Point& x, const IntegratorConfig& cfg = {});

struct LinearizedTransport {
  Point end;
  Mat matrix;  ///< dφ_T from the frame at x0 to the frame at γ(T)
};

/// Integrates dη/dt = DV(γ)η alongside the flow, DV by central differences
/// of the field with cfg.jacobian_step.
LinearizedTransport linearized_transport(const ContactForm& form, const FieldSpec& field, const Point& x0,
                                         double duration, const IntegratorConfig& cfg = {});

}  // namespace reeb
