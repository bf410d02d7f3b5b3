#include "reeb/flows.hpp"

#include <algorithm>
#include <cmath>

#include "reeb/errors.hpp"
#include "reeb/strings.hpp"

namespace reeb {

namespace {

constexpr double kBoxSlack = 1e-9;

struct State {
  Vec x;
  double payoff = 0.0;
  Mat phi;
};

struct Derivative {
  Vec velocity;
  double payoff_rate = 0.0;
  Mat dphi;
};

bool inside_with_slack(const ManifoldModel& m, const Vec& x) {
  if (m.kind() != ModelKind::darboux) return true;
  for (int i = 0; i < x.size(); ++i) {
    if (x[i] < m.lower(i) - kBoxSlack || x[i] > m.upper(i) + kBoxSlack) return false;
  }
  return true;
}

class Stepper {
 public:
  Stepper(const ContactForm& form, const FieldSpec& field, const IntegratorConfig& cfg, FlowOptions options)
      : form_(form), model_(form.manifold()), field_(field), cfg_(cfg), options_(options) {}

  Derivative derivative(const State& s) const {
    Point p = make_point(model_, s.x);
    FieldSample f = sample_field(form_, field_, p);
    Derivative d{f.velocity, f.payoff_rate, {}};
    if (options_.track_transport) {
      const int c = model_.coord_count();
      Mat jac(c, c);
      const double eps = cfg_.jacobian_step;
      for (int j = 0; j < c; ++j) {
        Vec e = Vec::Unit(c, j);
        Vec plus = sample_field(form_, field_, make_point(model_, Vec(s.x + eps * e))).velocity;
        Vec minus = sample_field(form_, field_, make_point(model_, Vec(s.x - eps * e))).velocity;
        jac.col(j) = (plus - minus) / (2.0 * eps);
      }
      d.dphi = jac * s.phi;
    }
    return d;
  }

  State advance(const State& s, const Derivative& d, double h) const {
    State out;
    out.x = make_point(model_, Vec(s.x + h * d.velocity)).coords;
    out.payoff = s.payoff + h * d.payoff_rate;
    if (options_.track_transport) out.phi = s.phi + h * d.dphi;
    return out;
  }

  State rk4(const State& s, double h) const {
    Derivative k1 = derivative(s);
    Derivative k2 = derivative(advance(s, k1, h / 2));
    Derivative k3 = derivative(advance(s, k2, h / 2));
    Derivative k4 = derivative(advance(s, k3, h));
    Derivative sum;
    sum.velocity = (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity) / 6.0;
    sum.payoff_rate = (k1.payoff_rate + 2.0 * k2.payoff_rate + 2.0 * k3.payoff_rate + k4.payoff_rate) / 6.0;
    if (options_.track_transport) sum.dphi = (k1.dphi + 2.0 * k2.dphi + 2.0 * k3.dphi + k4.dphi) / 6.0;
    return advance(s, sum, h);
  }

  double error(const State& a, const State& b) const {
    Vec d = difference(model_, Point{a.x}, Point{b.x});
    return d.norm() + std::abs(a.payoff - b.payoff);
  }

 private:
  const ContactForm& form_;
  const ManifoldModel& model_;
  const FieldSpec& field_;
  const IntegratorConfig& cfg_;
  FlowOptions options_;
};

}  // namespace

FieldSpec FieldSpec::reeb() { return FieldSpec(); }

FieldSpec FieldSpec::hamiltonian(ScalarField h) {
  FieldSpec f;
  f.reeb_ = false;
  f.h_ = std::move(h);
  return f;
}

FieldSpec FieldSpec::parse(std::string_view text, const ManifoldModel& model) {
  std::string t = trim(text);
  if (t == "reeb") return reeb();
  auto [head, options] = split_head(t);
  if ((head == "ham" || head == "hamiltonian") && options.size() == 1 && options[0].first == "H") {
    return hamiltonian(ScalarField::parse(options[0].second, model));
  }
  throw ParseError("field must be 'reeb' or 'ham:H=<expr>', got '" + t + "'");
}

std::string FieldSpec::tag() const { return reeb_ ? "reeb" : "hamiltonian(" + h_.text() + ")"; }

FieldSample sample_field(const ContactForm& form, const FieldSpec& field, const Point& x) {
  LocalCalculus calc(form, x);
  if (field.is_reeb()) return {calc.reeb(), 0.0};
  Jet h = field.hamiltonian_function().eval(x);
  const double reeb_h = h.grad.head(x.coords.size()).dot(calc.reeb());
  return {calc.hamiltonian(h), -reeb_h};
}

Vec lie_bracket(const ContactForm& form, const FieldSpec& a, const FieldSpec& b, const Point& x, double step) {
  const ManifoldModel& m = form.manifold();
  auto derivative = [&](const FieldSpec& along, const FieldSpec& of) -> Vec {
    Vec v = sample_field(form, along, x).velocity;
    Vec plus = sample_field(form, of, displace(m, x, v, step)).velocity;
    Vec minus = sample_field(form, of, displace(m, x, v, -step)).velocity;
    return (plus - minus) / (2.0 * step);
  };
  return derivative(a, b) - derivative(b, a);
}

void IntegratorConfig::validate() const {
  if (!(step > 0.0)) throw DomainError("integrator step must be positive");
  if (!(tolerance > 0.0)) throw DomainError("integrator tolerance must be positive");
  if (max_steps <= 0) throw DomainError("max_steps must be positive");
  if (!(jacobian_step > 0.0)) throw DomainError("jacobian step must be positive");
}

Trajectory integrate_flow(const ContactForm& form, const FieldSpec& field, const Point& x0, double duration,
                          const IntegratorConfig& cfg, FlowOptions options) {
  cfg.validate();
  if (!std::isfinite(duration)) throw DomainError("flow duration must be finite");
  const ManifoldModel& model = form.manifold();
  check_point(model, x0);

  Trajectory traj;
  traj.field_tag = field.tag();
  State state{x0.coords, 0.0, {}};
  if (options.track_transport) state.phi = Mat::Identity(model.coord_count(), model.coord_count());

  auto record = [&](double t, const State& s) {
    traj.times.push_back(t);
    traj.points.push_back(Point{s.x});
    if (options.track_payoff) traj.payoff.push_back(s.payoff);
    if (options.track_transport) traj.transport.push_back(s.phi);
  };
  record(0.0, state);
  if (!inside_with_slack(model, state.x)) {
    traj.status = FlowStatus::boundary_exit;
    return traj;
  }

  Stepper stepper(form, field, cfg, options);
  const double direction = duration >= 0.0 ? 1.0 : -1.0;
  const double total = std::abs(duration);
  const double min_step = 1e-14 * std::max(1.0, total);
  double t = 0.0;
  double h = cfg.step;
  while (t < total) {
    if (traj.accepted_steps + traj.rejected_steps >= cfg.max_steps) {
      throw FlowError("max steps exceeded at t = " + std::to_string(direction * t));
    }
    const bool last = t + h >= total;
    const double step = last ? total - t : h;
    State full = stepper.rk4(state, direction * step);
    State half = stepper.rk4(stepper.rk4(state, direction * step / 2), direction * step / 2);
    const double err = stepper.error(full, half);
    if (err > cfg.tolerance && step > min_step) {
      h = step / 2;
      ++traj.rejected_steps;
      continue;
    }
    state = std::move(half);
    t = last ? total : t + step;
    ++traj.accepted_steps;
    if (err < cfg.tolerance / 64.0 && h < cfg.step) h = std::min(cfg.step, 2.0 * h);

    if (!inside_with_slack(model, state.x)) {
      record(direction * t, state);
      traj.status = FlowStatus::boundary_exit;
      return traj;
    }
    if (cfg.record_path || t >= total) record(direction * t, state);
  }
  return traj;
}

Point flow_map(const ContactForm& form, const FieldSpec& field, const Point& x, double duration,
               const IntegratorConfig& cfg) {
  IntegratorConfig c = cfg;
  c.record_path = false;
  Trajectory traj = integrate_flow(form, field, x, duration, c);
  if (traj.status == FlowStatus::boundary_exit) throw FlowError("flow left the Darboux box");
  return traj.end();
}

Point time_one_map(const ContactForm& form, const ScalarField& h, const Point& x, const IntegratorConfig& cfg) {
  return flow_map(form, FieldSpec::hamiltonian(h), x, 1.0, cfg);
}

LinearizedTransport linearized_transport(const ContactForm& form, const FieldSpec& field, const Point& x0,
                                         double duration, const IntegratorConfig& cfg) {
  IntegratorConfig c = cfg;
  c.record_path = false;
  Trajectory traj = integrate_flow(form, field, x0, duration, c, {false, true});
  if (traj.status == FlowStatus::boundary_exit) throw FlowError("flow left the Darboux box");
  const ManifoldModel& m = form.manifold();
  Mat start = tangent_frame(m, x0);
  Mat end = tangent_frame(m, traj.end());
  return {traj.end(), end.transpose() * traj.transport.back() * start};
}

}  // namespace reeb
