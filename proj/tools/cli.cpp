#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "reeb/errors.hpp"
#include "reeb/strings.hpp"
#include "reeb/verify.hpp"

#ifndef REEB_LAB_VERSION
#define REEB_LAB_VERSION "0.0.0"
#endif

namespace reeb::cli {

using nlohmann::json;

std::string version() { return REEB_LAB_VERSION; }

json payload(json report) {
  report.erase("wall_time_s");
  return report;
}

namespace {

struct Options {
  std::string form;
  std::string perturb;
  std::string field = "reeb";
  std::string x0;
  std::string H;
  std::string quantity = "reeb";
  std::string dir;
  std::string u;
  std::string f0 = "0";
  std::string suite = "all";
  std::string method = "both";
  std::string quadrature = "auto";
  std::string format;
  std::string out;
  std::string report;
  double T = 1.0;
  double step = 1e-3;
  double tol = 1e-10;
  double tol_zero = 1e-8;
  double rel_tol = kKernelRelTol;
  std::size_t N = 100000;
  std::size_t samples = 0;
  std::size_t cases = 50;
  std::uint64_t seed = 42;
  int resolution = 8;
  int degree = 2;
  int modes = 3;
  int grid = 64;
  int trapezoid = 16;
  bool transport = false;
  bool check_fd = false;
  bool periodic = false;
};

using Echo = std::vector<std::pair<std::string, std::function<json()>>>;

class Binder {
 public:
  Binder(CLI::App* sub, Echo& echo) : sub_(sub), echo_(echo) {}

  template <class T>
  CLI::Option* opt(const std::string& name, T& var, const std::string& desc) {
    echo_.emplace_back(name, [&var] { return json(var); });
    return sub_->add_option("--" + name, var, desc)->capture_default_str();
  }
  CLI::Option* flag(const std::string& name, bool& var, const std::string& desc) {
    echo_.emplace_back(name, [&var] { return json(var); });
    return sub_->add_flag("--" + name, var, desc);
  }

 private:
  CLI::App* sub_;
  Echo& echo_;
};

/// Usage errors raised after CLI11 accepted the command line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const DegenerateFormError*>(&e)) return "degenerate_form";
  if (dynamic_cast<const FlowError*>(&e)) return "flow";
  if (dynamic_cast<const NotContactError*>(&e)) return "not_contact";
  if (dynamic_cast<const GateError*>(&e)) return "gate";
  if (dynamic_cast<const BasisError*>(&e)) return "basis";
  if (dynamic_cast<const ParseError*>(&e)) return "parse";
  if (dynamic_cast<const DomainError*>(&e)) return "domain";
  return "internal";
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
  return a;
}

json to_json(const VecX& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
  return a;
}

class Csv {
 public:
  void header(const std::vector<std::string>& cols) { line(cols); }
  void row(const std::vector<std::string>& cells) { line(cells); }
  std::string str() const { return out_.str(); }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }
  std::ostringstream out_;
};

/// What a command produced.
struct Context {
  json results = json::object();
  json checks = json::array();
  json diagnostics = json::array();
  json warnings = json::array();
  json manifest;
  std::optional<std::string> csv;
  bool computing = false;

  void check(const Check& c) {
    checks.push_back({{"suite", c.suite},
                      {"name", c.name},
                      {"value", finite_or_null(c.value)},
                      {"relation", to_string(c.relation)},
                      {"tolerance", finite_or_null(c.tolerance)},
                      {"pass", c.pass}});
  }
  bool pass() const {
    for (const auto& c : checks) {
      if (!c["pass"].get<bool>()) return false;
    }
    return true;
  }
};

ContactForm parse_form(const Options& o) { return ContactForm::parse(o.form, o.perturb); }

Point parse_point(const ContactForm& form, const std::string& text) {
  const auto& m = form.manifold();
  std::vector<double> xs;
  for (const auto& item : split_top_level(text, ',')) xs.push_back(parse_double(item, "x0"));
  if (static_cast<int>(xs.size()) != m.coord_count()) {
    throw ParseError("x0 needs " + std::to_string(m.coord_count()) + " coordinates, got " + std::to_string(xs.size()));
  }
  return make_point(m, xs);
}

std::vector<Point> points_of(const ContactForm& form, const Options& o, std::size_t fallback) {
  if (!o.x0.empty()) return {parse_point(form, o.x0)};
  return probe_points(form, o.samples ? o.samples : fallback, o.seed);
}

ScalarField require_field(const std::string& text, const ManifoldModel& m, const char* what) {
  if (trim(text).empty()) throw UsageError(std::string("--") + what + " is required");
  return ScalarField::parse(text, m);
}

IntegratorConfig integrator_of(const Options& o) {
  IntegratorConfig c;
  c.step = o.step;
  c.tolerance = o.tol;
  c.validate();
  return c;
}

std::vector<std::string> coordinate_cells(const Point& x) {
  std::vector<std::string> cells;
  for (Eigen::Index i = 0; i < x.coords.size(); ++i) cells.push_back(number(x.coords[i]));
  return cells;
}

void cmd_flow(const Options& o, Context& ctx) {
  auto form = parse_form(o);
  const auto& m = form.manifold();
  auto field = FieldSpec::parse(o.field, m);
  if (o.x0.empty()) throw UsageError("--x0 is required");
  Point x0 = parse_point(form, o.x0);
  auto ic = integrator_of(o);
  FlowOptions fo;
  fo.track_payoff = !field.is_reeb();
  fo.track_transport = o.transport;
  ctx.computing = true;

  auto traj = integrate_flow(form, field, x0, o.T, ic, fo);
  Csv csv;
  std::vector<std::string> head{"t"};
  for (const auto& n : m.coordinate_names()) head.push_back(n);
  if (fo.track_payoff) head.push_back("g");
  const int d = m.dim();
  if (o.transport) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) head.push_back("phi_" + std::to_string(i) + std::to_string(j));
    }
  }
  csv.header(head);
  json path = json::array();
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    std::vector<std::string> cells{number(traj.times[k])};
    for (auto& c : coordinate_cells(traj.points[k])) cells.push_back(c);
    if (fo.track_payoff) cells.push_back(number(traj.payoff[k]));
    if (o.transport) {
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) cells.push_back(number(traj.transport[k](i, j)));
      }
    }
    csv.row(cells);
  }
  ctx.csv = csv.str();
  ctx.results = {{"field", traj.field_tag},
                 {"status", traj.status == FlowStatus::completed ? "completed" : "boundary_exit"},
                 {"end_time", traj.times.back()},
                 {"end", to_json(traj.end().coords)},
                 {"accepted_steps", traj.accepted_steps},
                 {"rejected_steps", traj.rejected_steps},
                 {"samples", traj.points.size()}};
  if (fo.track_payoff) ctx.results["g"] = traj.payoff.back();
}

void classified_rows(Csv& csv, const ManifoldModel& m, const std::vector<DiscriminantSample>& samples,
                     const std::vector<double>* pullback) {
  std::vector<std::string> head = m.coordinate_names();
  head.push_back("g");
  if (pullback) head.push_back("g_pullback");
  for (const char* c : {"dg_norm", "fixed", "class"}) head.push_back(c);
  csv.header(head);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    auto cells = coordinate_cells(s.x);
    cells.push_back(number(s.g));
    if (pullback) cells.push_back(number((*pullback)[i]));
    cells.push_back(number(s.dg_norm));
    cells.push_back(s.fixed ? "1" : "0");
    cells.push_back(s.label());
    csv.row(cells);
  }
}

DiscriminantConfig discriminant_config(const Options& o) {
  DiscriminantConfig dc;
  dc.duration = o.T;
  dc.tol_zero = o.tol_zero;
  dc.integrator.step = o.step;
  dc.integrator.tolerance = o.tol;
  dc.integrator.validate();
  return dc;
}

void cmd_exponent(const Options& o, Context& ctx) {
  auto form = parse_form(o);
  const auto& m = form.manifold();
  auto h = require_field(o.H, m, "H");
  auto pts = points_of(form, o, 10);
  auto dc = discriminant_config(o);
  const bool both = o.method == "both";
  ctx.computing = true;

  auto scan = discriminant_scan(form, h, pts, dc);
  std::vector<double> pullback;
  if (both) {
    auto psi = hamiltonian_map(form, h, o.T, dc.integrator);
    pullback = map_indices(pts.size(), [&](std::size_t i) { return conformal_exponent_direct(form, psi, pts[i]).g; });
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) worst = std::max(worst, std::abs(pullback[i] - scan.classified[i].g));
    ctx.check(make_check("exponent", "method_agreement", worst, 1e-5));
  }
  Csv csv;
  classified_rows(csv, m, scan.classified, both ? &pullback : nullptr);
  ctx.csv = csv.str();
  json rows = json::array();
  for (std::size_t i = 0; i < scan.classified.size(); ++i) {
    const auto& s = scan.classified[i];
    json r = {{"x", to_json(s.x.coords)}, {"g", s.g}, {"dg_norm", finite_or_null(s.dg_norm)},
              {"fixed", s.fixed}, {"class", s.label()}};
    if (both) r["g_pullback"] = pullback[i];
    rows.push_back(r);
  }
  ctx.results = {{"H", h.text()}, {"T", o.T}, {"points", rows}};
}

void cmd_discriminant(const Options& o, Context& ctx) {
  auto form = parse_form(o);
  const auto& m = form.manifold();
  auto h = require_field(o.H, m, "H");
  auto dc = discriminant_config(o);
  std::vector<Point> samples;
  if (o.samples > 0) samples = probe_points(form, o.samples, o.seed);
  ctx.computing = true;

  auto scan = o.samples > 0 ? discriminant_scan(form, h, samples, dc) : discriminant_scan(form, h, o.resolution, dc);
  std::size_t zeros = 0, critical = 0, fixed = 0, degenerate = 0;
  for (const auto& s : scan.classified) {
    zeros += s.zero;
    critical += s.critical;
    fixed += s.fixed;
  }
  const auto& values = o.samples > 0 ? std::vector<double>{} : scan.values;
  for (double g : values) degenerate += std::abs(g) < dc.tol_zero;
  for (const auto& s : scan.classified) {
    if (o.samples > 0) degenerate += std::abs(s.g) < dc.tol_zero;
  }
  const std::size_t total = o.samples > 0 ? scan.classified.size() : scan.nodes.size();
  Csv csv;
  classified_rows(csv, m, scan.classified, nullptr);
  ctx.csv = csv.str();
  ctx.results = {{"H", h.text()},
                 {"T", o.T},
                 {"mode", o.samples > 0 ? "samples" : "grid"},
                 {"sampled", total},
                 {"positive", scan.positive},
                 {"negative", scan.negative},
                 {"zeros", zeros},
                 {"regular", scan.regular_count()},
                 {"critical", critical},
                 {"fixed", fixed},
                 {"crossing_segments", scan.segments.size()},
                 {"fraction_below_tol_zero", total ? static_cast<double>(degenerate) / total : 0.0}};
  if (m.compact()) {
    ctx.check(make_check("discriminant", "discriminant_nonempty", static_cast<double>(zeros), 1.0,
                         Relation::greater_equal));
  }
}

VariedQuantity parse_quantity(const std::string& text, const ContactForm& form, const Options& o,
                              std::optional<ScalarField>& ham) {
  const auto& m = form.manifold();
  std::string t = trim(text);
  if (t == "reeb") return ReebQuantity{};
  auto colon = t.find(':');
  if (colon == std::string::npos) throw ParseError("quantity must be reeb, ham:H=<expr> or exponent:H=<expr>");
  std::string head = t.substr(0, colon);
  std::string rest = trim(t.substr(colon + 1));
  if (rest.rfind("H=", 0) != 0) throw ParseError("quantity '" + head + "' needs H=<expr>");
  ham = ScalarField::parse(rest.substr(2), m);
  if (head == "ham") return HamiltonianQuantity{*ham};
  if (head == "exponent") {
    IntegratorConfig ic;
    ic.step = o.step;
    ic.tolerance = o.tol;
    ic.record_path = false;
    ic.validate();
    return ExponentQuantity{hamiltonian_map(form, *ham, o.T, ic)};
  }
  throw ParseError("unknown quantity '" + head + "'");
}

void cmd_vary(const Options& o, Context& ctx) {
  auto form = parse_form(o);
  const auto& m = form.manifold();
  if (trim(o.dir).empty()) throw UsageError("--dir is required");
  auto dir = PerturbationDirection::parse(o.dir, m);
  std::optional<ScalarField> ham;
  auto quantity = parse_quantity(o.quantity, form, o, ham);
  auto pts = points_of(form, o, 5);
  ctx.computing = true;

  struct Row {
    Vec value;
    std::optional<FiniteDifferenceEstimate> fd;
    double error = 0.0;
    std::optional<double> closed_agreement;
  };
  auto rows = map_indices(pts.size(), [&](std::size_t i) {
    Row r;
    const Point& x = pts[i];
    if (std::holds_alternative<ReebQuantity>(quantity)) {
      r.value = reeb_variation(form, dir, x).comps;
    } else if (std::holds_alternative<HamiltonianQuantity>(quantity)) {
      auto z = hamiltonian_field_variation(form, *ham, dir, x);
      r.value = z.system.comps;
      if (z.closed) r.closed_agreement = z.agreement;
    } else {
      r.value = Vec::Constant(1, exponent_variation(form, std::get<ExponentQuantity>(quantity).psi, dir, x));
    }
    if (o.check_fd) {
      r.fd = finite_difference_oracle(form, dir, quantity, x);
      r.error = relative_error(r.value, r.fd->estimate);
    }
    return r;
  });

  Csv csv;
  std::vector<std::string> head = m.coordinate_names();
  const auto width = rows.empty() ? 0 : rows[0].value.size();
  for (Eigen::Index i = 0; i < width; ++i) head.push_back("value_" + std::to_string(i));
  if (o.check_fd) {
    for (Eigen::Index i = 0; i < width; ++i) head.push_back("fd_" + std::to_string(i));
    head.push_back("relative_error");
    head.push_back("order");
  }
  csv.header(head);
  json records = json::array();
  double worst = 0.0, order_dev = 0.0;
  bool any_order = false;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    auto cells = coordinate_cells(pts[k]);
    for (Eigen::Index i = 0; i < r.value.size(); ++i) cells.push_back(number(r.value[i]));
    json rec = {{"x", to_json(pts[k].coords)}, {"value", to_json(r.value)}};
    if (r.closed_agreement) rec["closed_form_agreement"] = *r.closed_agreement;
    if (r.fd) {
      for (Eigen::Index i = 0; i < r.fd->estimate.size(); ++i) cells.push_back(number(r.fd->estimate[i]));
      cells.push_back(number(r.error));
      cells.push_back(number(r.fd->order));
      rec["fd_estimate"] = to_json(r.fd->estimate);
      rec["fd_order"] = finite_or_null(r.fd->order);
      rec["relative_error"] = r.error;
      worst = std::max(worst, r.error);
      if (std::isfinite(r.fd->order)) {
        any_order = true;
        order_dev = std::max(order_dev, std::abs(r.fd->order - 2.0));
      }
    }
    csv.row(cells);
    records.push_back(rec);
  }
  ctx.csv = csv.str();
  ctx.results = {{"quantity", o.quantity}, {"direction", dir.describe()}, {"records", records}};
  if (o.check_fd) {
    ctx.check(make_check("vary", "fd_relative_error", worst, 1e-4));
    if (any_order) {
      ctx.check(make_check("vary", "fd_order_deviation", order_dev, 0.2, Relation::less_equal));
    } else {
      ctx.warnings.push_back("no observable finite-difference order: the quantity is linear in s at every point");
    }
    if (std::holds_alternative<ReebQuantity>(quantity) && dir.kind() == PerturbationDirection::Kind::scaled_form) {
      auto report = score_reeb_variants(form, {dir.h()}, pts);
      json scores = json::array();
      for (const auto& s : report.scores) {
        scores.push_back({{"variant", to_string(s.variant)}, {"max_relative_error", s.max_relative_error}});
      }
      ctx.results["variants"] = scores;
      ctx.results["variant_winner"] = to_string(report.winner);
    }
  }
}

void cmd_kernel(const Options& o, Context& ctx) {
  auto form = parse_form(o);
  const auto& m = form.manifold();
  if (!m.compact()) throw UsageError("kernel needs a compact model (t3 or s3)");
  const bool sphere = m.kind() == ModelKind::sphere;
  std::string rule = o.quadrature;
  if (rule == "auto") rule = (!sphere && !form.is_perturbed()) ? "trapezoid" : "mc";
  if (rule == "trapezoid" && sphere) throw UsageError("trapezoid quadrature is defined on the torus only");
  auto basis = sphere ? FunctionBasis::sphere_monomials(m, o.degree) : FunctionBasis::torus_modes(m, o.modes);
  ctx.computing = true;

  auto scheme = rule == "trapezoid" ? trapezoid_quadrature(form, o.trapezoid) : liouville_quadrature(form, o.N, o.seed);
  auto op = assemble_operator(form, basis, scheme);
  auto k = kernel_dimensions(op, o.rel_tol);
  auto lsq = residual_kernel_dimension(op, o.rel_tol);
  ctx.results = {{"basis", sphere ? "sphere_monomials" : "torus_modes"},
                 {"basis_size", basis.size()},
                 {"rank", op.rank},
                 {"quadrature", scheme.rule},
                 {"quadrature_points", scheme.size()},
                 {"mass", scheme.mass},
                 {"mass_sigma", scheme.mass_sigma},
                 {"h0", k.h0},
                 {"h1", k.h1},
                 {"threshold", k.threshold},
                 {"gap", finite_or_null(k.gap)},
                 {"ambiguous", k.ambiguous},
                 {"skew_defect", skew_defect(op)},
                 {"singular_values", to_json(op.singular_values)},
                 {"least_squares",
                  {{"h0", lsq.h0},
                   {"gap", finite_or_null(lsq.gap)},
                   {"ambiguous", lsq.ambiguous},
                   {"singular_values", to_json(op.residual_singular_values)}}}};
  ctx.check(make_check("kernel", "h0_equals_h1", static_cast<double>(k.h0), static_cast<double>(k.h1),
                       Relation::equal));
  if (k.ambiguous) ctx.warnings.push_back("ambiguous rank: singular value gap below 10");
  Csv csv;
  csv.header({"index", "singular_value", "residual_singular_value"});
  for (Eigen::Index i = 0; i < op.singular_values.size(); ++i) {
    csv.row({std::to_string(i), number(op.singular_values[i]), number(op.residual_singular_values[i])});
  }
  ctx.csv = csv.str();
}

void cmd_solve(const Options& o, Context& ctx) {
  auto form = parse_form(o);
  const auto& m = form.manifold();
  if (m.kind() != ModelKind::darboux) throw UsageError("solve works on the Darboux chart");
  auto u = require_field(o.u, m, "u");
  auto f0 = ScalarField::parse(o.f0, m);
  ctx.computing = true;

  auto sol = solve_characteristic(form, u, f0, {o.grid, o.periodic});
  Csv csv;
  auto head = m.coordinate_names();
  head.push_back("f");
  csv.header(head);
  for (std::size_t i = 0; i < sol.points.size(); ++i) {
    auto cells = coordinate_cells(sol.points[i]);
    cells.push_back(number(sol.values[i]));
    csv.row(cells);
  }
  ctx.csv = csv.str();
  double worst_mean = 0.0;
  for (double v : sol.fiber_means) worst_mean = std::max(worst_mean, std::abs(v));
  ctx.results = {{"solvable", sol.solvable},
                 {"periodic", o.periodic},
                 {"points", sol.points.size()},
                 {"check_residual", sol.check_residual}};
  if (o.periodic) ctx.results["max_fiber_mean"] = worst_mean;
  if (sol.solvable) {
    ctx.check(make_check("solve", "fd_check_residual", sol.check_residual, 1e-6));
  } else {
    ctx.warnings.push_back("unsolvable: a fiber mean of u does not vanish");
  }
}

void cmd_verify(const Options& o, Context& ctx) {
  VerifyConfig cfg;
  cfg.form = parse_form(o);
  if (!trim(o.H).empty()) cfg.hamiltonian = ScalarField::parse(o.H, cfg.form.manifold());
  cfg.samples = o.samples ? o.samples : 200;
  cfg.cases = o.cases;
  cfg.quadrature = o.N;
  cfg.seed = o.seed;
  cfg.degree = o.degree;
  cfg.modes = o.modes;
  cfg.trapezoid = o.trapezoid;
  std::vector<std::string> suites;
  if (trim(o.suite) == "all") {
    suites = kSuites;
  } else {
    for (const auto& s : split_top_level(o.suite, ',')) suites.push_back(trim(s));
  }
  for (const auto& s : suites) {
    if (std::find(kSuites.begin(), kSuites.end(), s) == kSuites.end()) throw UsageError("unknown suite '" + s + "'");
  }
  ctx.computing = true;

  auto report = run_suites(cfg, suites);
  for (const auto& c : report.checks) ctx.check(c);
  ctx.manifest = json::array();
  for (const auto& e : report.manifest) {
    json entry = {{"suite", e.suite}, {"identity", e.identity}, {"checked", e.checked}};
    if (!e.checked) entry["reason"] = e.reason;
    ctx.manifest.push_back(entry);
  }
  for (const auto& d : report.diagnostics) {
    json entry = {{"suite", d.suite}, {"name", d.name}, {"value", finite_or_null(d.value)}};
    if (!d.text.empty()) entry["text"] = d.text;
    ctx.diagnostics.push_back(entry);
  }
  ctx.results = {{"suites", suites}, {"hamiltonian", (cfg.hamiltonian ? *cfg.hamiltonian : default_hamiltonian(cfg.form)).text()}};
  Csv csv;
  csv.header({"suite", "name", "value", "relation", "tolerance", "pass"});
  for (const auto& c : report.checks) {
    csv.row({c.suite, c.name, number(c.value), to_string(c.relation), number(c.tolerance), c.pass ? "1" : "0"});
  }
  ctx.csv = csv.str();
}

struct Command {
  std::string name;
  std::string help;
  std::string default_format;
  std::function<void(const Options&, Context&)> run;
};

void add_common(Binder& b, Options& o) {
  b.opt("form", o.form, "model form: darboux[:n=..,box=lo..hi], t3[:m=..], s3");
  b.opt("perturb", o.perturb, "perturbation, e.g. conformal:f=x,s=0.1 (';' separates several)");
  b.opt("format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  b.opt("out", o.out, "output file (stdout when empty)");
  b.opt("report", o.report, "also write the JSON report here");
}

/// Applies key=value lines of the config file as flags that the command
/// line did not already set.
void merge_config(std::vector<std::string>& args, const std::string& path, CLI::App& app) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }

  auto find_sub = [&]() -> std::ptrdiff_t {
    for (std::size_t i = 1; i < args.size(); ++i) {
      if (app.get_subcommand_no_throw(args[i]) != nullptr) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  };
  for (const auto& [key, value] : entries) {
    if (key == "command" && find_sub() < 0) args.insert(args.begin() + 1, value);
  }
  const auto at = find_sub();
  if (at < 0) throw UsageError("no command given on the command line or in the config file");
  CLI::App* sub = app.get_subcommand(args[static_cast<std::size_t>(at)]);

  auto given = [&](const std::string& flag) {
    for (const auto& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  for (const auto& [key, value] : entries) {
    if (key == "command") {
      if (value != args[static_cast<std::size_t>(at)]) throw UsageError("config command '" + value + "' does not match");
      continue;
    }
    const std::string flag = "--" + key;
    if (key == "threads" || key == "config") {
      if (key == "threads" && !given(flag)) args.insert(args.begin() + 1, flag + "=" + value);
      continue;
    }
    if (sub->get_option_no_throw(flag) == nullptr) throw UsageError("unknown config key '" + key + "'");
    if (!given(flag)) args.push_back(flag + "=" + value);
  }
}

std::string config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return "";
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
}

}  // namespace

int run(const std::vector<std::string>& input, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> args = input;
  if (args.empty()) args.push_back("reeb-lab");

  CLI::App app{"Contact Hamiltonian calculus on model manifolds", "reeb-lab"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  std::string config;
  app.add_option("--threads", threads, "OpenMP threads (0 keeps the runtime default)");
  app.add_option("--config", config, "key=value file merged under the command-line flags");

  std::map<std::string, Options> options;
  std::map<std::string, Echo> echoes;
  std::vector<Command> commands{
      {"flow", "integrate the Reeb or a contact Hamiltonian field", "csv", cmd_flow},
      {"exponent", "conformal exponent of psi_H^T at points", "csv", cmd_exponent},
      {"discriminant", "zero set of the conformal exponent", "csv", cmd_discriminant},
      {"vary", "first variation of R, X_H or the exponent in the contact form", "json", cmd_vary},
      {"kernel", "finite-basis estimate of the kernel of R", "json", cmd_kernel},
      {"solve", "R[f] = u by characteristics on the Darboux chart", "csv", cmd_solve},
      {"verify", "identity suites of every module", "json", cmd_verify},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    Options& o = options[c.name];
    Binder b(sub, echoes[c.name]);
    o.format = c.default_format;
    if (c.name == "flow") {
      o.form = "darboux";
      add_common(b, o);
      b.opt("field", o.field, "reeb or ham:H=<expr>");
      b.opt("x0", o.x0, "start point, comma separated");
      b.opt("T", o.T, "duration");
      b.opt("step", o.step, "initial RK4 step");
      b.opt("tol", o.tol, "step-doubling tolerance");
      b.flag("transport", o.transport, "append the linearized transport matrix");
    } else if (c.name == "exponent" || c.name == "discriminant") {
      o.form = "t3";
      o.step = 1e-2;
      o.samples = c.name == "exponent" ? 0 : 0;
      o.seed = 1;
      add_common(b, o);
      b.opt("H", o.H, "contact Hamiltonian");
      b.opt("T", o.T, "time of psi_H^T");
      b.opt("step", o.step, "initial RK4 step");
      b.opt("tol", o.tol, "step-doubling tolerance");
      b.opt("tol-zero", o.tol_zero, "|g| below this counts as zero");
      b.opt("samples", o.samples, "seeded sample points");
      b.opt("seed", o.seed, "sampling seed");
      if (c.name == "exponent") {
        b.opt("x0", o.x0, "single point, comma separated");
        b.opt("method", o.method, "integral, or both to add the pullback method")
            ->check(CLI::IsMember({"integral", "both"}));
      } else {
        b.opt("resolution", o.resolution, "grid nodes per parameter (ignored with --samples)");
      }
    } else if (c.name == "vary") {
      o.form = "darboux";
      o.step = 1e-2;
      o.seed = 1;
      add_common(b, o);
      b.opt("quantity", o.quantity, "reeb, ham:H=<expr> or exponent:H=<expr>");
      b.opt("dir", o.dir, "h=<expr> or alpha=[e1,...]");
      b.opt("x0", o.x0, "single point, comma separated");
      b.opt("samples", o.samples, "seeded sample points (default 5)");
      b.opt("seed", o.seed, "sampling seed");
      b.opt("T", o.T, "time of psi_H^T for the exponent");
      b.opt("step", o.step, "initial RK4 step");
      b.opt("tol", o.tol, "step-doubling tolerance");
      b.flag("check-fd", o.check_fd, "compare against the finite-difference oracle");
    } else if (c.name == "kernel") {
      o.form = "s3";
      o.N = 50000;
      o.seed = 1;
      add_common(b, o);
      b.opt("degree", o.degree, "sphere monomial degree");
      b.opt("modes", o.modes, "torus mode bound");
      b.opt("N", o.N, "Monte Carlo points");
      b.opt("seed", o.seed, "sampling seed");
      b.opt("tol", o.rel_tol, "relative singular value threshold");
      b.opt("quadrature", o.quadrature, "auto, mc or trapezoid")->check(CLI::IsMember({"auto", "mc", "trapezoid"}));
      b.opt("trapezoid", o.trapezoid, "trapezoid nodes per axis");
    } else if (c.name == "solve") {
      o.form = "darboux";
      add_common(b, o);
      b.opt("u", o.u, "right-hand side");
      b.opt("f0", o.f0, "data at z = 0");
      b.opt("grid", o.grid, "nodes per axis");
      b.flag("periodic", o.periodic, "periodic z fibers of length 2 pi");
    } else {
      o.form = "t3";
      add_common(b, o);
      b.opt("suite", o.suite, "all or a comma list of suites");
      b.opt("H", o.H, "Hamiltonian (a non-strict default per model when empty)");
      b.opt("N", o.N, "Monte Carlo points");
      b.opt("seed", o.seed, "seed");
      b.opt("samples", o.samples, "pointwise samples (default 200)");
      b.opt("cases", o.cases, "variation cases");
      b.opt("degree", o.degree, "sphere monomial degree");
      b.opt("modes", o.modes, "torus mode bound");
      b.opt("trapezoid", o.trapezoid, "trapezoid nodes per axis");
    }
  }

  try {
    const std::string cfg_path = config_path(args);
    if (!cfg_path.empty()) merge_config(args, cfg_path, app);
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, eo;
    const int code = app.exit(e, o, eo);
    out << o.str();
    err << eo.str();
    return code == 0 ? kExitPass : kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  set_thread_count(threads);

  const auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  const Options& o = options[name];
  const Command& cmd = *std::find_if(commands.begin(), commands.end(), [&](const Command& c) { return c.name == name; });

  json report;
  report["tool"] = "reeb-lab";
  report["version"] = version();
  report["command"] = name;
  json cfg_echo = json::object();
  for (const auto& [key, get] : echoes[name]) cfg_echo[key] = get();
  report["config"] = cfg_echo;

  Context ctx;
  int status = kExitPass;
  try {
    cmd.run(o, ctx);
  } catch (const std::exception& e) {
    if (!ctx.computing) {
      err << "usage error: " << e.what() << "\n";
      return kExitUsage;
    }
    report["error"] = {{"type", error_type(e)}, {"message", e.what()}};
    status = kExitFailure;
  }
  report["checks"] = ctx.checks;
  if (status == kExitPass && !ctx.pass()) status = kExitFailure;
  report["pass"] = status == kExitPass;
  report["results"] = ctx.results;
  if (!ctx.manifest.is_null()) report["manifest"] = ctx.manifest;
  report["diagnostics"] = ctx.diagnostics;
  report["warnings"] = ctx.warnings;
  report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  try {
    const std::string text = report.dump(2) + "\n";
    if (o.format == "json") {
      write_text(o.out, text, out);
    } else if (ctx.csv) {
      write_text(o.out, *ctx.csv, out);
    }
    if (!o.report.empty()) write_text(o.report, text, out);
    if (status == kExitFailure && report.contains("error")) err << "error: " << report["error"]["message"].get<std::string>() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return status;
}

}  // namespace reeb::cli
