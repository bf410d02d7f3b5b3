#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reeb/operator.hpp"
#include "reeb/variations.hpp"

namespace reeb {

enum class Relation { less, less_equal, equal, greater, greater_equal };
std::string to_string(Relation r);

/// One asserted comparison `value <relation> tolerance`.
struct Check {
  std::string suite;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::less;
  bool pass = false;
};

Check make_check(std::string suite, std::string name, double value, double tolerance,
                 Relation relation = Relation::less);

/// Identity covered by a suite, with the reason when it was not run.
struct ManifestEntry {
  std::string suite;
  std::string identity;
  bool checked = false;
  std::string reason;
};

/// Reported quantity that is not asserted.
struct Diagnostic {
  std::string suite;
  std::string name;
  double value = 0.0;
  std::string text;
};

struct SuiteReport {
  std::vector<Check> checks;
  std::vector<ManifestEntry> manifest;
  std::vector<Diagnostic> diagnostics;

  bool pass() const;
  void append(const SuiteReport& other);
};

struct VerifyConfig {
  ContactForm form = ContactForm::darboux();
  std::optional<ScalarField> hamiltonian;  ///< default_hamiltonian when unset
  std::size_t samples = 200;  ///< pointwise identities
  std::size_t cases = 50;     ///< variation cases
  std::size_t quadrature = 100000;
  std::uint64_t seed = 42;
  int degree = 2;      ///< sphere monomial basis
  int modes = 3;       ///< torus mode bound
  int trapezoid = 16;  ///< torus operator nodes per axis
  Execution execution = Execution::parallel;
};

/// Non-strict Hamiltonian used when none is configured.
ScalarField default_hamiltonian(const ContactForm& form);

/// Seeded points: the model's own sampler, or [-1,1] per axis on an
/// unbounded Darboux chart.
std::vector<Point> probe_points(const ContactForm& form, std::size_t count, std::uint64_t seed);

inline const std::vector<std::string> kSuites{"geometry",  "contact",   "flows",    "conformal",
                                              "variations", "integrals", "operator", "characteristic"};

SuiteReport verify_geometry(const VerifyConfig& cfg);
SuiteReport verify_contact(const VerifyConfig& cfg);
SuiteReport verify_flows(const VerifyConfig& cfg);
SuiteReport verify_conformal(const VerifyConfig& cfg);
SuiteReport verify_variations(const VerifyConfig& cfg);
SuiteReport verify_integrals(const VerifyConfig& cfg);
SuiteReport verify_operator(const VerifyConfig& cfg);
SuiteReport verify_characteristic(const VerifyConfig& cfg);

/// Runs the named suites in kSuites order. Throws DomainError on an unknown
/// name.
SuiteReport run_suites(const VerifyConfig& cfg, const std::vector<std::string>& suites);

/// Pointwise residuals of the Reeb and Hamiltonian defining equations.
struct ContactResiduals {
  double reeb_normalization = 0.0;  ///< max |λ(R) - 1|
  double reeb_kernel = 0.0;         ///< max |R⌟dλ|
  double ham_lambda = 0.0;          ///< max |X⌟λ + H|
  double ham_dlambda = 0.0;         ///< max |X⌟dλ - dH + R[H]λ|
  double dh_reconstruction = 0.0;   ///< max |X^π⌟dλ + R[H]λ - dH|
  double decomposition = 0.0;       ///< max |v^π + λ(v)R - v|
  int min_ample_rank = 0;           ///< rank of {X_{-1}, X_{x_i}}
};

ContactResiduals contact_residuals(const ContactForm& form, const ScalarField& h, const std::vector<Point>& points);

}  // namespace reeb
