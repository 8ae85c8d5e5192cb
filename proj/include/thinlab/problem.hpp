#pragma once

// Continuous problem data for the quasilinear parabolic equation
//
//   u_t - div(|grad u|^{p-2} grad u) + a(x,y) |u|^{p-2} u = f(u)
//
// on the thin strip 0 < y < eps * g(x) over |x| <= x_max (homogeneous
// Neumann everywhere), together with its 1D weighted limit problem
//
//   u_t - (1/g) (g |u'|^{p-2} u')' + a(x,0) |u|^{p-2} u = f(u).
//
// Hypotheses carried by the data: 0 < alpha1 <= g <= alpha2, a >= 1 with an
// integrable negative power (checked through a truncated tail proxy),
// f globally Lipschitz with f(0) = 0, and p > 2.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "thinlab/errors.hpp"

namespace thinlab {

// Height profile g(x) with declared bounds.
struct ProfileG {
  std::string name;                     // registry name, "custom" if hand-built
  std::map<std::string, double> params;
  double alpha1 = 1.0;                  // declared lower bound, must be > 0
  double alpha2 = 1.0;                  // declared upper bound
  std::function<double(double)> eval;

  double operator()(double x) const { return eval(x); }
};

// Confining weight a(x, y) and its trace abar(x) = a(x, 0).
struct WeightA {
  std::string name;
  std::map<std::string, double> params;
  std::function<double(double, double)> eval;

  double operator()(double x, double y) const { return eval(x, y); }
  double trace(double x) const { return eval(x, 0.0); }
};

// Reaction term f(s) with a declared Lipschitz constant. The derivative is
// used only inside Newton; it never has to be exact.
struct NonlinearityF {
  std::string name;
  double scale = 1.0;      // amplitude L in the registry formulas
  double lipschitz = 1.0;  // declared constant, spot-checked at validation
  std::function<double(double)> eval;
  std::function<double(double)> deriv;

  double operator()(double s) const { return eval(s); }
};

struct ProblemConfig {
  std::string name = "custom";

  double p = 3.0;          // exponent of the p-Laplacian, must be > 2
  double epsilon = 0.1;    // thinness parameter in [0, 1); 0 = limit problem
  double x_max = 4.0;      // truncation half-width
  int nx = 64;             // cells in x
  int nz = 8;              // cells across the thin direction

  ProfileG profile;
  WeightA weight;
  NonlinearityF nonlinearity;

  // time stepping / nonlinear solver
  double dt = 0.05;
  double tend = 20.0;
  double newton_tol = 1e-10;
  int max_newton = 50;
  double mu = 1e-8;  // Jacobian regularization; residuals always use mu = 0
  bool fixed_point_fallback = true;
  int store_stride = 10;

  // ensembles / sweeps
  std::uint64_t seed = 1234;
  int ensemble = 16;
  double horizon_factor = 10.0;

  // validation controls
  int validation_samples = 256;
  double tail_tol = 0.05;  // relative tail mass allowed in the weight proxy
  bool strict_paper_hypotheses = false;
};

struct HypothesisViolation {
  std::string name;      // which hypothesis failed, e.g. "a >= 1"
  std::string location;  // where it failed, human readable
  double value = 0.0;    // offending value

  std::string message() const;
};

// Immutable handle to a config that passed validation. Meshes and solvers
// only accept this, never a raw config.
class ValidatedProblem {
 public:
  explicit ValidatedProblem(std::shared_ptr<const ProblemConfig> cfg)
      : cfg_(std::move(cfg)) {}

  const ProblemConfig& config() const { return *cfg_; }
  std::shared_ptr<const ProblemConfig> shared_config() const { return cfg_; }

  double p() const { return cfg_->p; }
  double epsilon() const { return cfg_->epsilon; }
  double x_max() const { return cfg_->x_max; }
  double g(double x) const { return cfg_->profile(x); }
  double a(double x, double y) const { return cfg_->weight(x, y); }
  double abar(double x) const { return cfg_->weight.trace(x); }
  double f(double s) const { return cfg_->nonlinearity(s); }

 private:
  std::shared_ptr<const ProblemConfig> cfg_;
};

struct ValidationReport {
  std::vector<HypothesisViolation> violations;
  std::optional<ValidatedProblem> problem;

  bool ok() const { return violations.empty() && problem.has_value(); }
};

// Checks every hypothesis on a sampling grid and returns either a validated
// handle or the complete list of violations. Pure function: same config,
// same report.
ValidationReport validate_config(const ProblemConfig& cfg);

// Registry of ready-to-run problems: "flat", "bump", "paper-generic".
ProblemConfig builtin_problem(const std::string& name);
std::vector<std::string> builtin_problem_names();

// Function registries (name + numeric parameters, no expression parsing).
ProfileG make_profile(const std::string& name,
                      const std::map<std::string, double>& params = {});
WeightA make_weight(const std::string& name,
                    const std::map<std::string, double>& params = {});
NonlinearityF make_nonlinearity(const std::string& name, double lipschitz);

// Truncated integral of a^{-2/(p-2)} over [-x_max, x_max] x [0, y_max] by
// midpoint quadrature, and the fraction of it carried by the outermost 10%
// shell of the box. Proxy for the integrability hypothesis on the weight.
struct WeightTailProxy {
  double integral = 0.0;
  double tail_fraction = 0.0;
};
WeightTailProxy weight_tail_proxy(const WeightA& a, double p, double x_max,
                                  double y_max, int samples);

// Flat key=value config text (UTF-8, one key per line, '#' comments).
ProblemConfig parse_config_text(const std::string& text);
ProblemConfig load_config(const std::string& path);
std::string serialize_config(const ProblemConfig& cfg);
void save_config(const ProblemConfig& cfg, const std::string& path);

}  // namespace thinlab
