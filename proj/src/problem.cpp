#include "thinlab/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "thinlab/format.hpp"
#include "thinlab/rng.hpp"

namespace thinlab {

std::string HypothesisViolation::message() const {
  std::ostringstream os;
  os << "hypothesis '" << name << "' violated at " << location
     << " (value = " << value << ")";
  return os.str();
}

namespace {

double get_param(const std::map<std::string, double>& params,
                 const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

ProfileG make_profile(const std::string& name,
                      const std::map<std::string, double>& params) {
  ProfileG g;
  g.name = name;
  g.params = params;
  if (name == "constant") {
    double c = get_param(params, "value", 1.0);
    g.params["value"] = c;
    g.alpha1 = c;
    g.alpha2 = c;
    g.eval = [c](double) { return c; };
  } else if (name == "bump") {
    // 1 + amp * exp(-(x/width)^2)
    double amp = get_param(params, "amp", 0.5);
    double width = get_param(params, "width", 1.0);
    g.params["amp"] = amp;
    g.params["width"] = width;
    g.alpha1 = amp >= 0.0 ? 1.0 : 1.0 + amp;
    g.alpha2 = amp >= 0.0 ? 1.0 + amp : 1.0;
    g.eval = [amp, width](double x) {
      double s = x / width;
      return 1.0 + amp * std::exp(-s * s);
    };
  } else {
    throw UnknownProblemError("unknown profile rule '" + name + "'");
  }
  return g;
}

WeightA make_weight(const std::string& name,
                    const std::map<std::string, double>& params) {
  WeightA a;
  a.name = name;
  a.params = params;
  if (name == "quadratic") {
    a.eval = [](double x, double y) { return 1.0 + x * x + y * y; };
  } else if (name == "quadratic_x") {
    // y-independent variant: a = E_eps abar holds exactly.
    a.eval = [](double x, double) { return 1.0 + x * x; };
  } else if (name == "constant") {
    double c = get_param(params, "value", 1.0);
    a.params["value"] = c;
    a.eval = [c](double, double) { return c; };
  } else {
    throw UnknownProblemError("unknown weight rule '" + name + "'");
  }
  return a;
}

NonlinearityF make_nonlinearity(const std::string& name, double lipschitz) {
  NonlinearityF f;
  f.name = name;
  f.scale = lipschitz;
  f.lipschitz = lipschitz;
  double L = lipschitz;
  if (name == "tanh") {
    f.eval = [L](double s) { return L * std::tanh(s); };
    f.deriv = [L](double s) {
      double c = std::cosh(s);
      return L / (c * c);
    };
  } else if (name == "sin") {
    f.eval = [L](double s) { return L * std::sin(s); };
    f.deriv = [L](double s) { return L * std::cos(s); };
  } else if (name == "linear") {
    f.eval = [L](double s) { return L * s; };
    f.deriv = [L](double) { return L; };
  } else if (name == "zero") {
    f.eval = [](double) { return 0.0; };
    f.deriv = [](double) { return 0.0; };
  } else {
    throw UnknownProblemError("unknown nonlinearity rule '" + name + "'");
  }
  return f;
}

ProblemConfig builtin_problem(const std::string& name) {
  ProblemConfig cfg;
  cfg.name = name;
  if (name == "flat") {
    cfg.profile = make_profile("constant", {{"value", 1.0}});
    cfg.weight = make_weight("quadratic");
    cfg.nonlinearity = make_nonlinearity("tanh", 1.0);
  } else if (name == "bump") {
    cfg.profile = make_profile("bump", {{"amp", 0.5}, {"width", 1.0}});
    cfg.weight = make_weight("quadratic");
    cfg.nonlinearity = make_nonlinearity("tanh", 1.0);
  } else if (name == "paper-generic") {
    cfg.profile = make_profile("constant", {{"value", 1.0}});
    cfg.weight = make_weight("quadratic");
    cfg.nonlinearity = make_nonlinearity("sin", 1.0);
  } else {
    throw UnknownProblemError("unknown builtin problem '" + name + "'");
  }
  return cfg;
}

std::vector<std::string> builtin_problem_names() {
  return {"flat", "bump", "paper-generic"};
}

WeightTailProxy weight_tail_proxy(const WeightA& a, double p, double x_max,
                                  double y_max, int samples) {
  WeightTailProxy proxy;
  if (p <= 2.0) return proxy;  // exponent undefined; reported elsewhere
  double q = 2.0 / (p - 2.0);
  int nx = std::max(samples, 8);
  int ny = std::max(samples / 4, 8);
  double hx = 2.0 * x_max / nx;
  double hy = y_max / ny;
  double total = 0.0;
  double shell = 0.0;
  for (int i = 0; i < nx; ++i) {
    double x = -x_max + (i + 0.5) * hx;
    for (int j = 0; j < ny; ++j) {
      double y = (j + 0.5) * hy;
      double cell = hx * hy * std::pow(a(x, y), -q);
      total += cell;
      if (std::abs(x) > 0.9 * x_max || y > 0.9 * y_max) shell += cell;
    }
  }
  proxy.integral = total;
  proxy.tail_fraction = total > 0.0 ? shell / total : 0.0;
  return proxy;
}

ValidationReport validate_config(const ProblemConfig& cfg) {
  ValidationReport report;
  auto fail = [&report](const std::string& name, const std::string& where,
                        double value) {
    report.violations.push_back({name, where, value});
  };

  if (!(cfg.p > 2.0)) {
    fail("p > 2", "config (theta' = p/(p-2) undefined otherwise)", cfg.p);
  }
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 1.0)) {
    fail("0 <= epsilon < 1", "config", cfg.epsilon);
  }
  if (cfg.strict_paper_hypotheses) {
    // The limit problem here lives on an interval (n = 1); p < n can never
    // hold in that regime.
    fail("strict hypotheses: p < n", "desk-scale build fixes n = 1", cfg.p);
  }
  if (!(cfg.x_max > 0.0)) fail("x_max > 0", "config", cfg.x_max);
  if (cfg.nx < 2) fail("nx >= 2", "config", cfg.nx);
  if (cfg.nz < 2) fail("nz >= 2", "config", cfg.nz);
  if (!(cfg.dt > 0.0)) fail("dt > 0", "config", cfg.dt);
  if (!(cfg.newton_tol > 0.0)) fail("newton_tol > 0", "config", cfg.newton_tol);

  if (!cfg.profile.eval || !cfg.weight.eval || !cfg.nonlinearity.eval) {
    fail("rules populated", "config", 0.0);
    return report;
  }

  int ns = std::max(cfg.validation_samples, 16);

  // Profile bounds on the validation grid.
  if (!(cfg.profile.alpha1 > 0.0)) {
    fail("alpha1 > 0", "profile bounds", cfg.profile.alpha1);
  } else {
    for (int i = 0; i <= ns; ++i) {
      double x = -cfg.x_max + 2.0 * cfg.x_max * i / ns;
      double gx = cfg.profile(x);
      if (!(gx >= cfg.profile.alpha1 && gx <= cfg.profile.alpha2)) {
        std::ostringstream os;
        os << "x = " << x;
        fail("alpha1 <= g <= alpha2", os.str(), gx);
        break;
      }
    }
  }

  // Weight lower bound over the sampling box [-x_max, x_max] x [0, y_max].
  double y_max = std::max(cfg.profile.alpha2, 1e-6);
  {
    bool bad = false;
    int ny = std::max(ns / 4, 8);
    for (int i = 0; i <= ns && !bad; ++i) {
      double x = -cfg.x_max + 2.0 * cfg.x_max * i / ns;
      for (int j = 0; j <= ny && !bad; ++j) {
        double y = y_max * j / ny;
        double av = cfg.weight(x, y);
        if (!(av >= 1.0)) {
          std::ostringstream os;
          os << "(x, y) = (" << x << ", " << y << ")";
          fail("a >= 1", os.str(), av);
          bad = true;
        }
      }
    }
  }

  // Integrability proxy for the weight.
  if (cfg.p > 2.0) {
    WeightTailProxy proxy =
        weight_tail_proxy(cfg.weight, cfg.p, cfg.x_max, y_max, ns);
    if (!std::isfinite(proxy.integral)) {
      fail("int a^{-2/(p-2)} finite", "sampling box", proxy.integral);
    } else if (proxy.tail_fraction > cfg.tail_tol) {
      fail("weight tail below tolerance", "outermost 10% shell",
           proxy.tail_fraction);
    }
  }

  // Nonlinearity: f(0) = 0 exactly, Lipschitz spot check on random pairs.
  if (cfg.nonlinearity(0.0) != 0.0) {
    fail("f(0) = 0", "s = 0", cfg.nonlinearity(0.0));
  }
  if (!(cfg.nonlinearity.lipschitz > 0.0)) {
    fail("L > 0", "declared Lipschitz constant", cfg.nonlinearity.lipschitz);
  } else {
    Rng rng(0x7a1d5eedULL);  // fixed stream: validation must be idempotent
    double L = cfg.nonlinearity.lipschitz;
    for (int k = 0; k < 256; ++k) {
      double s = rng.uniform(-10.0, 10.0);
      double t = rng.uniform(-10.0, 10.0);
      double lhs = std::abs(cfg.nonlinearity(s) - cfg.nonlinearity(t));
      double rhs = L * std::abs(s - t);
      if (lhs > rhs * (1.0 + 1e-12) + 1e-15) {
        std::ostringstream os;
        os << "(s, t) = (" << s << ", " << t << ")";
        fail("|f(s) - f(t)| <= L |s - t|", os.str(), lhs - rhs);
        break;
      }
    }
  }

  if (report.violations.empty()) {
    report.problem =
        ValidatedProblem(std::make_shared<const ProblemConfig>(cfg));
  }
  return report;
}

// ---------------------------------------------------------------------------
// key=value serialization

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigParseError("key '" + key + "': cannot parse number '" + v +
                           "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  double d = parse_double(key, v);
  return static_cast<int>(d);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigParseError("key '" + key + "': cannot parse bool '" + v + "'");
}

}  // namespace

ProblemConfig parse_config_text(const std::string& text) {
  // First pass: collect key/value pairs in order.
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigParseError("line " + std::to_string(lineno) +
                             ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigParseError("line " + std::to_string(lineno) +
                             ": empty key or value");
    }
    kv.emplace_back(key, value);
  }

  // Builtin base first, if named.
  ProblemConfig cfg;
  std::string profile_name, weight_name, nonlin_name;
  std::map<std::string, double> profile_params, weight_params;
  bool has_custom_rule = false;
  for (auto& [key, value] : kv) {
    if (key == "problem") {
      try {
        cfg = builtin_problem(value);
      } catch (const UnknownProblemError& e) {
        throw ConfigParseError(e.what());
      }
    }
  }

  double lipschitz = cfg.nonlinearity.eval ? cfg.nonlinearity.scale : 1.0;
  std::optional<double> lipschitz_declared;

  for (auto& [key, value] : kv) {
    if (key == "problem") {
      continue;
    } else if (key == "p") {
      cfg.p = parse_double(key, value);
    } else if (key == "epsilon") {
      cfg.epsilon = parse_double(key, value);
    } else if (key == "x_max") {
      cfg.x_max = parse_double(key, value);
    } else if (key == "nx") {
      cfg.nx = parse_int(key, value);
    } else if (key == "nz") {
      cfg.nz = parse_int(key, value);
    } else if (key == "dt") {
      cfg.dt = parse_double(key, value);
    } else if (key == "tend") {
      cfg.tend = parse_double(key, value);
    } else if (key == "newton_tol") {
      cfg.newton_tol = parse_double(key, value);
    } else if (key == "max_newton") {
      cfg.max_newton = parse_int(key, value);
    } else if (key == "mu") {
      cfg.mu = parse_double(key, value);
    } else if (key == "fixed_point_fallback") {
      cfg.fixed_point_fallback = parse_bool(key, value);
    } else if (key == "store_stride") {
      cfg.store_stride = parse_int(key, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_double(key, value));
    } else if (key == "ensemble") {
      cfg.ensemble = parse_int(key, value);
    } else if (key == "horizon_factor") {
      cfg.horizon_factor = parse_double(key, value);
    } else if (key == "validation_samples") {
      cfg.validation_samples = parse_int(key, value);
    } else if (key == "tail_tol") {
      cfg.tail_tol = parse_double(key, value);
    } else if (key == "strict_paper_hypotheses") {
      cfg.strict_paper_hypotheses = parse_bool(key, value);
    } else if (key == "profile") {
      profile_name = value;
      has_custom_rule = true;
    } else if (key.rfind("profile.", 0) == 0) {
      profile_params[key.substr(8)] = parse_double(key, value);
      has_custom_rule = true;
    } else if (key == "weight") {
      weight_name = value;
      has_custom_rule = true;
    } else if (key.rfind("weight.", 0) == 0) {
      weight_params[key.substr(7)] = parse_double(key, value);
      has_custom_rule = true;
    } else if (key == "nonlinearity") {
      nonlin_name = value;
      has_custom_rule = true;
    } else if (key == "lipschitz") {
      lipschitz = parse_double(key, value);
      has_custom_rule = true;
    } else if (key == "lipschitz_declared") {
      lipschitz_declared = parse_double(key, value);
    } else {
      throw ConfigParseError("unknown key '" + key + "'");
    }
  }

  if (!cfg.profile.eval && profile_name.empty()) {
    // No builtin and no rules: fall back to the flat defaults.
    ProblemConfig base = builtin_problem("flat");
    cfg.profile = base.profile;
    cfg.weight = base.weight;
    cfg.nonlinearity = base.nonlinearity;
    cfg.name = has_custom_rule ? "custom" : "flat";
  }
  try {
    if (!profile_name.empty() || !profile_params.empty()) {
      std::string nm = profile_name.empty() ? cfg.profile.name : profile_name;
      auto params = profile_params.empty() && nm == cfg.profile.name
                        ? cfg.profile.params
                        : profile_params;
      cfg.profile = make_profile(nm, params);
    }
    if (!weight_name.empty() || !weight_params.empty()) {
      std::string nm = weight_name.empty() ? cfg.weight.name : weight_name;
      auto params = weight_params.empty() && nm == cfg.weight.name
                        ? cfg.weight.params
                        : weight_params;
      cfg.weight = make_weight(nm, params);
    }
    if (!nonlin_name.empty() || !cfg.nonlinearity.eval ||
        lipschitz != cfg.nonlinearity.scale) {
      std::string nm =
          nonlin_name.empty() ? cfg.nonlinearity.name : nonlin_name;
      cfg.nonlinearity = make_nonlinearity(nm, lipschitz);
    }
  } catch (const UnknownProblemError& e) {
    throw ConfigParseError(e.what());
  }
  if (lipschitz_declared) {
    // Declared constant may differ from the scale; validation spot-checks it.
    cfg.nonlinearity.lipschitz = *lipschitz_declared;
  }
  return cfg;
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigParseError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const ProblemConfig& cfg) {
  std::ostringstream os;
  os << "# thinlab problem configuration\n";
  auto put = [&os](const std::string& k, const std::string& v) {
    os << k << " = " << v << "\n";
  };
  put("p", fmt_double(cfg.p));
  put("epsilon", fmt_double(cfg.epsilon));
  put("x_max", fmt_double(cfg.x_max));
  put("nx", std::to_string(cfg.nx));
  put("nz", std::to_string(cfg.nz));
  put("profile", cfg.profile.name);
  for (auto& [k, v] : cfg.profile.params) put("profile." + k, fmt_double(v));
  put("weight", cfg.weight.name);
  for (auto& [k, v] : cfg.weight.params) put("weight." + k, fmt_double(v));
  put("nonlinearity", cfg.nonlinearity.name);
  put("lipschitz", fmt_double(cfg.nonlinearity.scale));
  if (cfg.nonlinearity.lipschitz != cfg.nonlinearity.scale) {
    put("lipschitz_declared", fmt_double(cfg.nonlinearity.lipschitz));
  }
  put("dt", fmt_double(cfg.dt));
  put("tend", fmt_double(cfg.tend));
  put("newton_tol", fmt_double(cfg.newton_tol));
  put("max_newton", std::to_string(cfg.max_newton));
  put("mu", fmt_double(cfg.mu));
  put("fixed_point_fallback", cfg.fixed_point_fallback ? "true" : "false");
  put("store_stride", std::to_string(cfg.store_stride));
  put("seed", std::to_string(cfg.seed));
  put("ensemble", std::to_string(cfg.ensemble));
  put("horizon_factor", fmt_double(cfg.horizon_factor));
  put("validation_samples", std::to_string(cfg.validation_samples));
  put("tail_tol", fmt_double(cfg.tail_tol));
  put("strict_paper_hypotheses",
      cfg.strict_paper_hypotheses ? "true" : "false");
  if (cfg.profile.name == "custom" || cfg.weight.name == "custom" ||
      cfg.nonlinearity.name == "custom") {
    throw ConfigParseError("cannot serialize hand-built (custom) rules");
  }
  return os.str();
}

void save_config(const ProblemConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigParseError("cannot write config file '" + path + "'");
  out << serialize_config(cfg);
}

}  // namespace thinlab
