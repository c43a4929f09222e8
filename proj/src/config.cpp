#include "effdyn/config.hpp"
#include "effdyn/csv.hpp"
#include "effdyn/lattice.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace effdyn {

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& v : violations) msg += "\n  - " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

std::string type_name(ValueType t) {
  switch (t) {
    case ValueType::integer: return "integer";
    case ValueType::real: return "real";
    case ValueType::boolean: return "boolean";
    case ValueType::string: return "string";
    case ValueType::int_list: return "integer list";
    case ValueType::real_list: return "real list";
  }
  return "unknown";
}

std::string format_value(const ConfigValue& v) {
  struct Visitor {
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(const std::vector<std::int64_t>& l) const {
      std::string out = "[";
      for (size_t i = 0; i < l.size(); ++i) out += (i ? ", " : "") + std::to_string(l[i]);
      return out + "]";
    }
    std::string operator()(const std::vector<double>& l) const {
      std::string out = "[";
      for (size_t i = 0; i < l.size(); ++i) out += (i ? ", " : "") + format_double(l[i]);
      return out + "]";
    }
  };
  return std::visit(Visitor{}, v);
}

namespace {

// ---- value checks ----

std::function<std::string(const ConfigValue&)> positive() {
  return [](const ConfigValue& v) -> std::string {
    if (const auto* d = std::get_if<double>(&v)) return *d > 0.0 ? "" : "must be positive";
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i > 0 ? "" : "must be positive";
    return "";
  };
}

std::function<std::string(const ConfigValue&)> non_negative() {
  return [](const ConfigValue& v) -> std::string {
    if (const auto* d = std::get_if<double>(&v)) return *d >= 0.0 ? "" : "must be non-negative";
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i >= 0 ? "" : "must be non-negative";
    return "";
  };
}

std::function<std::string(const ConfigValue&)> at_least(std::int64_t lo) {
  return [lo](const ConfigValue& v) -> std::string {
    if (const auto* i = std::get_if<std::int64_t>(&v))
      return *i >= lo ? "" : "must be at least " + std::to_string(lo);
    if (const auto* l = std::get_if<std::vector<std::int64_t>>(&v)) {
      if (l->empty()) return "must not be empty";
      for (auto x : *l)
        if (x < lo) return "entries must be at least " + std::to_string(lo);
    }
    return "";
  };
}

std::function<std::string(const ConfigValue&)> one_of_ints(std::vector<std::int64_t> allowed) {
  return [allowed](const ConfigValue& v) -> std::string {
    const auto i = std::get<std::int64_t>(v);
    if (std::find(allowed.begin(), allowed.end(), i) != allowed.end()) return "";
    std::string msg = "must be one of";
    for (auto a : allowed) msg += " " + std::to_string(a);
    return msg;
  };
}

std::function<std::string(const ConfigValue&)> positive_list() {
  return [](const ConfigValue& v) -> std::string {
    const auto& l = std::get<std::vector<double>>(v);
    if (l.empty()) return "must not be empty";
    for (double x : l)
      if (!(x > 0.0)) return "entries must be positive";
    return "";
  };
}

// ---- schema builders ----

KeySpec key(std::string section, std::string name, ValueType type, std::optional<ConfigValue> fallback,
            std::string doc, std::function<std::string(const ConfigValue&)> check = {},
            std::vector<std::string> choices = {}) {
  KeySpec k;
  k.section = std::move(section);
  k.key = std::move(name);
  k.type = type;
  k.fallback = std::move(fallback);
  k.doc = std::move(doc);
  k.check = std::move(check);
  k.choices = std::move(choices);
  return k;
}

KeySpec derived_key(std::string section, std::string name, ValueType type,
                    std::function<ConfigValue(const ExperimentConfig&)> derived, std::string doc,
                    std::function<std::string(const ConfigValue&)> check = {},
                    std::vector<std::string> choices = {}) {
  KeySpec k = key(std::move(section), std::move(name), type, std::nullopt, std::move(doc), std::move(check),
                  std::move(choices));
  k.derived = std::move(derived);
  return k;
}

using I = std::int64_t;

void add(std::vector<KeySpec>& out, std::vector<KeySpec> more) {
  for (auto& k : more) out.push_back(std::move(k));
}

std::vector<KeySpec> grid_keys(I dimension, I points, double box) {
  return {
      key("grid", "dimension", ValueType::integer, ConfigValue(dimension), "1 or 3", one_of_ints({1, 3})),
      key("grid", "points", ValueType::integer, ConfigValue(points), "points per axis", at_least(2)),
      key("grid", "box_length", ValueType::real, ConfigValue(box), "periodic box edge length", positive()),
  };
}

std::vector<KeySpec> potential_keys(std::optional<ConfigValue> kind, double v0, double radius) {
  return {
      key("potential", "kind", ValueType::string, std::move(kind), "radial pair potential", {},
          {"zero", "square_well", "gaussian", "inverse_power"}),
      key("potential", "v0", ValueType::real, ConfigValue(v0), "potential strength", non_negative()),
      key("potential", "radius", ValueType::real, ConfigValue(radius),
          "square-well radius, Gaussian width or inverse-power cutoff", positive()),
      key("potential", "power", ValueType::real, ConfigValue(6.0), "inverse-power exponent (> 5)",
          [](const ConfigValue& v) -> std::string { return std::get<double>(v) > 5.0 ? "" : "must exceed 5"; }),
  };
}

std::vector<KeySpec> stepper_keys(double dt, I steps, I every) {
  return {
      key("stepper", "dt", ValueType::real, ConfigValue(dt), "time step", positive()),
      key("stepper", "steps", ValueType::integer, ConfigValue(steps), "number of steps", at_least(1)),
      key("stepper", "steps_per_output", ValueType::integer, ConfigValue(every), "sampling stride", at_least(1)),
  };
}

std::vector<KeySpec> lattice_keys() {
  return {
      key("lattice", "sites", ValueType::integer, ConfigValue(I{8}), "lattice sites M", at_least(2)),
      key("lattice", "spacing", ValueType::real, ConfigValue(1.0), "lattice spacing", positive()),
      key("lattice", "dispersion", ValueType::string, ConfigValue(std::string("laplacian")), "one-body multiplier",
          {}, {"laplacian", "semirelativistic"}),
      key("interaction", "potential", ValueType::string, ConfigValue(std::string("gaussian")),
          "pair potential shape on the lattice", {}, {"gaussian", "contact", "zero"}),
      key("interaction", "range", ValueType::real, ConfigValue(1.0), "Gaussian pair-potential width", positive()),
      key("interaction", "strength", ValueType::real, ConfigValue(1.0), "pair-potential amplitude v(0)"),
  };
}

std::vector<KeySpec> lattice_initial_keys() {
  return {
      key("initial", "kind", ValueType::string, ConfigValue(std::string("gaussian")), "initial lattice orbital", {},
          {"gaussian", "random"}),
      key("initial", "width", ValueType::real, ConfigValue(2.0), "Gaussian width", positive()),
      key("initial", "momentum", ValueType::real, ConfigValue(0.0), "Gaussian carrier wavenumber"),
  };
}

std::vector<KeySpec> build_schema(const std::string& experiment) {
  std::vector<KeySpec> s;
  s.push_back(key("run", "seed", ValueType::integer, ConfigValue(I{0}), "seed for randomized states", non_negative()));
  if (experiment == "scatter") {
    add(s, potential_keys(std::nullopt, 1.0, 1.0));
    add(s, {
               key("solver", "r_max", ValueType::real, std::nullopt, "outer radius of integration", positive()),
               derived_key(
                   "solver", "step", ValueType::real,
                   [](const ExperimentConfig& c) { return ConfigValue(c.real("solver.r_max") / 40000.0); },
                   "RK4 step, default r_max / 40000", positive()),
               key("scaling", "n_list", ValueType::int_list, ConfigValue(std::vector<I>{1, 2, 4, 8}),
                   "particle numbers for the N^2 V(N r) check", at_least(1)),
           });
  } else if (experiment == "evolve") {
    add(s, grid_keys(1, 64, 20.0));
    add(s, {
               key("model", "kind", ValueType::string, std::nullopt, "effective equation", {},
                   {"linear", "hartree", "sr_hartree", "gp"}),
               key("model", "coupling", ValueType::real, ConfigValue(0.0), "kappa, lambda or GP coefficient"),
               key("model", "alpha", ValueType::real, ConfigValue(0.1), "sr_hartree kernel regularization",
                   non_negative()),
               key("model", "kernel_width", ValueType::real, ConfigValue(1.0),
                   "hartree kernel exp(-x^2 / (2 w^2)) width", positive()),
               derived_key(
                   "model", "dispersion", ValueType::string,
                   [](const ExperimentConfig& c) {
                     return ConfigValue(std::string(c.text("model.kind") == "sr_hartree" ? "semirelativistic"
                                                                                           : "laplacian"));
                   },
                   "dispersion multiplier", {}, {"laplacian", "semirelativistic"}),
               key("model", "trap_curvature", ValueType::real, ConfigValue(0.0), "harmonic trap c |x|^2",
                   non_negative()),
               key("initial", "width", ValueType::real, ConfigValue(1.0), "Gaussian width", positive()),
               key("initial", "center", ValueType::real_list, ConfigValue(std::vector<double>{}),
                   "Gaussian centre (empty or one entry per axis)"),
               key("initial", "momentum", ValueType::real_list, ConfigValue(std::vector<double>{}),
                   "carrier wavevector (empty or one entry per axis)"),
           });
    add(s, stepper_keys(1e-3, 1000, 10));
  } else if (experiment == "minimize") {
    add(s, grid_keys(1, 64, 20.0));
    add(s, {
               key("model", "coefficient", ValueType::real, ConfigValue(0.0), "GP coefficient", non_negative()),
               key("model", "trap_curvature", ValueType::real, ConfigValue(1.0), "harmonic trap c |x|^2",
                   non_negative()),
               key("initial", "width", ValueType::real, ConfigValue(2.0), "Gaussian width", positive()),
               key("imaginary", "dtau", ValueType::real, ConfigValue(1e-2), "imaginary time step", positive()),
               key("imaginary", "tolerance", ValueType::real, ConfigValue(1e-12), "stop when the decrease is smaller",
                   positive()),
               key("imaginary", "max_iterations", ValueType::integer, ConfigValue(I{100000}), "iteration cap",
                   at_least(1)),
           });
  } else if (experiment == "blowup") {
    add(s, grid_keys(1, 4096, 40.0));
    add(s, {
               key("model", "lambda", ValueType::real, std::nullopt, "sr_hartree coupling", non_negative()),
               key("model", "alpha", ValueType::real, ConfigValue(0.05), "kernel regularization", non_negative()),
               key("model", "regularization_n", ValueType::integer, ConfigValue(I{0}),
                   "if positive, alpha = regularization_n^(-beta)", non_negative()),
               key("model", "beta", ValueType::real, ConfigValue(1.0), "regularization exponent", positive()),
               key("initial", "width", ValueType::real, ConfigValue(1.0), "Gaussian width", positive()),
               key("monitor", "threshold_factor", ValueType::real, ConfigValue(10.0),
                   "threshold as a multiple of the initial H^1/2 norm", positive()),
               key("monitor", "window", ValueType::integer, ConfigValue(I{5}), "required monotone samples",
                   at_least(1)),
               key("monitor", "stop_on_detection", ValueType::boolean, ConfigValue(true),
                   "end the run once blow-up is detected"),
           });
    add(s, stepper_keys(1e-3, 2000, 10));
  } else if (experiment == "critical") {
    add(s, grid_keys(3, 32, 2.0));
    add(s, {
               key("trial", "width", ValueType::real, ConfigValue(0.15), "Gaussian trial width", positive()),
               key("scan", "mu_list", ValueType::real_list,
                   ConfigValue([] {
                     std::vector<double> mu;
                     for (int i = 0; i <= 20; ++i) mu.push_back(0.1 * std::pow(14.0, i / 20.0));
                     return mu;
                   }()),
                   "ascending concentration scales", positive_list()),
               key("scan", "lambda_list", ValueType::real_list,
                   ConfigValue([] {
                     std::vector<double> l;
                     for (int i = 0; i <= 60; ++i) l.push_back(0.1 * i);
                     return l;
                   }()),
                   "ascending couplings"),
           });
  } else if (experiment == "manybody") {
    add(s, lattice_keys());
    add(s, {
               key("lattice", "n_particles", ValueType::integer, ConfigValue(I{2}), "particle number N", at_least(1)),
               key("interaction", "coupling_rule", ValueType::string, ConfigValue(std::string("mean_field")),
                   "mean_field: strength kappa / N; raw: strength lambda", {}, {"mean_field", "raw"}),
               key("interaction", "coupling", ValueType::real, ConfigValue(1.0), "kappa or lambda"),
           });
    add(s, lattice_initial_keys());
    add(s, {
               key("propagation", "t", ValueType::real, ConfigValue(1.0), "horizon", non_negative()),
               key("propagation", "dt", ValueType::real, ConfigValue(0.05), "Krylov step", positive()),
               key("propagation", "krylov_dim", ValueType::integer, ConfigValue(I{20}), "Krylov dimension",
                   at_least(1)),
               key("propagation", "tolerance", ValueType::real, ConfigValue(1e-12), "local error tolerance",
                   positive()),
               key("propagation", "samples", ValueType::integer, ConfigValue(I{4}), "output intervals", at_least(1)),
               key("propagation", "k", ValueType::integer, ConfigValue(I{1}), "exported reduced density order",
                   at_least(1)),
               key("basis", "cap", ValueType::integer, ConfigValue(I{default_basis_cap}), "basis dimension cap",
                   at_least(1)),
           });
  } else if (experiment == "converge") {
    add(s, lattice_keys());
    add(s, {key("interaction", "kappa", ValueType::real, ConfigValue(1.0), "mean-field coupling")});
    add(s, lattice_initial_keys());
    add(s, {
               key("study", "n_list", ValueType::int_list, ConfigValue(std::vector<I>{2, 4, 8}), "particle numbers",
                   at_least(1)),
               key("study", "horizon", ValueType::real, ConfigValue(2.0), "final time", non_negative()),
               key("study", "dt", ValueType::real, ConfigValue(0.05), "Krylov step", positive()),
               key("study", "samples", ValueType::integer, ConfigValue(I{4}), "output intervals", at_least(1)),
               key("study", "hartree_substeps", ValueType::integer, ConfigValue(I{10}),
                   "Hartree steps per Krylov step", at_least(1)),
               key("study", "krylov_dim", ValueType::integer, ConfigValue(I{20}), "Krylov dimension", at_least(1)),
               key("study", "tolerance", ValueType::real, ConfigValue(1e-12), "Krylov local error tolerance",
                   positive()),
               key("study", "basis_cap", ValueType::integer, ConfigValue(I{default_basis_cap}),
                   "basis dimension cap", at_least(1)),
           });
  } else if (experiment == "hierarchy") {
    add(s, {
               key("grid", "points", ValueType::integer, ConfigValue(I{64}), "points of the 1D grid", at_least(2)),
               key("grid", "box_length", ValueType::real, ConfigValue(20.0), "box length", positive()),
               key("initial", "width", ValueType::real, ConfigValue(1.0), "Gaussian width", positive()),
               key("initial", "momentum", ValueType::real, ConfigValue(0.5), "carrier wavenumber"),
           });
    add(s, potential_keys(ConfigValue(std::string("square_well")), 2.0, 1.0));
    add(s, {
               key("hierarchy", "residual", ValueType::string, ConfigValue(std::string("matched")),
                   "collision coefficient: matched (8 pi a0) or b0 (integral of V)", {}, {"matched", "b0"}),
               key("hierarchy", "k_list", ValueType::int_list, ConfigValue(std::vector<I>{1}), "hierarchy orders",
                   at_least(1)),
               key("hierarchy", "time", ValueType::real, ConfigValue(0.5), "evaluation time", positive()),
               key("hierarchy", "dt_list", ValueType::real_list, ConfigValue(std::vector<double>{0.02, 0.01, 0.005}),
                   "time steps of the refinement table", positive_list()),
               key("hierarchy", "tensor_cap", ValueType::integer, ConfigValue(I{1024}), "largest tuple count",
                   at_least(1)),
           });
  } else {
    throw std::invalid_argument("unknown experiment '" + experiment + "'");
  }
  return s;
}

// ---- parsing ----

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<std::int64_t> parse_int(const std::string& s) {
  std::int64_t v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::vector<std::string>> split_list(const std::string& s) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return std::nullopt;
  std::vector<std::string> items;
  const std::string body = trim(s.substr(1, s.size() - 2));
  if (body.empty()) return items;
  std::stringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) items.push_back(trim(item));
  return items;
}

std::optional<ConfigValue> parse_typed(const std::string& raw, ValueType type) {
  switch (type) {
    case ValueType::integer:
      if (auto v = parse_int(raw)) return ConfigValue(*v);
      return std::nullopt;
    case ValueType::real:
      if (auto v = parse_real(raw)) return ConfigValue(*v);
      return std::nullopt;
    case ValueType::boolean:
      if (raw == "true") return ConfigValue(true);
      if (raw == "false") return ConfigValue(false);
      return std::nullopt;
    case ValueType::string:
      if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') return ConfigValue(raw.substr(1, raw.size() - 2));
      if (raw.empty() || raw.find_first_of("\"[]") != std::string::npos) return std::nullopt;
      return ConfigValue(raw);
    case ValueType::int_list: {
      auto items = split_list(raw);
      if (!items) return std::nullopt;
      std::vector<std::int64_t> out;
      for (const auto& i : *items) {
        auto v = parse_int(i);
        if (!v) return std::nullopt;
        out.push_back(*v);
      }
      return ConfigValue(out);
    }
    case ValueType::real_list: {
      auto items = split_list(raw);
      if (!items) return std::nullopt;
      std::vector<double> out;
      for (const auto& i : *items) {
        auto v = parse_real(i);
        if (!v) return std::nullopt;
        out.push_back(*v);
      }
      return ConfigValue(out);
    }
  }
  return std::nullopt;
}

void cross_checks(ExperimentConfig& c, std::vector<std::string>& violations) {
  if (c.experiment == "evolve") {
    const auto d = static_cast<size_t>(c.integer("grid.dimension"));
    for (const char* k : {"initial.center", "initial.momentum"}) {
      const auto l = c.real_list(k);
      if (!l.empty() && l.size() != d)
        violations.push_back(std::string(k) + ": needs 0 or " + std::to_string(d) + " entries");
    }
    if (c.text("model.kind") == "sr_hartree" && c.real("model.alpha") == 0.0 && d == 1)
      violations.push_back("model.alpha: alpha = 0 is only defined on 3D grids");
  } else if (c.experiment == "critical") {
    if (c.integer("grid.dimension") != 3) violations.push_back("grid.dimension: the criticality scan needs 3");
    for (const char* k : {"scan.mu_list", "scan.lambda_list"}) {
      const auto l = c.real_list(k);
      if (!std::is_sorted(l.begin(), l.end())) violations.push_back(std::string(k) + ": must be ascending");
    }
  } else if (c.experiment == "manybody") {
    const auto n = c.integer("lattice.n_particles");
    const auto m = c.integer("lattice.sites");
    const auto cap = c.integer("basis.cap");
    if (n <= 255) {
      const auto dim = SymmetricBasis::dimension_for(static_cast<int>(n), static_cast<int>(m), cap);
      c.echoes.push_back("basis dimension C(" + std::to_string(n + m - 1) + ", " + std::to_string(n) + ") = " +
                         (dim > cap ? "> " + std::to_string(cap) + " (exceeds cap)" : std::to_string(dim)));
      if (dim > cap) violations.push_back("lattice.n_particles: basis dimension exceeds basis.cap");
    } else {
      violations.push_back("lattice.n_particles: at most 255 particles");
    }
    if (c.integer("propagation.k") > n) violations.push_back("propagation.k: must not exceed lattice.n_particles");
  } else if (c.experiment == "converge") {
    const auto m = c.integer("lattice.sites");
    const auto cap = c.integer("study.basis_cap");
    for (auto n : c.int_list("study.n_list")) {
      if (n > 255) {
        violations.push_back("study.n_list: at most 255 particles");
        continue;
      }
      const auto dim = SymmetricBasis::dimension_for(static_cast<int>(n), static_cast<int>(m), cap);
      c.echoes.push_back("N=" + std::to_string(n) + ": basis dimension C(" + std::to_string(n + m - 1) + ", " +
                         std::to_string(n) + ") " +
                         (dim > cap ? "> " + std::to_string(cap) + " (exceeds cap; leg will be skipped)"
                                    : "= " + std::to_string(dim) + " (feasible)"));
    }
  } else if (c.experiment == "hierarchy") {
    if (c.text("potential.kind") == "zero" && c.text("hierarchy.residual") == "b0")
      c.echoes.push_back("zero potential: b0 and 8 pi a0 coincide");
  }
}

} // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"scatter", "evolve", "minimize", "blowup",
                                              "critical", "manybody", "converge", "hierarchy"};
  return names;
}

const std::vector<KeySpec>& schema_for(const std::string& experiment) {
  static const std::map<std::string, std::vector<KeySpec>> schemas = [] {
    std::map<std::string, std::vector<KeySpec>> m;
    for (const auto& e : experiment_names()) m[e] = build_schema(e);
    return m;
  }();
  const auto it = schemas.find(experiment);
  if (it == schemas.end()) throw ConfigError({"unknown experiment '" + experiment + "'"});
  return it->second;
}

std::int64_t ExperimentConfig::integer(const std::string& path) const { return std::get<std::int64_t>(values.at(path)); }
double ExperimentConfig::real(const std::string& path) const { return std::get<double>(values.at(path)); }
bool ExperimentConfig::boolean(const std::string& path) const { return std::get<bool>(values.at(path)); }
const std::string& ExperimentConfig::text(const std::string& path) const {
  return std::get<std::string>(values.at(path));
}
std::vector<std::int64_t> ExperimentConfig::int_list(const std::string& path) const {
  return std::get<std::vector<std::int64_t>>(values.at(path));
}
std::vector<double> ExperimentConfig::real_list(const std::string& path) const {
  return std::get<std::vector<double>>(values.at(path));
}

std::string ExperimentConfig::resolved_text() const {
  std::string out = "experiment = " + experiment + "\n";
  for (const auto& e : echoes) out += "# " + e + "\n";
  std::string section;
  for (const auto& k : schema_for(experiment)) {
    if (k.section != section) {
      section = k.section;
      out += "\n[" + section + "]\n";
    }
    const auto it = values.find(k.path());
    if (it != values.end()) out += k.key + " = " + format_value(it->second) + "\n";
  }
  return out;
}

namespace {

// Drops a '#' comment that is not inside double quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    else if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& experiment) {
  std::vector<std::string> violations;
  std::map<std::string, std::pair<std::string, int>> raw;  // path -> (value, line)
  std::string named_experiment;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(strip_comment(line));
    if (t.empty() || t[0] == '#') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        violations.push_back(where + "malformed section header '" + t + "'");
        continue;
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      violations.push_back(where + "expected 'key = value', got '" + t + "'");
      continue;
    }
    const std::string k = trim(t.substr(0, eq));
    const std::string v = trim(t.substr(eq + 1));
    if (section.empty()) {
      if (k == "experiment") {
        named_experiment = v;
      } else {
        violations.push_back(where + "key '" + k + "' must appear inside a [section]");
      }
      continue;
    }
    const std::string path = section + "." + k;
    if (raw.count(path)) {
      violations.push_back(where + "duplicate key '" + path + "'");
      continue;
    }
    raw[path] = {v, line_no};
  }

  std::string chosen = experiment;
  if (chosen.empty()) chosen = named_experiment;
  if (chosen.empty()) {
    violations.push_back("no experiment given (subcommand or 'experiment = ...')");
    throw ConfigError(violations);
  }
  if (!experiment.empty() && !named_experiment.empty() && named_experiment != experiment)
    violations.push_back("config names experiment '" + named_experiment + "' but the subcommand is '" + experiment + "'");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), chosen) == names.end()) {
    violations.push_back("unknown experiment '" + chosen + "'");
    throw ConfigError(violations);
  }

  ExperimentConfig cfg;
  cfg.experiment = chosen;
  const auto& schema = schema_for(chosen);
  std::set<std::string> known;
  for (const auto& k : schema) known.insert(k.path());
  for (const auto& [path, entry] : raw)
    if (!known.count(path))
      violations.push_back("line " + std::to_string(entry.second) + ": unknown key '" + path + "'");

  std::set<std::string> failed;
  for (const auto& k : schema) {
    const auto it = raw.find(k.path());
    if (it != raw.end()) {
      auto value = parse_typed(it->second.first, k.type);
      if (!value) {
        violations.push_back("line " + std::to_string(it->second.second) + ": '" + k.path() + "' expects " +
                             type_name(k.type) + ", got '" + it->second.first + "'");
        failed.insert(k.path());
        continue;
      }
      cfg.values[k.path()] = *value;
    } else if (k.fallback) {
      cfg.values[k.path()] = *k.fallback;
    } else if (k.derived) {
      // Filled below once literal values are known.
    } else {
      violations.push_back("missing required key '" + k.path() + "' (" + type_name(k.type) + ")");
      failed.insert(k.path());
    }
  }
  for (const auto& k : schema) {
    if (cfg.has(k.path()) || failed.count(k.path()) || !k.derived) continue;
    try {
      cfg.values[k.path()] = k.derived(cfg);
    } catch (const std::out_of_range&) {
      failed.insert(k.path());  // depends on a key that already failed
    }
  }
  for (const auto& k : schema) {
    const auto it = cfg.values.find(k.path());
    if (it == cfg.values.end()) continue;
    if (!k.choices.empty()) {
      const auto& s = std::get<std::string>(it->second);
      if (std::find(k.choices.begin(), k.choices.end(), s) == k.choices.end()) {
        std::string msg = "'" + k.path() + "' must be one of";
        for (const auto& ch : k.choices) msg += " " + ch;
        violations.push_back(msg + ", got '" + s + "'");
        failed.insert(k.path());
        continue;
      }
    }
    if (k.check) {
      const std::string err = k.check(it->second);
      if (!err.empty()) {
        violations.push_back("'" + k.path() + "' " + err);
        failed.insert(k.path());
      }
    }
  }
  if (violations.empty()) cross_checks(cfg, violations);
  if (!violations.empty()) throw ConfigError(violations);
  return cfg;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace effdyn
