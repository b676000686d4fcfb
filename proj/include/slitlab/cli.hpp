#ifndef SLITLAB_CLI_HPP
#define SLITLAB_CLI_HPP

#include "slitlab/analysis.hpp"

#include <complex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace slitlab::cli {

/// Schema violation with the offending line (0 for command-line flags).
class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& key, const std::string& msg)
      : Error(line > 0 ? "line " + std::to_string(line) + ": '" + key + "': " + msg : "'" + key + "': " + msg),
        line_(line),
        key_(key),
        message_("'" + key + "': " + msg) {}
  int line() const noexcept { return line_; }
  /// The diagnostic without the line prefix.
  const std::string& message() const noexcept { return message_; }
  const std::string& key() const noexcept { return key_; }

 private:
  int line_;
  std::string key_;
  std::string message_;
};

enum class KeyType { real, integer, boolean, list, choice };

struct KeySpec {
  KeyType type = KeyType::real;
  std::string fallback;              // textual default
  std::vector<std::string> choices;  // for KeyType::choice
};

using Schema = std::map<std::string, KeySpec>;

struct Entry {
  std::string value;
  int line = 0;
};

/// key = value text, '#' starts a comment; blank lines ignored.
inline std::map<std::string, Entry> parse_config_text(std::istream& in) {
  std::map<std::string, Entry> out;
  std::string raw;
  int line = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(line, text, "expected key = value");
    const std::string key = trim(text.substr(0, eq)), value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, text, "empty key");
    if (value.empty()) throw ConfigError(line, key, "empty value");
    if (out.count(key)) throw ConfigError(line, key, "duplicate key (first on line " + std::to_string(out[key].line) + ")");
    out[key] = {value, line};
  }
  return out;
}

inline double parse_real(const std::string& s, int line, const std::string& key) {
  // accept p/q fractions such as 1/128
  const auto slash = s.find('/');
  try {
    std::size_t used = 0;
    if (slash != std::string::npos) {
      const double a = std::stod(s.substr(0, slash), &used);
      if (used != slash) throw std::invalid_argument(s);
      const std::string rest = s.substr(slash + 1);
      const double b = std::stod(rest, &used);
      if (used != rest.size() || b == 0.0) throw std::invalid_argument(s);
      return a / b;
    }
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(line, key, "not a number: '" + s + "'");
  }
}

/// Validated experiment configuration: defaults, then flags, then the config file.
class Config {
 public:
  Config(Schema schema, const std::map<std::string, Entry>& flags, const std::map<std::string, Entry>& file,
         const std::vector<std::string>& metrics)
      : schema_(std::move(schema)) {
    for (const auto& [k, spec] : schema_) values_[k] = {spec.fallback, 0};
    auto apply = [&](const std::map<std::string, Entry>& src) {
      for (const auto& [k, e] : src) {
        if (k.rfind("assert_min.", 0) == 0 || k.rfind("assert_max.", 0) == 0) {
          const std::string metric = k.substr(11);
          if (std::find(metrics.begin(), metrics.end(), metric) == metrics.end()) {
            throw ConfigError(e.line, k, "unknown metric '" + metric + "'");
          }
          assertions_[k] = {parse_real(e.value, e.line, k), e.line};
          continue;
        }
        if (!schema_.count(k)) throw ConfigError(e.line, k, "unknown key");
        values_[k] = e;
        check(k);
      }
    };
    apply(flags);
    apply(file);
    for (const auto& [k, spec] : schema_) {
      if (!values_[k].value.empty()) check(k);
    }
  }

  double real(const std::string& k) const { return parse_real(at(k).value, at(k).line, k); }

  int integer(const std::string& k) const {
    const double v = real(k);
    return static_cast<int>(v);
  }

  bool boolean(const std::string& k) const { return at(k).value == "true"; }

  std::string str(const std::string& k) const { return at(k).value; }

  std::vector<double> list(const std::string& k) const {
    std::vector<double> out;
    std::stringstream ss(at(k).value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
      if (b == std::string::npos) throw ConfigError(at(k).line, k, "empty list item");
      out.push_back(parse_real(item.substr(b, e - b + 1), at(k).line, k));
    }
    return out;
  }

  int line(const std::string& k) const { return at(k).line; }

  struct Assertion {
    double bound = 0.0;
    int line = 0;
  };
  const std::map<std::string, Assertion>& assertions() const { return assertions_; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    for (const auto& [k, e] : values_) j[k] = e.value;
    return j;
  }

 private:
  const Entry& at(const std::string& k) const {
    const auto it = values_.find(k);
    require(it != values_.end(), "config: key '" + k + "' not in schema");
    return it->second;
  }

  void check(const std::string& k) {
    const auto& spec = schema_.at(k);
    const auto& e = values_.at(k);
    switch (spec.type) {
      case KeyType::real:
        parse_real(e.value, e.line, k);
        break;
      case KeyType::integer: {
        const double v = parse_real(e.value, e.line, k);
        if (v != std::floor(v)) throw ConfigError(e.line, k, "expected an integer");
        break;
      }
      case KeyType::boolean:
        if (e.value != "true" && e.value != "false") throw ConfigError(e.line, k, "expected true or false");
        break;
      case KeyType::list:
        list(k);
        break;
      case KeyType::choice:
        if (std::find(spec.choices.begin(), spec.choices.end(), e.value) == spec.choices.end()) {
          std::string all;
          for (const auto& c : spec.choices) all += (all.empty() ? "" : ", ") + c;
          throw ConfigError(e.line, k, "expected one of " + all);
        }
        break;
    }
  }

  Schema schema_;
  std::map<std::string, Entry> values_;
  std::map<std::string, Assertion> assertions_;
};

/// Everything an experiment produces; written by a single writer at the end.
struct Outcome {
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> files;  // relative name -> content
  nlohmann::json report = nlohmann::json::object();
};

struct Experiment {
  std::string name;
  std::string summary;
  Schema schema;
  std::vector<std::string> metrics;
  std::function<Outcome(const Config&)> run;
};

namespace detail {

inline void check_h(const Config& c) {
  const double h = c.real("h");
  const double m = 1.0 / h;
  const double k = std::round(std::log2(m));
  if (!(std::abs(m - std::exp2(k)) < 1e-9 * m && k >= 5 && k <= 9)) {
    throw ConfigError(c.line("h"), "h", "must be one of 1/32, 1/64, 1/128, 1/256, 1/512");
  }
}

inline void check_alpha(const Config& c) {
  const double a = c.real("alpha");
  if (!(a > 0.0 && a < 0.5)) throw ConfigError(c.line("alpha"), "alpha", "must lie in (0, 1/2)");
}

inline int dimension(const Config& c) {
  const int n = c.integer("n");
  if (n != 1 && n != 2) throw ConfigError(c.line("n"), "n", "must be 1 or 2");
  return n;
}

template <int N>
CoeffField<N> coefficients(const Config& c) {
  const double eps0 = c.real("eps0");
  if (eps0 < 0.0) throw ConfigError(c.line("eps0"), "eps0", "must be nonnegative");
  const double alpha = c.real("alpha");
  if (eps0 == 0.0) return CoeffField<N>::identity(alpha);
  return CoeffField<N>::perturbed(eps0, static_cast<unsigned long long>(c.integer("seed")), alpha);
}

template <int N>
std::string field_csv(const FieldSample<N>& f, const std::string& column) {
  std::ostringstream os;
  for (int a = 1; a <= N + 1; ++a) os << "x" << a << ",";
  os << column << ",valid\n";
  const auto& g = f.g();
  for (std::size_t s = 0; s < g.size(); ++s) {
    const auto v = g.point(s).vec();
    for (int a = 0; a <= N; ++a) os << format_number(v[a]) << ",";
    os << format_number(f.values[s]) << "," << (f.is_valid(s) ? 1 : 0) << "\n";
  }
  return os.str();
}

inline Schema common(std::initializer_list<std::pair<const std::string, KeySpec>> extra) {
  Schema s{{"n", {KeyType::integer, "1", {}}},
           {"h", {KeyType::real, "1/64", {}}},
           {"seed", {KeyType::integer, "1", {}}},
           {"alpha", {KeyType::real, "0.25", {}}},
           {"eps0", {KeyType::real, "0", {}}}};
  for (const auto& kv : extra) s[kv.first] = kv.second;
  return s;
}

// ---------------------------------------------------------------------------

template <int N>
Outcome run_signorini(const Config& c) {
  check_h(c);
  SignoriniProblem<N> p;
  p.id = "solve-signorini";
  p.A = coefficients<N>(c);
  p.R = c.real("R");
  const std::string data = c.str("data");
  const double shift = c.real("shift"), tilt = c.real("tilt");
  if (data == "tilted" && N == 1) throw ConfigError(c.line("data"), "data", "tilted data needs n = 2");
  std::function<double(const SlitPoint<N>&)> exact;
  if (data == "model") {
    exact = [](const SlitPoint<N>& x) { return re_z32(x.xn, x.xnp1); };
  } else if (data == "shifted") {
    exact = [shift](const SlitPoint<N>& x) { return re_z32(x.xn - shift, x.xnp1); };
  } else if (data == "tilted") {
    const double nrm = std::sqrt(1.0 + tilt * tilt);
    exact = [tilt, nrm](const SlitPoint<N>& x) {
      double t = 0.0;
      if constexpr (N > 1) t = x.xT[0];
      return re_z32((x.xn - tilt * t) / nrm, x.xnp1);
    };
  } else if (data == "positive") {
    p.boundary = [](const SlitPoint<N>& x) { return 1.0 + 0.25 * x.xn; };
  } else {
    p.boundary = [](const SlitPoint<N>& x) { return -1.0 - 0.25 * x.xn * x.xn; };
  }
  if (exact) p.boundary = exact;
  PsorOptions opt;
  opt.omega = c.real("omega");
  opt.nested = c.boolean("nested");
  opt.max_sweeps = c.integer("max_sweeps");
  const auto sol = solve_signorini(p, c.real("h"), opt);
  const auto fb = free_boundary_graph(sol);
  Outcome out;
  out.report = sol.to_json();
  out.report["free_boundary"] = fb.to_json();
  out.metrics["energy"] = sol.energy;
  out.metrics["complementarity"] = sol.complementarity;
  out.metrics["sweeps"] = sol.levels.back().sweeps;
  out.metrics["energy_monotone"] = sol.energy_monotone ? 1.0 : 0.0;
  std::size_t contact = 0;
  for (auto v : sol.contact) contact += v;
  out.metrics["contact_nodes"] = static_cast<double>(contact);
  out.metrics["flagged_lines"] = static_cast<double>(fb.flagged_count());
  double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
  for (double gm : fb.gamma) {
    if (!std::isfinite(gm)) continue;
    gmin = std::min(gmin, gm);
    gmax = std::max(gmax, gm);
  }
  out.metrics["gamma_min"] = std::isfinite(gmin) ? gmin : std::nan("");
  out.metrics["gamma_max"] = std::isfinite(gmax) ? gmax : std::nan("");
  if (exact && p.A.eps0() == 0.0) {
    double err = 0.0;
    const auto& g = sol.half_grid();
    for (std::size_t s = 0; s < g.size(); ++s) err = std::max(err, std::abs(sol.half.values[s] - exact(g.point(s))));
    out.metrics["linf_error"] = err;
  }
  std::ostringstream a, b;
  write_solution_csv(a, sol);
  write_free_boundary_csv(b, fb);
  out.files["solution.csv"] = a.str();
  out.files["free_boundary.csv"] = b.str();
  return out;
}

template <int N>
Outcome run_degenerate(const Config& c) {
  check_h(c);
  check_alpha(c);
  DegenerateProblem<N> p;
  p.id = "solve-degenerate";
  p.A = coefficients<N>(c);
  p.alpha = c.real("alpha");
  p.radius = c.real("radius");
  p.boundary = [](const SlitPoint<N>& x) { return x.xn - 0.5 * rho_of(x); };
  auto grid = make_grid(SlitGrid<N>::sqrt_ball(p.radius, c.real("h")));
  const auto sol = solve_degenerate(p, grid);
  Outcome out;
  out.report = sol.report.to_json();
  double err = 0.0;
  for (std::size_t s = 0; s < grid->size(); ++s) {
    const auto x = grid->point(s);
    if (x.vec().norm() < p.radius) err = std::max(err, std::abs(sol.field.values[s] - p.boundary(x)));
  }
  out.metrics["linf_error"] = err;
  out.metrics["iterations"] = sol.report.iterations;
  out.metrics["residual"] = sol.report.residual;
  out.report["linf_error"] = err;
  out.files["solution.csv"] = field_csv(sol.field, "w");
  return out;
}

template <int N>
Outcome run_frequency(const Config& c) {
  check_h(c);
  const double h = c.real("h");
  auto radii = c.list("radii");
  if (radii.size() < 4) throw ConfigError(c.line("radii"), "radii", "need at least four radii");
  const double rmax = *std::max_element(radii.begin(), radii.end());
  const std::string field = c.str("field");
  FieldSample<N> U;
  if (field == "signorini") {
    SignoriniProblem<N> p;
    p.A = coefficients<N>(c);
    p.R = std::ceil((rmax + 4.0 * h) / h) * h;
    p.boundary = [](const SlitPoint<N>& x) { return re_z32(x.xn, x.xnp1); };
    PsorOptions opt;
    opt.omega = 0.0;
    U = solve_signorini(p, h, opt).U;
  } else {
    auto grid = make_grid(SlitGrid<N>::physical_cube(std::ceil((rmax + 4.0 * h) / h) * h, h));
    ScalarFn<N> fn;
    if (field == "model") fn = [](const SlitPoint<N>& x) { return re_z32(x.xn, x.xnp1, x.side); };
    if (field == "xn") fn = [](const SlitPoint<N>& x) { return x.xn; };
    if (field == "xi") fn = [](const SlitPoint<N>& x) { return xi_of(x); };
    U = sample<N>(grid, fn, Parity::even);
  }
  SlitPoint<N> x0;
  const auto prof = frequency_profile(U, x0, radii);
  const auto cls = classify_regular(prof, c.real("tau"));
  Outcome out;
  out.metrics["N_min"] = *std::min_element(prof.values.begin(), prof.values.end());
  out.metrics["N_max"] = *std::max_element(prof.values.begin(), prof.values.end());
  out.metrics["N0"] = cls.extrapolated;
  out.metrics["monotonicity_violation"] = cls.monotonicity_violation;
  out.metrics["regular"] = cls.regular ? 1.0 : 0.0;
  out.report = {{"radii", prof.radii}, {"N", prof.values}, {"N0", cls.extrapolated},
                {"regular", cls.regular}, {"monotone", cls.monotone},
                {"monotonicity_violation", cls.monotonicity_violation}};
  std::ostringstream os;
  os << "r,N\n";
  for (std::size_t i = 0; i < radii.size(); ++i) os << format_number(prof.radii[i]) << "," << format_number(prof.values[i]) << "\n";
  out.files["frequency.csv"] = os.str();
  return out;
}

template <int N>
Outcome run_campanato(const Config& c) {
  check_h(c);
  check_alpha(c);
  const auto radii = c.list("radii");
  if (radii.size() < 3) throw ConfigError(c.line("radii"), "radii", "need at least three radii");
  const double rmax = *std::max_element(radii.begin(), radii.end());
  auto grid = make_grid(SlitGrid<N>::sqrt_ball(1.25 * rmax, c.real("h")));
  const std::string field = c.str("field");
  const double power = c.real("power");
  ScalarFn<N> fn;
  if (field == "power") {
    fn = [power](const SlitPoint<N>& x) { const double r = rho_of(x); return x.xn - 0.5 * r + std::pow(r, power); };
  } else if (field == "ratio") {
    fn = [](const SlitPoint<N>& x) { return 2.0 * x.xn - rho_of(x); };
  } else {
    fn = [](const SlitPoint<N>& x) { return x.xn - 0.5 * rho_of(x); };
  }
  const auto w = sample<N>(grid, fn);
  std::array<double, N - 1> center{};
  if constexpr (N > 1) center[0] = c.real("center");
  const auto rep = campanato_fit<N>(w, center, radii, c.real("alpha"));
  Outcome out;
  out.report = rep.to_json();
  out.metrics["exponent"] = rep.exponent;
  out.metrics["c0"] = rep.L.c0;
  out.metrics["c_n"] = rep.L.c[N - 1];
  out.metrics["c_rho"] = rep.L.c_rho;
  out.metrics["sigma_max"] = *std::max_element(rep.sigma.begin(), rep.sigma.end());
  std::ostringstream os;
  rep.write_csv(os);
  out.files["decay.csv"] = os.str();
  return out;
}

template <int N>
Outcome run_harnack(const Config& c) {
  check_h(c);
  check_alpha(c);
  auto grid = make_grid(SlitGrid<N>::sqrt_ball(c.real("radius"), c.real("h")));
  HarnackInput<N> in;
  in.A = coefficients<N>(c);
  in.u2 = sample<N>(grid, [](const SlitPoint<N>& x) { return xi_of(x); });
  if (c.str("pair") == "model") {
    in.u1 = sample<N>(grid, [](const SlitPoint<N>& x) { return re_z32(x.xn, x.xnp1, x.side); });
  } else {
    in.u1 = in.u2;
  }
  std::vector<std::array<double, N - 1>> centers;
  if constexpr (N > 1) {
    for (double v : c.list("centers")) centers.push_back({v});
  } else {
    centers.push_back({});
  }
  HarnackOptions opt;
  opt.radii = c.list("radii");
  opt.alpha = c.real("alpha");
  opt.check_radius = c.real("radius");
  const auto rep = harnack_experiment(in, centers, opt);
  Outcome out;
  out.report = rep.to_json();
  out.metrics["tangential_exponent"] = rep.tangential.exponent;
  double emin = std::numeric_limits<double>::infinity();
  for (const auto& r : rep.centers) emin = std::min(emin, r.exponent);
  out.metrics["min_center_exponent"] = emin;
  out.metrics["hopf_floor"] = rep.hopf_floor;
  out.metrics["pass"] = rep.pass ? 1.0 : 0.0;
  std::ostringstream os;
  os << "center,r,sigma\n";
  for (const auto& r : rep.centers) {
    for (std::size_t i = 0; i < r.radii.size(); ++i) {
      os << format_number(N > 1 ? r.centerT[0] : 0.0) << "," << format_number(r.radii[i]) << ","
         << format_number(r.sigma[i]) << "\n";
    }
  }
  out.files["decay.csv"] = os.str();
  return out;
}

template <int N>
Outcome run_inequalities(const Config& c) {
  check_h(c);
  const double h = c.real("h");
  const int samples = c.integer("samples");
  if (samples < 1) throw ConfigError(c.line("samples"), "samples", "must be positive");
  auto sg = make_grid(SlitGrid<N>::sqrt_ball(1.1, h));
  Outcome out;
  std::ostringstream pc;
  pc << "sample,ratio\n";
  double worst = 0.0;
  const auto base = static_cast<unsigned long long>(c.integer("seed"));
  for (int k = 0; k < samples; ++k) {
    const auto w = sample<N>(sg, random_compact_field<N>(base * 1000 + static_cast<unsigned long long>(k)));
    const double r = check_poincare(w, 1.0);
    worst = std::max(worst, r);
    pc << k << "," << format_number(r) << "\n";
  }
  auto pg = make_grid(SlitGrid<N>::physical_cube(1.0, h));
  const auto xi = sample<N>(pg, [](const SlitPoint<N>& x) { return xi_of(x); });
  const double hardy = check_hardy(xi, Region<N>::ball(1.0));
  std::ostringstream hc;
  hc << "field,ratio\nxi," << format_number(hardy) << "\n";
  out.metrics["poincare_max"] = worst;
  out.metrics["hardy_xi"] = hardy;
  out.report = {{"poincare_max", worst}, {"poincare_bound", 4.0}, {"hardy_xi", hardy}, {"samples", samples}};
  out.files["poincare.csv"] = pc.str();
  out.files["hardy.csv"] = hc.str();
  return out;
}

inline Outcome run_pipeline(const Config& c) {
  check_h(c);
  check_alpha(c);
  if (dimension(c) != 2) throw ConfigError(c.line("n"), "n", "the pipeline needs n = 2");
  SignoriniProblem<2> p;
  p.id = "pipeline-c2alpha";
  p.R = c.real("R");
  PipelineOptions opt;
  opt.h = c.real("h");
  opt.sqrt_h = c.real("h");
  opt.alpha = c.real("alpha");
  opt.working_radius = c.real("working_radius");
  const std::string data = c.str("data");
  if (data == "hopf_violation") {
    p.A = CoeffField<2>::identity(opt.alpha);
    const double k = c.real("violation");
    p.boundary = [k](const SlitPoint<2>& y) {
      if (y.xnp1 == 0.0 && y.xn < 0.0) return 0.0;
      return re_z32(y.xn, y.xnp1) + k * std::real(std::pow(std::complex<double>(y.xn, y.xnp1), 3.5));
    };
    opt.frequency_radii = {0.04, 0.06, 0.08, 0.1};
  } else {
    p.A = coefficients<2>(c);
    const bool curved = data == "curved";
    p.boundary = [curved](const SlitPoint<2>& y) {
      const double t = y.xT[0];
      const double g0 = curved ? 0.3 * t * t + 0.4 * t * t * t : 0.0;
      return re_z32(y.xn - g0, y.xnp1);
    };
  }
  const auto rep = c2alpha_pipeline(p, opt);
  Outcome out;
  out.report = rep.to_json();
  out.metrics["pass"] = rep.pass ? 1.0 : 0.0;
  out.metrics["aborted"] = rep.aborted_at.empty() ? 0.0 : 1.0;
  out.metrics["dgamma_exponent"] = rep.dgamma_exponent;
  return out;
}

template <class Fn>
auto by_dimension(Fn&& fn) {
  return [fn](const Config& c) { return dimension(c) == 1 ? fn.template operator()<1>(c) : fn.template operator()<2>(c); };
}

}  // namespace detail

inline std::vector<Experiment> experiments() {
  using detail::common;
  std::vector<Experiment> ex;
  ex.push_back({"solve-signorini", "projected SOR for the thin obstacle problem",
                common({{"R", {KeyType::real, "1", {}}},
                        {"data", {KeyType::choice, "model", {"model", "shifted", "tilted", "positive", "negative"}}},
                        {"shift", {KeyType::real, "0.3", {}}},
                        {"tilt", {KeyType::real, "0.1", {}}},
                        {"omega", {KeyType::real, "0", {}}},
                        {"nested", {KeyType::boolean, "true", {}}},
                        {"max_sweeps", {KeyType::integer, "200000", {}}}}),
                {"energy", "complementarity", "sweeps", "energy_monotone", "contact_nodes", "flagged_lines",
                 "gamma_min", "gamma_max", "linf_error"},
                detail::by_dimension([]<int N>(const Config& c) { return detail::run_signorini<N>(c); })});
  ex.push_back({"solve-degenerate", "weighted Galerkin solve with data x_n - rho/2",
                common({{"radius", {KeyType::real, "1", {}}}}),
                {"linf_error", "iterations", "residual"},
                detail::by_dimension([]<int N>(const Config& c) { return detail::run_degenerate<N>(c); })});
  ex.push_back({"frequency", "frequency profile at the origin",
                common({{"field", {KeyType::choice, "model", {"model", "xn", "xi", "signorini"}}},
                        {"radii", {KeyType::list, "0.1,0.2,0.3,0.4,0.5", {}}},
                        {"tau", {KeyType::real, "0.05", {}}}}),
                {"N_min", "N_max", "N0", "monotonicity_violation", "regular"},
                detail::by_dimension([]<int N>(const Config& c) { return detail::run_frequency<N>(c); })});
  ex.push_back({"campanato", "per-radius Campanato fits and decay exponent",
                common({{"field", {KeyType::choice, "power", {"power", "ratio", "linear"}}},
                        {"power", {KeyType::real, "1.25", {}}},
                        {"radii", {KeyType::list, "0.4,0.2,0.1,0.05", {}}},
                        {"center", {KeyType::real, "0", {}}}}),
                {"exponent", "c0", "c_n", "c_rho", "sigma_max"},
                detail::by_dimension([]<int N>(const Config& c) { return detail::run_campanato<N>(c); })});
  ex.push_back({"harnack", "boundary Harnack fits of a ratio of xi-like solutions",
                common({{"pair", {KeyType::choice, "model", {"model", "equal"}}},
                        {"radius", {KeyType::real, "0.5", {}}},
                        {"radii", {KeyType::list, "0.2,0.1,0.05", {}}},
                        {"centers", {KeyType::list, "-0.1,0,0.1", {}}}}),
                {"tangential_exponent", "min_center_exponent", "hopf_floor", "pass"},
                detail::by_dimension([]<int N>(const Config& c) { return detail::run_harnack<N>(c); })});
  ex.push_back({"verify-inequalities", "Poincare and Hardy ratios",
                common({{"samples", {KeyType::integer, "100", {}}}}),
                {"poincare_max", "hardy_xi"},
                detail::by_dimension([]<int N>(const Config& c) { return detail::run_inequalities<N>(c); })});
  ex.push_back({"pipeline-c2alpha", "end-to-end free-boundary regularity pipeline (n = 2)",
                common({{"R", {KeyType::real, "0.5", {}}},
                        {"data", {KeyType::choice, "curved", {"curved", "flat", "hopf_violation"}}},
                        {"violation", {KeyType::real, "20", {}}},
                        {"working_radius", {KeyType::real, "0.4", {}}}}),
                {"pass", "aborted", "dgamma_exponent"}, detail::run_pipeline});
  // the pipeline is three-dimensional and perturbed by default
  ex.back().schema["n"].fallback = "2";
  ex.back().schema["eps0"].fallback = "0.05";
  ex.back().schema["seed"].fallback = "7";
  return ex;
}

struct Assertion {
  std::string key;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

inline std::vector<Assertion> check_assertions(const Config& c, const Outcome& o) {
  std::vector<Assertion> out;
  for (const auto& [k, a] : c.assertions()) {
    const std::string metric = k.substr(11);
    Assertion r;
    r.key = k;
    r.bound = a.bound;
    const auto it = o.metrics.find(metric);
    r.value = it == o.metrics.end() ? std::nan("") : it->second;
    r.pass = std::isfinite(r.value) && (k[7] == 'm' && k[8] == 'i' ? r.value >= a.bound : r.value <= a.bound);
    out.push_back(r);
  }
  return out;
}

inline void write_outputs(const std::filesystem::path& dir, const std::string& name, const Config& c,
                          Outcome& o, const std::vector<Assertion>& asserts) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["experiment"] = name;
  j["config"] = c.to_json();
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [k, v] : o.metrics) m[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  j["metrics"] = m;
  j["result"] = o.report;
  j["assertions"] = nlohmann::json::array();
  for (const auto& a : asserts) {
    j["assertions"].push_back({{"key", a.key}, {"bound", a.bound},
                               {"value", std::isfinite(a.value) ? nlohmann::json(a.value) : nlohmann::json(nullptr)},
                               {"pass", a.pass}});
  }
  o.files["report.json"] = j.dump(2) + "\n";
  for (const auto& [file, content] : o.files) {
    std::ofstream f(dir / file, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / file).string());
    f << content;
  }
}

}  // namespace slitlab::cli

#endif  // SLITLAB_CLI_HPP
