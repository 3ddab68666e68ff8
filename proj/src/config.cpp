#include "cbc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "cbc/conditions.hpp"
#include "cbc/error.hpp"
#include "cbc/io.hpp"

namespace cbc {

namespace {

enum class Type { Str, Real, Int, UInt, Reals, Pairs };

struct KeySpec {
  const char* key;
  Type type;
  const char* def;  // "" means unset
  const char* help;
  std::vector<std::string> choices = {};
};

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> s = {
      {"experiment", Type::Str, "", "experiment kind",
       {"conditions", "flow", "simulate", "couple", "lyapunov", "coupling-inequality", "lamperti", "qsd", "rate"}},
      {"seed", Type::UInt, "", "root seed; required for stochastic experiments"},
      {"out", Type::Str, "out", "output directory"},
      {"threads", Type::Int, "1", "worker threads"},
      {"mechanism.kind", Type::Str, "feller", "feller (mu = 0) or levy", {"feller", "levy"}},
      {"mechanism.b", Type::Real, "0", "linear coefficient b"},
      {"mechanism.c", Type::Real, "0", "diffusion coefficient c >= 0"},
      {"mechanism.mu.kind", Type::Str, "none", "jump measure family",
       {"none", "truncated_stable", "stable", "neveu", "tempered_stable", "atoms", "tabulated"}},
      {"mechanism.mu.C", Type::Real, "1", "family scale C > 0"},
      {"mechanism.mu.beta", Type::Real, "1.5", "stability index in (0, 2)"},
      {"mechanism.mu.lambda0", Type::Real, "1", "tempering rate > 0"},
      {"mechanism.mu.atoms", Type::Pairs, "", "z:w list for atoms"},
      {"mechanism.mu.grid", Type::Pairs, "", "z:m density table for tabulated"},
      {"mechanism.mu.small_exponent", Type::Real, "1", "density ~ z^-(1+e) below the table"},
      {"mechanism.mu.tail_exponent", Type::Real, "1", "density ~ z^-(1+e) beyond the table"},
      {"competition.kind", Type::Str, "zero", "competition function g",
       {"zero", "power", "logistic", "tabulated"}},
      {"competition.a", Type::Real, "1", "g(x) = a x^p, or a x^2 for logistic"},
      {"competition.p", Type::Real, "2", "power exponent"},
      {"competition.theta", Type::Real, "", "declared near-zero exponent of g"},
      {"competition.points", Type::Pairs, "", "x:g table for tabulated g"},
      {"growth.kind", Type::Str, "log_power", "phi(r) = log(1+r)^k or (1+r)^k", {"log_power", "power"}},
      {"growth.exponent", Type::Real, "2", "exponent k of phi"},
      {"growth.alpha", Type::Real, "1.5", "alpha in (0, 2)"},
      {"sim.x0", Type::Real, "1", "initial value"},
      {"sim.T", Type::Real, "1", "horizon"},
      {"sim.dt", Type::Real, "0.001", "base step"},
      {"sim.eps", Type::Real, "0.01", "small-jump cutoff"},
      {"sim.paths", Type::Int, "1000", "number of paths"},
      {"sim.export_paths", Type::Int, "1", "paths written as CSV"},
      {"sim.lambda", Type::Real, "", "Laplace argument for the analytic check (g = 0 only)"},
      {"sim.state_cap", Type::Real, "inf", "paths stop and count as surviving above this level"},
      {"flow.lambdas", Type::Reals, "1", "initial values of v"},
      {"flow.t_max", Type::Real, "1", "flow horizon"},
      {"flow.points", Type::Int, "101", "rows per flow CSV"},
      {"flow.times", Type::Reals, "0.25,0.5,1,2", "times for the extinction profile"},
      {"couple.x1", Type::Real, "2", "upper start"},
      {"couple.x2", Type::Real, "1", "lower start"},
      {"couple.pairs", Type::Int, "1000", "number of pairs"},
      {"couple.mode", Type::Str, "same", "same g for both, or zero g for the upper path", {"same", "zero_upper"}},
      {"lyapunov.rows", Type::Int, "8", "certificate rows"},
      {"lyapunov.verify_n", Type::Int, "5", "rows re-verified on the refined grid"},
      {"coupling.A", Type::Real, "1", "lower end of the window"},
      {"coupling.B", Type::Real, "2", "upper end of the window"},
      {"coupling.rho", Type::Real, "0.5", "exponent of phi(r) = 1 - exp(-r^rho)"},
      {"coupling.C", Type::Real, "1", "target constant"},
      {"lamperti.t_probe", Type::Real, "0.5", "probe time"},
      {"lamperti.eps", Type::Real, "", "stopping level; default 1e-3 x0"},
      {"qsd.init", Type::Real, "1", "point mass start"},
      {"qsd.t", Type::Real, "10", "observation time"},
      {"qsd.N", Type::Int, "1000", "particles"},
      {"qsd.bins", Type::Int, "0", "histogram bins; 0 = default rule"},
      {"qsd.method", Type::Str, "fleming_viot", "estimator", {"fleming_viot", "naive", "both"}},
      {"qsd.window", Type::Real, "0", "Fleming-Viot synchronization window; 0 = 10 dt"},
      {"qsd.residual_t", Type::Real, "1", "probe time of the fixed-point residual; 0 skips it"},
      {"qsd.residual_paths", Type::Int, "10000", "paths for the fixed-point residual"},
      {"rate.init1", Type::Real, "1", "first point mass"},
      {"rate.init2", Type::Real, "5", "second point mass"},
      {"rate.times", Type::Reals, "0.25,0.5,1,2,4,6", "observation times (>= 4)"},
      {"rate.N", Type::Int, "1000", "particles per system"},
  };
  return s;
}

const KeySpec* find_key(const std::string& k) {
  for (const auto& s : schema())
    if (k == s.key) return &s;
  return nullptr;
}

std::string trim(const std::string& s, std::size_t& lead) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  lead = a;
  return s.substr(a, b - a);
}

std::optional<double> parse_real(const std::string& s) {
  std::size_t lead = 0;
  const std::string t = trim(s, lead);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

template <class I>
std::optional<I> parse_int(const std::string& s) {
  std::size_t lead = 0;
  const std::string t = trim(s, lead);
  I v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<std::vector<double>> parse_reals(const std::string& s) {
  std::vector<double> v;
  for (const auto& part : split(s, ',')) {
    const auto x = parse_real(part);
    if (!x) return std::nullopt;
    v.push_back(*x);
  }
  return v;
}

std::optional<std::vector<std::pair<double, double>>> parse_pairs(const std::string& s) {
  std::vector<std::pair<double, double>> v;
  for (const auto& part : split(s, ',')) {
    const auto ab = split(part, ':');
    if (ab.size() != 2) return std::nullopt;
    const auto a = parse_real(ab[0]), b = parse_real(ab[1]);
    if (!a || !b) return std::nullopt;
    v.emplace_back(*a, *b);
  }
  return v;
}

const char* type_name(Type t) {
  switch (t) {
    case Type::Str: return "a word";
    case Type::Real: return "a real number";
    case Type::Int: return "an integer";
    case Type::UInt: return "an unsigned 64-bit integer";
    case Type::Reals: return "a comma-separated list of reals";
    case Type::Pairs: return "a comma-separated list of a:b pairs";
  }
  return "?";
}

std::optional<std::string> check_value(const KeySpec& k, const std::string& v) {
  bool ok = true;
  switch (k.type) {
    case Type::Str:
      ok = !v.empty() && (k.choices.empty() || std::find(k.choices.begin(), k.choices.end(), v) != k.choices.end());
      if (!ok && !k.choices.empty()) {
        std::string list;
        for (const auto& c : k.choices) list += (list.empty() ? "" : ", ") + c;
        return fmt::format("'{}' must be one of: {}", k.key, list);
      }
      break;
    case Type::Real: ok = parse_real(v).has_value() && !std::isnan(*parse_real(v)); break;
    case Type::Int: ok = parse_int<long long>(v).has_value(); break;
    case Type::UInt: ok = parse_int<std::uint64_t>(v).has_value(); break;
    case Type::Reals: ok = parse_reals(v).has_value(); break;
    case Type::Pairs: ok = parse_pairs(v).has_value(); break;
  }
  if (!ok) return fmt::format("'{}' expects {}, got '{}'", k.key, type_name(k.type), v);
  return std::nullopt;
}

}  // namespace

std::string ConfigDiagnostic::str(const std::string& source) const {
  if (line == 0) return fmt::format("{}: {}", source, message);
  return fmt::format("{}:{}:{}: {}", source, line, col, message);
}

ConfigError::ConfigError(std::string source, std::vector<ConfigDiagnostic> diags)
    : std::runtime_error([&] {
        std::string s = "invalid config";
        for (const auto& d : diags) s += "\n  " + d.str(source);
        return s;
      }()),
      diags_(std::move(diags)) {}

const std::vector<std::string>& experiment_kinds() { return schema().front().choices; }

double ExperimentConfig::real(const std::string& key) const {
  const auto v = maybe_real(key);
  if (!v) throw DomainError("config: '" + key + "' has no value");
  return *v;
}

std::optional<double> ExperimentConfig::maybe_real(const std::string& key) const {
  const std::string& s = text(key);
  if (s.empty()) return std::nullopt;
  return parse_real(s);
}

long long ExperimentConfig::integer(const std::string& key) const {
  const auto v = parse_int<long long>(text(key));
  if (!v) throw DomainError("config: '" + key + "' has no integer value");
  return *v;
}

const std::string& ExperimentConfig::text(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw DomainError("config: unknown key '" + key + "'");
  return it->second;
}

std::vector<double> ExperimentConfig::reals(const std::string& key) const {
  const auto v = parse_reals(text(key));
  if (!v) throw DomainError("config: '" + key + "' is not a list of reals");
  return *v;
}

GrowthFunction ExperimentConfig::growth() const {
  const double k = real("growth.exponent");
  return text("growth.kind") == "power" ? GrowthFunction::power(k) : GrowthFunction::log_power(k);
}

SimConfig ExperimentConfig::sim() const {
  SimConfig c;
  c.dt = real("sim.dt");
  c.eps = real("sim.eps");
  c.T = real("sim.T");
  c.state_cap = real("sim.state_cap");
  c.seed = seed.value_or(0);
  return c;
}

bool ExperimentConfig::stochastic() const {
  return experiment == "simulate" || experiment == "couple" || experiment == "lamperti" || experiment == "qsd" ||
         experiment == "rate";
}

std::vector<std::pair<std::string, std::string>> config_schema() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : schema())
    out.emplace_back(k.key, fmt::format("{} (default: {})", k.help, *k.def ? k.def : "unset"));
  return out;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  std::vector<ConfigDiagnostic> diags;
  std::map<std::string, std::string> given;
  std::map<std::string, int> given_line;
  int lineno = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++lineno;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::size_t lead = 0;
    if (trim(line, lead).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      diags.push_back({lineno, static_cast<int>(lead) + 1, "expected 'key = value'"});
      continue;
    }
    std::size_t klead = 0, vlead = 0;
    const std::string key = trim(line.substr(0, eq), klead);
    const std::string value = trim(line.substr(eq + 1), vlead);
    const int kcol = static_cast<int>(klead) + 1;
    const int vcol = static_cast<int>(eq + 1 + vlead) + 1;
    if (key.empty()) {
      diags.push_back({lineno, static_cast<int>(eq) + 1, "missing key before '='"});
      continue;
    }
    const KeySpec* spec = find_key(key);
    if (!spec) {
      diags.push_back({lineno, kcol, fmt::format("unknown key '{}'", key)});
      continue;
    }
    if (given.count(key)) {
      diags.push_back({lineno, kcol, fmt::format("duplicate key '{}' (first set on line {})", key, given_line[key])});
      continue;
    }
    if (value.empty()) {
      diags.push_back({lineno, vcol, fmt::format("missing value for '{}'", key)});
      continue;
    }
    if (const auto err = check_value(*spec, value)) {
      diags.push_back({lineno, vcol, *err});
      continue;
    }
    given[key] = value;
    given_line[key] = lineno;
  }
  if (!diags.empty()) throw ConfigError(source, std::move(diags));

  ExperimentConfig cfg;
  cfg.source_text = text;
  for (const auto& k : schema()) cfg.values[k.key] = given.count(k.key) ? given[k.key] : std::string(k.def);

  // Semantic checks, all reported together.
  const auto fail = [&](const std::string& key, std::string msg) {
    const int ln = given_line.count(key) ? given_line[key] : 0;
    diags.push_back({ln, ln ? 1 : 0, std::move(msg)});
  };
  cfg.experiment = cfg.values["experiment"];
  if (cfg.experiment.empty()) fail("experiment", "'experiment' is required");
  if (!cfg.values["seed"].empty()) cfg.seed = *parse_int<std::uint64_t>(cfg.values["seed"]);
  cfg.out = cfg.values["out"];
  cfg.threads = static_cast<int>(cfg.integer("threads"));
  if (cfg.threads < 1) fail("threads", "threads >= 1 required");
  if (cfg.stochastic() && !cfg.seed) fail("seed", fmt::format("'seed' is required for the stochastic experiment '{}'", cfg.experiment));

  const double b = cfg.real("mechanism.b"), c = cfg.real("mechanism.c");
  if (!(c >= 0.0)) fail("mechanism.c", "mechanism.c: c >= 0 required (the diffusion coefficient is non-negative)");
  if (!std::isfinite(b)) fail("mechanism.b", "mechanism.b must be finite");
  const std::string mk = cfg.values["mechanism.kind"], muk = cfg.values["mechanism.mu.kind"];
  if (mk == "feller" && muk != "none") fail("mechanism.mu.kind", "mechanism.kind = feller takes no jump measure; use levy");
  if (mk == "levy" && muk == "none") fail("mechanism.mu.kind", "mechanism.kind = levy needs mechanism.mu.kind");
  const double C = cfg.real("mechanism.mu.C"), beta = cfg.real("mechanism.mu.beta"), l0 = cfg.real("mechanism.mu.lambda0");
  const bool stable_like = muk == "truncated_stable" || muk == "stable" || muk == "tempered_stable";
  if (muk != "none" && muk != "atoms" && muk != "tabulated" && !(C > 0.0)) fail("mechanism.mu.C", "mechanism.mu.C > 0 required");
  if (stable_like && !(beta > 0.0 && beta < 2.0)) fail("mechanism.mu.beta", "mechanism.mu.beta must lie in (0, 2)");
  if (muk == "tempered_stable" && !(l0 > 0.0)) fail("mechanism.mu.lambda0", "mechanism.mu.lambda0 > 0 required");
  if (muk == "atoms" && cfg.values["mechanism.mu.atoms"].empty()) fail("mechanism.mu.atoms", "mechanism.mu.atoms required for atoms");
  if (muk == "tabulated" && cfg.values["mechanism.mu.grid"].empty()) fail("mechanism.mu.grid", "mechanism.mu.grid required for tabulated");

  const std::string gk = cfg.values["competition.kind"];
  if (gk == "tabulated") {
    const auto pts = parse_pairs(cfg.values["competition.points"]);
    if (!pts || pts->empty()) {
      fail("competition.points", "competition.points required for tabulated g");
    } else {
      bool mono = true;
      double px = 0.0, pg = 0.0;
      for (const auto& [x, gv] : *pts) {
        if (!(x > px) || gv < pg || gv < 0.0) mono = false;
        px = x;
        pg = gv;
      }
      if (!mono)
        fail("competition.points",
             "competition.points: g must be a continuous and non-decreasing function with g(0) = 0; "
             "the sample points are not increasing in x and non-decreasing in g");
    }
  }
  if ((gk == "power" || gk == "logistic") && !(cfg.real("competition.a") > 0.0))
    fail("competition.a", "competition.a > 0 required");
  if (gk == "power" && !(cfg.real("competition.p") > 0.0)) fail("competition.p", "competition.p > 0 required");

  const double alpha = cfg.real("growth.alpha");
  if (!(alpha > 0.0 && alpha < 2.0)) fail("growth.alpha", "growth.alpha must lie in (0, 2)");
  if (!(cfg.real("growth.exponent") > 0.0)) fail("growth.exponent", "growth.exponent > 0 required");
  if (!(cfg.real("sim.dt") > 0.0)) fail("sim.dt", "sim.dt > 0 required");
  if (!(cfg.real("sim.eps") > 0.0)) fail("sim.eps", "sim.eps > 0 required");
  if (!(cfg.real("sim.T") > 0.0)) fail("sim.T", "sim.T > 0 required");
  if (!(cfg.real("sim.x0") > 0.0)) fail("sim.x0", "sim.x0 > 0 required");
  if (cfg.integer("sim.paths") < 1) fail("sim.paths", "sim.paths >= 1 required");
  if (cfg.integer("sim.export_paths") < 0) fail("sim.export_paths", "sim.export_paths >= 0 required");
  if (!(cfg.real("sim.state_cap") > 0.0)) fail("sim.state_cap", "sim.state_cap > 0 required");
  if (!(cfg.real("flow.t_max") > 0.0)) fail("flow.t_max", "flow.t_max > 0 required");
  for (double l : cfg.reals("flow.lambdas"))
    if (!(l >= 0.0)) fail("flow.lambdas", "flow.lambdas must be >= 0");
  if (!(cfg.real("couple.x1") >= cfg.real("couple.x2") && cfg.real("couple.x2") >= 0.0))
    fail("couple.x1", "couple: x1 >= x2 >= 0 required");
  if (cfg.integer("couple.pairs") < 1) fail("couple.pairs", "couple.pairs >= 1 required");
  if (cfg.integer("lyapunov.rows") < 1 || cfg.integer("lyapunov.verify_n") < 1)
    fail("lyapunov.rows", "lyapunov.rows and lyapunov.verify_n must be >= 1");
  if (!(cfg.real("coupling.A") > 0.0 && cfg.real("coupling.B") > cfg.real("coupling.A")))
    fail("coupling.A", "coupling: 0 < A < B required");
  if (!(cfg.real("coupling.rho") > 0.0 && cfg.real("coupling.rho") <= 1.0))
    fail("coupling.rho", "coupling.rho must lie in (0, 1]");
  if (!(cfg.real("lamperti.t_probe") >= 0.0)) fail("lamperti.t_probe", "lamperti.t_probe >= 0 required");
  if (const auto e = cfg.maybe_real("lamperti.eps"); e && !(*e > 0.0 && *e < cfg.real("sim.x0")))
    fail("lamperti.eps", "lamperti.eps must lie in (0, sim.x0)");
  if (!(cfg.real("qsd.init") > 0.0)) fail("qsd.init", "qsd.init > 0 required");
  if (!(cfg.real("qsd.t") >= 0.0)) fail("qsd.t", "qsd.t >= 0 required");
  if (cfg.integer("qsd.N") < 100) fail("qsd.N", "qsd.N >= 100 required");
  if (cfg.integer("qsd.bins") < 0) fail("qsd.bins", "qsd.bins >= 0 required");
  if (cfg.integer("rate.N") < 100) fail("rate.N", "rate.N >= 100 required");
  if (!(cfg.real("rate.init1") > 0.0 && cfg.real("rate.init2") > 0.0)) fail("rate.init1", "rate: initial points must be > 0");
  {
    const auto ts = cfg.reals("rate.times");
    bool inc = ts.size() >= 4;
    for (std::size_t i = 0; i < ts.size(); ++i)
      if (!(ts[i] >= 0.0) || (i && !(ts[i] > ts[i - 1]))) inc = false;
    if (!inc) fail("rate.times", "rate.times needs >= 4 increasing non-negative times");
  }
  if (!diags.empty()) throw ConfigError(source, std::move(diags));

  // Build the mechanism and competition; constructor errors become diagnostics.
  try {
    LevyMeasure mu = LevyMeasure::none();
    if (muk == "truncated_stable") mu = LevyMeasure::truncated_stable(C, beta);
    else if (muk == "stable") mu = LevyMeasure::stable(C, beta);
    else if (muk == "neveu") mu = LevyMeasure::neveu(C);
    else if (muk == "tempered_stable") mu = LevyMeasure::tempered_stable(C, beta, l0);
    else if (muk == "atoms") {
      std::vector<Atom> atoms;
      for (const auto& [z, w] : *parse_pairs(cfg.values["mechanism.mu.atoms"])) atoms.push_back({z, w});
      mu = LevyMeasure::atoms(std::move(atoms));
    } else if (muk == "tabulated") {
      std::vector<DensityPoint> grid;
      for (const auto& [z, m] : *parse_pairs(cfg.values["mechanism.mu.grid"])) grid.push_back({z, m});
      mu = LevyMeasure::tabulated(std::move(grid), cfg.real("mechanism.mu.small_exponent"),
                                  cfg.real("mechanism.mu.tail_exponent"));
    }
    cfg.mech = BranchingMechanism(b, c, std::move(mu));
  } catch (const std::exception& e) {
    fail("mechanism.mu.kind", std::string("mechanism: ") + e.what());
  }
  try {
    if (gk == "zero") cfg.g = CompetitionFunction::zero();
    else if (gk == "power") cfg.g = CompetitionFunction::power(cfg.real("competition.a"), cfg.real("competition.p"));
    else if (gk == "logistic") cfg.g = CompetitionFunction::logistic(cfg.real("competition.a"));
    else cfg.g = CompetitionFunction::tabulated(*parse_pairs(cfg.values["competition.points"]));
    if (const auto th = cfg.maybe_real("competition.theta")) cfg.g = cfg.g.with_theta(*th);
  } catch (const std::exception& e) {
    fail("competition.kind", std::string("competition: ") + e.what());
  }
  if (diags.empty() && cfg.experiment == "lyapunov") {
    const ConditionReport r = qsd_hypotheses_check(cfg.mech, cfg.g, cfg.growth(), alpha);
    if (!r.satisfied())
      fail("growth.alpha", fmt::format("lyapunov: the growth hypotheses for alpha = {} are {} for this mechanism and g",
                                       alpha, verdict_name(r.verdict)));
  }
  if (diags.empty() && cfg.experiment == "simulate" && cfg.maybe_real("sim.lambda") && !cfg.g.is_zero())
    fail("sim.lambda", "sim.lambda: the analytic Laplace check needs competition.kind = zero");
  if (diags.empty() && cfg.experiment == "lamperti" && !cfg.g.is_zero())
    fail("competition.kind", "lamperti: the time change applies to g = 0 only");
  if (!diags.empty()) throw ConfigError(source, std::move(diags));
  return cfg;
}

ExperimentConfig validate_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(path.string(), {{0, 0, e.what()}});
  }
  return parse_config(text, path.string());
}

}  // namespace cbc
