#pragma once

// INI-style run configuration: [section] headers, key = value lines, '#' or ';'
// comments. Every key is declared in a schema so unknown keys and malformed
// values are reported with their line number.

#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "wlns/csv.hpp"
#include "wlns/error.hpp"
#include "wlns/nse.hpp"

namespace wlns {

struct DiagnosticsConfig {
  double q = 6.0;                 ///< weak-norm exponent; p, sigma, rho derived
  bool level_sets = false;        ///< write the level-set energy table
  Point center{std::numbers::pi, std::numbers::pi, std::numbers::pi};  ///< cylinder center
  double scale = 0.2;             ///< cylinder scale eps
  double t0 = 0.05;               ///< cylinder center time (reference time 0)
  int k_max = 6;
  bool energy_residual = false;   ///< write the local energy residual (unit cutoff)
  int stencil = 3;
};

struct OutputConfig {
  std::string dir = "out";
  bool snapshots = true;
};

struct CounterexampleConfig {
  double q = 6.0;
  double r = 2.0;
  int terms = 40;
  double t_inf = 1.0;
};

struct RecursiveConfig {
  double C = 2.0;
  double beta = 2.0;
  double w0 = 0.0625;
  int k_max = 20;
  bool scan = false;
};

struct GronwallConfig {
  std::string B;                  ///< CSV path with columns t, B
  double C = 1.0;
  double H0 = 1.0;
  std::string method = "exact";   ///< exact | rk4
  double dt = 1e-3;
};

struct RunConfig {
  SolverConfig solver;
  DiagnosticsConfig diagnostics;
  OutputConfig output;
  CounterexampleConfig counterexample;
  RecursiveConfig recursive;
  GronwallConfig gronwall;
};

// ---------------------------------------------------------------------------
// raw INI

struct IniEntry {
  std::string value;
  int line = 0;
};

struct IniDocument {
  std::string source;
  std::map<std::string, std::map<std::string, IniEntry>> sections;
};

inline IniDocument parse_ini(std::istream& is, const std::string& source) {
  IniDocument doc;
  doc.source = source;
  std::string line, section;
  int lineno = 0;
  const auto fail = [&](const std::string& msg) { throw Error(source + ":" + std::to_string(lineno) + ": " + msg); };
  while (std::getline(is, line)) {
    ++lineno;
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s[0] == '[') {
      if (s.back() != ']') fail("unterminated section header");
      section = detail::trim(s.substr(1, s.size() - 2));
      if (section.empty()) fail("empty section name");
      doc.sections[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    if (section.empty()) fail("key outside of a [section]");
    const std::string key = detail::trim(s.substr(0, eq));
    std::string value = detail::trim(s.substr(eq + 1));
    // Trailing comments need whitespace before the marker.
    for (const char* marker : {" #", "\t#", " ;", "\t;"})
      if (const auto c = value.find(marker); c != std::string::npos) value = detail::trim(value.substr(0, c));
    if (key.empty()) fail("empty key");
    auto& sec = doc.sections[section];
    if (sec.count(key)) fail("duplicate key '" + key + "' (first set on line " + std::to_string(sec[key].line) + ")");
    sec[key] = {value, lineno};
  }
  return doc;
}

// ---------------------------------------------------------------------------
// schema

struct KeySpec {
  std::string section;
  std::string key;
  std::string type;  ///< shown in help: int, real, bool, string, vec3
  std::string doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;  ///< throws a message without location
};

namespace detail {

inline double to_real(const std::string& s) {
  double v = 0.0;
  if (!parse_double(s, v) || !std::isfinite(v)) throw Error("'" + s + "' is not a finite number");
  return v;
}

inline long long to_int(const std::string& s) {
  long long v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || b == e) throw Error("'" + s + "' is not an integer");
  return v;
}

inline bool to_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw Error("'" + s + "' is not a boolean (true/false)");
}

inline Vec3 to_vec3(const std::string& s) {
  std::istringstream in(s);
  std::string cell;
  std::vector<double> v;
  while (in >> cell) {
    if (!cell.empty() && cell.back() == ',') cell.pop_back();
    if (!cell.empty()) v.push_back(to_real(cell));
  }
  if (v.size() != 3) throw Error("'" + s + "' is not three numbers");
  return {v[0], v[1], v[2]};
}

inline std::string from_bool(bool b) { return b ? "true" : "false"; }
inline std::string from_vec3(const Vec3& v) {
  return format_number(v[0]) + " " + format_number(v[1]) + " " + format_number(v[2]);
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(msg);
}

inline int to_int_in(const std::string& s, long long lo, long long hi) {
  const long long v = to_int(s);
  require(v >= lo && v <= hi, "value " + s + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

inline double to_positive(const std::string& s) {
  const double v = to_real(s);
  require(v > 0.0, "value " + s + " must be positive");
  return v;
}

}  // namespace detail

inline const std::vector<KeySpec>& config_schema() {
  using namespace detail;
  static const std::vector<KeySpec> schema{
      {"solver", "n", "int", "grid points per direction (even, >= 8)",
       [](const RunConfig& c) { return std::to_string(c.solver.n); },
       [](RunConfig& c, const std::string& v) {
         c.solver.n = to_int_in(v, 8, 1024);
         require(c.solver.n % 2 == 0, "n must be even");
       }},
      {"solver", "viscosity", "real", "kinematic viscosity nu",
       [](const RunConfig& c) { return format_number(c.solver.viscosity); },
       [](RunConfig& c, const std::string& v) { c.solver.viscosity = to_positive(v); }},
      {"solver", "dt", "real", "time step", [](const RunConfig& c) { return format_number(c.solver.dt); },
       [](RunConfig& c, const std::string& v) { c.solver.dt = to_positive(v); }},
      {"solver", "t_end", "real", "final time", [](const RunConfig& c) { return format_number(c.solver.t_end); },
       [](RunConfig& c, const std::string& v) {
         c.solver.t_end = to_real(v);
         require(c.solver.t_end >= 0.0, "t_end must be nonnegative");
       }},
      {"solver", "dealias", "real", "retained fraction of the spectrum (2/3 rule)",
       [](const RunConfig& c) { return format_number(c.solver.dealias); },
       [](RunConfig& c, const std::string& v) {
         c.solver.dealias = to_real(v);
         require(c.solver.dealias > 0.0 && c.solver.dealias <= 1.0, "dealias must lie in (0, 1]");
       }},
      {"solver", "snapshot_every", "int", "steps between stored snapshots and trace rows",
       [](const RunConfig& c) { return std::to_string(c.solver.snapshot_every); },
       [](RunConfig& c, const std::string& v) { c.solver.snapshot_every = to_int_in(v, 1, 1 << 30); }},
      {"solver", "initial", "string", "taylor_green | taylor_green_cos | random | constant | zero",
       [](const RunConfig& c) { return c.solver.initial.name; },
       [](RunConfig& c, const std::string& v) {
         require(v == "taylor_green" || v == "taylor_green_cos" || v == "random" || v == "constant" || v == "zero",
                 "unknown initial condition '" + v + "'");
         c.solver.initial.name = v;
       }},
      {"solver", "amplitude", "real", "initial amplitude (random: max |u|)",
       [](const RunConfig& c) { return format_number(c.solver.initial.amplitude); },
       [](RunConfig& c, const std::string& v) { c.solver.initial.amplitude = to_real(v); }},
      {"solver", "k_peak", "int", "random: spectrum peak wavenumber",
       [](const RunConfig& c) { return std::to_string(c.solver.initial.k_peak); },
       [](RunConfig& c, const std::string& v) { c.solver.initial.k_peak = to_int_in(v, 1, 512); }},
      {"solver", "k_max", "int", "random: largest excited |k|_inf",
       [](const RunConfig& c) { return std::to_string(c.solver.initial.k_max); },
       [](RunConfig& c, const std::string& v) { c.solver.initial.k_max = to_int_in(v, 1, 512); }},
      {"solver", "constant", "vec3", "constant: velocity value",
       [](const RunConfig& c) { return from_vec3(c.solver.initial.constant); },
       [](RunConfig& c, const std::string& v) { c.solver.initial.constant = to_vec3(v); }},
      {"solver", "seed", "int", "random generator seed",
       [](const RunConfig& c) { return std::to_string(c.solver.seed); },
       [](RunConfig& c, const std::string& v) {
         const long long s = to_int(v);
         require(s >= 0, "seed must be nonnegative");
         c.solver.seed = static_cast<std::uint64_t>(s);
       }},
      {"solver", "nonlinear", "bool", "include the advection term",
       [](const RunConfig& c) { return from_bool(c.solver.nonlinear); },
       [](RunConfig& c, const std::string& v) { c.solver.nonlinear = to_bool(v); }},
      {"solver", "blowup_threshold", "real", "halt when max |u| exceeds this",
       [](const RunConfig& c) { return format_number(c.solver.blowup_threshold); },
       [](RunConfig& c, const std::string& v) { c.solver.blowup_threshold = to_positive(v); }},

      {"diagnostics", "q", "real", "weak-norm exponent (> 3)",
       [](const RunConfig& c) { return format_number(c.diagnostics.q); },
       [](RunConfig& c, const std::string& v) {
         c.diagnostics.q = to_real(v);
         require(c.diagnostics.q > 3.0, "q must exceed 3");
       }},
      {"diagnostics", "level_sets", "bool", "write the level-set energy table",
       [](const RunConfig& c) { return from_bool(c.diagnostics.level_sets); },
       [](RunConfig& c, const std::string& v) { c.diagnostics.level_sets = to_bool(v); }},
      {"diagnostics", "center", "vec3", "cylinder center",
       [](const RunConfig& c) { return from_vec3(c.diagnostics.center); },
       [](RunConfig& c, const std::string& v) { c.diagnostics.center = to_vec3(v); }},
      {"diagnostics", "scale", "real", "cylinder scale eps",
       [](const RunConfig& c) { return format_number(c.diagnostics.scale); },
       [](RunConfig& c, const std::string& v) { c.diagnostics.scale = to_positive(v); }},
      {"diagnostics", "t0", "real", "cylinder top time",
       [](const RunConfig& c) { return format_number(c.diagnostics.t0); },
       [](RunConfig& c, const std::string& v) { c.diagnostics.t0 = to_real(v); }},
      {"diagnostics", "k_max", "int", "deepest level k",
       [](const RunConfig& c) { return std::to_string(c.diagnostics.k_max); },
       [](RunConfig& c, const std::string& v) { c.diagnostics.k_max = to_int_in(v, 0, 60); }},
      {"diagnostics", "energy_residual", "bool", "write the local energy residual with the unit cutoff",
       [](const RunConfig& c) { return from_bool(c.diagnostics.energy_residual); },
       [](RunConfig& c, const std::string& v) { c.diagnostics.energy_residual = to_bool(v); }},
      {"diagnostics", "stencil", "int", "time-derivative stencil, 3 or 5",
       [](const RunConfig& c) { return std::to_string(c.diagnostics.stencil); },
       [](RunConfig& c, const std::string& v) {
         c.diagnostics.stencil = to_int_in(v, 3, 5);
         require(c.diagnostics.stencil != 4, "stencil must be 3 or 5");
       }},

      {"output", "dir", "string", "output directory", [](const RunConfig& c) { return c.output.dir; },
       [](RunConfig& c, const std::string& v) {
         require(!v.empty(), "dir must not be empty");
         c.output.dir = v;
       }},
      {"output", "snapshots", "bool", "write binary snapshots",
       [](const RunConfig& c) { return from_bool(c.output.snapshots); },
       [](RunConfig& c, const std::string& v) { c.output.snapshots = to_bool(v); }},

      {"counterexample", "q", "real", "spatial exponent (> 3)",
       [](const RunConfig& c) { return format_number(c.counterexample.q); },
       [](RunConfig& c, const std::string& v) {
         c.counterexample.q = to_real(v);
         require(c.counterexample.q > 3.0, "q must exceed 3");
       }},
      {"counterexample", "r", "real", "Lorentz second index (> 1)",
       [](const RunConfig& c) { return format_number(c.counterexample.r); },
       [](RunConfig& c, const std::string& v) { c.counterexample.r = to_positive(v); }},
      {"counterexample", "terms", "int", "number of dyadic intervals",
       [](const RunConfig& c) { return std::to_string(c.counterexample.terms); },
       [](RunConfig& c, const std::string& v) { c.counterexample.terms = to_int_in(v, 1, 100000); }},
      {"counterexample", "t_inf", "real", "accumulation time",
       [](const RunConfig& c) { return format_number(c.counterexample.t_inf); },
       [](RunConfig& c, const std::string& v) { c.counterexample.t_inf = to_positive(v); }},

      {"recursive", "C", "real", "growth constant (> 1)", [](const RunConfig& c) { return format_number(c.recursive.C); },
       [](RunConfig& c, const std::string& v) {
         c.recursive.C = to_real(v);
         require(c.recursive.C > 1.0, "C must exceed 1");
       }},
      {"recursive", "beta", "real", "superlinear exponent (> 1)",
       [](const RunConfig& c) { return format_number(c.recursive.beta); },
       [](RunConfig& c, const std::string& v) {
         c.recursive.beta = to_real(v);
         require(c.recursive.beta > 1.0, "beta must exceed 1");
       }},
      {"recursive", "w0", "real", "initial value W_0", [](const RunConfig& c) { return format_number(c.recursive.w0); },
       [](RunConfig& c, const std::string& v) { c.recursive.w0 = to_positive(v); }},
      {"recursive", "k_max", "int", "iterations", [](const RunConfig& c) { return std::to_string(c.recursive.k_max); },
       [](RunConfig& c, const std::string& v) { c.recursive.k_max = to_int_in(v, 1, 100000); }},
      {"recursive", "scan", "bool", "bracket the critical W_0",
       [](const RunConfig& c) { return from_bool(c.recursive.scan); },
       [](RunConfig& c, const std::string& v) { c.recursive.scan = to_bool(v); }},

      {"gronwall", "B", "string", "CSV with columns t, B", [](const RunConfig& c) { return c.gronwall.B; },
       [](RunConfig& c, const std::string& v) { c.gronwall.B = v; }},
      {"gronwall", "C", "real", "multiplier", [](const RunConfig& c) { return format_number(c.gronwall.C); },
       [](RunConfig& c, const std::string& v) { c.gronwall.C = to_positive(v); }},
      {"gronwall", "H0", "real", "initial value", [](const RunConfig& c) { return format_number(c.gronwall.H0); },
       [](RunConfig& c, const std::string& v) { c.gronwall.H0 = to_positive(v); }},
      {"gronwall", "method", "string", "exact | rk4", [](const RunConfig& c) { return c.gronwall.method; },
       [](RunConfig& c, const std::string& v) {
         require(v == "exact" || v == "rk4", "method must be exact or rk4");
         c.gronwall.method = v;
       }},
      {"gronwall", "dt", "real", "rk4 step bound", [](const RunConfig& c) { return format_number(c.gronwall.dt); },
       [](RunConfig& c, const std::string& v) { c.gronwall.dt = to_positive(v); }},
  };
  return schema;
}

/// Applies a parsed document on top of `base`.
inline RunConfig apply_ini(const IniDocument& doc, RunConfig base = {}) {
  const auto& schema = config_schema();
  for (const auto& [section, keys] : doc.sections) {
    bool known_section = false;
    for (const auto& k : schema) known_section |= k.section == section;
    for (const auto& [key, entry] : keys) {
      const std::string where = doc.source + ":" + std::to_string(entry.line) + ": ";
      if (!known_section) throw Error(where + "unknown section [" + section + "]");
      const KeySpec* spec = nullptr;
      for (const auto& k : schema)
        if (k.section == section && k.key == key) spec = &k;
      if (spec == nullptr) throw Error(where + "unknown key '" + key + "' in [" + section + "]");
      try {
        spec->set(base, entry.value);
      } catch (const Error& e) {
        throw Error(where + "[" + section + "] " + key + ": " + e.what());
      }
    }
  }
  return base;
}

inline RunConfig load_config(std::istream& is, const std::string& source, RunConfig base = {}) {
  return apply_ini(parse_ini(is, source), std::move(base));
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path);
  return load_config(is, path, std::move(base));
}

/// Canonical INI text of every key, for manifests and round trips.
inline std::string to_ini(const RunConfig& c) {
  std::ostringstream os;
  std::string section;
  for (const auto& k : config_schema()) {
    if (k.section != section) {
      os << (section.empty() ? "" : "\n") << "[" << k.section << "]\n";
      section = k.section;
    }
    os << k.key << " = " << k.get(c) << "\n";
  }
  return os.str();
}

/// Key reference for --help.
inline std::string config_help() {
  std::ostringstream os;
  std::string section;
  const RunConfig defaults;
  for (const auto& k : config_schema()) {
    if (k.section != section) {
      os << "[" << k.section << "]\n";
      section = k.section;
    }
    os << "  " << k.key << " (" << k.type << ", default " << k.get(defaults) << "): " << k.doc << "\n";
  }
  return os.str();
}

}  // namespace wlns
