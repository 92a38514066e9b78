#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "wlns/manifest.hpp"
#include "wlns/parallel.hpp"
#include "wlns/wlns.hpp"

namespace wlns::cli {

namespace fs = std::filesystem;

namespace {

struct Clock {
  std::chrono::system_clock::time_point wall = std::chrono::system_clock::now();
  std::chrono::steady_clock::time_point mono = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - mono).count(); }
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  return os;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
}

std::string snapshot_name(long step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%08ld.wlns", step);
  return buf;
}

void finish_manifest(RunManifest& m, const Clock& clock, const fs::path& dir, int code, const std::string& status) {
  m.finished = utc_timestamp(std::chrono::system_clock::now());
  m.wall_seconds = clock.seconds();
  m.exit_code = code;
  m.status = status;
  m.inventory(dir);
  m.write(dir);
}

CylinderScheme scheme_from(const DiagnosticsConfig& d) {
  CylinderScheme s;
  s.center = d.center;
  s.scale = d.scale;
  s.t0 = d.t0;
  s.k_max = d.k_max;
  return s;
}

void write_levels(const fs::path& path, const Trajectory& traj, const DiagnosticsConfig& d) {
  const auto levels = level_energy(traj, scheme_from(d));
  auto os = open_out(path);
  write_level_csv(os, levels);
}

void write_residual(const fs::path& path, const Trajectory& traj, double nu, int stencil) {
  const auto rep = energy_residual(traj, UnitCutoff{}, nu, stencil);
  auto os = open_out(path);
  CsvWriter w(os, {"t", "residual"});
  for (std::size_t i = 0; i < rep.times.size(); ++i) w.row({rep.times[i], rep.residual[i]});
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const std::string& config_path, const std::string& out_override, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config_file(config_path);
    if (!out_override.empty()) cfg.output.dir = out_override;
    cfg.solver.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const Clock clock;
  const fs::path dir = cfg.output.dir;
  prepare_dir(dir);
  if (cfg.output.snapshots) prepare_dir(dir / "snapshots");

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.config = to_ini(cfg);
  manifest.seed = cfg.solver.seed;
  manifest.threads = parallel::threads();
  manifest.started = utc_timestamp(clock.wall);

  const auto exps = derive_exponents(cfg.diagnostics.q);
  const bool keep = cfg.diagnostics.level_sets || cfg.diagnostics.energy_residual;
  CriterionTrace trace{exps, {}};
  Trajectory traj;

  auto steps_os = open_out(dir / "steps.csv");
  CsvWriter steps(steps_os, {"step", "t", "energy", "dissipation", "cfl", "max_div"});

  SolverState state = initial_state(cfg.solver);
  const auto record = [&](const SolverState& s) {
    const VectorField u = inverse_transform(s.velocity);
    trace.rows.push_back(criterion_row(u, s.time, exps));
    if (cfg.output.snapshots) write_snapshot_file(dir / "snapshots" / snapshot_name(s.step_index), velocity_snapshot(u, s.time));
    if (keep) traj.push_back({s.time, u});
  };
  const auto log_step = [&](const SolverState& s) {
    steps.row({static_cast<double>(s.step_index), s.time, kinetic_energy(s.velocity), enstrophy_dissipation(s.velocity),
               cfl_number(s, cfg.solver), spectral_divergence(s.velocity)});
  };
  const auto write_trace = [&] {
    auto os = open_out(dir / "trace.csv");
    write_trace_csv(os, accumulate(trace));
  };

  log_step(state);
  record(state);
  const long n_steps = std::lround(cfg.solver.t_end / cfg.solver.dt);
  try {
    for (long i = 0; i < n_steps; ++i) {
      state = step(state, cfg.solver);
      log_step(state);
      if (state.step_index % cfg.solver.snapshot_every == 0 || i + 1 == n_steps) record(state);
    }
  } catch (const BlowUpError& e) {
    steps_os.close();
    write_trace();
    err << "blow-up: " << e.what() << " (last valid time " << format_number(e.last_valid_time()) << ")\n";
    finish_manifest(manifest, clock, dir, kExitBlowUp, "blow-up");
    return kExitBlowUp;
  }
  steps_os.close();
  write_trace();
  try {
    if (cfg.diagnostics.level_sets) write_levels(dir / "levels.csv", traj, cfg.diagnostics);
    if (cfg.diagnostics.energy_residual)
      write_residual(dir / "residual.csv", traj, cfg.solver.viscosity, cfg.diagnostics.stencil);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    finish_manifest(manifest, clock, dir, kExitUsage, "diagnostics failed");
    return kExitUsage;
  }
  finish_manifest(manifest, clock, dir, kExitOk, "ok");
  out << "simulated " << n_steps << " steps to t = " << format_number(state.time) << ", outputs in " << dir.string()
      << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// diagnose

int cmd_diagnose(const std::string& snap_dir, std::optional<double> q, const std::string& out_dir,
                 const std::string& config_path, bool levels, bool residual, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  Trajectory traj;
  try {
    if (!config_path.empty()) cfg = load_config_file(config_path);
    if (q) {
      if (!(*q > 3.0)) throw Error("--q must exceed 3");
      cfg.diagnostics.q = *q;
    }
    if (levels) cfg.diagnostics.level_sets = true;
    if (residual) cfg.diagnostics.energy_residual = true;
    fs::path src = snap_dir;
    if (fs::is_directory(src / "snapshots")) src /= "snapshots";
    if (!fs::is_directory(src)) throw Error("not a directory: " + src.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(src))
      if (e.is_regular_file() && e.path().extension() == ".wlns") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no .wlns snapshots in " + src.string());
    for (const auto& f : files) {
      const Snapshot s = read_snapshot_file(f);
      traj.push_back({s.time, velocity_from(s)});
    }
    std::stable_sort(traj.begin(), traj.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const Clock clock;
  const fs::path dir = out_dir;
  prepare_dir(dir);
  RunManifest manifest;
  manifest.command = "diagnose " + snap_dir;
  manifest.config = to_ini(cfg);
  manifest.threads = parallel::threads();
  manifest.started = utc_timestamp(clock.wall);
  try {
    const auto exps = derive_exponents(cfg.diagnostics.q);
    CriterionTrace trace{exps, {}};
    for (const auto& s : traj) trace.rows.push_back(criterion_row(s.velocity, s.time, exps));
    trace = accumulate(trace);
    {
      auto os = open_out(dir / "trace.csv");
      write_trace_csv(os, trace);
    }
    const auto holder = holder_check(trace, exps);
    out << "snapshots: " << traj.size() << "\n";
    out << "C_wlog: " << format_number(trace.rows.back().C_wlog) << "\n";
    out << "holder: " << (holder.pass() ? "ok" : "violated") << " (lhs " << format_number(holder.lhs) << ", rhs "
        << format_number(holder.rhs) << ")\n";
    if (cfg.diagnostics.level_sets) write_levels(dir / "levels.csv", traj, cfg.diagnostics);
    if (cfg.diagnostics.energy_residual)
      write_residual(dir / "residual.csv", traj, cfg.solver.viscosity, cfg.diagnostics.stencil);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    finish_manifest(manifest, clock, dir, kExitUsage, "failed");
    return kExitUsage;
  }
  finish_manifest(manifest, clock, dir, kExitOk, "ok");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// counterexample

int cmd_counterexample(const CounterexampleConfig& c, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const Clock clock;
  const fs::path dir = out_dir;
  try {
    const auto exps = derive_exponents(c.q);
    if (!(c.q > 3.0 && c.q < 9.0)) throw Error("--q must lie in (3, 9)");
    if (!(c.r > 1.0)) throw Error("--r must exceed 1");
    const auto s = DyadicSchedule::make(c.q, c.t_inf, c.terms);
    prepare_dir(dir);
    RunManifest manifest;
    manifest.command = "counterexample";
    RunConfig rc;
    rc.counterexample = c;
    manifest.config = to_ini(rc);
    manifest.threads = parallel::threads();
    manifest.started = utc_timestamp(clock.wall);
    {
      auto os = open_out(dir / "counterexample.csv");
      write_counterexample_csv(os, s, c.r);
    }
    const auto c1 = claim1_terms(s, c.terms);
    {
      auto os = open_out(dir / "claim1.csv");
      CsvWriter w(os, {"n", "term", "exact", "partial", "partial_exact"});
      for (const auto& r : c1) w.row({static_cast<double>(r.n), r.term, r.exact, r.partial, r.partial_exact});
    }
    const auto c2 = claim2_lower_bound(s, c.terms, c.r);
    {
      auto os = open_out(dir / "claim2.csv");
      CsvWriter w(os, {"n", "ratio_r", "partial", "comparison"});
      for (const auto& r : c2) w.row({static_cast<double>(r.n), r.ratio_r, r.partial, r.comparison});
    }
    std::vector<int> Ns;
    for (int N = 1; N <= c.terms; N = N < 10 ? N + 1 : N * 2) Ns.push_back(N);
    if (Ns.back() != c.terms) Ns.push_back(c.terms);
    const auto sep = criterion_vs_lorentz(s, c.r, Ns);
    {
      auto os = open_out(dir / "separation.csv");
      CsvWriter w(os, {"N", "criterion", "lorentz"});
      for (const auto& r : sep) w.row({static_cast<double>(r.N), r.criterion, r.lorentz});
    }
    out << "q = " << format_number(c.q) << ", p = " << format_number(exps.p) << ", r = " << format_number(c.r)
        << ", terms = " << c.terms << "\n";
    out << "claim1 partial sum: " << format_number(c1.back().partial) << "\n";
    out << "claim1 exact criterion: " << format_number(c1.back().partial_exact) << "\n";
    out << "claim2 partial sum: " << format_number(c2.back().partial) << "\n";
    out << "claim2 comparison: " << format_number(c2.back().comparison) << " (limit "
        << format_number(claim2_comparison_limit(exps.p, c.r)) << ")\n";
    out << "lorentz partial norm: " << format_number(sep.back().lorentz) << "\n";
    finish_manifest(manifest, clock, dir, kExitOk, "ok");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// recursive

int cmd_recursive(const RecursiveConfig& c, std::ostream& out, std::ostream& err) {
  try {
    if (!(c.C > 1.0)) throw Error("--C must exceed 1");
    if (!(c.beta > 1.0)) throw Error("--beta must exceed 1");
    if (!(c.w0 > 0.0)) throw Error("--w0 must be positive");
    const auto res = recursive_sequence(c.C, c.beta, c.w0, c.k_max);
    out << "k,log2_W,W\n";
    for (std::size_t k = 0; k < res.log2_w.size(); ++k)
      out << k << "," << format_number(res.log2_w[k]) << "," << format_number(std::exp2(res.log2_w[k])) << "\n";
    out << "converged: " << (res.converged ? "true" : "false") << "\n";
    if (c.scan) {
      const auto br = threshold_scan(c.C, c.beta);
      out << "critical_w0: [" << format_number(br.lo) << ", " << format_number(br.hi) << "]\n";
      out << "predicted: " << format_number(std::pow(c.C, -1.0 / ((c.beta - 1.0) * (c.beta - 1.0)))) << "\n";
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gronwall

int cmd_gronwall(const GronwallConfig& c, const std::string& out_path, std::ostream& out, std::ostream& err) {
  BoundProblem pb;
  try {
    if (c.B.empty()) throw Error("--B is required");
    std::ifstream is(c.B);
    if (!is) throw Error("cannot open " + c.B);
    pb = read_bound_problem(is, c.B, c.C, c.H0);
    pb.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const BoundSolution sol = c.method == "rk4" ? solve_bound(pb, c.dt) : solve_piecewise_exact(pb);
  const ImplicitCheck chk = implicit_check(sol, pb);
  try {
    if (out_path.empty() || out_path == "-") {
      write_bound_csv(out, sol, chk);
    } else {
      if (const auto parent = fs::path(out_path).parent_path(); !parent.empty()) prepare_dir(parent);
      auto os = open_out(out_path);
      write_bound_csv(os, sol, chk);
      out << "H(T) = " << format_number(sol.H.back()) << ", max deviation " << format_number(chk.max_abs) << "\n";
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (sol.overflow) {
    err << "numeric overflow: H exceeded 1e300 at t = " << format_number(sol.overflow_time)
        << "; finite int B should keep H finite, check the B signal\n";
    return kExitBlowUp;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weak-in-space, log-in-time regularity toolkit for 3D Navier-Stokes", "wlns"};
  app.set_version_flag("--version", std::string(WLNS_VERSION));
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: WLNS_THREADS or 1)")->check(CLI::PositiveNumber);

  std::string config_path, out_dir;

  auto* sim = app.add_subcommand("simulate", "run the solver, write snapshots, trace.csv, steps.csv, manifest.json");
  sim->add_option("config", config_path, "INI config")->required();
  sim->add_option("--out", out_dir, "output directory (overrides [output] dir)");
  sim->footer("Config keys:\n" + config_help());

  std::string snap_dir;
  std::optional<double> diag_q;
  bool diag_levels = false, diag_residual = false;
  auto* diag = app.add_subcommand("diagnose", "recompute trace and level-set tables from stored snapshots");
  diag->add_option("snapshots", snap_dir, "snapshot directory (or a simulate output directory)")->required();
  diag->add_option("--q", diag_q, "weak-norm exponent (> 3)");
  diag->add_option("--out", out_dir, "output directory")->required();
  diag->add_option("--config", config_path, "INI config supplying [diagnostics]");
  diag->add_flag("--levels", diag_levels, "write levels.csv");
  diag->add_flag("--residual", diag_residual, "write residual.csv (unit cutoff)");

  CounterexampleConfig ce;
  auto* cex = app.add_subcommand("counterexample", "dyadic counterexample tables");
  cex->add_option("--config", config_path, "INI config supplying [counterexample]");
  cex->add_option("--q", ce.q, "spatial exponent");
  cex->add_option("--r", ce.r, "Lorentz second index");
  cex->add_option("--terms", ce.terms, "number of intervals")->check(CLI::PositiveNumber);
  cex->add_option("--t-inf", ce.t_inf, "accumulation time");
  cex->add_option("--out", out_dir, "output directory")->required();

  RecursiveConfig rec;
  auto* recu = app.add_subcommand("recursive", "iterate W_{k+1} = C^k W_k^beta");
  recu->add_option("--config", config_path, "INI config supplying [recursive]");
  recu->add_option("--C", rec.C, "growth constant");
  recu->add_option("--beta", rec.beta, "superlinear exponent");
  recu->add_option("--w0", rec.w0, "initial value");
  recu->add_option("--kmax", rec.k_max, "iterations")->check(CLI::PositiveNumber);
  recu->add_flag("--scan", rec.scan, "bracket the critical W0");

  GronwallConfig gr;
  auto* gro = app.add_subcommand("gronwall", "integrate H' = C Psi(H) B(t) from a (t, B) CSV");
  gro->add_option("--config", config_path, "INI config supplying [gronwall]");
  gro->add_option("--B", gr.B, "CSV with columns t, B");
  gro->add_option("--C", gr.C, "multiplier");
  gro->add_option("--H0", gr.H0, "initial value");
  gro->add_option("--method", gr.method, "exact | rk4")->check(CLI::IsMember({"exact", "rk4"}));
  gro->add_option("--dt", gr.dt, "rk4 step bound");
  gro->add_option("--out", out_dir, "output CSV (default stdout)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << WLNS_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Help on a subcommand is reported through the subcommand's own message.
    if (e.get_exit_code() == 0) {
      for (auto* sub : app.get_subcommands()) out << sub->help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n" << "run 'wlns --help' for usage\n";
    return kExitUsage;
  }

  parallel::set_threads(threads > 0 ? threads : parallel::threads_from_env(1));

  // Flags given on the command line win over the config file.
  try {
    if (*sim) return cmd_simulate(config_path, out_dir, out, err);
    if (*diag) return cmd_diagnose(snap_dir, diag_q, out_dir, config_path, diag_levels, diag_residual, out, err);
    if (*cex) {
      if (!config_path.empty()) {
        const auto file = load_config_file(config_path).counterexample;
        if (cex->count("--q") == 0) ce.q = file.q;
        if (cex->count("--r") == 0) ce.r = file.r;
        if (cex->count("--terms") == 0) ce.terms = file.terms;
        if (cex->count("--t-inf") == 0) ce.t_inf = file.t_inf;
      }
      return cmd_counterexample(ce, out_dir, out, err);
    }
    if (*recu) {
      if (!config_path.empty()) {
        const auto file = load_config_file(config_path).recursive;
        if (recu->count("--C") == 0) rec.C = file.C;
        if (recu->count("--beta") == 0) rec.beta = file.beta;
        if (recu->count("--w0") == 0) rec.w0 = file.w0;
        if (recu->count("--kmax") == 0) rec.k_max = file.k_max;
        if (recu->count("--scan") == 0) rec.scan = file.scan;
      }
      return cmd_recursive(rec, out, err);
    }
    if (*gro) {
      if (!config_path.empty()) {
        const auto file = load_config_file(config_path).gronwall;
        if (gro->count("--B") == 0) {
          gr.B = file.B;
          // Relative B paths in a config resolve against the config's directory.
          if (!gr.B.empty() && fs::path(gr.B).is_relative()) gr.B = (fs::path(config_path).parent_path() / gr.B).string();
        }
        if (gro->count("--C") == 0) gr.C = file.C;
        if (gro->count("--H0") == 0) gr.H0 = file.H0;
        if (gro->count("--method") == 0) gr.method = file.method;
        if (gro->count("--dt") == 0) gr.dt = file.dt;
      }
      if (!(gr.C > 0.0 && gr.H0 > 0.0 && gr.dt > 0.0)) throw Error("--C, --H0 and --dt must be positive");
      return cmd_gronwall(gr, out_dir, out, err);
    }
  } catch (const BlowUpError& e) {
    err << "blow-up: " << e.what() << '\n';
    return kExitBlowUp;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace wlns::cli
