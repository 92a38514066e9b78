#pragma once

// Level-set energies on shrinking parabolic cylinders, the superlinear
// recurrence W_{k+1} = C^k W_k^beta, and the cutoff energy budget.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wlns/csv.hpp"
#include "wlns/cutoff.hpp"
#include "wlns/field.hpp"
#include "wlns/lorentz.hpp"
#include "wlns/nse.hpp"

namespace wlns {

/// Reference cylinders [-1, 1] x B(1) mapped to simulation coordinates by
/// (t, x) -> (t0 + scale^2 t, center + scale x), with w = scale * u.
struct CylinderScheme {
  Point center{};
  double scale = 1.0;
  double t0 = 0.0;
  int k_max = 8;

  static double time_k(int k) { return -0.5 * (1.0 + std::exp2(-k)); }
  static double radius_k(int k) { return 0.5 * (1.0 + std::exp2(-3.0 * k)); }
  static double threshold_k(int k) { return 1.0 - std::exp2(-k); }

  double sim_time(double t_ref) const { return t0 + scale * scale * t_ref; }
  double ref_time(double t_sim) const { return (t_sim - t0) / (scale * scale); }
  double sim_radius(int k) const { return scale * radius_k(k); }

  void validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw Error("cylinder: scale must be positive");
    if (k_max < 0) throw Error("cylinder: k_max must be >= 0");
  }

  /// Throws unless the mapped ball B_k lies inside the box [0, L)^3.
  void require_inside(const Grid& g, int k) const {
    const double r = sim_radius(k);
    for (int a = 0; a < 3; ++a)
      if (center[a] - r < 0.0 || center[a] + r > g.length())
        throw Error("cylinder: mapped ball B_" + std::to_string(k) + " (radius " + format_number(r) +
                    ") leaves the periodic box along axis " + std::to_string(a) + "; reduce the scale");
  }

  Region ball(const Grid& g, int k) const {
    require_inside(g, k);
    return Region::ball(g, center, sim_radius(k));
  }
};

/// v_k = (|u| - (1 - 2^{-k}))_+
inline ScalarField truncate(const ScalarField& speed, int k) {
  if (k < 0) throw Error("truncate: k must be >= 0");
  const double c = CylinderScheme::threshold_k(k);
  return map(speed, [c](double s) { return std::max(std::abs(s) - c, 0.0); });
}

inline ScalarField truncate(const VectorField& u, int k) { return truncate(magnitude(u), k); }

/// Pointwise pieces shared by every level k.
struct DissipationInputs {
  ScalarField speed;          ///< |u|
  ScalarField grad_u_sq;      ///< |grad u|^2
  ScalarField grad_speed_sq;  ///< |grad |u||^2

  static DissipationInputs of(const VectorField& u) {
    ScalarField speed = magnitude(u);
    const VectorField gs = gradient(speed);
    std::vector<double> g2(speed.size());
    for (std::size_t i = 0; i < g2.size(); ++i) g2[i] = gs[0][i] * gs[0][i] + gs[1][i] * gs[1][i] + gs[2][i] * gs[2][i];
    ScalarField grad_speed(speed.grid(), std::move(g2));
    return {std::move(speed), gradient_square(u), std::move(grad_speed)};
  }
};

/// d_k^2 = v_k |grad u|^2 / |u| + 1_{v_k > 0} (1 - 2^{-k}) |grad |u||^2 / |u|,
/// set to 0 wherever v_k = 0.
inline ScalarField dissipation_density(const DissipationInputs& in, int k) {
  if (k < 0) throw Error("dissipation_density: k must be >= 0");
  const double c = CylinderScheme::threshold_k(k);
  std::vector<double> d(in.speed.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double s = in.speed[i];
    const double v = std::max(s - c, 0.0);
    if (v <= 0.0) continue;
    d[i] = v / s * in.grad_u_sq[i] + c / s * in.grad_speed_sq[i];
  }
  return ScalarField(in.speed.grid(), std::move(d));
}

inline ScalarField dissipation_density(const VectorField& u, int k) {
  return dissipation_density(DissipationInputs::of(u), k);
}

struct LevelRow {
  int k = 0;
  double T_k = 0.0;
  double radius_k = 0.0;
  double threshold_k = 0.0;
  double sup_term = 0.0;   ///< (1/2) max_t int_{B_k} v_k^2
  double diss_term = 0.0;  ///< int_{T_k}^1 int_{B_k} d_k^2
  double U_k = 0.0;
  double ball_measure = 0.0;     ///< measure of the cell mask of B_k (reference units)
  double surface_measure = 0.0;  ///< measure of cells within half a diagonal of the sphere
  std::size_t samples = 0;       ///< snapshots in [T_k, 1]
};

struct LevelSetEnergy {
  CylinderScheme scheme;
  std::vector<LevelRow> rows;
};

inline const std::vector<std::string>& level_columns() {
  static const std::vector<std::string> cols{"k", "T_k", "radius_k", "threshold_k", "sup_term", "diss_term", "U_k"};
  return cols;
}

inline void write_level_csv(std::ostream& os, const LevelSetEnergy& e) {
  CsvWriter w(os, level_columns());
  for (const auto& r : e.rows)
    w.raw({format_number(r.k), format_number(r.T_k), format_number(r.radius_k), format_number(r.threshold_k),
           format_number(r.sup_term), format_number(r.diss_term), format_number(r.U_k)});
}

namespace detail {

inline double surface_cells(const Grid& g, const Point& c, double r) {
  const double band = 0.5 * std::sqrt(3.0) * g.spacing();
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.position(i);
    const double d = std::sqrt((x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]) + (x[2] - c[2]) * (x[2] - c[2]));
    if (std::abs(d - r) <= band) ++n;
  }
  return static_cast<double>(n) * g.cell_volume();
}

/// Trapezoid of the piecewise-linear interpolant of (t, y) over [a, b].
inline double trapezoid_window(const std::vector<double>& t, const std::vector<double>& y, double a, double b) {
  CompensatedSum s;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double lo = std::max(a, t[i - 1]);
    const double hi = std::min(b, t[i]);
    if (!(hi > lo)) continue;
    const double h = t[i] - t[i - 1];
    const auto at = [&](double x) { return y[i - 1] + (y[i] - y[i - 1]) * (x - t[i - 1]) / h; };
    s.add(0.5 * (hi - lo) * (at(lo) + at(hi)));
  }
  return s.value();
}

}  // namespace detail

inline constexpr std::size_t kMinLevelSamples = 10;

/// U_k = sup_term + diss_term for k = 0..k_max, in reference-cylinder units.
inline LevelSetEnergy level_energy(const Trajectory& traj, const CylinderScheme& scheme) {
  scheme.validate();
  if (traj.empty()) throw Error("level_energy: empty trajectory");
  const Grid& g = traj.front().velocity.grid();
  const double eps = scheme.scale;
  const double tol = 1e-9;
  std::vector<double> tref;
  for (const auto& s : traj) tref.push_back(scheme.ref_time(s.time));
  for (std::size_t i = 1; i < tref.size(); ++i)
    if (!(tref[i] > tref[i - 1])) throw Error("level_energy: snapshot times must increase");
  if (tref.front() > -1.0 + tol || tref.back() < 1.0 - tol)
    throw Error("level_energy: trajectory must cover reference times [-1, 1], i.e. simulation times [" +
                format_number(scheme.sim_time(-1.0)) + ", " + format_number(scheme.sim_time(1.0)) + "]");

  const double ref_volume = 1.0 / (eps * eps * eps);
  std::vector<DissipationInputs> inputs;
  inputs.reserve(traj.size());
  for (const auto& s : traj) {
    const VectorField& u = s.velocity;
    const VectorField w(map(u[0], [eps](double v) { return eps * v; }), map(u[1], [eps](double v) { return eps * v; }),
                        map(u[2], [eps](double v) { return eps * v; }));
    inputs.push_back(DissipationInputs::of(w));
  }

  LevelSetEnergy out{scheme, {}};
  for (int k = 0; k <= scheme.k_max; ++k) {
    LevelRow row;
    row.k = k;
    row.T_k = CylinderScheme::time_k(k);
    row.radius_k = CylinderScheme::radius_k(k);
    row.threshold_k = CylinderScheme::threshold_k(k);
    const Region B = scheme.ball(g, k);
    row.ball_measure = B.measure() * ref_volume;
    row.surface_measure = detail::surface_cells(g, scheme.center, scheme.sim_radius(k)) * ref_volume;

    std::vector<double> t_used, diss;
    double sup = 0.0;
    for (std::size_t j = 0; j < traj.size(); ++j) {
      // Keep one snapshot before T_k so the window start can be interpolated.
      const bool inside = tref[j] >= row.T_k - tol && tref[j] <= 1.0 + tol;
      const bool straddle = tref[j] < row.T_k && j + 1 < traj.size() && tref[j + 1] > row.T_k;
      if (!inside && !straddle) continue;
      const ScalarField v = truncate(inputs[j].speed, k);
      const ScalarField d = dissipation_density(inputs[j], k);
      CompensatedSum v2, d2;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!B.contains(i)) continue;
        v2.add(v[i] * v[i]);
        d2.add(d[i]);
      }
      if (inside) {
        ++row.samples;
        sup = std::max(sup, 0.5 * v2.value() * g.cell_volume() * ref_volume);
      }
      t_used.push_back(tref[j]);
      // d_ref^2 = eps^2 d^2[w] in simulation derivatives; dx_ref = eps^{-3} dx.
      diss.push_back(eps * eps * d2.value() * g.cell_volume() * ref_volume);
    }
    if (row.samples < kMinLevelSamples)
      throw Error("level_energy: level k=" + std::to_string(k) + " has " + std::to_string(row.samples) +
                  " snapshots in [T_k, 1]; need at least " + std::to_string(kMinLevelSamples) +
                  " (snapshot spacing <= " + format_number((1.0 - row.T_k) / (kMinLevelSamples - 1) * eps * eps) +
                  " in simulation time)");
    row.sup_term = sup;
    row.diss_term = detail::trapezoid_window(t_used, diss, row.T_k, 1.0);
    row.U_k = row.sup_term + row.diss_term;
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// recursive lemma

struct RecursiveResult {
  std::vector<double> log2_w;  ///< log2 W_k, k = 0..
  bool converged = false;
  /// -log2 W_k, the exponent sequence e_k with W_k = 2^{-e_k}
  std::vector<double> exponents() const {
    std::vector<double> e(log2_w.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = -log2_w[i];
    return e;
  }
};

/// Iterates log2 W_{k+1} = k log2 C + beta log2 W_k. Converged when the
/// sequence ends strictly decreasing at a negative value.
inline RecursiveResult recursive_sequence(double C, double beta, double w0, int k_max) {
  if (!(C > 1.0)) throw Error("recursive_sequence: C must exceed 1");
  if (!(beta > 1.0)) throw Error("recursive_sequence: beta must exceed 1");
  if (!(w0 > 0.0)) throw Error("recursive_sequence: W0 must be positive");
  if (k_max < 1) throw Error("recursive_sequence: k_max must be >= 1");
  RecursiveResult r;
  const double lc = std::log2(C);
  r.log2_w.push_back(std::log2(w0));
  for (int k = 0; k < k_max; ++k) {
    const double next = k * lc + beta * r.log2_w.back();
    r.log2_w.push_back(next);
    if (std::abs(next) > 1e250) break;  // decided; further terms would overflow
  }
  const std::size_t n = r.log2_w.size();
  r.converged = r.log2_w[n - 1] < 0.0 && r.log2_w[n - 1] < r.log2_w[n - 2];
  return r;
}

struct ThresholdBracket {
  double lo = 0.0;  ///< largest W0 seen converging
  double hi = 1.0;  ///< smallest W0 seen diverging
  int iterations = 0;
};

/// Bisection on W0 in (0, 1] between converging and diverging recurrences.
inline ThresholdBracket threshold_scan(double C, double beta, int k_max = 200, double width = 1e-12) {
  if (!(C > 1.0) || !(beta > 1.0)) throw Error("threshold_scan: requires C > 1 and beta > 1");
  ThresholdBracket b;
  if (recursive_sequence(C, beta, 1.0, k_max).converged) throw Error("threshold_scan: W0 = 1 converges; no threshold in (0, 1]");
  while (b.hi - b.lo > width && b.iterations < 200) {
    const double mid = 0.5 * (b.lo + b.hi);
    if (mid <= b.lo || mid >= b.hi) break;
    (recursive_sequence(C, beta, mid, k_max).converged ? b.lo : b.hi) = mid;
    ++b.iterations;
  }
  return b;
}

// ---------------------------------------------------------------------------
// empirical fit

struct BetaFit {
  bool trivially_regular = false;
  double beta = 0.0;
  double C = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Least squares for log U_k = k log C + beta log U_{k-1} over every run's
/// consecutive positive pairs. Fewer than 5 usable k reports trivially regular.
inline BetaFit fit_beta(const std::vector<std::vector<double>>& runs) {
  double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0, sk = 0, skk = 0, skx = 0, sky = 0;
  std::vector<std::pair<std::array<double, 2>, double>> pts;
  std::size_t best_streak = 0;
  for (const auto& U : runs) {
    std::size_t streak = 0;
    for (std::size_t k = 1; k < U.size(); ++k) {
      if (U[k] > 0.0 && U[k - 1] > 0.0) {
        pts.push_back({{static_cast<double>(k), std::log(U[k - 1])}, std::log(U[k])});
        streak = std::max<std::size_t>(streak, 1) + 1;
      } else {
        streak = 0;
      }
      best_streak = std::max(best_streak, streak);
    }
  }
  BetaFit fit;
  fit.points = pts.size();
  if (best_streak < 5) {
    fit.trivially_regular = true;
    return fit;
  }
  for (const auto& [x, y] : pts) {
    skk += x[0] * x[0];
    skx += x[0] * x[1];
    sxx += x[1] * x[1];
    sky += x[0] * y;
    sxy += x[1] * y;
    sy += y;
    syy += y * y;
    sk += x[0];
    sx += x[1];
  }
  const double det = skk * sxx - skx * skx;
  if (!(std::abs(det) > 1e-12 * std::max(1.0, skk * sxx))) {
    fit.trivially_regular = true;
    return fit;
  }
  const double logC = (sky * sxx - sxy * skx) / det;
  fit.beta = (skk * sxy - skx * sky) / det;
  fit.C = std::exp(logC);
  const double n = static_cast<double>(pts.size());
  double ss_res = 0.0;
  for (const auto& [x, y] : pts) {
    const double e = y - logC * x[0] - fit.beta * x[1];
    ss_res += e * e;
  }
  const double ss_tot = syy - sy * sy / n;
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// cutoff energy budget

/// Bump equal to 1 on the mapped Q_0 and 0 outside the mapped Q_{-1}.
inline PolynomialBump budget_cutoff(const CylinderScheme& s) {
  return PolynomialBump{s.center, s.scale * CylinderScheme::radius_k(0), s.scale * CylinderScheme::radius_k(-1),
                        s.sim_time(CylinderScheme::time_k(-1)), s.sim_time(CylinderScheme::time_k(0))};
}

struct BudgetRow {
  double t = 0.0;
  LocalEnergyTerms terms;  ///< mass, dissipation, source, flux at t
  double lhs = 0.0;        ///< int e eta (t) + nu int_0^t int |grad u|^2 eta
  double rhs = 0.0;        ///< int e eta (t_start) + int_0^t [source + flux]
  double slack = 0.0;      ///< rhs - lhs
};

struct EnergyBudget {
  std::vector<BudgetRow> rows;
  double min_slack = 0.0;
};

/// Budget without support checks; any cutoff and any trajectory of >= 2 snapshots.
template <SpaceTimeCutoff Eta>
EnergyBudget energy_budget_terms(const Trajectory& traj, const Eta& eta, double viscosity = 1.0) {
  if (traj.size() < 2) throw Error("energy_budget: need at least 2 snapshots");
  EnergyBudget b;
  b.min_slack = std::numeric_limits<double>::infinity();
  CompensatedSum diss, forcing;
  for (std::size_t j = 0; j < traj.size(); ++j) {
    if (j > 0 && !(traj[j].time > traj[j - 1].time)) throw Error("energy_budget: snapshot times must increase");
    BudgetRow row;
    row.t = traj[j].time;
    row.terms = local_energy_terms(traj[j].velocity, row.t, eta, viscosity);
    if (j > 0) {
      const double h = 0.5 * (row.t - b.rows.back().t);
      const auto& prev = b.rows.back().terms;
      diss.add(h * (row.terms.dissipation + prev.dissipation));
      forcing.add(h * (row.terms.source + prev.source + row.terms.flux + prev.flux));
    }
    const double start = j == 0 ? row.terms.mass : b.rows.front().terms.mass;
    row.lhs = row.terms.mass + diss.value();
    row.rhs = start + forcing.value();
    row.slack = row.rhs - row.lhs;
    b.min_slack = std::min(b.min_slack, row.slack);
    b.rows.push_back(row);
  }
  return b;
}

/// Checks eta = 1 on the mapped Q_0 and eta = 0 outside the mapped Q_{-1} at
/// every snapshot up to reference time 1; throws listing violating cells.
template <SpaceTimeCutoff Eta>
void check_budget_support(const Trajectory& traj, const Eta& eta, const CylinderScheme& scheme) {
  if (traj.empty()) return;
  const Grid& g = traj.front().velocity.grid();
  scheme.require_inside(g, -1);
  const Region B0 = scheme.ball(g, 0);
  const Region Bm1 = scheme.ball(g, -1);
  std::size_t bad = 0;
  std::string first;
  for (const auto& s : traj) {
    const double tr = scheme.ref_time(s.time);
    if (tr > 1.0 + 1e-12) continue;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Point x = g.position(i);
      const double v = eta.value(s.time, x);
      const bool in_q0 = tr > CylinderScheme::time_k(0) && B0.contains(i);
      const bool out_qm1 = tr <= CylinderScheme::time_k(-1) || !Bm1.contains(i);
      const bool violated = (in_q0 && std::abs(v - 1.0) > 1e-12) || (out_qm1 && std::abs(v) > 1e-12);
      if (!violated) continue;
      if (bad++ == 0) {
        auto [a, b, c] = g.unravel(i);
        first = "cell (" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) + ") at t=" +
                format_number(s.time) + " has eta=" + format_number(v) + (in_q0 ? " inside Q_0" : " outside Q_-1");
      }
    }
  }
  if (bad) throw Error("energy_budget: cutoff violates support conditions at " + std::to_string(bad) + " cells; first: " + first);
}

template <SpaceTimeCutoff Eta>
EnergyBudget energy_budget(const Trajectory& traj, const Eta& eta, const CylinderScheme& scheme, double viscosity = 1.0) {
  check_budget_support(traj, eta, scheme);
  return energy_budget_terms(traj, eta, viscosity);
}

}  // namespace wlns
