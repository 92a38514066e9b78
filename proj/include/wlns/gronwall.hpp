#pragma once

// Log-Gronwall bound H' = C Psi(H) B(t), its implicit integral identity, and
// the divergence of int dr / Psi.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "wlns/counterexample.hpp"
#include "wlns/criteria.hpp"
#include "wlns/csv.hpp"
#include "wlns/error.hpp"

namespace wlns {

inline constexpr double kOverflowLimit = 1e300;

namespace detail {

// Fixed 61-point Kronrod rule on pieces of length at most 1. The integrands
// here are analytic on that scale, and the adaptive driver's error estimate
// stalls near 1e-10 on short spans, recursing to full depth.
inline double gk_integrate(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  const double pieces = std::ceil(std::abs(b - a));
  const auto n = static_cast<long long>(std::max(1.0, pieces));
  CompensatedSum s;
  for (long long i = 0; i < n; ++i) {
    const double lo = i == 0 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
    const double hi = i + 1 == n ? b : a + (b - a) * static_cast<double>(i + 1) / static_cast<double>(n);
    s.add(boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 0));
  }
  return s.value();
}

/// 1 / (e + log(e + e^s)), stable for large s
inline double phi_density(double s) {
  const double l = s > 40.0 ? s + std::log1p(kE * std::exp(-s)) : std::log(kE + std::exp(s));
  return 1.0 / (kE + l);
}

}  // namespace detail

/// Phi(H1) - Phi(H0) with Phi' = 1/Psi, written in s = log r.
inline double phi_between_log(double log_h0, double log_h1) {
  if (log_h1 < log_h0) return -phi_between_log(log_h1, log_h0);
  constexpr double kSplit = 40.0;
  double v = 0.0;
  if (log_h0 < kSplit) v += detail::gk_integrate(detail::phi_density, log_h0, std::min(log_h1, kSplit));
  if (log_h1 > kSplit) {
    // Tail in u = log(e + s), where the integrand is close to 1.
    const auto f = [](double u) {
      const double s = std::exp(u) - kE;
      return (kE + s) * detail::phi_density(s);
    };
    v += detail::gk_integrate(f, std::log(kE + std::max(log_h0, kSplit)), std::log(kE + log_h1));
  }
  return v;
}

inline double phi_between(double h0, double h1) {
  if (!(h0 > 0.0 && h1 > 0.0)) throw Error("phi_between: arguments must be positive");
  return phi_between_log(std::log(h0), std::log(h1));
}

/// Solves Phi(e^s) - Phi(e^{s0}) = target for s >= s0 (target >= 0).
inline double phi_inverse_log(double log_h0, double target) {
  if (!(target >= 0.0)) throw Error("phi_inverse_log: target must be nonnegative");
  if (target == 0.0) return log_h0;
  // Phi grows at most like s and at least like s / (e + log(e + e^s)), so a
  // bracket is found by doubling.
  double lo = log_h0;
  double step = target * (kE + std::log(kE + std::exp(std::min(log_h0, 700.0))));
  double hi = log_h0 + step;
  while (phi_between_log(log_h0, hi) < target) {
    lo = hi;
    step *= 2.0;
    hi = log_h0 + step;
    if (!std::isfinite(hi)) throw Error("phi_inverse_log: no bracket");
  }
  double s = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double g = phi_between_log(log_h0, s) - target;
    if (g > 0.0) hi = s; else lo = s;
    double next = s - g / detail::phi_density(s);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-15 * std::max(1.0, std::abs(s))) return next;
    s = next;
  }
  return s;
}

/// B as a callable plus its known discontinuities, on [t_begin, t_end].
struct BoundProblem {
  std::function<double(double)> B;
  std::vector<double> breaks;  ///< interior points where B may jump
  double t_begin = 0.0;
  double t_end = 1.0;
  double C = 1.0;
  double H0 = 1.0;
  bool piecewise_constant = false;

  static BoundProblem smooth(std::function<double(double)> b, double t0, double t1, double c, double h0) {
    BoundProblem p;
    p.B = std::move(b);
    p.t_begin = t0;
    p.t_end = t1;
    p.C = c;
    p.H0 = h0;
    return p;
  }

  /// B = values[i] on [times[i], times[i+1]); the last value is unused.
  static BoundProblem piecewise(std::vector<double> times, std::vector<double> values, double c, double h0) {
    if (times.size() != values.size() || times.size() < 2) throw Error("BoundProblem: need at least two (t, B) samples");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) throw Error("BoundProblem: times must be strictly increasing");
    BoundProblem p;
    p.t_begin = times.front();
    p.t_end = times.back();
    p.C = c;
    p.H0 = h0;
    p.piecewise_constant = true;
    p.breaks.assign(times.begin() + 1, times.end() - 1);
    p.B = [times = std::move(times), values = std::move(values)](double t) {
      auto it = std::upper_bound(times.begin(), times.end(), t);
      std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
      i = std::min(i, times.size() - 2);
      return values[i];
    };
    return p;
  }

  /// Breakpoints including both ends.
  std::vector<double> knots() const {
    std::vector<double> k{t_begin};
    for (double b : breaks)
      if (b > t_begin && b < t_end) k.push_back(b);
    k.push_back(t_end);
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    return k;
  }

  /// int_a^b B, exact on piecewise-constant signals, adaptive otherwise.
  double integral(double a, double b) const {
    if (b < a) return -integral(b, a);
    CompensatedSum s;
    double lo = a;
    for (double k : knots()) {
      if (k <= lo) continue;
      const double hi = std::min(k, b);
      if (hi > lo) s.add(piecewise_constant ? (hi - lo) * B(0.5 * (lo + hi)) : detail::gk_integrate(B, lo, hi));
      lo = hi;
      if (lo >= b) break;
    }
    return s.value();
  }

  void validate() const {
    if (!B) throw Error("BoundProblem: B is not set");
    if (!(t_end > t_begin)) throw Error("BoundProblem: t_end must exceed t_begin");
    if (!(C > 0.0)) throw Error("BoundProblem: C must be positive");
    if (!(H0 > 0.0)) throw Error("BoundProblem: H0 must be positive");
    for (double k : knots())
      if (!(B(k) >= 0.0)) throw Error("BoundProblem: B must be nonnegative (t = " + format_number(k) + ")");
    const double total = integral(t_begin, t_end);
    if (!std::isfinite(total)) throw Error("BoundProblem: int B is not finite");
  }
};

enum class GrowthModel { psi, identity };

struct BoundSolution {
  std::vector<double> t;
  std::vector<double> H;
  bool overflow = false;  ///< H passed 1e300; contradicts finite int B
  double overflow_time = std::numeric_limits<double>::quiet_NaN();
  GrowthModel model = GrowthModel::psi;
};

inline double growth(GrowthModel m, double h) { return m == GrowthModel::psi ? psi(h) : h; }

/// RK4 on H' = C Psi(H) B(t) with steps of at most dt, landing exactly on each
/// breakpoint so that jumps in B never fall inside a step. Output at every step.
inline BoundSolution solve_bound(const BoundProblem& pb, double dt, GrowthModel model = GrowthModel::psi) {
  if (!(dt > 0.0)) throw Error("solve_bound: dt must be positive");
  pb.validate();
  BoundSolution sol;
  sol.model = model;
  double h = pb.H0;
  sol.t.push_back(pb.t_begin);
  sol.H.push_back(h);
  const auto f = [&](double t, double y) { return pb.C * growth(model, y) * pb.B(t); };
  const auto knots = pb.knots();
  for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
    const double a = knots[seg], b = knots[seg + 1];
    const auto steps = static_cast<long long>(std::ceil((b - a) / dt - 1e-9));
    const double hstep = (b - a) / static_cast<double>(std::max(1LL, steps));
    // On a piecewise-constant signal B is evaluated at the segment midpoint,
    // which is the value on the open interval.
    const double bmid = pb.B(0.5 * (a + b));
    const auto rhs = [&](double t, double y) { return pb.piecewise_constant ? pb.C * growth(model, y) * bmid : f(t, y); };
    for (long long i = 0; i < std::max(1LL, steps); ++i) {
      const double t = a + static_cast<double>(i) * hstep;
      const double k1 = rhs(t, h);
      const double k2 = rhs(t + 0.5 * hstep, h + 0.5 * hstep * k1);
      const double k3 = rhs(t + 0.5 * hstep, h + 0.5 * hstep * k2);
      const double k4 = rhs(t + hstep, h + hstep * k3);
      h += hstep / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const double tn = i + 1 == std::max(1LL, steps) ? b : a + static_cast<double>(i + 1) * hstep;
      if (!(std::abs(h) <= kOverflowLimit)) {
        sol.overflow = true;
        sol.overflow_time = tn;
        return sol;
      }
      sol.t.push_back(tn);
      sol.H.push_back(h);
    }
  }
  return sol;
}

/// H at each knot from the exact per-interval solution: Phi(H_{i+1}) =
/// Phi(H_i) + C int B over the interval. `increments[i]` is that integral.
inline BoundSolution solve_increments(double t_begin, const std::vector<double>& durations,
                                      const std::vector<double>& increments, double C, double H0,
                                      GrowthModel model = GrowthModel::psi) {
  if (durations.size() != increments.size()) throw Error("solve_increments: size mismatch");
  if (!(C > 0.0 && H0 > 0.0)) throw Error("solve_increments: C and H0 must be positive");
  BoundSolution sol;
  sol.model = model;
  double t = t_begin, s = std::log(H0);
  sol.t.push_back(t);
  sol.H.push_back(H0);
  for (std::size_t i = 0; i < increments.size(); ++i) {
    if (!(increments[i] >= 0.0)) throw Error("solve_increments: negative increment at " + std::to_string(i));
    const double target = C * increments[i];
    const double log_limit = std::log(kOverflowLimit);
    t += durations[i];
    // Past the limit the root may not be representable at all; flag first.
    const bool past = model == GrowthModel::psi ? !(phi_between_log(s, log_limit) > target) : s + target > log_limit;
    if (!past) s = model == GrowthModel::psi ? phi_inverse_log(s, target) : s + target;
    if (past || s > log_limit) {
      sol.overflow = true;
      sol.overflow_time = t;
      return sol;
    }
    sol.t.push_back(t);
    sol.H.push_back(std::exp(s));
  }
  return sol;
}

/// Exact solution at the knots of a piecewise-constant problem.
inline BoundSolution solve_piecewise_exact(const BoundProblem& pb, GrowthModel model = GrowthModel::psi) {
  if (!pb.piecewise_constant) throw Error("solve_piecewise_exact: problem is not piecewise constant");
  pb.validate();
  const auto k = pb.knots();
  std::vector<double> dur, inc;
  for (std::size_t i = 0; i + 1 < k.size(); ++i) {
    dur.push_back(k[i + 1] - k[i]);
    inc.push_back(pb.integral(k[i], k[i + 1]));
  }
  return solve_increments(pb.t_begin, dur, inc, pb.C, pb.H0, model);
}

struct ImplicitCheck {
  std::vector<double> deviation;  ///< Phi(H(t)) - Phi(H0) - C int_{t_begin}^t B
  double max_abs = 0.0;
};

inline ImplicitCheck implicit_check(const BoundSolution& sol, const BoundProblem& pb) {
  ImplicitCheck rep;
  if (sol.H.empty()) return rep;
  CompensatedSum acc;
  const double log_h0 = std::log(sol.H.front());
  for (std::size_t i = 0; i < sol.t.size(); ++i) {
    if (i > 0) acc.add(pb.integral(sol.t[i - 1], sol.t[i]));
    const double log_h = std::log(sol.H[i]);
    const double lhs = sol.model == GrowthModel::psi ? phi_between_log(log_h0, log_h) : log_h - log_h0;
    const double d = lhs - pb.C * acc.value();
    rep.deviation.push_back(d);
    rep.max_abs = std::max(rep.max_abs, std::abs(d));
  }
  return rep;
}

/// log(e + log(e + M)) - log(e + log(e + 1)), the comparison primitive, from log M.
inline double psi_tail_comparison_log(double log_m) {
  return std::log(kE + log_e_plus(log_m)) - std::log(kE + std::log(kE + 1.0));
}

/// int_1^M dr / Psi(r) for M = e^{log_m}, so huge M can be probed. Checks the
/// comparison lower bound and throws if it fails.
inline double psi_tail_log(double log_m) {
  if (!(log_m >= 0.0)) throw Error("psi_tail: requires M >= 1");
  const double v = phi_between_log(0.0, log_m);
  const double lb = psi_tail_comparison_log(log_m);
  if (!(v >= lb - 1e-12 * std::max(1.0, lb)))
    throw Error("psi_tail: comparison bound violated at log M = " + format_number(log_m));
  return v;
}

inline double psi_tail(double M) {
  if (!(M >= 1.0)) throw Error("psi_tail: requires M >= 1");
  return psi_tail_log(std::log(M));
}

// ---------------------------------------------------------------------------
// CSV plumbing

inline BoundProblem read_bound_problem(std::istream& is, const std::string& source, double C, double H0) {
  const CsvTable t = read_csv(is, source);
  const std::size_t ct = t.column("t"), cb = t.column("B");
  std::vector<double> times, values;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double ti = t.rows[i][ct], bi = t.rows[i][cb];
    const std::string where = source + ":" + std::to_string(t.line_numbers[i]) + ": ";
    if (!std::isfinite(ti)) throw Error(where + "t must be finite");
    if (!(bi >= 0.0) || !std::isfinite(bi)) throw Error(where + "B must be finite and nonnegative");
    if (!times.empty() && !(ti > times.back())) throw Error(where + "t must be strictly increasing");
    times.push_back(ti);
    values.push_back(bi);
  }
  if (times.size() < 2) throw Error(source + ": need at least two data rows");
  return BoundProblem::piecewise(std::move(times), std::move(values), C, H0);
}

inline void write_bound_csv(std::ostream& os, const BoundSolution& sol, const ImplicitCheck& chk) {
  CsvWriter w(os, {"t", "H", "deviation"});
  for (std::size_t i = 0; i < sol.t.size(); ++i) w.row({sol.t[i], sol.H[i], chk.deviation.at(i)});
}

}  // namespace wlns
