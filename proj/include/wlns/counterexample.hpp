#pragma once

// f(x, t) = A(t) / sqrt((t_inf - t) + |x - x0|^2) with a dyadic amplitude
// schedule: finite weak-log criterion, infinite L^{p,r} time norm of the weak
// space norm. Dyadic quantities are carried as base-2 logarithms; 2^{m_n}
// leaves double range near n = 32.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "wlns/criteria.hpp"
#include "wlns/csv.hpp"
#include "wlns/exponents.hpp"
#include "wlns/lorentz.hpp"

namespace wlns {

/// log(exp(a) + exp(b)) style helpers in base 2.
inline double log2_add(double a, double b) {
  if (std::isinf(a) && a < 0) return b;
  if (std::isinf(b) && b < 0) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log2(1.0 + std::exp2(lo - hi));
}

/// ln(e + X) with ln X given.
inline double log_e_plus(double lnX) {
  if (lnX > 700.0) return lnX + std::log1p(kE * std::exp(-lnX));
  return std::log(kE + std::exp(lnX));
}

struct DyadicSchedule {
  double q = 6.0;
  double p = 4.0;
  double t_inf = 1.0;
  int n_terms = 40;

  static DyadicSchedule make(double q, double t_inf, int n_terms) {
    const DerivedExponents e = derive_exponents(q);
    if (!(t_inf > 0.0) || !std::isfinite(t_inf)) throw Error("schedule: t_inf must be positive");
    if (n_terms < 1) throw Error("schedule: need at least one term");
    return DyadicSchedule{q, e.p, t_inf, n_terms};
  }

  static double m(int n) { return static_cast<double>(n) * n - 0.5 * n; }
  double k(int n) const { return p * m(n) + n; }
  /// t_n = t_inf (1 - 2^{-n})
  double t_start(int n) const { return t_inf * (1.0 - std::exp2(-n)); }
  /// t_n* = t_n + t_inf 2^{-k_n}; collapses onto t_n in double once k_n > 53 + n.
  double t_end(int n) const { return t_start(n) + t_inf * std::exp2(-k(n)); }
  /// log2 of the interval length t_inf 2^{-k_n}
  double log2_length(int n) const { return std::log2(t_inf) - k(n); }
  /// k_n > n + 1 gives t_n* < t_{n+1}.
  bool disjoint_after(int n) const { return k(n) > n + 1; }

  /// log2 A(t): m_n inside the n-th interval, -inf elsewhere.
  double log2_amplitude(double t) const {
    if (!(t < t_inf)) throw Error("amplitude: t must be below t_inf");
    if (t < 0.0) throw Error("amplitude: t must be nonnegative");
    // t in (t_n, t_n*) iff 0 < t/t_inf - 1 + 2^{-n} < 2^{-k_n}
    const double s = 1.0 - t / t_inf;  // = 2^{-n} - offset
    const int n = static_cast<int>(std::floor(-std::log2(s)));
    for (int c = std::max(1, n - 1); c <= n + 1; ++c) {
      const double offset = std::exp2(-c) - s;
      if (offset > 0.0 && offset < std::exp2(-k(c))) return m(c);
    }
    return -std::numeric_limits<double>::infinity();
  }

  double amplitude(double t) const { return std::exp2(log2_amplitude(t)); }
};

/// c(q) = (4 pi/3)^{1/q} (1 - 3/q)^{(1 - 3/q)/2} (3/q)^{3/(2q)}: the weak-L^q
/// norm of 1/sqrt(s + r^2) is c(q) s^{-1/p}.
inline double weak_profile_constant(double q) {
  const double a = 1.0 - 3.0 / q;
  return std::pow(4.0 * std::numbers::pi / 3.0, 1.0 / q) * std::pow(a, 0.5 * a) * std::pow(3.0 / q, 1.5 / q);
}

struct ClosedFormNorms {
  double weak_literal = 0.0;    ///< A / (t_inf - t)^{1/p}
  double weak_corrected = 0.0;  ///< c(q) A / (t_inf - t)^{1/p}
  double sup = 0.0;             ///< A / (t_inf - t)^{1/2}
};

inline ClosedFormNorms closed_form_weak_norm(const DyadicSchedule& s, double t) {
  const double la = s.log2_amplitude(t);
  ClosedFormNorms r;
  if (std::isinf(la)) return r;
  const double ls = std::log2(s.t_inf - t);
  r.weak_literal = std::exp2(la - ls / s.p);
  r.weak_corrected = weak_profile_constant(s.q) * r.weak_literal;
  r.sup = std::exp2(la - 0.5 * ls);
  return r;
}

/// f(x, t) on a grid for a given amplitude A and s = t_inf - t.
inline ScalarField sample_profile(const Grid& g, const Point& x0, double A, double s) {
  return sample_scalar(g, [&](const Point& x) {
    const double r2 = (x[0] - x0[0]) * (x[0] - x0[0]) + (x[1] - x0[1]) * (x[1] - x0[1]) + (x[2] - x0[2]) * (x[2] - x0[2]);
    return A / std::sqrt(s + r2);
  });
}

struct Claim1Row {
  int n = 0;
  double term = 0.0;       ///< (1 - 2^{n-k_n})^{-1} / (e + log(e + t_inf^{-1/2} 2^{n^2}))
  double exact = 0.0;      ///< int over (t_n, t_n*) of B(s) with the literal closed-form norms
  double partial = 0.0;    ///< sum of term up to n
  double partial_exact = 0.0;
};

/// Per-interval bound terms and exact criterion integrals for n = 1..N.
inline std::vector<Claim1Row> claim1_terms(const DyadicSchedule& s, int N) {
  if (N < 1) throw Error("claim1_terms: N must be >= 1");
  std::vector<Claim1Row> out;
  CompensatedSum bound, exact;
  const double ln2 = std::numbers::ln2;
  for (int n = 1; n <= N; ++n) {
    Claim1Row r;
    r.n = n;
    const double kn = s.k(n);
    // (1 - 2^{n-k_n})^{-1}
    const double pref = -1.0 / std::expm1((n - kn) * ln2);
    // m_n + n/2 = n^2
    const double lnX = static_cast<double>(n) * n * ln2 - 0.5 * std::log(s.t_inf);
    r.term = pref / (kE + log_e_plus(lnX));

    // u = ln(t_inf - t) runs over [ln(t_inf (2^{-n} - 2^{-k_n})), ln(t_inf 2^{-n})];
    // integrand A^p / (e + log(e + A e^{-u/2})) du.
    const double u_hi = std::log(s.t_inf) - n * ln2;
    const double x = std::exp2(n - kn);  // may underflow for large n; handled in log form
    const double log_du = x > 1e-8 ? std::log(-std::log1p(-x)) : (n - kn) * ln2 + std::log1p(0.5 * x);
    const double du = std::exp(log_du);
    const double lnA = DyadicSchedule::m(n) * ln2;
    const auto integrand = [&](double u) { return 1.0 / (kE + log_e_plus(lnA - 0.5 * u)); };
    // Below ~1e-6 the integrand is constant across the interval to round-off.
    const double avg = du > 1e-6 ? boost::math::quadrature::gauss<double, 15>::integrate(integrand, u_hi - du, u_hi) / du
                                 : integrand(u_hi);
    // A^p du = 2^{p m_n} du, formed in log space.
    r.exact = std::exp(s.p * lnA + log_du) * avg;
    bound.add(r.term);
    exact.add(r.exact);
    r.partial = bound.value();
    r.partial_exact = exact.value();
    out.push_back(r);
  }
  return out;
}

struct Claim2Row {
  int n = 0;
  double ratio_r = 0.0;     ///< (R_{n-1}/R_n)^r
  double partial = 0.0;     ///< t_inf^{r/p} sum (1 - (R_{j-1}/R_j)^r)
  double comparison = 0.0;  ///< sum (R_{j-1}/R_j)^r
};

/// 2^{(3/2 - 1/p) r} / (2^{2r} - 1)
inline double claim2_comparison_limit(double p, double r) { return std::exp2((1.5 - 1.0 / p) * r) / (std::exp2(2.0 * r) - 1.0); }

/// R_n = 2^{k_n/p} t_inf^{1/p} with k_0 = 0.
inline std::vector<Claim2Row> claim2_lower_bound(const DyadicSchedule& s, int N, double r) {
  if (!(r > 1.0) || !std::isfinite(r)) throw Error("claim2_lower_bound: r must lie in (1, inf)");
  if (N < 1) throw Error("claim2_lower_bound: N must be >= 1");
  std::vector<Claim2Row> out;
  CompensatedSum partial, comparison;
  const double scale = std::pow(s.t_inf, r / s.p);
  for (int n = 1; n <= N; ++n) {
    const double k_prev = n == 1 ? 0.0 : s.k(n - 1);
    Claim2Row row;
    row.n = n;
    row.ratio_r = std::exp2(r * (k_prev - s.k(n)) / s.p);
    partial.add(scale * (1.0 - row.ratio_r));
    comparison.add(row.ratio_r);
    row.partial = partial.value();
    row.comparison = comparison.value();
    out.push_back(row);
  }
  return out;
}

/// Lorentz L^{p,r} norm of a piecewise-constant signal given by log2 values and
/// log2 durations, (p sum_i G_i^{r/p} (v_i^r - v_{i-1}^r))^{1/r}, with every
/// term formed in log space. Zero values are passed as -inf.
inline double lorentz_time_norm_log2(std::span<const double> log2_values, std::span<const double> log2_durations, double p,
                                     double r) {
  if (log2_values.size() != log2_durations.size()) throw Error("lorentz_time_norm_log2: size mismatch");
  if (!(p >= 1.0) || !(r >= 1.0) || !std::isfinite(p) || !std::isfinite(r))
    throw Error("lorentz_time_norm_log2: p, r must lie in [1, inf)");
  std::vector<std::pair<double, double>> cells;
  for (std::size_t i = 0; i < log2_values.size(); ++i)
    if (!(std::isinf(log2_values[i]) && log2_values[i] < 0)) cells.emplace_back(log2_values[i], log2_durations[i]);
  std::sort(cells.begin(), cells.end());
  // G_i = measure{g >= v_i}: suffix log-sums.
  std::vector<double> levels, lg;
  double acc = -std::numeric_limits<double>::infinity();
  for (std::size_t i = cells.size(); i-- > 0;) {
    acc = log2_add(acc, cells[i].second);
    if (levels.empty() || cells[i].first != levels.back()) {
      levels.push_back(cells[i].first);
      lg.push_back(acc);
    } else {
      lg.back() = acc;
    }
  }
  std::reverse(levels.begin(), levels.end());
  std::reverse(lg.begin(), lg.end());
  double total = -std::numeric_limits<double>::infinity();
  double below = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    // v_i^r - v_{i-1}^r = v_i^r (1 - 2^{r (l_{i-1} - l_i)})
    const double diff = std::isinf(below) ? 0.0 : std::log2(-std::expm1(r * (below - levels[i]) * std::numbers::ln2));
    total = log2_add(total, (r / p) * lg[i] + r * levels[i] + diff);
    below = levels[i];
  }
  if (std::isinf(total)) return 0.0;
  return std::exp2((std::log2(p / r) + total) / r);
}

struct SeparationRow {
  int N = 0;
  double criterion = 0.0;  ///< exact weak-log criterion over the first N intervals
  double lorentz = 0.0;    ///< L^{p,r} time norm of ||f(t)||_{q,inf} (corrected) over the same
};

/// Weak norm held at its value at the left end of each interval,
/// c(q) 2^{m_n} (t_inf 2^{-n})^{-1/p}, over duration t_inf 2^{-k_n}.
inline double lorentz_partial(const DyadicSchedule& s, int N, double r) {
  std::vector<double> lv, ld;
  const double lc = std::log2(weak_profile_constant(s.q));
  for (int n = 1; n <= N; ++n) {
    lv.push_back(lc + DyadicSchedule::m(n) - (std::log2(s.t_inf) - n) / s.p);
    ld.push_back(s.log2_length(n));
  }
  return lorentz_time_norm_log2(lv, ld, s.p, r);
}

inline std::vector<SeparationRow> criterion_vs_lorentz(const DyadicSchedule& s, double r, std::span<const int> Ns) {
  std::vector<SeparationRow> out;
  int n_max = 1;
  for (int N : Ns) n_max = std::max(n_max, N);
  const auto c1 = claim1_terms(s, n_max);
  for (int N : Ns) {
    if (N < 1) throw Error("criterion_vs_lorentz: N must be >= 1");
    out.push_back({N, c1[static_cast<std::size_t>(N - 1)].partial_exact, lorentz_partial(s, N, r)});
  }
  return out;
}

inline const std::vector<std::string>& counterexample_columns() {
  static const std::vector<std::string> cols{"n", "m_n", "k_n", "t_n", "t_n*", "term_n", "partial_claim1", "partial_claim2"};
  return cols;
}

inline void write_counterexample_csv(std::ostream& os, const DyadicSchedule& s, double r) {
  const auto c1 = claim1_terms(s, s.n_terms);
  const auto c2 = claim2_lower_bound(s, s.n_terms, r);
  CsvWriter w(os, counterexample_columns());
  for (int n = 1; n <= s.n_terms; ++n) {
    const auto& a = c1[static_cast<std::size_t>(n - 1)];
    const auto& b = c2[static_cast<std::size_t>(n - 1)];
    w.row({static_cast<double>(n), DyadicSchedule::m(n), s.k(n), s.t_start(n), s.t_end(n), a.term, a.partial, b.partial});
  }
}

/// int a(t)^p / ((t0 - t)(e + log(e + a(t)/sqrt(t0 - t)))) dt by trapezoid
/// over the samples, which must lie in [0, t0).
inline double intro_profile_criterion(std::span<const double> times, std::span<const double> a, double q, double t0) {
  if (times.size() != a.size()) throw Error("intro_profile_criterion: size mismatch");
  const double p = derive_exponents(q).p;
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(times[i] < t0)) throw Error("intro_profile_criterion: sample times must lie below t0");
    if (a[i] < 0.0) throw Error("intro_profile_criterion: a must be nonnegative");
    const double s = t0 - times[i];
    y[i] = a[i] == 0.0 ? 0.0 : std::pow(a[i], p) / (s * (kE + std::log(kE + a[i] / std::sqrt(s))));
    if (i > 0 && !(times[i] > times[i - 1])) throw Error("intro_profile_criterion: times must increase");
  }
  return trapezoid(times, y);
}

}  // namespace wlns
