#pragma once

// Regularity-criterion integrands evaluated along a velocity trajectory, the
// Hoelder relation between them, and the rescaling bookkeeping.

#include <cmath>
#include <numbers>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "wlns/csv.hpp"
#include "wlns/exponents.hpp"
#include "wlns/field.hpp"
#include "wlns/lorentz.hpp"

namespace wlns {

inline constexpr double kE = std::numbers::e;

/// ||u||_{q,inf}^p / (e + log(e + ||u||_inf))
inline double integrand_weaklog(double sup_norm, double weak_q, double p) {
  return std::pow(weak_q, p) / (kE + std::log(kE + sup_norm));
}

/// ||u||_q^p / (1 + log(e + ||u||_inf))
inline double integrand_zhoulei(double sup_norm, double strong_q, double p) {
  return std::pow(strong_q, p) / (1.0 + std::log(kE + sup_norm));
}

inline double integrand_lps(double strong_q, double p) { return std::pow(strong_q, p); }

/// || |u| / (e + log(e + |u|)) ||_{q,inf}^p
inline double integrand_remark(const ScalarField& speed, const Region& region, double q, double p) {
  const ScalarField g = map(speed, [](double v) {
    const double a = std::abs(v);
    return a / (kE + std::log(kE + a));
  });
  return std::pow(weak_norm(g, region, q).value, p);
}

inline double integrand_remark(const VectorField& u, double q, double p) {
  return integrand_remark(magnitude(u), Region::full(u.grid()), q, p);
}

/// r (e + log(e + r))
inline double psi(double r) { return r * (kE + std::log(kE + r)); }

struct PsiDominationReport {
  std::size_t points = 0;
  std::size_t violations = 0;
  double min_margin = 0.0;  ///< min of 1/Psi(r) - d/dr log(e + log(e + r))
};

/// 1/Psi(r) > 1/((e + r)(e + log(e + r))) on a log-spaced grid.
inline PsiDominationReport psi_domination_check(double r_min = 1e-6, double r_max = 1e9, std::size_t points = 10000) {
  if (!(r_min > 0.0 && r_max > r_min) || points < 2) throw Error("psi_domination_check: bad grid");
  PsiDominationReport rep;
  rep.points = points;
  rep.min_margin = std::numeric_limits<double>::infinity();
  const double a = std::log(r_min), b = std::log(r_max);
  for (std::size_t i = 0; i < points; ++i) {
    const double r = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    const double l = kE + std::log(kE + r);
    // 1/(r l) - 1/((e+r) l) = e / (r (e+r) l), evaluated without cancellation.
    const double margin = kE / (r * (kE + r) * l);
    if (!(margin > 0.0)) ++rep.violations;
    rep.min_margin = std::min(rep.min_margin, margin);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// traces

struct CriterionRow {
  double t = 0.0;
  double sup_norm = 0.0;
  double weak_q = 0.0;
  double strong_q = 0.0;
  double weak_sigma = 0.0;
  double I_lps = 0.0;
  double I_zl = 0.0;
  double I_wlog = 0.0;
  double I_remark = 0.0;
  double C_lps = 0.0;
  double C_zl = 0.0;
  double C_wlog = 0.0;
  double C_remark = 0.0;

  /// I_remark / I_wlog, logged rather than asserted; nan when I_wlog = 0.
  double remark_ratio() const { return I_wlog > 0.0 ? I_remark / I_wlog : std::numeric_limits<double>::quiet_NaN(); }
};

struct CriterionTrace {
  DerivedExponents exponents{};
  std::vector<CriterionRow> rows;
};

inline const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols{"t",      "sup_norm", "weak_q",   "strong_q", "weak_sigma",
                                             "I_lps",  "I_zl",     "I_wlog",   "I_remark", "C_lps",
                                             "C_zl",   "C_wlog",   "C_remark"};
  return cols;
}

/// Norms and integrands of one velocity snapshot; cumulative columns left 0.
inline CriterionRow criterion_row(const VectorField& u, double t, const DerivedExponents& e, const Region& region) {
  const ScalarField speed = magnitude(u);
  const SimpleFunction f = SimpleFunction::from_field(speed, region);
  CriterionRow r;
  r.t = t;
  for (double v : f.magnitudes()) r.sup_norm = std::max(r.sup_norm, v);
  r.weak_q = weak_norm(f, e.q).value;
  r.strong_q = lebesgue_norm(f, e.q).value;
  r.weak_sigma = weak_norm(f, e.sigma).value;
  r.I_lps = integrand_lps(r.strong_q, e.p);
  r.I_zl = integrand_zhoulei(r.sup_norm, r.strong_q, e.p);
  r.I_wlog = integrand_weaklog(r.sup_norm, r.weak_q, e.p);
  r.I_remark = integrand_remark(speed, region, e.q, e.p);
  return r;
}

inline CriterionRow criterion_row(const VectorField& u, double t, const DerivedExponents& e) {
  return criterion_row(u, t, e, Region::full(u.grid()));
}

/// Cumulative trapezoid integrals of the four integrand columns.
inline CriterionTrace accumulate(CriterionTrace trace) {
  auto& rows = trace.rows;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].t > rows[i - 1].t))
      throw Error("accumulate: times must be strictly increasing (row " + std::to_string(i) + ")");
  CompensatedSum lps, zl, wlog, remark;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) {
      const double h = 0.5 * (rows[i].t - rows[i - 1].t);
      lps.add(h * (rows[i].I_lps + rows[i - 1].I_lps));
      zl.add(h * (rows[i].I_zl + rows[i - 1].I_zl));
      wlog.add(h * (rows[i].I_wlog + rows[i - 1].I_wlog));
      remark.add(h * (rows[i].I_remark + rows[i - 1].I_remark));
    }
    rows[i].C_lps = lps.value();
    rows[i].C_zl = zl.value();
    rows[i].C_wlog = wlog.value();
    rows[i].C_remark = remark.value();
  }
  return trace;
}

/// Trapezoid of samples y at times t.
inline double trapezoid(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw Error("trapezoid: size mismatch");
  CompensatedSum s;
  for (std::size_t i = 1; i < t.size(); ++i) s.add(0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]));
  return s.value();
}

inline void write_trace_csv(std::ostream& os, const CriterionTrace& trace) {
  CsvWriter w(os, trace_columns());
  for (const auto& r : trace.rows)
    w.row({r.t, r.sup_norm, r.weak_q, r.strong_q, r.weak_sigma, r.I_lps, r.I_zl, r.I_wlog, r.I_remark, r.C_lps, r.C_zl,
           r.C_wlog, r.C_remark});
}

struct HolderReport {
  double lhs = 0.0;  ///< int weak_sigma^rho dt
  double rhs = 0.0;  ///< int sup_norm weak_q^p dt
  std::size_t row_violations = 0;
  double min_row_slack = 0.0;  ///< min over rows of rhs_row - lhs_row
  bool pass() const noexcept {
    return row_violations == 0 && lhs <= rhs + 1e-10 * std::max(1.0, std::abs(rhs));
  }
};

/// ||u||^rho_{L^rho L^{sigma,inf}} <= int ||u||_inf ||u||_{q,inf}^p, integrated
/// and row by row.
inline HolderReport holder_check(const CriterionTrace& trace, const DerivedExponents& e) {
  HolderReport rep;
  rep.min_row_slack = std::numeric_limits<double>::infinity();
  std::vector<double> t, l, r;
  for (const auto& row : trace.rows) {
    const double lhs = std::pow(row.weak_sigma, e.rho);
    const double rhs = row.sup_norm * std::pow(row.weak_q, e.p);
    if (!(lhs <= rhs + 1e-12 * std::max(1.0, rhs))) ++rep.row_violations;
    rep.min_row_slack = std::min(rep.min_row_slack, rhs - lhs);
    t.push_back(row.t);
    l.push_back(lhs);
    r.push_back(rhs);
  }
  rep.lhs = trapezoid(t, l);
  rep.rhs = trapezoid(t, r);
  return rep;
}

// ---------------------------------------------------------------------------
// rescaling bookkeeping

/// 1 / (1 - 2/rho - 3/sigma)
inline double bound_exponent(double rho, double sigma) {
  const double gap = 1.0 - 2.0 / rho - 3.0 / sigma;
  if (!(gap > 0.0)) throw Error("bound_exponent: requires 2/rho + 3/sigma < 1");
  return 1.0 / gap;
}

/// (C* / ||u||^rho)^{1/(rho (1 - 2/rho - 3/sigma))}; empty when the norm is 0
/// (no rescaling needed).
inline std::optional<double> epsilon_scaling(double norm_rho_power, double c_star, double rho, double sigma) {
  if (!(c_star > 0.0)) throw Error("epsilon_scaling: C* must be positive");
  if (norm_rho_power < 0.0) throw Error("epsilon_scaling: norm must be nonnegative");
  if (norm_rho_power == 0.0) return std::nullopt;
  return std::pow(c_star / norm_rho_power, bound_exponent(rho, sigma) / rho);
}

/// A_lambda (1 + ||u||^{1/(1 - 2/rho - 3/sigma)})
inline double linfty_bound(double norm, double a_lambda, double rho, double sigma) {
  if (!(a_lambda > 0.0)) throw Error("linfty_bound: A_lambda must be positive");
  return a_lambda * (1.0 + std::pow(norm, bound_exponent(rho, sigma)));
}

/// A_lambda = (3/lambda)^{1/2} A_3
inline double a_lambda(double lambda, double a3) {
  if (!(lambda > 0.0)) throw Error("a_lambda: lambda must be positive");
  return std::sqrt(3.0 / lambda) * a3;
}

}  // namespace wlns
