#pragma once

// Rearrangement quantities of simple functions: distribution functions, weak
// L^q quasi-norms, Lebesgue and Lorentz norms, and the numeric forms of the
// standard weak-L^p embedding lemmas.
//
// Grid fields are simple functions constant on cells, so every norm here is
// exact: the sup over levels in the weak norm is a finite max over data values
// and the layer-cake integral is a finite sum.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include "wlns/exponents.hpp"
#include "wlns/field.hpp"

namespace wlns {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Set of grid cells.
class Region {
public:
  static Region full(const Grid& grid) { return Region(grid, std::vector<char>(grid.size(), 1)); }

  /// Cells whose center lies in the ball (minimal-image distance on the torus).
  static Region ball(const Grid& grid, Point center, double radius) {
    if (!(radius >= 0.0)) throw Error("region: radius must be nonnegative");
    if (radius > 0.5 * grid.length()) throw Error("region: ball radius exceeds half the box period");
    std::vector<char> mask(grid.size(), 0);
    parallel::for_each_index(grid.size(), [&](std::size_t i) {
      mask[i] = periodic_distance(grid, grid.position(i), center) <= radius ? 1 : 0;
    });
    return Region(grid, std::move(mask));
  }

  static Region from_mask(const Grid& grid, std::vector<char> mask) {
    if (mask.size() != grid.size()) throw Error("region: mask size does not match grid");
    return Region(grid, std::move(mask));
  }

  static double periodic_distance(const Grid& grid, const Point& a, const Point& b) {
    const double L = grid.length();
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
      double d = std::fmod(a[c] - b[c], L);
      if (d > 0.5 * L) d -= L;
      if (d < -0.5 * L) d += L;
      s += d * d;
    }
    return std::sqrt(s);
  }

  const Grid& grid() const noexcept { return grid_; }
  bool contains(std::size_t i) const noexcept { return mask_[i] != 0; }
  std::size_t cell_count() const noexcept { return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1)); }
  double measure() const noexcept { return static_cast<double>(cell_count()) * grid_.cell_volume(); }
  bool empty() const noexcept { return cell_count() == 0; }

private:
  Region(const Grid& grid, std::vector<char> mask) : grid_(grid), mask_(std::move(mask)) {}

  Grid grid_;
  std::vector<char> mask_;
};

/// |f| on measurable cells: a nonnegative simple function.
class SimpleFunction {
public:
  SimpleFunction() = default;

  static SimpleFunction from_field(const ScalarField& f, const Region& region) {
    if (!(f.grid() == region.grid())) throw Error("norm: field and region grids differ");
    SimpleFunction s;
    const double vol = f.grid().cell_volume();
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!region.contains(i)) continue;
      s.magnitudes_.push_back(std::abs(f[i]));
      s.measures_.push_back(vol);
    }
    return s;
  }

  static SimpleFunction from_field(const ScalarField& f) { return from_field(f, Region::full(f.grid())); }

  /// Piecewise-constant signal: value[i] held for duration[i].
  static SimpleFunction from_signal(std::span<const double> values, std::span<const double> durations) {
    if (values.size() != durations.size()) throw Error("norm: signal values and durations differ in length");
    SimpleFunction s;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) throw Error("norm: non-finite signal value rejected");
      if (!(durations[i] >= 0.0)) throw Error("norm: negative duration");
      s.magnitudes_.push_back(std::abs(values[i]));
      s.measures_.push_back(durations[i]);
    }
    return s;
  }

  static SimpleFunction uniform(std::span<const double> values, double cell_measure) {
    std::vector<double> durations(values.size(), cell_measure);
    return from_signal(values, durations);
  }

  std::span<const double> magnitudes() const noexcept { return magnitudes_; }
  std::span<const double> measures() const noexcept { return measures_; }
  double total_measure() const {
    CompensatedSum s;
    for (double m : measures_) s.add(m);
    return s.value();
  }
  bool empty() const noexcept { return magnitudes_.empty(); }

private:
  std::vector<double> magnitudes_;
  std::vector<double> measures_;
};

/// Distribution function of a simple function at its distinct levels.
struct DistributionFunction {
  std::vector<double> thresholds;  ///< distinct |f| levels, ascending
  std::vector<double> measure_ge;  ///< lambda(alpha_i^-) = mu{|f| >= alpha_i}
  std::vector<double> measure_gt;  ///< lambda(alpha_i) = mu{|f| > alpha_i}
  double total_measure = 0.0;

  static DistributionFunction of(const SimpleFunction& f) {
    std::vector<std::pair<double, double>> cells;
    cells.reserve(f.magnitudes().size());
    for (std::size_t i = 0; i < f.magnitudes().size(); ++i) cells.emplace_back(f.magnitudes()[i], f.measures()[i]);
    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    DistributionFunction d;
    std::vector<double> levels, ge, gt;
    CompensatedSum cum;
    std::size_t i = 0;
    while (i < cells.size()) {
      const double level = cells[i].first;
      const double before = cum.value();
      while (i < cells.size() && cells[i].first == level) cum.add(cells[i++].second);
      levels.push_back(level);
      gt.push_back(before);
      ge.push_back(cum.value());
    }
    d.total_measure = cum.value();
    d.thresholds.assign(levels.rbegin(), levels.rend());
    d.measure_ge.assign(ge.rbegin(), ge.rend());
    d.measure_gt.assign(gt.rbegin(), gt.rend());
    return d;
  }

  /// mu{|f| > alpha}.
  double operator()(double alpha) const {
    if (alpha < 0.0) throw Error("distribution: alpha must be nonnegative");
    auto it = std::upper_bound(thresholds.begin(), thresholds.end(), alpha);
    if (it == thresholds.end()) return 0.0;
    return measure_ge[static_cast<std::size_t>(it - thresholds.begin())];
  }
};

enum class NormKind { lebesgue, weak, lorentz };

inline const char* to_string(NormKind k) {
  switch (k) {
    case NormKind::lebesgue: return "lebesgue";
    case NormKind::weak: return "weak";
    case NormKind::lorentz: return "lorentz";
  }
  return "?";
}

struct NormReport {
  NormKind kind = NormKind::lebesgue;
  double p = 0.0;
  double r = 0.0;  ///< second Lorentz index; equals p for lebesgue, inf for weak
  double value = 0.0;
  double measure = 0.0;
  bool empty_region = false;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["p"] = p;
    if (std::isinf(r))
      j["r"] = "inf";
    else
      j["r"] = r;
    j["value"] = value;
    j["measure"] = measure;
    return j;
  }
};

// ---------------------------------------------------------------------------

/// mu{x in region : |f(x)| > alpha}, by cell counting.
inline double distribution(const ScalarField& f, const Region& region, double alpha) {
  if (!(alpha >= 0.0)) throw Error("distribution: alpha must be nonnegative");
  if (!(f.grid() == region.grid())) throw Error("distribution: field and region grids differ");
  std::size_t count = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (region.contains(i) && std::abs(f[i]) > alpha) ++count;
  return static_cast<double>(count) * f.grid().cell_volume();
}

/// sup_alpha alpha * lambda(alpha)^{1/q}, attained at a left limit of a level.
inline NormReport weak_norm(const SimpleFunction& f, double q) {
  if (!(q > 0.0)) throw Error("weak_norm: q must be positive");
  NormReport rep{NormKind::weak, q, std::numeric_limits<double>::infinity(), 0.0, f.total_measure(), f.empty()};
  const DistributionFunction d = DistributionFunction::of(f);
  for (std::size_t i = 0; i < d.thresholds.size(); ++i) {
    const double level = d.thresholds[i];
    if (level <= 0.0) continue;
    rep.value = std::max(rep.value, level * std::pow(d.measure_ge[i], 1.0 / q));
  }
  return rep;
}

inline NormReport weak_norm(const ScalarField& f, const Region& region, double q) {
  return weak_norm(SimpleFunction::from_field(f, region), q);
}
inline NormReport weak_norm(const ScalarField& f, double q) { return weak_norm(SimpleFunction::from_field(f), q); }

/// (sum |f|^p * cell measure)^{1/p}.
inline NormReport lebesgue_norm(const SimpleFunction& f, double p) {
  if (!(p >= 1.0)) throw Error("lebesgue_norm: p must be >= 1");
  CompensatedSum s;
  for (std::size_t i = 0; i < f.magnitudes().size(); ++i) s.add(std::pow(f.magnitudes()[i], p) * f.measures()[i]);
  return NormReport{NormKind::lebesgue, p, p, std::pow(s.value(), 1.0 / p), f.total_measure(), f.empty()};
}

inline NormReport lebesgue_norm(const ScalarField& f, const Region& region, double p) {
  return lebesgue_norm(SimpleFunction::from_field(f, region), p);
}
inline NormReport lebesgue_norm(const ScalarField& f, double p) { return lebesgue_norm(SimpleFunction::from_field(f), p); }

/// p * int_0^inf alpha^{p-1} lambda(alpha) d alpha, integrated exactly over the
/// piecewise-constant lambda, then raised to 1/p.
inline NormReport layer_cake(const SimpleFunction& f, double p) {
  if (!(p >= 1.0)) throw Error("layer_cake: p must be >= 1");
  const DistributionFunction d = DistributionFunction::of(f);
  CompensatedSum s;
  // On [alpha_{i-1}, alpha_i) lambda equals mu{|f| >= alpha_i}.
  double below = 0.0;
  for (std::size_t i = 0; i < d.thresholds.size(); ++i) {
    const double level = d.thresholds[i];
    s.add(d.measure_ge[i] * (std::pow(level, p) - std::pow(below, p)));
    below = level;
  }
  return NormReport{NormKind::lebesgue, p, p, std::pow(s.value(), 1.0 / p), d.total_measure, f.empty()};
}

inline NormReport layer_cake(const ScalarField& f, const Region& region, double p) {
  return layer_cake(SimpleFunction::from_field(f, region), p);
}

/// Lorentz L^{p,r} norm of a piecewise-constant time signal,
///   (p * int_0^inf R^{r-1} lambda(R)^{r/p} dR)^{1/r},
/// normalized so that r = p gives the L^p norm. r = inf routes to the weak norm.
inline NormReport lorentz_time_norm(const SimpleFunction& signal, double p, double r) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error("lorentz_time_norm: p must lie in [1, inf)");
  if (std::isinf(r) && r > 0) {
    NormReport rep = weak_norm(signal, p);
    return rep;
  }
  if (!(r >= 1.0)) throw Error("lorentz_time_norm: r must lie in [1, inf]");
  const DistributionFunction d = DistributionFunction::of(signal);
  CompensatedSum s;
  double below = 0.0;
  for (std::size_t i = 0; i < d.thresholds.size(); ++i) {
    const double level = d.thresholds[i];
    s.add(std::pow(d.measure_ge[i], r / p) * (std::pow(level, r) - std::pow(below, r)));
    below = level;
  }
  const double value = std::pow(p / r * s.value(), 1.0 / r);
  return NormReport{NormKind::lorentz, p, r, value, d.total_measure, signal.empty()};
}

inline NormReport lorentz_time_norm(std::span<const double> values, std::span<const double> durations, double p, double r) {
  return lorentz_time_norm(SimpleFunction::from_signal(values, durations), p, r);
}

// ---------------------------------------------------------------------------
// embedding lemmas with materialized constants

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds(double rel_slack = 1e-12) const noexcept { return lhs <= rhs + rel_slack * std::max(1.0, std::abs(rhs)); }
};

struct CompactEmbeddingReport {
  double constant_K = 0.0;        ///< mu(K)^{1/p - 1/r}
  double constant_eps = 0.0;      ///< (p/(r-p))^{1/p} eps^{(p-r)/p}
  InequalityCheck weak_to_weak;   ///< ||f||_{p,inf} <= C(K) ||f||_{r,inf}
  InequalityCheck strong_bound;   ///< ||f||_p <= C(eps) ||f||_{r,inf}^{r/p} + eps mu(K)^{1/p}
  bool pass() const noexcept { return weak_to_weak.holds() && strong_bound.holds(); }
};

inline double compact_embedding_constant(double p, double r, double eps) {
  return std::pow(p / (r - p), 1.0 / p) * std::pow(eps, (p - r) / p);
}

inline CompactEmbeddingReport compact_embedding_check(const SimpleFunction& f, double p, double r, double eps) {
  if (!(p >= 1.0) || !(p < r)) throw Error("compact_embedding_check: requires 1 <= p < r");
  if (!(eps > 0.0 && eps < 1.0)) throw Error("compact_embedding_check: eps must lie in (0, 1)");
  const double mu = f.total_measure();
  CompactEmbeddingReport rep;
  rep.constant_K = std::pow(mu, 1.0 / p - 1.0 / r);
  rep.constant_eps = compact_embedding_constant(p, r, eps);
  const double weak_r = weak_norm(f, r).value;
  rep.weak_to_weak = {weak_norm(f, p).value, rep.constant_K * weak_r};
  rep.strong_bound = {lebesgue_norm(f, p).value, rep.constant_eps * std::pow(weak_r, r / p) + eps * std::pow(mu, 1.0 / p)};
  return rep;
}

inline CompactEmbeddingReport compact_embedding_check(const ScalarField& f, const Region& region, double p, double r, double eps) {
  return compact_embedding_check(SimpleFunction::from_field(f, region), p, r, eps);
}

/// f = f_high + f_low with f_high = f on {f >= 1}, f_low = f on {f < 1}.
inline std::pair<ScalarField, ScalarField> split_at_one(const ScalarField& f) {
  std::vector<double> high(f.size()), low(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < 0.0) throw Error("split_at_one: f must be nonnegative");
    (f[i] >= 1.0 ? high[i] : low[i]) = f[i];
  }
  return {ScalarField(f.grid(), std::move(high)), ScalarField(f.grid(), std::move(low))};
}

/// (2^{r1} - 1) sum_{k>=1} 2^{(r1 - r) k}
inline double dyadic_high_constant(double r, double r1) {
  const double ratio = std::pow(2.0, r1 - r);
  return (std::pow(2.0, r1) - 1.0) * ratio / (1.0 - ratio);
}

/// 2^r sum_{k>=0} 2^{(r - r2) k}
inline double dyadic_low_constant(double r, double r2) { return std::pow(2.0, r) / (1.0 - std::pow(2.0, r - r2)); }

struct SplitLemmaReport {
  double weak_r_power = 0.0;  ///< ||f||_{r,inf}^r
  double base_layer = 0.0;    ///< 2^{r1} mu{f >= 1}
  InequalityCheck high;       ///< int f_high^{r1} <= C(r,r1) ||f||^r + 2^{r1} mu{f>=1}
  InequalityCheck low;        ///< int f_low^{r2} <= C(r,r2) ||f||^r
  bool pass() const noexcept { return high.holds() && low.holds(); }
};

inline SplitLemmaReport lemma13_check(const SimpleFunction& f, double r, double r1, double r2) {
  if (!(1.0 < r1 && r1 < r && r < r2 && std::isfinite(r2))) throw Error("lemma13_check: requires 1 < r1 < r < r2 < inf");
  SplitLemmaReport rep;
  rep.weak_r_power = std::pow(weak_norm(f, r).value, r);
  CompensatedSum high, low, at_least_one;
  for (std::size_t i = 0; i < f.magnitudes().size(); ++i) {
    const double v = f.magnitudes()[i];
    const double m = f.measures()[i];
    if (v >= 1.0) {
      high.add(std::pow(v, r1) * m);
      at_least_one.add(m);
    } else {
      low.add(std::pow(v, r2) * m);
    }
  }
  rep.base_layer = std::pow(2.0, r1) * at_least_one.value();
  rep.high = {high.value(), dyadic_high_constant(r, r1) * rep.weak_r_power + rep.base_layer};
  rep.low = {low.value(), dyadic_low_constant(r, r2) * rep.weak_r_power};
  return rep;
}

inline SplitLemmaReport lemma13_check(const ScalarField& f, double r, double r1, double r2) {
  for (double v : f.values())
    if (v < 0.0) throw Error("lemma13_check: f must be nonnegative");
  return lemma13_check(SimpleFunction::from_field(f), r, r1, r2);
}

/// weak_sigma^rho <= sup|f| * weak_q^p for the exponents derived from q.
struct InterpolationReport {
  DerivedExponents exponents{};
  InequalityCheck check;
};

inline InterpolationReport interpolation_check(const SimpleFunction& f, double q) {
  InterpolationReport rep;
  rep.exponents = derive_exponents(q);
  double sup = 0.0;
  for (double v : f.magnitudes()) sup = std::max(sup, v);
  const double lhs = std::pow(weak_norm(f, rep.exponents.sigma).value, rep.exponents.rho);
  const double rhs = sup * std::pow(weak_norm(f, q).value, rep.exponents.p);
  rep.check = {lhs, rhs};
  return rep;
}

}  // namespace wlns
