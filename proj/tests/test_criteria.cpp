#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "wlns/criteria.hpp"
#include "wlns/nse.hpp"

using namespace wlns;

namespace {

VectorField random_field(const Grid& g, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> mag(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::array<std::vector<double>, 3> c;
  for (auto& v : c) v.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double m = scale * mag(rng);
    for (auto& v : c) v[i] = m * u(rng);
  }
  return VectorField(ScalarField(g, c[0]), ScalarField(g, c[1]), ScalarField(g, c[2]));
}

}  // namespace

TEST(Integrands, ClosedFormsOnConstantField) {
  const Grid g(8);
  const double a = 2.0;
  const VectorField u = sample_vector(g, [a](const Point&) { return Vec3{a, 0.0, 0.0}; });
  const auto e = derive_exponents(6.0);
  const auto row = criterion_row(u, 0.5, e);
  const double vol = std::pow(g.length(), 3);
  EXPECT_NEAR(row.sup_norm, a, 1e-14);
  EXPECT_NEAR(row.strong_q, a * std::pow(vol, 1.0 / 6.0), 1e-12);
  EXPECT_NEAR(row.weak_q, a * std::pow(vol, 1.0 / 6.0), 1e-12);  // sup over alpha < a of alpha vol^{1/q}
  EXPECT_NEAR(row.weak_sigma, a * std::pow(vol, 1.0 / e.sigma), 1e-12);
  EXPECT_NEAR(row.I_lps, std::pow(row.strong_q, 4.0), 1e-9);
  EXPECT_NEAR(row.I_zl, std::pow(row.strong_q, 4.0) / (1.0 + std::log(kE + a)), 1e-9);
  EXPECT_NEAR(row.I_wlog, std::pow(row.weak_q, 4.0) / (kE + std::log(kE + a)), 1e-9);
  const double damped = a / (kE + std::log(kE + a));
  EXPECT_NEAR(row.I_remark, std::pow(damped * std::pow(vol, 1.0 / 6.0), 4.0), 1e-9);
  EXPECT_EQ(row.C_wlog, 0.0);
}

TEST(Integrands, ZeroField) {
  const Grid g(8);
  const auto row = criterion_row(VectorField::zeros(g), 0.0, derive_exponents(6.0));
  EXPECT_EQ(row.sup_norm, 0.0);
  EXPECT_EQ(row.I_lps, 0.0);
  EXPECT_EQ(row.I_zl, 0.0);
  EXPECT_EQ(row.I_wlog, 0.0);
  EXPECT_EQ(row.I_remark, 0.0);
  EXPECT_TRUE(std::isnan(row.remark_ratio()));
}

TEST(Integrands, LogDampingOrdering) {
  // e + log(e + s) > 1 + log(e + s) > 1, and weak_q <= strong_q.
  const Grid g(8);
  const auto e = derive_exponents(5.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto row = criterion_row(random_field(g, s, 3.0), 0.0, e);
    EXPECT_LE(row.weak_q, row.strong_q * (1 + 1e-12));
    EXPECT_LE(row.I_wlog, row.I_zl * (1 + 1e-12));
    EXPECT_LE(row.I_zl, row.I_lps * (1 + 1e-12));
  }
}

TEST(PsiDomination, HoldsOnGrid) {
  const auto rep = psi_domination_check();
  EXPECT_EQ(rep.points, 10000u);
  EXPECT_EQ(rep.violations, 0u);
  EXPECT_GT(rep.min_margin, 0.0);
  // Direct difference agrees with the cancellation-free margin where both are accurate.
  for (double r : {1e-3, 0.5, 1.0, 10.0, 1e3}) {
    const double l = kE + std::log(kE + r);
    const double direct = 1.0 / psi(r) - 1.0 / ((kE + r) * l);
    EXPECT_NEAR(direct, kE / (r * (kE + r) * l), 1e-12 * (1.0 / psi(r)));
  }
}

TEST(Trace, ColumnOrder) {
  const std::vector<std::string> expect{"t",     "sup_norm", "weak_q", "strong_q", "weak_sigma", "I_lps", "I_zl",
                                        "I_wlog", "I_remark", "C_lps", "C_zl",     "C_wlog",     "C_remark"};
  EXPECT_EQ(trace_columns(), expect);
  CriterionTrace t{derive_exponents(6.0), {CriterionRow{}, CriterionRow{}}};
  t.rows[1].t = 1.0;
  std::ostringstream os;
  write_trace_csv(os, t);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "t,sup_norm,weak_q,strong_q,weak_sigma,I_lps,I_zl,I_wlog,I_remark,C_lps,C_zl,C_wlog,C_remark");
}

TEST(Trace, AccumulateIsTrapezoid) {
  CriterionTrace t;
  std::vector<double> times{0.0, 0.1, 0.3, 0.35, 1.0};
  for (double s : times) {
    CriterionRow r;
    r.t = s;
    r.I_lps = s * s;
    r.I_zl = 1.0;
    r.I_wlog = 2.0 * s;
    r.I_remark = 3.0;
    t.rows.push_back(r);
  }
  const auto a = accumulate(t);
  double lps = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double h = times[i] - times[i - 1];
    lps += 0.5 * h * (times[i] * times[i] + times[i - 1] * times[i - 1]);
    EXPECT_NEAR(a.rows[i].C_lps, lps, 1e-15);
    EXPECT_NEAR(a.rows[i].C_zl, times[i], 1e-15);
    EXPECT_NEAR(a.rows[i].C_wlog, times[i] * times[i], 1e-15);  // exact for linear integrands
    EXPECT_NEAR(a.rows[i].C_remark, 3.0 * times[i], 1e-15);
  }
  for (std::size_t i = 1; i < a.rows.size(); ++i) EXPECT_GE(a.rows[i].C_wlog, a.rows[i - 1].C_wlog);
  t.rows[2].t = 0.1;
  EXPECT_THROW(accumulate(t), Error);
}

TEST(Holder, NoViolationsOnRandomFields) {
  const Grid g(8);
  for (double q : {4.0, 6.0, 8.0}) {
    const auto e = derive_exponents(q);
    CriterionTrace t{e, {}};
    for (int i = 0; i < 50; ++i) t.rows.push_back(criterion_row(random_field(g, 100 + i, 0.1 * (i + 1)), 0.01 * i, e));
    const auto rep = holder_check(t, e);
    EXPECT_EQ(rep.row_violations, 0u) << q;
    EXPECT_TRUE(rep.pass()) << q;
    EXPECT_GE(rep.min_row_slack, -1e-12 * rep.rhs);
  }
}

TEST(Holder, ExponentsSatisfyGapIdentity) {
  for (double q : {3.5, 4.0, 6.0, 8.0, 8.9}) {
    const auto e = derive_exponents(q);
    EXPECT_NEAR(e.scaling_gap(), 1.0 / e.rho, 1e-14);
    EXPECT_NEAR(2.0 / e.p + 3.0 / e.q, 1.0, 1e-14);
    EXPECT_NEAR(bound_exponent(e.rho, e.sigma), e.rho, 1e-12);
  }
}

TEST(Rescaling, EpsilonScalingAndBounds) {
  EXPECT_FALSE(epsilon_scaling(0.0, 1.0, 10.0, 7.5).has_value());
  const auto e = derive_exponents(6.0);
  const double norm = 5.0, cstar = 1.0;
  const double eps = *epsilon_scaling(norm, cstar, e.rho, e.sigma);
  // eps^{rho (1 - 2/rho - 3/sigma)} * norm = C*
  EXPECT_NEAR(std::pow(eps, e.rho * e.scaling_gap()) * norm, cstar, 1e-12);
  EXPECT_THROW(epsilon_scaling(1.0, 0.0, e.rho, e.sigma), Error);
  EXPECT_THROW(bound_exponent(2.0, 3.0), Error);
  EXPECT_NEAR(a_lambda(3.0, 2.0), 2.0, 1e-15);
  EXPECT_NEAR(a_lambda(0.75, 1.0), 2.0, 1e-15);
  EXPECT_NEAR(linfty_bound(0.0, 1.5, e.rho, e.sigma), 1.5, 1e-15);
  EXPECT_NEAR(linfty_bound(2.0, 1.0, e.rho, e.sigma), 1.0 + std::pow(2.0, e.rho), 1e-9);
}

TEST(Trace, SolverRunCumulativesIncrease) {
  SolverConfig cfg;
  cfg.n = 16;
  cfg.t_end = 0.02;
  cfg.initial.name = "random";
  cfg.initial.amplitude = 2.0;
  cfg.seed = 5;
  const auto traj = simulate_trajectory(initial_state(cfg), cfg, 2);
  const auto e = derive_exponents(6.0);
  CriterionTrace t{e, {}};
  for (const auto& s : traj) t.rows.push_back(criterion_row(s.velocity, s.time, e));
  const auto a = accumulate(t);
  for (std::size_t i = 1; i < a.rows.size(); ++i) {
    EXPECT_GT(a.rows[i].C_lps, a.rows[i - 1].C_lps);
    EXPECT_GT(a.rows[i].C_wlog, a.rows[i - 1].C_wlog);
    EXPECT_LE(a.rows[i].C_wlog, a.rows[i].C_zl);
  }
  EXPECT_TRUE(holder_check(a, e).pass());
}
