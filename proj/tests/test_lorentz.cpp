#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "wlns/lorentz.hpp"

using namespace wlns;

namespace {

ScalarField levels_field(const Grid& g, std::uint64_t seed, std::vector<double> levels) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, levels.size() - 1);
  std::vector<double> v(g.size());
  for (double& x : v) x = levels[pick(rng)];
  return ScalarField(g, std::move(v));
}

ScalarField random_positive(const Grid& g, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(g.size());
  for (double& x : v) x = scale * e(rng) * e(rng);
  return ScalarField(g, std::move(v));
}

// Brute force: for every cell value v, count cells >= v.
double brute_weak(const ScalarField& f, double q) {
  const double vol = f.grid().cell_volume();
  double best = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = std::abs(f[i]);
    if (v == 0.0) continue;
    std::size_t count = 0;
    for (std::size_t j = 0; j < f.size(); ++j) count += std::abs(f[j]) >= v;
    best = std::max(best, v * std::pow(count * vol, 1.0 / q));
  }
  return best;
}

}  // namespace

TEST(Distribution, Examples) {
  const Grid g(8);
  const Region all = Region::full(g);
  const ScalarField two = sample_scalar(g, [](const Point&) { return 2.0; });
  const double L3 = std::pow(2 * std::numbers::pi, 3);
  EXPECT_NEAR(distribution(two, all, 1.0), L3, 1e-12 * L3);
  EXPECT_EQ(distribution(two, all, 3.0), 0.0);

  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 2) ? 1.0 : 3.0;
  const ScalarField half(g, v);
  EXPECT_NEAR(distribution(half, all, 2.0), 0.5 * all.measure(), 1e-12 * L3);
}

TEST(Distribution, EmptyRegionFlagged) {
  const Grid g(8);
  const Region none = Region::from_mask(g, std::vector<char>(g.size(), 0));
  const ScalarField f = sample_scalar(g, [](const Point&) { return 1.0; });
  EXPECT_EQ(distribution(f, none, 0.0), 0.0);
  const NormReport r = weak_norm(f, none, 2.0);
  EXPECT_TRUE(r.empty_region);
  EXPECT_EQ(r.value, 0.0);
}

TEST(Distribution, MonotoneAndLimits) {
  const Grid g(8);
  const ScalarField f = random_positive(g, 3, 1.0);
  const DistributionFunction d = DistributionFunction::of(SimpleFunction::from_field(f));
  for (std::size_t i = 0; i < d.thresholds.size(); ++i) {
    EXPECT_LE(d.measure_gt[i], d.measure_ge[i]);
    if (i > 0) {
      EXPECT_LT(d.thresholds[i - 1], d.thresholds[i]);
      EXPECT_LE(d.measure_ge[i], d.measure_ge[i - 1]);
    }
  }
  EXPECT_NEAR(d(0.0), Region::full(g).measure(), 1e-9);
}

TEST(WeakNorm, ConstantAndTwoValued) {
  const Grid g(8);
  const Region ball = Region::ball(g, {3.0, 3.0, 3.0}, 1.5);
  const ScalarField c = sample_scalar(g, [](const Point&) { return 1.7; });
  EXPECT_NEAR(weak_norm(c, ball, 3.0).value, 1.7 * std::pow(ball.measure(), 1.0 / 3.0), 1e-12);

  const ScalarField two = levels_field(g, 7, {1.0, 3.0});
  double m3 = 0.0;
  for (double v : two.values()) m3 += (v == 3.0) * g.cell_volume();
  const double total = Region::full(g).measure();
  const double expect = std::max(1.0 * std::pow(total, 0.5), 3.0 * std::pow(m3, 0.5));
  EXPECT_NEAR(weak_norm(two, 2.0).value, expect, 1e-12 * expect);
}

TEST(WeakNorm, MatchesBruteForce) {
  const Grid g(8);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ScalarField f = levels_field(g, seed, {0.0, 0.3, 1.0, 2.5, 4.0});
    for (double q : {1.0, 2.0, 6.0}) {
      const double b = brute_weak(f, q);
      EXPECT_NEAR(weak_norm(f, q).value, b, 1e-12 * b);
    }
  }
}

TEST(WeakNorm, Properties) {
  const Grid g(8);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ScalarField f = random_positive(g, seed, 2.0);
    const double q = 1.5 + seed % 5;
    const double w = weak_norm(f, q).value;
    const double c = -2.5;
    const ScalarField cf = map(f, [c](double v) { return c * v; });
    EXPECT_NEAR(weak_norm(cf, q).value, std::abs(c) * w, 1e-13 * w);
    const ScalarField bigger = map(f, [](double v) { return v + 0.1; });
    EXPECT_LE(w, weak_norm(bigger, q).value);
    EXPECT_LE(lebesgue_norm(f, q).value, lebesgue_norm(bigger, q).value);
    EXPECT_LE(w, lebesgue_norm(f, q).value * (1 + 1e-12));
    const DistributionFunction d = DistributionFunction::of(SimpleFunction::from_field(f));
    for (std::size_t i = 0; i < d.thresholds.size(); i += 37) {
      const double a = d.thresholds[i];
      EXPECT_LE(a * std::pow(d(a), 1.0 / q), w * (1 + 1e-12));
    }
  }
}

TEST(LayerCake, Examples) {
  // 2 on a unit-measure set: direct 4, layer cake 2 int_0^2 alpha d alpha = 4.
  const std::vector<double> vals{2.0};
  const std::vector<double> meas{1.0};
  const SimpleFunction f = SimpleFunction::from_signal(vals, meas);
  EXPECT_NEAR(std::pow(lebesgue_norm(f, 2.0).value, 2), 4.0, 1e-14);
  EXPECT_NEAR(std::pow(layer_cake(f, 2.0).value, 2), 4.0, 1e-14);

  const Grid g(8);
  const ScalarField zero = ScalarField::zeros(g);
  EXPECT_EQ(lebesgue_norm(zero, 3.0).value, 0.0);
  EXPECT_EQ(layer_cake(zero, Region::full(g), 3.0).value, 0.0);
}

TEST(LayerCake, AgreesWithDirect) {
  const Grid g(8);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ScalarField f = seed % 2 ? levels_field(g, seed, {0.2, 1.1, 5.0}) : random_positive(g, seed, 3.0);
    for (double p : {1.0, 2.0, 3.7}) {
      const double a = lebesgue_norm(f, p).value;
      const double b = layer_cake(f, Region::full(g), p).value;
      EXPECT_NEAR(a, b, 1e-10 * a);
    }
  }
}

TEST(LorentzTime, ConstantSignal) {
  const double c = 1.3, T = 2.0;
  const std::vector<double> v{c, c, c, c};
  const std::vector<double> dt{T / 4, T / 4, T / 4, T / 4};
  for (double p : {2.0, 4.0})
    for (double r : {1.0, 2.0, 4.0, 7.0}) {
      const double expect = c * std::pow(T, 1.0 / p) * std::pow(p / r, 1.0 / r);
      EXPECT_NEAR(lorentz_time_norm(v, dt, p, r).value, expect, 1e-13 * expect);
    }
  const std::vector<double> z{0.0, 0.0};
  const std::vector<double> zd{1.0, 1.0};
  EXPECT_EQ(lorentz_time_norm(z, zd, 2.0, 3.0).value, 0.0);
}

TEST(LorentzTime, DiagonalIsLebesgueAndInfIsWeak) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<double> v(40), dt(40);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = u(rng);
    dt[i] = 0.01 + u(rng) / 10;
  }
  const SimpleFunction s = SimpleFunction::from_signal(v, dt);
  EXPECT_NEAR(lorentz_time_norm(s, 3.0, 3.0).value, lebesgue_norm(s, 3.0).value, 1e-12);
  const NormReport w = lorentz_time_norm(s, 3.0, std::numeric_limits<double>::infinity());
  EXPECT_EQ(w.kind, NormKind::weak);
  EXPECT_EQ(w.value, weak_norm(s, 3.0).value);
}

TEST(NormReport, Json) {
  const std::vector<double> vals{2.0};
  const std::vector<double> meas{0.5};
  const auto j = weak_norm(SimpleFunction::from_signal(vals, meas), 2.0).to_json();
  EXPECT_EQ(j["kind"], "weak");
  EXPECT_EQ(j["p"], 2.0);
  EXPECT_EQ(j["r"], "inf");
  EXPECT_NEAR(j["value"].get<double>(), 2.0 * std::sqrt(0.5), 1e-15);
  EXPECT_EQ(j["measure"], 0.5);
}

TEST(CompactEmbedding, Examples) {
  const Grid g(8);
  const Region K = Region::ball(g, {3, 3, 3}, 2.0);
  const ScalarField zero = ScalarField::zeros(g);
  const auto z = compact_embedding_check(zero, K, 2.0, 3.0, 0.1);
  EXPECT_TRUE(z.pass());
  EXPECT_EQ(z.strong_bound.lhs, 0.0);

  const ScalarField one = sample_scalar(g, [](const Point&) { return 1.0; });
  const auto ind = compact_embedding_check(one, K, 2.0, 3.0, 0.1);
  EXPECT_TRUE(ind.pass());
  EXPECT_LT(ind.strong_bound.lhs, ind.strong_bound.rhs);

  EXPECT_THROW(compact_embedding_check(one, K, 3.0, 2.0, 0.1), Error);
  EXPECT_THROW(compact_embedding_check(one, K, 2.0, 3.0, 1.5), Error);
  EXPECT_NEAR(compact_embedding_constant(2.0, 3.0, 0.1), std::sqrt(2.0) * std::pow(0.1, -0.5), 1e-12);
}

TEST(CompactEmbedding, RandomFields) {
  const Grid g(8);
  const Region K = Region::ball(g, {3, 3, 3}, 2.5);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ScalarField f = random_positive(g, seed, 0.01 + 0.2 * (seed % 7));
    EXPECT_TRUE(compact_embedding_check(f, K, 2.0, 3.0, 0.1).pass()) << seed;
  }
}

TEST(SplitLemma, Examples) {
  const Grid g(8);
  const ScalarField half = sample_scalar(g, [](const Point&) { return 0.5; });
  auto [hi, lo] = split_at_one(half);
  EXPECT_EQ(max_abs(hi), 0.0);
  EXPECT_TRUE(lemma13_check(half, 2.5, 2.0, 4.0).pass());

  // f = 2 on a ball: int f_high^{r1} = 2^{r1} mu, ||f||^r_{r,inf} = 2^r mu.
  const Region B = Region::ball(g, {3, 3, 3}, 1.5);
  std::vector<double> v(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (B.contains(i)) v[i] = 2.0;
  const ScalarField f(g, v);
  const auto rep = lemma13_check(f, 2.5, 2.0, 4.0);
  const double mu = B.measure();
  EXPECT_NEAR(rep.high.lhs, 4.0 * mu, 1e-12 * mu);
  EXPECT_NEAR(rep.weak_r_power, std::pow(2.0, 2.5) * mu, 1e-12 * mu);
  EXPECT_TRUE(rep.pass());

  auto [h2, l2] = split_at_one(f);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(h2[i] + l2[i], f[i]);
    EXPECT_TRUE(h2[i] == 0.0 || l2[i] == 0.0);
  }
  EXPECT_THROW(lemma13_check(f, 2.0, 2.5, 4.0), Error);
  EXPECT_THROW(split_at_one(map(f, [](double x) { return -x; })), Error);
}

TEST(SplitLemma, RandomFields) {
  const Grid g(8);
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    EXPECT_TRUE(lemma13_check(random_positive(g, seed, 0.1 + 0.3 * (seed % 9)), 2.5, 2.0, 4.0).pass()) << seed;
}

TEST(Interpolation, RandomFields) {
  const Grid g(8);
  for (double q : {4.0, 6.0, 8.0})
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto rep = interpolation_check(SimpleFunction::from_field(random_positive(g, seed, 0.5 + seed % 4)), q);
      EXPECT_TRUE(rep.check.holds()) << q << " " << seed;
    }
}
