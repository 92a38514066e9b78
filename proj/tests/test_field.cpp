#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "wlns/field.hpp"
#include "wlns/snapshot.hpp"

using namespace wlns;

namespace {

ScalarField random_field(const Grid& g, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(g.size());
  for (double& x : v) x = u(rng);
  return ScalarField(g, std::move(v));
}

double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Grid, Invariants) {
  EXPECT_THROW(Grid(7), Error);
  EXPECT_THROW(Grid(6), Error);
  EXPECT_THROW(Grid(8, 0.0), Error);
  const Grid g(16);
  EXPECT_EQ(g.size(), 16u * 16u * 16u);
  EXPECT_DOUBLE_EQ(g.spacing() * g.n(), g.length());
  for (std::size_t idx : {std::size_t{0}, std::size_t{17}, g.size() - 1}) {
    auto [i, j, k] = g.unravel(idx);
    EXPECT_EQ(g.index(i, j, k), idx);
  }
  EXPECT_EQ(g.mode_label(8), -8);
  EXPECT_EQ(g.derivative_wavenumber(8), 0.0);
}

TEST(ScalarField, RejectsNonFinite) {
  const Grid g(8);
  std::vector<double> v(g.size(), 0.0);
  v[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(ScalarField(g, v), Error);
}

TEST(Transform, SineIsSingleModePair) {
  const Grid g(16);
  const SpectralField F = forward_transform(sample_scalar(g, [](const Point& x) { return std::sin(x[0]); }));
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto [i, j, k] = g.unravel(idx);
    const int kx = g.mode_label(i), ky = g.mode_label(j), kz = g.mode_label(k);
    if (ky == 0 && kz == 0 && (kx == 1 || kx == -1)) {
      EXPECT_NEAR(F[idx].real(), 0.0, 1e-12);
      EXPECT_NEAR(F[idx].imag(), kx == 1 ? -0.5 : 0.5, 1e-12);
    } else {
      EXPECT_LT(std::abs(F[idx]), 1e-12);
    }
  }
}

TEST(Transform, ConstantOnlyZeroMode) {
  const Grid g(8);
  const SpectralField F = forward_transform(sample_scalar(g, [](const Point&) { return 2.5; }));
  EXPECT_NEAR(F.mode(0, 0, 0).real(), 2.5, 1e-14);
  for (std::size_t idx = 1; idx < g.size(); ++idx) EXPECT_LT(std::abs(F[idx]), 1e-14);
}

TEST(Transform, RoundTripAndParseval) {
  for (int n : {8, 16, 32}) {
    const Grid g(n);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const ScalarField f = random_field(g, seed, 3.0);
      const SpectralField F = forward_transform(f);
      EXPECT_LE(max_diff(f, inverse_transform(F)), 1e-12 * max_abs(f));
      const double ms = mean_square(f);
      EXPECT_NEAR(spectral_power(F), ms, 1e-12 * ms);
      EXPECT_LT(hermitian_defect(F), 1e-12);
    }
  }
}

TEST(Operators, AnalyticExamples) {
  const Grid g(16);
  const ScalarField s = sample_scalar(g, [](const Point& x) { return std::sin(x[0]); });
  const VectorField gs = gradient(s);
  const ScalarField c = sample_scalar(g, [](const Point& x) { return std::cos(x[0]); });
  EXPECT_LT(max_diff(gs[0], c), 1e-12);
  EXPECT_LT(max_abs(gs[1]), 1e-12);
  EXPECT_LT(max_abs(gs[2]), 1e-12);
  const ScalarField minus_s = map(s, [](double v) { return -v; });
  EXPECT_LT(max_diff(laplacian(s), minus_s), 1e-12);

  const VectorField tg = sample_vector(g, [](const Point& x) {
    return Vec3{std::sin(x[0]) * std::cos(x[1]), -std::cos(x[0]) * std::sin(x[1]), 0.0};
  });
  EXPECT_LT(max_abs(divergence(tg)), 1e-12);
}

TEST(Operators, DivGradIsLaplacian) {
  for (int n : {8, 16}) {
    const Grid g(n);
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
      const ScalarField f = random_field(g, seed);
      const ScalarField a = divergence(gradient(f));
      const ScalarField b = laplacian(f);
      EXPECT_LE(max_diff(a, b), 1e-12 * std::max(1.0, max_abs(b)));
    }
  }
}

TEST(Rescale, Examples) {
  const Grid g(16);
  const VectorField s = sample_vector(g, [](const Point& x) { return Vec3{std::sin(x[0]), 0.0, 0.0}; });
  const VectorField id = rescale(s, 1.0, {0, 0, 0});
  EXPECT_LT(max_diff(id[0], s[0]), 1e-15);

  const VectorField s2 = rescale(s, 2.0, {0, 0, 0});
  const ScalarField expect = sample_scalar(g, [](const Point& x) { return 2.0 * std::sin(2.0 * x[0]); });
  EXPECT_LT(max_diff(s2[0], expect), 1e-12);

  // Raw grid data (evaluator dropped) gives the same answer for integer eps.
  const VectorField raw(s[0], s[1], s[2]);
  EXPECT_LT(max_diff(rescale(raw, 2.0, {0, 0, 0})[0], expect), 1e-12);

  const VectorField c = sample_vector(g, [](const Point&) { return Vec3{0.5, -1.0, 2.0}; });
  const VectorField c2 = rescale(VectorField(c[0], c[1], c[2]), 2.0, {0, 0, 0});
  for (int a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(c2[a][5], 2.0 * c[a][5]);
}

TEST(Rescale, NonIntegerRawRejected) {
  const Grid g(8);
  const VectorField raw = VectorField::zeros(g);
  EXPECT_THROW(rescale(raw, 1.5, {0, 0, 0}), Error);
  EXPECT_THROW(rescale(raw, 2.0, {0.1, 0, 0}), Error);
  const VectorField closed = sample_vector(g, [](const Point& x) { return Vec3{std::cos(x[1]), 0, 0}; });
  EXPECT_NO_THROW(rescale(closed, 1.5, {0.1, 0, 0}));
}

TEST(Rescale, Composition) {
  const Grid g(16);
  const ClosedFormVector f = [](const Point& x) {
    return Vec3{std::sin(x[0]) * std::cos(2 * x[2]), std::cos(x[1]), std::sin(x[0] + x[1] + x[2])};
  };
  const VectorField v = sample_vector(g, f);
  for (auto [a, b] : {std::pair{2.0, 3.0}, std::pair{0.5, 4.0}, std::pair{1.5, 0.75}}) {
    const VectorField ab = rescale(rescale(v, a, {0, 0, 0}), b, {0, 0, 0});
    const VectorField direct = rescale(v, a * b, {0, 0, 0});
    for (int c = 0; c < 3; ++c) EXPECT_LT(max_diff(ab[c], direct[c]), 1e-12);
  }
}

TEST(Snapshot, RoundTripIsBitExact) {
  const Grid g(8, 3.0);
  const VectorField u(random_field(g, 1), random_field(g, 2), random_field(g, 3));
  std::stringstream ss;
  write_snapshot(ss, velocity_snapshot(u, 0.125));
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4 + 4 + 4 + 8 + 8 + 4 + 3 * g.size() * 8);
  EXPECT_EQ(bytes.substr(0, 4), "WLNS");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);  // version, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 8);  // n
  const Snapshot back = read_snapshot(ss);
  EXPECT_EQ(back.time, 0.125);
  EXPECT_EQ(back.grid.length(), 3.0);
  const VectorField w = velocity_from(back);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_EQ(w[c][i], u[c][i]);
}

TEST(Snapshot, RejectsBadInput) {
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_snapshot(bad), Error);
  const Grid g(8);
  std::stringstream ss;
  write_snapshot(ss, velocity_snapshot(VectorField::zeros(g), 0.0));
  std::string truncated = ss.str().substr(0, 100);
  std::stringstream tr(truncated);
  EXPECT_THROW(read_snapshot(tr), Error);
}
