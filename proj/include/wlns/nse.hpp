#pragma once

// Pseudo-spectral incompressible Navier-Stokes on the periodic box:
//   du/dt + div(u (x) u) + grad P = nu * lap u,   div u = 0.
// Time stepping is classical RK4 with an exact integrating factor for the
// viscous term; the pressure is removed by Leray projection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wlns/cutoff.hpp"
#include "wlns/field.hpp"
#include "wlns/lorentz.hpp"

namespace wlns {

struct InitialCondition {
  std::string name = "taylor_green";  ///< taylor_green | taylor_green_cos | random | constant | zero
  double amplitude = 1.0;
  int k_peak = 2;                      ///< random: spectrum peak wavenumber
  int k_max = 4;                       ///< random: largest excited |k|_inf
  Vec3 constant{0.0, 0.0, 0.0};        ///< constant: velocity value
};

struct SolverConfig {
  int n = 32;
  double viscosity = 1.0;
  double dt = 1e-3;
  double t_end = 0.1;
  double dealias = 2.0 / 3.0;
  int snapshot_every = 10;
  InitialCondition initial;
  std::uint64_t seed = 0;
  bool nonlinear = true;
  double blowup_threshold = 1e8;

  void validate() const {
    Grid check(n);
    if (!(viscosity > 0.0)) throw Error("solver: viscosity must be positive");
    if (!(dt > 0.0)) throw Error("solver: dt must be positive");
    if (!(t_end >= 0.0)) throw Error("solver: t_end must be nonnegative");
    if (!(dealias > 0.0 && dealias <= 1.0)) throw Error("solver: dealias fraction must lie in (0, 1]");
    if (snapshot_every < 1) throw Error("solver: snapshot_every must be >= 1");
  }
};

struct SolverState {
  double time = 0.0;
  SpectralVectorField velocity;
  long step_index = 0;

  const Grid& grid() const noexcept { return velocity[0].grid(); }
};

// ---------------------------------------------------------------------------
// spectral helpers

inline SpectralVectorField spectral_zeros(const Grid& g) {
  return {SpectralField::zeros(g), SpectralField::zeros(g), SpectralField::zeros(g)};
}

/// True when every |k_j| (integer mode label) is within dealias * n / 2.
inline bool in_dealias_band(const Grid& g, int i, int j, int k, double fraction) {
  const double cutoff = fraction * g.n() / 2.0;
  return std::abs(g.mode_label(i)) <= cutoff && std::abs(g.mode_label(j)) <= cutoff &&
         std::abs(g.mode_label(k)) <= cutoff && g.mode_label(i) != -g.n() / 2 && g.mode_label(j) != -g.n() / 2 &&
         g.mode_label(k) != -g.n() / 2;
}

inline void apply_dealias(SpectralVectorField& v, double fraction) {
  const Grid& g = v[0].grid();
  for (int c = 0; c < 3; ++c) {
    auto modes = v[c].mutable_modes();
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      auto [i, j, k] = g.unravel(idx);
      if (!in_dealias_band(g, i, j, k, fraction)) modes[idx] = 0.0;
    }
  }
}

/// u(k) <- (I - k k^T / |k|^2) u(k); the k = 0 mode is untouched.
inline SpectralVectorField leray_project(const SpectralVectorField& v) {
  const Grid& g = v[0].grid();
  SpectralVectorField out = v;
  std::array<std::span<Complex>, 3> m{out[0].mutable_modes(), out[1].mutable_modes(), out[2].mutable_modes()};
  parallel::for_each_index(g.size(), [&](std::size_t idx) {
    auto [i, j, k] = g.unravel(idx);
    const std::array<double, 3> kv{g.derivative_wavenumber(i), g.derivative_wavenumber(j), g.derivative_wavenumber(k)};
    const double k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
    if (k2 == 0.0) return;
    const Complex kdotu = kv[0] * v[0][idx] + kv[1] * v[1][idx] + kv[2] * v[2][idx];
    for (int c = 0; c < 3; ++c) m[c][idx] = v[c][idx] - kv[c] * kdotu / k2;
  });
  return out;
}

/// max_k |k . u(k)|, the spectral divergence defect.
inline double spectral_divergence(const SpectralVectorField& v) {
  const Grid& g = v[0].grid();
  double worst = 0.0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto [i, j, k] = g.unravel(idx);
    const Complex d = g.derivative_wavenumber(i) * v[0][idx] + g.derivative_wavenumber(j) * v[1][idx] +
                      g.derivative_wavenumber(k) * v[2][idx];
    worst = std::max(worst, std::abs(d));
  }
  return worst;
}

inline double max_mode(const SpectralVectorField& v) {
  double worst = 0.0;
  for (const auto& c : v)
    for (const Complex& z : c.modes()) worst = std::max(worst, std::abs(z));
  return worst;
}

namespace detail {

constexpr std::array<std::pair<int, int>, 6> kTensorPairs{{{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}}};

inline int tensor_slot(int a, int b) {
  if (a > b) std::swap(a, b);
  for (int s = 0; s < 6; ++s)
    if (kTensorPairs[s].first == a && kTensorPairs[s].second == b) return s;
  return -1;
}

/// Transforms of the six independent products u_a u_b, optionally restricted
/// to cells where `keep(|u|)` holds.
template <class Keep>
std::array<SpectralField, 6> product_transforms(const VectorField& u, Keep&& keep) {
  const Grid& g = u.grid();
  std::array<SpectralField, 6> out{SpectralField::zeros(g), SpectralField::zeros(g), SpectralField::zeros(g),
                                   SpectralField::zeros(g), SpectralField::zeros(g), SpectralField::zeros(g)};
  for (int s = 0; s < 6; ++s) {
    auto [a, b] = kTensorPairs[s];
    std::vector<double> prod(g.size());
    bool finite = true;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double mag = std::sqrt(u[0][i] * u[0][i] + u[1][i] * u[1][i] + u[2][i] * u[2][i]);
      prod[i] = keep(mag) ? u[a][i] * u[b][i] : 0.0;
      finite = finite && std::isfinite(prod[i]);
    }
    if (!finite) throw BlowUpError("nonlinear product overflowed", std::numeric_limits<double>::quiet_NaN());
    out[s] = forward_transform(ScalarField(g, std::move(prod)));
  }
  return out;
}

/// -(k_a k_b / |k|^2) T_ab(k) summed over a, b; zero mean.
inline SpectralField riesz_pressure(const std::array<SpectralField, 6>& T) {
  const Grid& g = T[0].grid();
  std::vector<Complex> out(g.size());
  parallel::for_each_index(g.size(), [&](std::size_t idx) {
    auto [i, j, k] = g.unravel(idx);
    const std::array<double, 3> kv{g.derivative_wavenumber(i), g.derivative_wavenumber(j), g.derivative_wavenumber(k)};
    const double k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
    if (k2 == 0.0) return;
    Complex s = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) s += kv[a] * kv[b] * T[tensor_slot(a, b)][idx];
    out[idx] = -s / k2;
  });
  return SpectralField(g, std::move(out));
}

}  // namespace detail

/// Spectral div(u (x) u), with modes outside the dealias band zeroed.
inline SpectralVectorField nonlinear_term(const SpectralVectorField& u_hat, double dealias = 2.0 / 3.0) {
  const Grid& g = u_hat[0].grid();
  const VectorField u = inverse_transform(u_hat);
  const auto T = detail::product_transforms(u, [](double) { return true; });
  SpectralVectorField out = spectral_zeros(g);
  for (int a = 0; a < 3; ++a) {
    auto m = out[a].mutable_modes();
    parallel::for_each_index(g.size(), [&](std::size_t idx) {
      auto [i, j, k] = g.unravel(idx);
      const std::array<double, 3> kv{g.derivative_wavenumber(i), g.derivative_wavenumber(j),
                                     g.derivative_wavenumber(k)};
      Complex s = 0.0;
      for (int b = 0; b < 3; ++b) s += Complex(0.0, kv[b]) * T[detail::tensor_slot(a, b)][idx];
      m[idx] = s;
    });
  }
  apply_dealias(out, dealias);
  return out;
}

inline SpectralVectorField nonlinear_term(const SolverState& s, double dealias = 2.0 / 3.0) {
  return nonlinear_term(s.velocity, dealias);
}

/// Solves -lap P = div div(u (x) u); equivalently P = sum R_i R_j (u_i u_j).
inline ScalarField pressure_from_velocity(const VectorField& u) {
  return inverse_transform(detail::riesz_pressure(detail::product_transforms(u, [](double) { return true; })));
}

inline ScalarField pressure_from_velocity(const SolverState& s) { return pressure_from_velocity(inverse_transform(s.velocity)); }

/// P1 from u_i u_j on {|u| >= 1}, P2 from u_i u_j on {|u| < 1}.
inline std::pair<ScalarField, ScalarField> pressure_split(const VectorField& u) {
  ScalarField p1 = inverse_transform(detail::riesz_pressure(detail::product_transforms(u, [](double m) { return m >= 1.0; })));
  ScalarField p2 = inverse_transform(detail::riesz_pressure(detail::product_transforms(u, [](double m) { return m < 1.0; })));
  return {std::move(p1), std::move(p2)};
}

inline std::pair<ScalarField, ScalarField> pressure_split(const SolverState& s) {
  return pressure_split(inverse_transform(s.velocity));
}

/// Spectral residual of lap P + div div(u (x) u): sqrt(sum |.|^2).
inline double poisson_residual(const VectorField& u, const ScalarField& P) {
  const auto T = detail::product_transforms(u, [](double) { return true; });
  const SpectralField lapP = spectral_laplacian(forward_transform(P));
  const Grid& g = u.grid();
  double s = 0.0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto [i, j, k] = g.unravel(idx);
    const std::array<double, 3> kv{g.derivative_wavenumber(i), g.derivative_wavenumber(j), g.derivative_wavenumber(k)};
    Complex dd = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) dd -= kv[a] * kv[b] * T[detail::tensor_slot(a, b)][idx];
    s += std::norm(lapP[idx] + dd);
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// time stepping

namespace detail {

inline SpectralVectorField rhs_nonlinear(const SpectralVectorField& u, const SolverConfig& cfg) {
  if (!cfg.nonlinear) return spectral_zeros(u[0].grid());
  SpectralVectorField n = leray_project(nonlinear_term(u, cfg.dealias));
  for (auto& c : n)
    for (Complex& z : c.mutable_modes()) z = -z;
  return n;
}

/// a <- factor(k) * (a + h * b), per mode; factor is exp(-nu |k|^2 tau).
inline SpectralVectorField combine(const SpectralVectorField& a, const SpectralVectorField* b, double h,
                                   const std::vector<double>& factor) {
  SpectralVectorField out = a;
  for (int c = 0; c < 3; ++c) {
    auto m = out[c].mutable_modes();
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = factor[i] * (a[c][i] + (b ? h * (*b)[c][i] : Complex(0.0)));
  }
  return out;
}

inline std::vector<double> viscous_factor(const Grid& g, double nu, double tau) {
  std::vector<double> f(g.size());
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto [i, j, k] = g.unravel(idx);
    const double k2 = g.wavenumber(i) * g.wavenumber(i) + g.wavenumber(j) * g.wavenumber(j) + g.wavenumber(k) * g.wavenumber(k);
    f[idx] = std::exp(-nu * k2 * tau);
  }
  return f;
}

}  // namespace detail

inline double max_velocity(const SpectralVectorField& u_hat) { return max_magnitude(inverse_transform(u_hat)); }

/// One integrating-factor RK4 step of du/dt = -nu|k|^2 u - P_L div(u (x) u).
inline SolverState step(const SolverState& s, const SolverConfig& cfg) {
  const Grid& g = s.grid();
  const double h = cfg.dt;
  const auto half = detail::viscous_factor(g, cfg.viscosity, 0.5 * h);
  const auto full = detail::viscous_factor(g, cfg.viscosity, h);
  const auto ones = std::vector<double>(g.size(), 1.0);

  try {
    const auto& u0 = s.velocity;
    const auto k1 = detail::rhs_nonlinear(u0, cfg);
    const auto u2 = detail::combine(u0, &k1, 0.5 * h, half);
    const auto k2 = detail::rhs_nonlinear(u2, cfg);
    const auto u3 = detail::combine(detail::combine(u0, nullptr, 0.0, half), &k2, 0.5 * h, ones);
    const auto k3 = detail::rhs_nonlinear(u3, cfg);
    const auto k3h = detail::combine(k3, nullptr, 0.0, half);
    const auto u4 = detail::combine(detail::combine(u0, nullptr, 0.0, full), &k3h, h, ones);
    const auto k4 = detail::rhs_nonlinear(u4, cfg);

    SpectralVectorField next = spectral_zeros(g);
    for (int c = 0; c < 3; ++c) {
      auto m = next[c].mutable_modes();
      for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = full[i] * u0[c][i] + h / 6.0 * (full[i] * k1[c][i] + 2.0 * half[i] * (k2[c][i] + k3[c][i]) + k4[c][i]);
        if (!std::isfinite(m[i].real()) || !std::isfinite(m[i].imag()))
          throw BlowUpError("non-finite velocity mode", s.time);
      }
    }
    next = leray_project(next);
    if (cfg.nonlinear) apply_dealias(next, cfg.dealias);
    SolverState out{s.time + h, std::move(next), s.step_index + 1};
    if (max_velocity(out.velocity) > cfg.blowup_threshold)
      throw BlowUpError("max |u| exceeded blow-up threshold", s.time);
    return out;
  } catch (const BlowUpError& e) {
    if (std::isnan(e.last_valid_time())) throw BlowUpError(e.what(), s.time);
    throw;
  } catch (const Error& e) {
    // Non-finite intermediate stages surface as field construction errors.
    throw BlowUpError(std::string("non-finite stage: ") + e.what(), s.time);
  }
}

/// dt * max|u| / spacing.
inline double cfl_number(const SolverState& s, const SolverConfig& cfg) {
  return cfg.dt * max_velocity(s.velocity) / s.grid().spacing();
}

/// (1/2) int |u|^2 via Parseval.
inline double kinetic_energy(const SpectralVectorField& u_hat) {
  const Grid& g = u_hat[0].grid();
  CompensatedSum s;
  for (const auto& c : u_hat)
    for (const Complex& z : c.modes()) s.add(std::norm(z));
  const double L = g.length();
  return 0.5 * L * L * L * s.value();
}

/// int |grad u|^2 via Parseval.
inline double enstrophy_dissipation(const SpectralVectorField& u_hat) {
  const Grid& g = u_hat[0].grid();
  CompensatedSum s;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto [i, j, k] = g.unravel(idx);
    const double k2 = g.derivative_wavenumber(i) * g.derivative_wavenumber(i) +
                      g.derivative_wavenumber(j) * g.derivative_wavenumber(j) +
                      g.derivative_wavenumber(k) * g.derivative_wavenumber(k);
    for (const auto& c : u_hat) s.add(k2 * std::norm(c[idx]));
  }
  const double L = g.length();
  return L * L * L * s.value();
}

inline Vec3 mean_momentum(const SpectralVectorField& u_hat) {
  return {u_hat[0][0].real(), u_hat[1][0].real(), u_hat[2][0].real()};
}

// ---------------------------------------------------------------------------
// initial conditions

inline VectorField taylor_green(const Grid& g, double amplitude = 1.0) {
  return sample_vector(g, [amplitude](const Point& x) {
    return Vec3{amplitude * std::sin(x[0]) * std::cos(x[1]), -amplitude * std::cos(x[0]) * std::sin(x[1]), 0.0};
  });
}

/// The same vortex shifted by a quarter period: (cos x sin y, -sin x cos y, 0).
inline VectorField taylor_green_cos(const Grid& g, double amplitude = 1.0) {
  return sample_vector(g, [amplitude](const Point& x) {
    return Vec3{amplitude * std::cos(x[0]) * std::sin(x[1]), -amplitude * std::sin(x[0]) * std::cos(x[1]), 0.0};
  });
}

/// Random divergence-free field with energy concentrated near k_peak, scaled
/// so max|u| equals amplitude. Deterministic for a fixed seed.
inline VectorField random_solenoidal(const Grid& g, std::uint64_t seed, double amplitude, int k_peak, int k_max) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SpectralVectorField hat = spectral_zeros(g);
  for (int kz = -k_max; kz <= k_max; ++kz)
    for (int ky = -k_max; ky <= k_max; ++ky)
      for (int kx = -k_max; kx <= k_max; ++kx) {
        const double kk = std::sqrt(static_cast<double>(kx * kx + ky * ky + kz * kz));
        if (kk == 0.0) continue;
        const double envelope = std::exp(-0.5 * (kk - k_peak) * (kk - k_peak)) / kk;
        const std::size_t idx = g.index(g.slot(kx), g.slot(ky), g.slot(kz));
        for (int c = 0; c < 3; ++c) hat[c].mutable_modes()[idx] = envelope * Complex(normal(rng), normal(rng));
      }
  // Real field: keep the Hermitian part.
  for (int c = 0; c < 3; ++c) {
    const SpectralField src = hat[c];
    auto m = hat[c].mutable_modes();
    const int n = g.n();
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      auto [i, j, k] = g.unravel(idx);
      const std::size_t mirror = g.index((n - i) % n, (n - j) % n, (n - k) % n);
      m[idx] = 0.5 * (src[idx] + std::conj(src[mirror]));
    }
  }
  hat = leray_project(hat);
  VectorField u = inverse_transform(hat);
  const double peak = max_magnitude(u);
  if (peak == 0.0) return u;
  const double scale = amplitude / peak;
  return VectorField(map(u[0], [scale](double v) { return scale * v; }), map(u[1], [scale](double v) { return scale * v; }),
                     map(u[2], [scale](double v) { return scale * v; }));
}

inline VectorField initial_velocity(const SolverConfig& cfg) {
  const Grid g(cfg.n);
  const auto& ic = cfg.initial;
  if (ic.name == "taylor_green") return taylor_green(g, ic.amplitude);
  if (ic.name == "taylor_green_cos") return taylor_green_cos(g, ic.amplitude);
  if (ic.name == "random") return random_solenoidal(g, cfg.seed, ic.amplitude, ic.k_peak, ic.k_max);
  if (ic.name == "zero") return VectorField::zeros(g);
  if (ic.name == "constant") {
    const Vec3 c = ic.constant;
    return sample_vector(g, [c](const Point&) { return c; });
  }
  throw Error("solver: unknown initial condition '" + ic.name + "'");
}

inline SolverState initial_state(const SolverConfig& cfg) {
  cfg.validate();
  SpectralVectorField hat = forward_transform(initial_velocity(cfg));
  return SolverState{0.0, leray_project(hat), 0};
}

// ---------------------------------------------------------------------------
// local energy balance

struct TrajectorySnapshot {
  double time = 0.0;
  VectorField velocity;
};
using Trajectory = std::vector<TrajectorySnapshot>;

/// Space integrals entering the local energy balance of a cutoff phi at one time.
struct LocalEnergyTerms {
  double mass = 0.0;         ///< int phi |u|^2 / 2
  double dissipation = 0.0;  ///< nu int phi |grad u|^2
  double source = 0.0;       ///< int (|u|^2/2)(phi_t + nu lap phi)
  double flux = 0.0;         ///< int (u . grad phi)(|u|^2/2 + P)
};

/// Sum over a,b of (d_b u_a)^2.
inline ScalarField gradient_square(const VectorField& u) {
  const Grid& g = u.grid();
  std::vector<double> out(g.size(), 0.0);
  for (int a = 0; a < 3; ++a) {
    const VectorField du = gradient(u[a]);
    for (int b = 0; b < 3; ++b)
      for (std::size_t i = 0; i < g.size(); ++i) out[i] += du[b][i] * du[b][i];
  }
  return ScalarField(g, std::move(out));
}

template <SpaceTimeCutoff Phi>
LocalEnergyTerms local_energy_terms(const VectorField& u, double t, const Phi& phi, double viscosity,
                                    const ScalarField* pressure = nullptr) {
  const Grid& g = u.grid();
  const ScalarField P = pressure ? *pressure : pressure_from_velocity(u);
  const ScalarField G = gradient_square(u);
  CompensatedSum mass, diss, source, flux;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.position(i);
    const double e = 0.5 * (u[0][i] * u[0][i] + u[1][i] * u[1][i] + u[2][i] * u[2][i]);
    const double ph = phi.value(t, x);
    const Vec3 gp = phi.gradient(t, x);
    mass.add(ph * e);
    diss.add(ph * G[i]);
    source.add(e * (phi.time_derivative(t, x) + viscosity * phi.laplacian(t, x)));
    flux.add((u[0][i] * gp[0] + u[1][i] * gp[1] + u[2][i] * gp[2]) * (e + P[i]));
  }
  const double vol = g.cell_volume();
  return {mass.value() * vol, viscosity * diss.value() * vol, source.value() * vol, flux.value() * vol};
}

struct EnergyResidualReport {
  std::vector<double> times;     ///< interior snapshot times
  std::vector<double> residual;  ///< r(t)
  std::vector<LocalEnergyTerms> terms;
  double max_residual = 0.0;      ///< max r
  double max_abs_residual = 0.0;  ///< max |r|
};

/// d/dt at t[c] of the Lagrange interpolant through the samples t[lo..hi].
inline double lagrange_derivative(std::span<const double> t, std::span<const double> f, std::size_t lo, std::size_t hi,
                                  std::size_t c) {
  double d = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) {
    double wj = 0.0;
    for (std::size_t m = lo; m <= hi; ++m) {
      if (m == j) continue;
      double prod = 1.0 / (t[j] - t[m]);
      for (std::size_t l = lo; l <= hi; ++l)
        if (l != j && l != m) prod *= (t[c] - t[l]) / (t[j] - t[l]);
      wj += prod;
    }
    d += wj * f[j];
  }
  return d;
}

/// r(t) = d/dt int phi|u|^2/2 + nu int phi|grad u|^2 - int (|u|^2/2)(phi_t + nu lap phi)
///        - int (u . grad phi)(|u|^2/2 + P), at interior snapshots.
/// The time derivative is a centered difference on `stencil` points (3 or 5);
/// near the ends the 5-point window is shifted inward.
template <SpaceTimeCutoff Phi>
EnergyResidualReport energy_residual(const Trajectory& traj, const Phi& phi, double viscosity = 1.0, int stencil = 3) {
  if (traj.size() < 3) throw Error("energy_residual: need at least 3 snapshots");
  if (stencil != 3 && stencil != 5) throw Error("energy_residual: stencil must be 3 or 5");
  for (std::size_t j = 1; j < traj.size(); ++j)
    if (!(traj[j].time > traj[j - 1].time)) throw Error("energy_residual: snapshot times must increase");
  std::vector<LocalEnergyTerms> terms;
  std::vector<double> times, mass;
  terms.reserve(traj.size());
  for (const auto& s : traj) {
    terms.push_back(local_energy_terms(s.velocity, s.time, phi, viscosity));
    times.push_back(s.time);
    mass.push_back(terms.back().mass);
  }
  EnergyResidualReport rep;
  rep.max_residual = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j + 1 < traj.size(); ++j) {
    const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(stencil), traj.size());
    const std::size_t lo = std::min(j - std::min<std::size_t>(j, width / 2), traj.size() - width);
    const double dmass = lagrange_derivative(times, mass, lo, lo + width - 1, j);
    const double r = dmass + terms[j].dissipation - terms[j].source - terms[j].flux;
    rep.times.push_back(traj[j].time);
    rep.residual.push_back(r);
    rep.terms.push_back(terms[j]);
    rep.max_residual = std::max(rep.max_residual, r);
    rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(r));
  }
  return rep;
}

/// Runs the solver from `state` to t_end, collecting a snapshot every
/// `every` steps (and the initial state).
inline Trajectory simulate_trajectory(SolverState state, const SolverConfig& cfg, int every = 1) {
  Trajectory traj;
  traj.push_back({state.time, inverse_transform(state.velocity)});
  const long steps = std::lround(cfg.t_end / cfg.dt);
  for (long s = 0; s < steps; ++s) {
    state = step(state, cfg);
    if ((s + 1) % every == 0 || s + 1 == steps) traj.push_back({state.time, inverse_transform(state.velocity)});
  }
  return traj;
}

}  // namespace wlns
