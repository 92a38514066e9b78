#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wlns/error.hpp"
#include "wlns/fft.hpp"
#include "wlns/parallel.hpp"

namespace wlns {

using Point = std::array<double, 3>;
using Vec3 = std::array<double, 3>;
using Complex = std::complex<double>;

/// Uniform periodic grid with n points per axis on [0, length)^3.
class Grid {
public:
  explicit Grid(int n, double length = 2.0 * std::numbers::pi) : n_(n), length_(length) {
    if (n < 8 || n % 2 != 0) throw Error("grid: n must be even and >= 8, got " + std::to_string(n));
    if (!(length > 0.0) || !std::isfinite(length)) throw Error("grid: length must be positive and finite");
  }

  int n() const noexcept { return n_; }
  double length() const noexcept { return length_; }
  double spacing() const noexcept { return length_ / n_; }
  double cell_volume() const noexcept {
    const double h = spacing();
    return h * h * h;
  }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_) * n_ * n_; }

  /// Storage is x-fastest.
  std::size_t index(int i, int j, int k) const noexcept {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(n_) * k);
  }
  std::array<int, 3> unravel(std::size_t idx) const noexcept {
    const auto n = static_cast<std::size_t>(n_);
    return {static_cast<int>(idx % n), static_cast<int>((idx / n) % n), static_cast<int>(idx / (n * n))};
  }
  Point position(std::size_t idx) const noexcept {
    auto [i, j, k] = unravel(idx);
    const double h = spacing();
    return {i * h, j * h, k * h};
  }

  /// Signed wavenumber of FFT slot i, in {-n/2, ..., n/2-1}, scaled to the box period.
  double wavenumber(int i) const noexcept {
    const int m = i < n_ / 2 ? i : i - n_;
    return m * (2.0 * std::numbers::pi / length_);
  }
  /// Integer mode label of FFT slot i.
  int mode_label(int i) const noexcept { return i < n_ / 2 ? i : i - n_; }
  /// Wavenumber used by first derivatives; the unpaired Nyquist slot maps to 0
  /// so derivatives of real fields stay real.
  double derivative_wavenumber(int i) const noexcept { return i == n_ / 2 ? 0.0 : wavenumber(i); }
  int slot(int mode) const noexcept { return mode >= 0 ? mode : mode + n_; }

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.n_ == b.n_ && a.length_ == b.length_;
  }

private:
  int n_;
  double length_;
};

/// Real field sampled at grid points, treated as constant on each cell.
class ScalarField {
public:
  ScalarField(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw Error("scalar field: value count does not match grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw Error("scalar field: non-finite value rejected");
  }
  static ScalarField zeros(Grid grid) { return ScalarField(grid, std::vector<double>(grid.size(), 0.0)); }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double at(int i, int j, int k) const noexcept { return values_[grid_.index(i, j, k)]; }
  std::size_t size() const noexcept { return values_.size(); }

private:
  Grid grid_;
  std::vector<double> values_;
};

using ClosedFormVector = std::function<Vec3(const Point&)>;

/// Three scalar components on one grid. May carry the closed-form evaluator it
/// was sampled from, which lets `rescale` use non-integer factors.
class VectorField {
public:
  VectorField(ScalarField x, ScalarField y, ScalarField z, ClosedFormVector evaluator = {})
      : components_{std::move(x), std::move(y), std::move(z)}, evaluator_(std::move(evaluator)) {
    if (!(components_[0].grid() == components_[1].grid() && components_[0].grid() == components_[2].grid()))
      throw Error("vector field: components must share one grid");
  }
  static VectorField zeros(Grid grid) {
    return VectorField(ScalarField::zeros(grid), ScalarField::zeros(grid), ScalarField::zeros(grid));
  }

  const Grid& grid() const noexcept { return components_[0].grid(); }
  const ScalarField& operator[](int c) const noexcept { return components_[c]; }
  const std::array<ScalarField, 3>& components() const noexcept { return components_; }
  const ClosedFormVector& evaluator() const noexcept { return evaluator_; }
  bool has_closed_form() const noexcept { return static_cast<bool>(evaluator_); }

  Vec3 at(std::size_t idx) const noexcept {
    return {components_[0][idx], components_[1][idx], components_[2][idx]};
  }

private:
  std::array<ScalarField, 3> components_;
  ClosedFormVector evaluator_;
};

/// Fourier coefficients normalized so that f(x) = sum_k F(k) exp(i k.x).
class SpectralField {
public:
  SpectralField(Grid grid, std::vector<Complex> modes) : grid_(grid), modes_(std::move(modes)) {
    if (modes_.size() != grid_.size()) throw Error("spectral field: mode count does not match grid");
  }
  static SpectralField zeros(Grid grid) { return SpectralField(grid, std::vector<Complex>(grid.size())); }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const Complex> modes() const noexcept { return modes_; }
  std::span<Complex> mutable_modes() noexcept { return modes_; }
  Complex operator[](std::size_t i) const noexcept { return modes_[i]; }

  /// Coefficient for integer wave vector (kx, ky, kz), each in [-n/2, n/2).
  Complex mode(int kx, int ky, int kz) const noexcept {
    return modes_[grid_.index(grid_.slot(kx), grid_.slot(ky), grid_.slot(kz))];
  }

private:
  Grid grid_;
  std::vector<Complex> modes_;
};

using SpectralVectorField = std::array<SpectralField, 3>;

// ---------------------------------------------------------------------------
// sampling

template <class F>
ScalarField sample_scalar(const Grid& grid, F&& f) {
  std::vector<double> values(grid.size());
  parallel::for_each_index(grid.size(), [&](std::size_t i) { values[i] = f(grid.position(i)); });
  return ScalarField(grid, std::move(values));
}

inline VectorField sample_vector(const Grid& grid, ClosedFormVector f) {
  std::array<std::vector<double>, 3> comps;
  for (auto& c : comps) c.resize(grid.size());
  parallel::for_each_index(grid.size(), [&](std::size_t i) {
    const Vec3 v = f(grid.position(i));
    for (int c = 0; c < 3; ++c) comps[c][i] = v[c];
  });
  return VectorField(ScalarField(grid, std::move(comps[0])), ScalarField(grid, std::move(comps[1])),
                     ScalarField(grid, std::move(comps[2])), std::move(f));
}

// ---------------------------------------------------------------------------
// transforms

inline SpectralField forward_transform(const ScalarField& f) {
  const Grid& g = f.grid();
  std::vector<Complex> data(f.values().begin(), f.values().end());
  detail::fft3_inplace(data, g.n(), true);
  const double scale = 1.0 / static_cast<double>(g.size());
  for (auto& c : data) c *= scale;
  return SpectralField(g, std::move(data));
}

/// Real part of the inverse transform; the imaginary part is round-off for
/// Hermitian input.
inline ScalarField inverse_transform(const SpectralField& F) {
  const Grid& g = F.grid();
  std::vector<Complex> data(F.modes().begin(), F.modes().end());
  detail::fft3_inplace(data, g.n(), false);
  std::vector<double> values(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) values[i] = data[i].real();
  return ScalarField(g, std::move(values));
}

inline SpectralVectorField forward_transform(const VectorField& v) {
  return {forward_transform(v[0]), forward_transform(v[1]), forward_transform(v[2])};
}

inline VectorField inverse_transform(const SpectralVectorField& V) {
  return VectorField(inverse_transform(V[0]), inverse_transform(V[1]), inverse_transform(V[2]));
}

/// Largest |F(k) - conj(F(-k))| over all paired modes.
inline double hermitian_defect(const SpectralField& F) {
  const Grid& g = F.grid();
  const int n = g.n();
  double worst = 0.0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto [i, j, k] = g.unravel(idx);
    const std::size_t mirror = g.index((n - i) % n, (n - j) % n, (n - k) % n);
    worst = std::max(worst, std::abs(F[idx] - std::conj(F[mirror])));
  }
  return worst;
}

inline double mean_square(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v * v;
  return s / static_cast<double>(f.size());
}

inline double spectral_power(const SpectralField& F) {
  double s = 0.0;
  for (const Complex& c : F.modes()) s += std::norm(c);
  return s;
}

// ---------------------------------------------------------------------------
// spectral differential operators

/// Applies symbol(kx, ky, kz) mode-wise, with derivative wavenumbers.
template <class Symbol>
SpectralField apply_symbol(const SpectralField& F, Symbol&& symbol) {
  const Grid& g = F.grid();
  std::vector<Complex> out(g.size());
  parallel::for_each_index(g.size(), [&](std::size_t idx) {
    auto [i, j, k] = g.unravel(idx);
    out[idx] = symbol(g.derivative_wavenumber(i), g.derivative_wavenumber(j), g.derivative_wavenumber(k)) * F[idx];
  });
  return SpectralField(g, std::move(out));
}

inline SpectralField spectral_derivative(const SpectralField& F, int axis) {
  return apply_symbol(F, [axis](double kx, double ky, double kz) {
    const double k = axis == 0 ? kx : (axis == 1 ? ky : kz);
    return Complex(0.0, k);
  });
}

inline SpectralField spectral_laplacian(const SpectralField& F) {
  return apply_symbol(F, [](double kx, double ky, double kz) { return Complex(-(kx * kx + ky * ky + kz * kz), 0.0); });
}

inline VectorField gradient(const ScalarField& f) {
  const SpectralField F = forward_transform(f);
  return VectorField(inverse_transform(spectral_derivative(F, 0)), inverse_transform(spectral_derivative(F, 1)),
                     inverse_transform(spectral_derivative(F, 2)));
}

inline ScalarField divergence(const VectorField& v) {
  SpectralField sum = spectral_derivative(forward_transform(v[0]), 0);
  for (int c = 1; c < 3; ++c) {
    const SpectralField d = spectral_derivative(forward_transform(v[c]), c);
    auto modes = sum.mutable_modes();
    for (std::size_t i = 0; i < modes.size(); ++i) modes[i] += d[i];
  }
  return inverse_transform(sum);
}

inline ScalarField laplacian(const ScalarField& f) { return inverse_transform(spectral_laplacian(forward_transform(f))); }

/// Pointwise Euclidean magnitude |v|.
inline ScalarField magnitude(const VectorField& v) {
  std::vector<double> out(v.grid().size());
  parallel::for_each_index(out.size(), [&](std::size_t i) {
    out[i] = std::sqrt(v[0][i] * v[0][i] + v[1][i] * v[1][i] + v[2][i] * v[2][i]);
  });
  return ScalarField(v.grid(), std::move(out));
}

template <class Fn>
ScalarField map(const ScalarField& f, Fn&& fn) {
  std::vector<double> out(f.size());
  parallel::for_each_index(out.size(), [&](std::size_t i) { out[i] = fn(f[i]); });
  return ScalarField(f.grid(), std::move(out));
}

inline double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_magnitude(const VectorField& v) { return max_abs(magnitude(v)); }

// ---------------------------------------------------------------------------
// universal rescaling x -> eps * v(center + eps * x)

inline ClosedFormVector rescale(ClosedFormVector f, double eps, Point center) {
  return [f = std::move(f), eps, center](const Point& x) {
    const Vec3 v = f({center[0] + eps * x[0], center[1] + eps * x[1], center[2] + eps * x[2]});
    return Vec3{eps * v[0], eps * v[1], eps * v[2]};
  };
}

/// Spatial part of the parabolic rescaling. Raw grid data supports only integer
/// factors about a grid point; fields carrying a closed form accept any eps > 0.
inline VectorField rescale(const VectorField& v, double eps, Point center) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error("rescale: eps must be positive");
  const Grid& g = v.grid();
  if (v.has_closed_form()) return sample_vector(g, rescale(v.evaluator(), eps, center));

  const double factor = std::round(eps);
  if (std::abs(eps - factor) > 1e-12)
    throw Error("rescale: non-integer eps on raw grid data requires a closed-form field");
  std::array<int, 3> c{};
  for (int a = 0; a < 3; ++a) {
    const double ci = center[a] / g.spacing();
    if (std::abs(ci - std::round(ci)) > 1e-9) throw Error("rescale: center must be a grid point for raw grid data");
    c[a] = static_cast<int>(std::round(ci));
  }
  const int n = g.n();
  const int m = static_cast<int>(factor);
  auto wrap = [n](long v) { return static_cast<int>(((v % n) + n) % n); };
  std::array<std::vector<double>, 3> comps;
  for (auto& comp : comps) comp.resize(g.size());
  parallel::for_each_index(g.size(), [&](std::size_t idx) {
    auto [i, j, k] = g.unravel(idx);
    const std::size_t src = g.index(wrap(c[0] + static_cast<long>(m) * i), wrap(c[1] + static_cast<long>(m) * j),
                                    wrap(c[2] + static_cast<long>(m) * k));
    for (int a = 0; a < 3; ++a) comps[a][idx] = eps * v[a][src];
  });
  return VectorField(ScalarField(g, std::move(comps[0])), ScalarField(g, std::move(comps[1])),
                     ScalarField(g, std::move(comps[2])));
}

}  // namespace wlns
