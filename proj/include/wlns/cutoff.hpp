#pragma once

// Smooth space-time test functions phi(t, x) given in closed form, with the
// derivatives the local energy balance needs.

#include <cmath>
#include <concepts>
#include <limits>

#include "wlns/field.hpp"

namespace wlns {

template <class C>
concept SpaceTimeCutoff = requires(const C& c, double t, const Point& x) {
  { c.value(t, x) } -> std::convertible_to<double>;
  { c.time_derivative(t, x) } -> std::convertible_to<double>;
  { c.gradient(t, x) } -> std::convertible_to<Vec3>;
  { c.laplacian(t, x) } -> std::convertible_to<double>;
};

/// phi == 1.
struct UnitCutoff {
  double value(double, const Point&) const { return 1.0; }
  double time_derivative(double, const Point&) const { return 0.0; }
  Vec3 gradient(double, const Point&) const { return {0.0, 0.0, 0.0}; }
  double laplacian(double, const Point&) const { return 0.0; }
};

/// exp(-|x - c|^2 / (2 w^2)) * exp(-(t - tc)^2 / (2 s^2)). Not periodic; keep
/// the width well inside the box so the wrap-around jump is below round-off.
struct GaussianBump {
  Point center{};
  double width = 1.0;
  double time_center = 0.0;
  double time_width = std::numeric_limits<double>::infinity();

  double time_factor(double t) const {
    if (std::isinf(time_width)) return 1.0;
    const double z = (t - time_center) / time_width;
    return std::exp(-0.5 * z * z);
  }
  double time_factor_derivative(double t) const {
    if (std::isinf(time_width)) return 0.0;
    return -(t - time_center) / (time_width * time_width) * time_factor(t);
  }
  double space_factor(const Point& x) const { return std::exp(-0.5 * radius2(x) / (width * width)); }
  double radius2(const Point& x) const {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += (x[c] - center[c]) * (x[c] - center[c]);
    return s;
  }

  double value(double t, const Point& x) const { return space_factor(x) * time_factor(t); }
  double time_derivative(double t, const Point& x) const { return space_factor(x) * time_factor_derivative(t); }
  Vec3 gradient(double t, const Point& x) const {
    const double g = value(t, x) / (width * width);
    return {-(x[0] - center[0]) * g, -(x[1] - center[1]) * g, -(x[2] - center[2]) * g};
  }
  double laplacian(double t, const Point& x) const {
    const double w2 = width * width;
    return value(t, x) * (radius2(x) / (w2 * w2) - 3.0 / w2);
  }
};

/// C^4 transition: 0 for z <= 0, 1 for z >= 1, with derivatives up to order 4
/// vanishing at both ends.
struct SmoothStep {
  static double value(double z) {
    if (z <= 0.0) return 0.0;
    if (z >= 1.0) return 1.0;
    return z * z * z * z * z * (126.0 + z * (-420.0 + z * (540.0 + z * (-315.0 + z * 70.0))));
  }
  static double first(double z) {
    if (z <= 0.0 || z >= 1.0) return 0.0;
    const double w = z * (1.0 - z);
    return 630.0 * w * w * w * w;
  }
  static double second(double z) {
    if (z <= 0.0 || z >= 1.0) return 0.0;
    const double w = z * (1.0 - z);
    return 2520.0 * w * w * w * (1.0 - 2.0 * z);
  }
};

/// Polynomial bump equal to 1 on the parabolic cylinder [t_full, inf) x B(c, r_full)
/// and 0 outside [t_zero, inf) x B(c, r_zero), built from C^4 smooth steps in
/// time and radius.
struct PolynomialBump {
  Point center{};
  double r_full = 1.0;
  double r_zero = 2.0;
  double t_zero = -1.0;
  double t_full = 0.0;

  double radius(const Point& x) const {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += (x[c] - center[c]) * (x[c] - center[c]);
    return std::sqrt(s);
  }
  double radial_z(double r) const { return (r_zero - r) / (r_zero - r_full); }
  double space_factor(double r) const { return SmoothStep::value(radial_z(r)); }
  double time_factor(double t) const { return SmoothStep::value((t - t_zero) / (t_full - t_zero)); }

  double value(double t, const Point& x) const { return space_factor(radius(x)) * time_factor(t); }
  double time_derivative(double t, const Point& x) const {
    return space_factor(radius(x)) * SmoothStep::first((t - t_zero) / (t_full - t_zero)) / (t_full - t_zero);
  }
  Vec3 gradient(double t, const Point& x) const {
    const double r = radius(x);
    if (r == 0.0) return {0.0, 0.0, 0.0};
    const double dr = -SmoothStep::first(radial_z(r)) / (r_zero - r_full);
    const double g = time_factor(t) * dr / r;
    return {(x[0] - center[0]) * g, (x[1] - center[1]) * g, (x[2] - center[2]) * g};
  }
  double laplacian(double t, const Point& x) const {
    const double r = radius(x);
    if (r <= r_full) return 0.0;
    const double w = r_zero - r_full;
    const double d1 = -SmoothStep::first(radial_z(r)) / w;
    const double d2 = SmoothStep::second(radial_z(r)) / (w * w);
    return time_factor(t) * (d2 + 2.0 * d1 / r);
  }
};

}  // namespace wlns
