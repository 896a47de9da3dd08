#pragma once

#include <cmath>
#include <numbers>

namespace osc2cr {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }

  bool operator==(const Vec2&) const = default;
};

inline Vec2 unit(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Left-hand normal of a heading (rotated +90 degrees).
inline Vec2 left_normal(double heading) { return {-std::sin(heading), std::cos(heading)}; }

struct Pose {
  Vec2 position;
  double heading = 0.0;

  bool operator==(const Pose&) const = default;
};

/// Maps an angle into (-pi, pi]. pi itself is kept.
inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (a > -std::numbers::pi && a <= std::numbers::pi) return a;
  double r = std::fmod(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  if (r > std::numbers::pi) r -= two_pi;
  return r;
}

/// Signed shortest rotation from `from` to `to`.
inline double angle_diff(double to, double from) { return normalize_angle(to - from); }

inline double lerp(double a, double b, double w) { return a + (b - a) * w; }

/// Interpolates along the shortest arc between two headings.
inline double lerp_angle(double a, double b, double w) { return normalize_angle(a + angle_diff(b, a) * w); }

}  // namespace osc2cr
