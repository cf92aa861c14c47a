#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjnet {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Vec = std::vector<double>;

/// Thrown when the dimensions of two inputs disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Wraps x into [0, 2pi). The result is never equal to 2pi.
double wrap_angle(double x);

/// Wraps x into [-pi, pi), the minimal periodic representative of a displacement.
double wrap_signed(double x);

/// A point of the torus [0, 2pi)^d. Coordinates are wrapped on construction.
class TorusPoint {
 public:
  TorusPoint() = default;
  explicit TorusPoint(Vec coords);
  TorusPoint(std::initializer_list<double> coords);

  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  const Vec& coords() const { return coords_; }
  std::span<const double> span() const { return coords_; }

  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
  friend auto operator<=>(const TorusPoint&, const TorusPoint&) = default;

 private:
  Vec coords_;
};

/// Minimal periodic displacement b - a, each component in [-pi, pi).
Vec periodic_displacement(std::span<const double> a, std::span<const double> b);

/// Euclidean length of the minimal periodic displacement; at most pi*sqrt(d).
double periodic_distance(std::span<const double> a, std::span<const double> b);
double periodic_distance(const TorusPoint& a, const TorusPoint& b);

void require_dim(std::size_t got, std::size_t want, const char* what);

std::string to_string(const TorusPoint& q);

}  // namespace hjnet
