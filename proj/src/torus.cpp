#include "hjnet/torus.hpp"

#include <cmath>
#include <sstream>

namespace hjnet {

double wrap_angle(double x) {
  double w = x - kTwoPi * std::floor(x / kTwoPi);
  // floor can land exactly on 2pi for tiny negative x
  if (w >= kTwoPi) w -= kTwoPi;
  if (w < 0.0) w = 0.0;
  return w;
}

double wrap_signed(double x) {
  return wrap_angle(x + std::numbers::pi) - std::numbers::pi;
}

TorusPoint::TorusPoint(Vec coords) : coords_(std::move(coords)) {
  for (double& c : coords_) c = wrap_angle(c);
}

TorusPoint::TorusPoint(std::initializer_list<double> coords)
    : TorusPoint(Vec(coords)) {}

Vec periodic_displacement(std::span<const double> a, std::span<const double> b) {
  require_dim(b.size(), a.size(), "periodic_displacement");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = wrap_signed(b[i] - a[i]);
  return out;
}

double periodic_distance(std::span<const double> a, std::span<const double> b) {
  require_dim(b.size(), a.size(), "periodic_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dx = wrap_signed(b[i] - a[i]);
    s += dx * dx;
  }
  return std::sqrt(s);
}

double periodic_distance(const TorusPoint& a, const TorusPoint& b) {
  return periodic_distance(a.span(), b.span());
}

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": dimension " + std::to_string(got) +
                         " does not match expected " + std::to_string(want));
  }
}

std::string to_string(const TorusPoint& q) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < q.dim(); ++i) os << (i ? ", " : "") << q[i];
  os << ')';
  return os.str();
}

}  // namespace hjnet
