#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sfstab {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;

template <int N>
using Mat = Eigen::Matrix<double, N, N>;

enum class Model { Euclidean, Hyperbolic, Spherical };

inline std::string_view model_name(Model m) {
  switch (m) {
    case Model::Euclidean: return "euclidean";
    case Model::Hyperbolic: return "hyperbolic";
    case Model::Spherical: return "spherical";
  }
  return "unknown";
}

inline Model parse_model(std::string_view s) {
  if (s == "euclidean" || s == "E" || s == "R") return Model::Euclidean;
  if (s == "hyperbolic" || s == "H") return Model::Hyperbolic;
  if (s == "spherical" || s == "S") return Model::Spherical;
  throw std::invalid_argument("unknown model '" + std::string(s) + "'");
}

// Numerical tolerances shared by every module. Relative entries are multiplied by
// the geometric scale of the object they are applied to.
struct Tolerances {
  double algebraic = 1e-10;
  double ode = 1e-6;
  double hemisphere_margin = 1e-9;
  double cut_locus = 1e-9;
  double unit_vector = 1e-6;
  double containment_rel = 1e-8;
  double bisection_rel = 1e-9;

  Tolerances scaled(double factor) const {
    Tolerances t = *this;
    t.algebraic *= factor;
    t.ode *= factor;
    t.containment_rel *= factor;
    t.bisection_rel *= factor;
    return t;
  }
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Point or vector outside the chart domain of the model.
class DomainError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

// Operation needs a unique minimizing geodesic that does not exist.
class CutLocusError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class DegenerateError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class ConvergenceError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

template <int N>
struct ChartPoint {
  Vec<N> x = Vec<N>::Zero();

  ChartPoint() = default;
  explicit ChartPoint(const Vec<N>& coords) : x(coords) {}
  double operator[](int i) const { return x[i]; }
};

// Tangent vector in chart components, carrying its base point.
template <int N>
struct TangentVector {
  Vec<N> base = Vec<N>::Zero();
  Vec<N> v = Vec<N>::Zero();

  TangentVector() = default;
  TangentVector(const Vec<N>& b, const Vec<N>& comps) : base(b), v(comps) {}
  TangentVector(const ChartPoint<N>& b, const Vec<N>& comps) : base(b.x), v(comps) {}
};

template <int N>
inline Vec<N> unit(int i) {
  return Vec<N>::Unit(i);
}

}  // namespace sfstab
