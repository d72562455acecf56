#pragma once

#include "sfstab/hyperplane.hpp"

#include <variant>
#include <vector>

namespace sfstab {

// Isometry of a model chart kept as a chain of primitive maps, applied in
// order. Primitives are exact in chart coordinates and have exact inverses.
template <int N>
class ChartIsometry {
 public:
  using V = Vec<N>;
  using M = Mat<N>;

  struct Reflect {
    GeodesicHyperplane<N> plane;
  };
  struct Translate {
    V t;
  };
  struct Dilate {
    double lambda;
  };
  struct Rotate {
    M q;
  };
  using Step = std::variant<Reflect, Translate, Dilate, Rotate>;

  explicit ChartIsometry(Model model) : model_(model) {}

  Model model() const { return model_; }
  const std::vector<Step>& steps() const { return steps_; }
  bool is_identity() const { return steps_.empty(); }

  int reflection_count() const {
    int c = 0;
    for (const auto& s : steps_) c += std::holds_alternative<Reflect>(s) ? 1 : 0;
    return c;
  }

  ChartIsometry& reflect(const GeodesicHyperplane<N>& plane) {
    if (plane.model() != model_) throw std::invalid_argument("isometry: hyperplane of another model");
    steps_.push_back(Reflect{plane});
    return *this;
  }

  ChartIsometry& translate(const V& t) {
    if (model_ == Model::Spherical) throw DomainError("chart translations are not spherical isometries");
    if (model_ == Model::Hyperbolic && t[N - 1] != 0.0) {
      throw DomainError("hyperbolic chart translations must be horizontal");
    }
    steps_.push_back(Translate{t});
    return *this;
  }

  ChartIsometry& dilate(double lambda) {
    if (model_ != Model::Hyperbolic) throw DomainError("chart dilations are isometries only in the half-space");
    if (!(lambda > 0.0)) throw std::invalid_argument("dilation factor must be positive");
    steps_.push_back(Dilate{lambda});
    return *this;
  }

  ChartIsometry& rotate(const M& q) {
    if ((q.transpose() * q - M::Identity()).norm() > 1e-12) {
      throw std::invalid_argument("rotation matrix is not orthogonal");
    }
    if (model_ == Model::Hyperbolic && (q.col(N - 1) - V::Unit(N - 1)).norm() > 1e-12) {
      throw DomainError("hyperbolic chart rotations must fix the vertical axis");
    }
    steps_.push_back(Rotate{q});
    return *this;
  }

  // Chain this after `first`.
  ChartIsometry then(const ChartIsometry& next) const {
    if (next.model_ != model_) throw std::invalid_argument("isometry: composing different models");
    ChartIsometry out = *this;
    out.steps_.insert(out.steps_.end(), next.steps_.begin(), next.steps_.end());
    return out;
  }

  ChartIsometry inverse() const {
    ChartIsometry inv(model_);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
      std::visit(
          [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Reflect>) inv.steps_.push_back(s);
            if constexpr (std::is_same_v<T, Translate>) inv.steps_.push_back(Translate{-s.t});
            if constexpr (std::is_same_v<T, Dilate>) inv.steps_.push_back(Dilate{1.0 / s.lambda});
            if constexpr (std::is_same_v<T, Rotate>) inv.steps_.push_back(Rotate{s.q.transpose()});
          },
          *it);
    }
    return inv;
  }

  V apply_raw(V x) const {
    for (const auto& s : steps_) x = step_point(s, x);
    return x;
  }

  // Pushforward: returns the image point and the transformed components.
  std::pair<V, V> apply_tangent_raw(V x, V w) const {
    for (const auto& s : steps_) {
      w = step_tangent(s, x, w);
      x = step_point(s, x);
    }
    return {x, w};
  }

  ChartPoint<N> apply(const SpaceForm<N>& space, const ChartPoint<N>& p) const {
    check_model(space);
    space.require_domain(p.x, "isometry argument");
    const V y = apply_raw(p.x);
    if (!y.allFinite()) throw DegenerateError("isometry: point hit an inversion center");
    return ChartPoint<N>(y);
  }

  TangentVector<N> apply(const SpaceForm<N>& space, const TangentVector<N>& v) const {
    check_model(space);
    space.require_domain(v.base, "isometry argument");
    const auto [y, w] = apply_tangent_raw(v.base, v.v);
    if (!y.allFinite()) throw DegenerateError("isometry: point hit an inversion center");
    return TangentVector<N>(y, w);
  }

 private:
  void check_model(const SpaceForm<N>& space) const {
    if (space.kind() != model_) throw std::invalid_argument("isometry applied in another model");
  }

  static V step_point(const Step& s, const V& x) {
    return std::visit(
        [&](const auto& st) -> V {
          using T = std::decay_t<decltype(st)>;
          if constexpr (std::is_same_v<T, Reflect>) return st.plane.reflect_raw(x);
          if constexpr (std::is_same_v<T, Translate>) return x + st.t;
          if constexpr (std::is_same_v<T, Dilate>) return st.lambda * x;
          if constexpr (std::is_same_v<T, Rotate>) return st.q * x;
        },
        s);
  }

  static V step_tangent(const Step& s, const V& x, const V& w) {
    return std::visit(
        [&](const auto& st) -> V {
          using T = std::decay_t<decltype(st)>;
          if constexpr (std::is_same_v<T, Reflect>) return st.plane.reflect_tangent_raw(x, w);
          if constexpr (std::is_same_v<T, Translate>) return w;
          if constexpr (std::is_same_v<T, Dilate>) return st.lambda * w;
          if constexpr (std::is_same_v<T, Rotate>) return st.q * w;
        },
        s);
  }

  Model model_;
  std::vector<Step> steps_;
};

// Unit chart normal of the hyperplane spanned by a frame of N-1 vectors.
template <int N>
Vec<N> frame_normal(const std::vector<Vec<N>>& frame) {
  if (static_cast<int>(frame.size()) != N - 1) {
    throw DegenerateError("frame must contain n-1 vectors");
  }
  Eigen::Matrix<double, N, N - 1> F;
  for (int i = 0; i < N - 1; ++i) F.col(i) = frame[i];
  Eigen::JacobiSVD<Eigen::Matrix<double, N, N - 1>> svd(F, Eigen::ComputeFullU);
  const auto sv = svd.singularValues();
  if (!(sv[N - 2] > 1e-12 * std::max(1.0, sv[0]))) throw DegenerateError("degenerate tangent frame");
  return svd.matrixU().col(N - 1);
}

// phi_p: an orientation-preserving isometry sending p to the canonical point
// (the chart origin) and the span of `frame` (tangent at p) onto {x_n = 0}.
template <int N>
ChartIsometry<N> origin_chart(const SpaceForm<N>& space, const ChartPoint<N>& p,
                              const std::vector<Vec<N>>& frame) {
  space.require_domain(p.x, "origin_chart base point");
  frame_normal<N>(frame);
  ChartIsometry<N> phi(space.kind());
  const Vec<N> o = space.origin_coords();

  if ((p.x - o).norm() > 1e-14) phi.reflect(bisector(space, p.x, o));

  std::vector<Vec<N>> pushed;
  pushed.reserve(frame.size());
  for (const auto& f : frame) pushed.push_back(phi.apply_tangent_raw(p.x, f).second);
  const Vec<N> nu = frame_normal<N>(pushed);
  const Vec<N> en = Vec<N>::Unit(N - 1);
  if (std::min((nu - en).norm(), (nu + en).norm()) > 1e-14) {
    phi.reflect(hyperplane_through_origin(space, Vec<N>(nu - en)));
  }
  if (phi.reflection_count() % 2 == 1) phi.reflect(hyperplane_through_origin(space, Vec<N>(Vec<N>::Unit(0))));
  return phi;
}

}  // namespace sfstab
