#pragma once

#include "sfstab/core.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <vector>

namespace sfstab {

// Deterministic grid on the unit direction sphere S^{N-1} with quadrature
// weights (summing to the sphere's area) and a neighbor graph.
//   N = 2: uniform angles 2 pi k / M (contains the coordinate axes when 4 | M).
//   N = 3: icosahedral refinement; weights are a third of the exact spherical
//          areas of the incident triangles.
template <int N>
class DirectionGrid {
 public:
  static_assert(N == 2 || N == 3, "direction grids are implemented for n = 2, 3");
  using V = Vec<N>;

  // `resolution` is the angle count for N = 2 and the refinement level for N = 3.
  explicit DirectionGrid(int resolution) : resolution_(resolution) {
    if constexpr (N == 2) {
      build_circle(resolution);
    } else {
      build_icosphere(resolution);
    }
  }

  static DirectionGrid with_default_resolution() { return DirectionGrid(N == 2 ? 2000 : 5); }

  // The next finer grid (roughly twice the samples per unit length).
  DirectionGrid refined() const { return DirectionGrid(N == 2 ? 2 * resolution_ : resolution_ + 1); }

  int resolution() const { return resolution_; }
  std::size_t size() const { return dirs_.size(); }
  const V& dir(std::size_t i) const { return dirs_[i]; }
  const std::vector<V>& dirs() const { return dirs_; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<int>& neighbors(std::size_t i) const { return nbrs_[i]; }
  const std::vector<std::array<int, 3>>& triangles() const { return tris_; }
  // Largest angle between neighbors.
  double spacing() const { return spacing_; }

  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> e;
    for (std::size_t i = 0; i < nbrs_.size(); ++i) {
      for (int j : nbrs_[i]) {
        if (static_cast<int>(i) < j) e.emplace_back(static_cast<int>(i), j);
      }
    }
    return e;
  }

  // Index of the grid direction closest to u (u need not be normalized).
  int nearest(const V& u_in) const {
    const V u = u_in.normalized();
    if constexpr (N == 2) {
      double a = std::atan2(u[1], u[0]);
      if (a < 0) a += 2 * std::numbers::pi;
      const int m = static_cast<int>(dirs_.size());
      return static_cast<int>(std::lround(a / (2 * std::numbers::pi) * m)) % m;
    } else {
      int cur = bucket_[bucket_index(u)];
      double best = dirs_[cur].dot(u);
      for (bool moved = true; moved;) {
        moved = false;
        for (int j : nbrs_[cur]) {
          const double d = dirs_[j].dot(u);
          if (d > best) {
            best = d;
            cur = j;
            moved = true;
          }
        }
      }
      return cur;
    }
  }

 private:
  void build_circle(int m) {
    if (m < 8) throw std::invalid_argument("direction grid needs at least 8 angles");
    dirs_.resize(m);
    weights_.assign(m, 2 * std::numbers::pi / m);
    nbrs_.resize(m);
    for (int k = 0; k < m; ++k) {
      const double a = 2 * std::numbers::pi * k / m;
      dirs_[k] = V(std::cos(a), std::sin(a));
      if ((4 * k) % m == 0) {
        const int q = 4 * k / m;
        dirs_[k] = q == 0 ? V(1, 0) : q == 1 ? V(0, 1) : q == 2 ? V(-1, 0) : V(0, -1);
      }
      nbrs_[k] = {(k + m - 1) % m, (k + 1) % m};
    }
    spacing_ = 2 * std::numbers::pi / m;
  }

  void build_icosphere(int level) {
    if (level < 0 || level > 8) throw std::invalid_argument("icosphere level must be in [0, 8]");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<V> v = {V(-1, t, 0), V(1, t, 0),  V(-1, -t, 0), V(1, -t, 0),
                        V(0, -1, t), V(0, 1, t),  V(0, -1, -t), V(0, 1, -t),
                        V(t, 0, -1), V(t, 0, 1),  V(-t, 0, -1), V(-t, 0, 1)};
    for (auto& p : v) p.normalize();
    std::vector<std::array<int, 3>> f = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
      std::map<std::pair<int, int>, int> mid;
      auto midpoint = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        const auto it = mid.find(key);
        if (it != mid.end()) return it->second;
        v.push_back((v[a] + v[b]).normalized());
        const int id = static_cast<int>(v.size()) - 1;
        mid.emplace(key, id);
        return id;
      };
      std::vector<std::array<int, 3>> nf;
      nf.reserve(4 * f.size());
      for (const auto& tri : f) {
        const int a = midpoint(tri[0], tri[1]);
        const int b = midpoint(tri[1], tri[2]);
        const int c = midpoint(tri[2], tri[0]);
        nf.push_back({tri[0], a, c});
        nf.push_back({tri[1], b, a});
        nf.push_back({tri[2], c, b});
        nf.push_back({a, b, c});
      }
      f = std::move(nf);
    }
    // From level 1 on the axes +-e_i are edge midpoints of the base solid. The
    // grid is symmetric under every coordinate reflection.
    dirs_ = std::move(v);
    tris_ = std::move(f);
    weights_.assign(dirs_.size(), 0.0);
    nbrs_.assign(dirs_.size(), {});
    for (const auto& tri : tris_) {
      const V& a = dirs_[tri[0]];
      const V& b = dirs_[tri[1]];
      const V& c = dirs_[tri[2]];
      const double num = std::abs(a.dot(b.cross(c)));
      const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
      const double area = 2.0 * std::atan2(num, den);
      for (int k = 0; k < 3; ++k) {
        weights_[tri[k]] += area / 3.0;
        for (int j = 0; j < 3; ++j) {
          if (j != k) nbrs_[tri[k]].push_back(tri[j]);
        }
      }
    }
    spacing_ = 0.0;
    for (auto& n : nbrs_) {
      std::sort(n.begin(), n.end());
      n.erase(std::unique(n.begin(), n.end()), n.end());
    }
    for (std::size_t i = 0; i < nbrs_.size(); ++i) {
      for (int j : nbrs_[i]) {
        spacing_ = std::max(spacing_, std::acos(std::clamp(dirs_[i].dot(dirs_[j]), -1.0, 1.0)));
      }
    }
    build_buckets();
  }

  static constexpr int kLat = 32;
  static constexpr int kLon = 64;

  static int bucket_index(const V& u) {
    const double th = std::acos(std::clamp(u[2], -1.0, 1.0));
    double ph = std::atan2(u[1], u[0]);
    if (ph < 0) ph += 2 * std::numbers::pi;
    const int i = std::min(kLat - 1, static_cast<int>(th / std::numbers::pi * kLat));
    const int j = std::min(kLon - 1, static_cast<int>(ph / (2 * std::numbers::pi) * kLon));
    return i * kLon + j;
  }

  void build_buckets() {
    bucket_.assign(kLat * kLon, 0);
    std::vector<double> best(kLat * kLon, -2.0);
    for (int i = 0; i < kLat; ++i) {
      for (int j = 0; j < kLon; ++j) {
        const double th = (i + 0.5) * std::numbers::pi / kLat;
        const double ph = (j + 0.5) * 2 * std::numbers::pi / kLon;
        const V c(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        for (std::size_t k = 0; k < dirs_.size(); ++k) {
          const double d = dirs_[k].dot(c);
          if (d > best[i * kLon + j]) {
            best[i * kLon + j] = d;
            bucket_[i * kLon + j] = static_cast<int>(k);
          }
        }
      }
    }
  }

  int resolution_;
  std::vector<V> dirs_;
  std::vector<double> weights_;
  std::vector<std::vector<int>> nbrs_;
  std::vector<std::array<int, 3>> tris_;
  std::vector<int> bucket_;
  double spacing_ = 0.0;
};

// Deterministic low-discrepancy directions on S^{N-1}.
template <int N>
std::vector<Vec<N>> fibonacci_directions(int count) {
  static_assert(N == 2 || N == 3, "fibonacci directions are implemented for n = 2, 3");
  if (count < 1) throw std::invalid_argument("direction count must be positive");
  std::vector<Vec<N>> out;
  out.reserve(count);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    if constexpr (N == 2) {
      const double a = std::numbers::pi * (k + 0.5) / count;
      out.push_back(Vec<N>(std::cos(a), std::sin(a)));
    } else {
      const double z = 1.0 - 2.0 * (k + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      out.push_back(Vec<N>(r * std::cos(golden * k), r * std::sin(golden * k), z));
    }
  }
  return out;
}

}  // namespace sfstab
