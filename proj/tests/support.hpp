#pragma once

// Independent reference implementations used as oracles by the tests. They
// share no code with the library beyond the value types and box_contains.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "landmarks/geometry.hpp"

namespace oracle {

using landmarks::OrientedBox;
using landmarks::Point3;
using landmarks::PointCloud;

struct Hit {
  std::size_t id = 0;
  double distance = 0.0;
};

/// Linear scan; the first point at the minimum distance wins.
inline Hit nearest(const PointCloud& cloud, const Point3& q) {
  Hit best{0, std::numeric_limits<double>::infinity()};
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double dx = cloud[i].x() - q.x(), dy = cloud[i].y() - q.y(), dz = cloud[i].z() - q.z();
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best_d2) {
      best_d2 = d2;
      best.id = i;
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

/// Mean-distance score written as two plain loops over the raw clouds.
inline double candidate_error(const PointCloud& candidate, const OrientedBox& box, const PointCloud& scene) {
  std::vector<bool> visited(candidate.size(), false);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < scene.size(); ++s) {
    if (!landmarks::box_contains(box, scene[s])) continue;
    const Hit h = nearest(candidate, scene[s]);
    sum += h.distance;
    ++count;
    visited[h.id] = true;
  }
  for (std::size_t c = 0; c < candidate.size(); ++c) {
    if (visited[c]) continue;
    sum += nearest(scene, candidate[c]).distance;
    ++count;
  }
  return sum / static_cast<double>(count);
}

/// Exact centroid of each occupied origin-anchored voxel, keyed by voxel.
inline std::vector<std::pair<std::array<long long, 3>, Point3>> voxel_centroids(const PointCloud& cloud, double leaf) {
  std::vector<std::pair<std::array<long long, 3>, std::pair<Point3, int>>> acc;
  for (const auto& p : cloud) {
    const std::array<long long, 3> key{static_cast<long long>(std::floor(p.x() / leaf)),
                                       static_cast<long long>(std::floor(p.y() / leaf)),
                                       static_cast<long long>(std::floor(p.z() / leaf))};
    bool found = false;
    for (auto& [k, v] : acc)
      if (k == key) {
        v.first += p;
        ++v.second;
        found = true;
        break;
      }
    if (!found) acc.push_back({key, {p, 1}});
  }
  std::vector<std::pair<std::array<long long, 3>, Point3>> out;
  for (const auto& [k, v] : acc) out.push_back({k, v.first / v.second});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

inline PointCloud random_cloud(std::mt19937_64& gen, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.push_back({u(gen), u(gen), u(gen)});
  return c;
}

/// Integer lattice points, so many queries land on exact distance ties.
inline PointCloud lattice_cloud(std::mt19937_64& gen, std::size_t n, int extent) {
  std::uniform_int_distribution<int> u(-extent, extent);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.push_back({double(u(gen)), double(u(gen)), double(u(gen))});
  return c;
}

inline landmarks::RigidTransform random_transform(std::mt19937_64& gen, double max_translation, double max_angle) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Point3 axis(u(gen), u(gen), u(gen));
  while (axis.norm() < 1e-3) axis = Point3(u(gen), u(gen), u(gen));
  const Point3 t(u(gen) * max_translation, u(gen) * max_translation, u(gen) * max_translation);
  return landmarks::RigidTransform::from_axis_angle(axis.normalized(), u(gen) * max_angle, t / std::sqrt(3.0));
}

}  // namespace oracle
