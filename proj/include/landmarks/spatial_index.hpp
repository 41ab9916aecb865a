#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "landmarks/error.hpp"
#include "landmarks/geometry.hpp"

namespace landmarks {

/// Deterministic random source. Only the raw 64-bit engine output is used
/// (std::mt19937_64 is fully specified by the standard); every derived draw
/// is computed here so sequences are identical on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t uniform_index(std::uint64_t bound) {
    if (bound == 0) throw Error("uniform_index bound must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % bound;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is discarded to keep state simple.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Child generator for the n-th independent consumer of this seed.
  SeededRng derive(std::uint64_t ordinal) const { return SeededRng(splitmix(seed_ + ordinal)); }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

struct Neighbor {
  Point3 point;
  std::size_t id = 0;
  double distance = 0.0;
};

/// Static k-d tree over a cloud snapshot. Point ids are storage positions in
/// the indexed cloud; nearest() is exact and breaks distance ties toward the
/// lowest id, so results match a linear scan exactly.
class SpatialIndex {
 public:
  SpatialIndex() = default;

  explicit SpatialIndex(PointCloud cloud) : cloud_(std::move(cloud)) {
    if (cloud_.empty()) return;
    ids_.resize(cloud_.size());
    std::iota(ids_.begin(), ids_.end(), std::size_t{0});
    nodes_.reserve(2 * cloud_.size() / kLeafSize + 2);
    lo_ = hi_ = cloud_[0];
    for (const auto& p : cloud_) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    build(0, ids_.size(), lo_, hi_);
    packed_.reserve(ids_.size());
    for (const std::size_t id : ids_) packed_.push_back({cloud_[id].x(), cloud_[id].y(), cloud_[id].z()});
  }

  std::size_t size() const noexcept { return cloud_.size(); }
  bool empty() const noexcept { return cloud_.empty(); }
  const PointCloud& cloud() const noexcept { return cloud_; }

  Neighbor nearest(const Point3& q) const {
    if (cloud_.empty()) throw Error("nearest-neighbor query on empty index");
    Best best;
    const std::array<double, 3> query{q.x(), q.y(), q.z()};
    std::array<double, 3> offsets{0.0, 0.0, 0.0};
    double bound = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = query[a] < lo_[a] ? lo_[a] - query[a] : (query[a] > hi_[a] ? query[a] - hi_[a] : 0.0);
      offsets[a] = d;
      bound += d * d;
    }
    search(0, query, bound, offsets, best);
    return {cloud_[best.id], best.id, std::sqrt(best.d2)};
  }

  /// Same answer as nearest() when that neighbor lies within `max_distance`
  /// (closed), otherwise nullopt. `hint` may name any point expected to be
  /// close, e.g. the previous answer for a slowly moving query.
  std::optional<Neighbor> nearest_within(const Point3& q, double max_distance,
                                         std::size_t hint = std::numeric_limits<std::size_t>::max()) const {
    if (cloud_.empty() || !(max_distance >= 0.0)) return std::nullopt;
    const std::array<double, 3> query{q.x(), q.y(), q.z()};
    Best best;
    best.d2 = max_distance * max_distance;
    // Admit every point whose reported distance is within range.
    constexpr double inf = std::numeric_limits<double>::infinity();
    while (best.d2 < inf && std::sqrt(std::nextafter(best.d2, inf)) <= max_distance) best.d2 = std::nextafter(best.d2, inf);
    if (hint < cloud_.size()) {
      const double d2 = (cloud_[hint] - q).squaredNorm();
      if (d2 <= best.d2) {
        best.d2 = d2;
        best.id = hint;
      }
    }
    std::array<double, 3> offsets{0.0, 0.0, 0.0};
    double bound = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = query[a] < lo_[a] ? lo_[a] - query[a] : (query[a] > hi_[a] ? query[a] - hi_[a] : 0.0);
      offsets[a] = d;
      bound += d * d;
    }
    if (bound <= best.d2 * kSlack) search(0, query, bound, offsets, best);
    if (best.id >= cloud_.size()) return std::nullopt;
    return Neighbor{cloud_[best.id], best.id, std::sqrt(best.d2)};
  }

  /// Ids of all points within `radius` (closed), ascending.
  std::vector<std::size_t> radius_search(const Point3& q, double radius) const {
    std::vector<std::size_t> out;
    if (cloud_.empty() || radius < 0.0) return out;
    const std::array<double, 3> query{q.x(), q.y(), q.z()};
    collect(0, query, radius * radius, out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static constexpr std::size_t kLeafSize = 10;
  // Pruning uses a lower bound assembled from per-axis offsets; the slack keeps
  // rounding in that bound from ever skipping an exact tie.
  static constexpr double kSlack = 1.0 + 1e-12;

  struct Node {
    std::uint32_t begin = 0, end = 0;  // range in ids_/packed_ for leaves
    std::uint32_t left = 0, right = 0;
    int axis = -1;                     // -1 for leaves
    double split_low = 0.0;            // max coordinate of the left child on `axis`
    double split_high = 0.0;           // min coordinate of the right child on `axis`
  };

  struct Best {
    double d2 = std::numeric_limits<double>::infinity();
    std::size_t id = std::numeric_limits<std::size_t>::max();
  };

  std::uint32_t build(std::size_t begin, std::size_t end, const Point3& lo, const Point3& hi) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_[index].begin = static_cast<std::uint32_t>(begin);
    nodes_[index].end = static_cast<std::uint32_t>(end);
    int axis;
    (hi - lo).maxCoeff(&axis);
    if (end - begin <= kLeafSize || hi[axis] <= lo[axis]) return index;

    const std::size_t mid = begin + (end - begin) / 2;
    const auto first = ids_.begin();
    std::nth_element(first + static_cast<std::ptrdiff_t>(begin), first + static_cast<std::ptrdiff_t>(mid),
                     first + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return cloud_[a][axis] < cloud_[b][axis]; });
    double left_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = begin; i < mid; ++i) left_max = std::max(left_max, cloud_[ids_[i]][axis]);
    const double right_min = cloud_[ids_[mid]][axis];

    Point3 left_hi = hi, right_lo = lo;
    left_hi[axis] = left_max;
    right_lo[axis] = right_min;
    const std::uint32_t left = build(begin, mid, lo, left_hi);
    const std::uint32_t right = build(mid, end, right_lo, hi);
    Node& node = nodes_[index];
    node.axis = axis;
    node.split_low = left_max;
    node.split_high = right_min;
    node.left = left;
    node.right = right;
    return index;
  }

  void search(std::uint32_t index, const std::array<double, 3>& q, double bound, std::array<double, 3>& offsets,
              Best& best) const {
    const Node& node = nodes_[index];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const auto& p = packed_[i];
        const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (d2 < best.d2 || (d2 == best.d2 && ids_[i] < best.id)) {
          best.d2 = d2;
          best.id = ids_[i];
        }
      }
      return;
    }
    const int a = node.axis;
    const double to_left = q[a] - node.split_low;    // > 0: query right of the left child
    const double to_right = node.split_high - q[a];  // > 0: query left of the right child
    const bool go_left_first = to_left + to_right > 0.0 ? to_left < to_right : true;
    const std::uint32_t near = go_left_first ? node.left : node.right;
    const std::uint32_t far = go_left_first ? node.right : node.left;
    const double near_gap = std::max(0.0, go_left_first ? to_left : to_right);
    const double far_gap = std::max(0.0, go_left_first ? to_right : to_left);

    const double saved = offsets[a];
    {
      const double gap = std::max(near_gap, saved);
      const double b = bound - saved * saved + gap * gap;
      offsets[a] = gap;
      if (b <= best.d2 * kSlack) search(near, q, b, offsets, best);
    }
    {
      const double gap = std::max(far_gap, saved);
      const double b = bound - saved * saved + gap * gap;
      offsets[a] = gap;
      if (b <= best.d2 * kSlack) search(far, q, b, offsets, best);
    }
    offsets[a] = saved;
  }

  void collect(std::uint32_t index, const std::array<double, 3>& q, double r2, std::vector<std::size_t>& out) const {
    const Node& node = nodes_[index];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const auto& p = packed_[i];
        const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
        if (dx * dx + dy * dy + dz * dz <= r2) out.push_back(ids_[i]);
      }
      return;
    }
    const int a = node.axis;
    const double left_gap = q[a] - node.split_low;
    const double right_gap = node.split_high - q[a];
    if (left_gap <= 0.0 || left_gap * left_gap <= r2 * kSlack) collect(node.left, q, r2, out);
    if (right_gap <= 0.0 || right_gap * right_gap <= r2 * kSlack) collect(node.right, q, r2, out);
  }

  PointCloud cloud_;
  std::vector<std::size_t> ids_;                  // tree order -> cloud id
  std::vector<std::array<double, 3>> packed_;     // coordinates in tree order
  std::vector<Node> nodes_;
  Point3 lo_ = Point3::Zero(), hi_ = Point3::Zero();
};

inline SpatialIndex build_index(PointCloud cloud) { return SpatialIndex(std::move(cloud)); }

inline Neighbor nearest(const SpatialIndex& index, const Point3& q) { return index.nearest(q); }

/// One point per occupied voxel (the centroid of its members). Voxels are
/// cubes of edge `leaf` anchored at the world origin; output is ordered by
/// ascending (ix, iy, iz).
inline PointCloud voxel_downsample(const PointCloud& cloud, double leaf) {
  if (!(leaf > 0.0) || !std::isfinite(leaf)) throw ValidationError("voxel_leaf", "non-positive leaf size");
  using Key = std::array<std::int64_t, 3>;
  std::vector<std::pair<Key, std::size_t>> keyed;
  keyed.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud[i];
    keyed.push_back({Key{static_cast<std::int64_t>(std::floor(p.x() / leaf)),
                         static_cast<std::int64_t>(std::floor(p.y() / leaf)),
                         static_cast<std::int64_t>(std::floor(p.z() / leaf))},
                     i});
  }
  std::sort(keyed.begin(), keyed.end());

  PointCloud out;
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    Point3 sum = Point3::Zero();
    while (j < keyed.size() && keyed[j].first == keyed[i].first) sum += cloud[keyed[j++].second];
    out.points.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  return out;
}

/// Draws min(ceil(fraction * n), max_count, n) distinct points, uniformly
/// without replacement, in draw order.
inline std::vector<Point3> sample_points(const PointCloud& cloud, double fraction, std::size_t max_count,
                                         SeededRng& rng) {
  if (cloud.empty()) throw Error("cannot sample from empty scene");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ValidationError("sample_fraction", "must lie in (0, 1]");
  if (max_count == 0) throw ValidationError("sample_max", "must be positive");

  const double wanted = std::ceil(fraction * static_cast<double>(cloud.size()) - 1e-9);
  const std::size_t k = std::min({static_cast<std::size_t>(std::max(wanted, 1.0)), max_count, cloud.size()});

  std::vector<std::size_t> ids(cloud.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::vector<Point3> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(ids.size() - i));
    std::swap(ids[i], ids[j]);
    out.push_back(cloud[ids[i]]);
  }
  return out;
}

/// Reach-of-the-arms volume in front of the robot.
inline AxisAlignedRegion default_workspace() {
  return {Point3(0.2, -0.8, 0.0), Point3(1.2, 0.8, 1.6)};
}

inline PointCloud crop_to_workspace(const PointCloud& cloud, const AxisAlignedRegion& region) {
  if ((region.min.array() > region.max.array()).any())
    throw ValidationError("workspace", "region min must not exceed max on any axis");
  PointCloud out;
  for (const auto& p : cloud)
    if (region.contains(p)) out.points.push_back(p);
  return out;
}

}  // namespace landmarks
