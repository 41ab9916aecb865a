#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "landmarks/error.hpp"
#include "landmarks/geometry.hpp"
#include "landmarks/registration.hpp"
#include "landmarks/spatial_index.hpp"

namespace landmarks {

struct CaptureMetadata {
  std::string scene_id;
  std::string created_at;  // ISO-8601

  friend bool operator==(const CaptureMetadata&, const CaptureMetadata&) = default;
};

/// A captured patch of scene points plus the box drawn around it. Box space
/// not covered by the patch is expected to be empty wherever the landmark is
/// found. Points stay in the capture scene's world frame.
struct Landmark {
  std::string name;
  PointCloud cloud;
  OrientedBox box;
  CaptureMetadata metadata;

  void validate() const {
    if (cloud.empty()) throw ValidationError("points", "landmark cloud must not be empty");
    if (box.size.minCoeff() <= 0.0) throw ValidationError("box.size", "box extent must be positive");
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (!is_finite(cloud[i])) throw ValidationError("points", "point " + std::to_string(i) + " is not finite");
      if (!box_contains(box, cloud[i]))
        throw ValidationError("points", "point " + std::to_string(i) + " lies outside the box");
    }
  }
};

struct SearchParams {
  AxisAlignedRegion workspace = default_workspace();
  double voxel_leaf = 0.005;
  double sample_fraction = 0.05;
  std::size_t sample_max = 1000;
  double nms_radius = 0.03;
  double error_threshold = 0.0055;
  IcpParams icp;
  std::uint64_t seed = 0;

  void validate() const {
    if ((workspace.min.array() > workspace.max.array()).any())
      throw ValidationError("workspace", "region min must not exceed max on any axis");
    if (!(voxel_leaf > 0.0)) throw ValidationError("voxel_leaf", "must be positive");
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
      throw ValidationError("sample_fraction", "must lie in (0, 1]");
    if (sample_max == 0) throw ValidationError("sample_max", "must be positive");
    if (!(nms_radius > 0.0)) throw ValidationError("nms_radius", "must be positive");
    if (!(error_threshold > 0.0)) throw ValidationError("error_threshold", "must be positive");
    icp.validate();
  }
};

/// A landmark copy moved into the scene. `transform` maps the capture frame
/// to the scene frame and applies to both cloud and box.
struct Candidate {
  std::string landmark_name;
  RigidTransform transform;
  double error = 0.0;
  Point3 seed_point = Point3::Zero();
  Point3 centroid = Point3::Zero();  // of the transformed cloud
  bool icp_converged = false;
  std::size_t ordinal = 0;  // seed draw order
};

struct Match : Candidate {
  std::size_t rank = 0;  // 0 = lowest error
};

/// Mean distance between the scene inside the candidate box and the
/// candidate cloud, plus every candidate point no scene point claimed.
///
/// `scene` indexes the (cropped, downsampled) scene; `candidate_index`
/// indexes the candidate cloud already moved into the scene frame.
inline double candidate_error(const OrientedBox& candidate_box, const SpatialIndex& scene,
                              const SpatialIndex& candidate_index) {
  if (candidate_index.empty()) throw Error("candidate cloud is empty");
  if (scene.empty()) throw Error("scene is empty");

  // Slightly padded so rounding never drops a point sitting on a box corner.
  const double reach = 0.5 * candidate_box.size.norm() * (1.0 + 1e-9) + 1e-12;
  const auto near_box = scene.radius_search(candidate_box.center(), reach);

  std::vector<char> visited(candidate_index.size(), 0);
  double error = 0.0;
  std::size_t denominator = 0;
  for (const std::size_t id : near_box) {
    const Point3& scene_pt = scene.cloud()[id];
    if (!box_contains(candidate_box, scene_pt)) continue;
    const Neighbor nn = candidate_index.nearest(scene_pt);
    error += nn.distance;
    ++denominator;
    visited[nn.id] = 1;
  }
  const PointCloud& cloud = candidate_index.cloud();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (visited[i]) continue;
    error += scene.nearest(cloud[i]).distance;
    ++denominator;
  }
  return error / static_cast<double>(denominator);
}

inline double candidate_error(const PointCloud& candidate_cloud, const OrientedBox& candidate_box,
                              const SpatialIndex& scene) {
  return candidate_error(candidate_box, scene, SpatialIndex(candidate_cloud));
}

/// Keeps a candidate iff no other candidate whose centroid lies within
/// `radius` has a strictly lower error (equal errors: lower input position
/// wins). Survivors are returned by ascending error.
inline std::vector<Candidate> non_max_suppression(const std::vector<Candidate>& candidates, double radius) {
  const double r2 = radius * radius;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < candidates.size() && !dominated; ++j) {
      if (j == i) continue;
      if ((candidates[j].centroid - candidates[i].centroid).squaredNorm() > r2) continue;
      dominated = candidates[j].error < candidates[i].error ||
                  (candidates[j].error == candidates[i].error && j < i);
    }
    if (!dominated) kept.push_back(i);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [&](std::size_t a, std::size_t b) { return candidates[a].error < candidates[b].error; });
  std::vector<Candidate> out;
  out.reserve(kept.size());
  for (const std::size_t i : kept) out.push_back(candidates[i]);
  return out;
}

/// Everything a search produced, for inspection and evaluation.
struct SearchTrace {
  PointCloud scene;     // cropped and downsampled
  PointCloud template_cloud;  // landmark cloud as matched (downsampled)
  std::vector<Candidate> candidates;  // by seed ordinal
  std::vector<Candidate> survivors;   // after non-max suppression
  std::vector<Match> matches;         // survivors under the threshold
};

struct SearchOptions {
  unsigned threads = 1;  // 0 = hardware concurrency; results do not depend on it
};

/// Moves a landmark copy onto `seed_point`, refines it with ICP and scores it.
inline Candidate evaluate_seed(const Landmark& landmark, const PointCloud& template_cloud,
                               const Point3& template_centroid, const SpatialIndex& scene,
                               const Point3& seed_point, const IcpParams& icp, std::size_t ordinal) {
  const RigidTransform init = RigidTransform::from_translation(seed_point - template_centroid);
  const IcpResult aligned = icp_align(template_cloud, scene, init, icp);

  PointCloud moved = transform_cloud(template_cloud, aligned.transform);
  Candidate c;
  c.landmark_name = landmark.name;
  c.transform = aligned.transform;
  c.seed_point = seed_point;
  c.centroid = centroid(moved);
  c.icp_converged = aligned.converged;
  c.ordinal = ordinal;
  c.error = candidate_error(transform_box(landmark.box, aligned.transform), scene, SpatialIndex(std::move(moved)));
  return c;
}

inline SearchTrace find_landmark_traced(const PointCloud& scene, const Landmark& landmark,
                                        const SearchParams& params, SearchOptions options = {}) {
  params.validate();
  landmark.validate();

  SearchTrace trace;
  const PointCloud cropped = crop_to_workspace(scene, params.workspace);
  if (cropped.empty()) throw Error("scene empty after cropping");
  trace.scene = voxel_downsample(cropped, params.voxel_leaf);
  // The template goes through the same grid so both clouds share one density.
  trace.template_cloud = voxel_downsample(landmark.cloud, params.voxel_leaf);

  const SpatialIndex index(trace.scene);
  SeededRng rng(params.seed);
  const std::vector<Point3> seeds =
      sample_points(trace.scene, params.sample_fraction, params.sample_max, rng);
  const Point3 template_centroid = centroid(trace.template_cloud);

  trace.candidates.resize(seeds.size());
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < seeds.size(); i += stride)
      trace.candidates[i] =
          evaluate_seed(landmark, trace.template_cloud, template_centroid, index, seeds[i], params.icp, i);
  };

  unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(seeds.size(), 1)));
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }

  trace.survivors = non_max_suppression(trace.candidates, params.nms_radius);
  for (const auto& c : trace.survivors) {
    if (!(c.error < params.error_threshold)) continue;
    Match m;
    static_cast<Candidate&>(m) = c;
    m.rank = trace.matches.size();
    trace.matches.push_back(std::move(m));
  }
  return trace;
}

/// Localizes every instance of `landmark` in `scene`. An empty result means
/// the landmark was not found.
inline std::vector<Match> find_landmark(const PointCloud& scene, const Landmark& landmark,
                                        const SearchParams& params, SearchOptions options = {}) {
  return find_landmark_traced(scene, landmark, params, options).matches;
}

/// Re-expresses a pose demonstrated relative to the landmark's capture frame
/// in the frame of the scene where `match` was found.
inline RigidTransform transfer_pose(const RigidTransform& demo_pose, const Candidate& match) {
  return compose(match.transform, demo_pose);
}

inline PointCloud candidate_cloud(const Landmark& landmark, const Candidate& c) {
  return transform_cloud(landmark.cloud, c.transform);
}

inline OrientedBox candidate_box(const Landmark& landmark, const Candidate& c) {
  return transform_box(landmark.box, c.transform);
}

}  // namespace landmarks
