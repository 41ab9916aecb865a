#pragma once

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "landmarks/error.hpp"
#include "landmarks/geometry.hpp"
#include "landmarks/spatial_index.hpp"

namespace landmarks {

struct IcpParams {
  int max_iterations = 30;
  double correspondence_max_distance = 0.05;  // m
  double translation_epsilon = 1e-4;          // m
  double rotation_epsilon = 1e-3;             // rad
  double mse_relative_epsilon = 1e-6;

  void validate() const {
    if (max_iterations <= 0) throw ValidationError("icp.max_iterations", "must be positive");
    if (!(correspondence_max_distance > 0.0))
      throw ValidationError("icp.correspondence_max_distance", "must be positive");
    if (!(translation_epsilon > 0.0)) throw ValidationError("icp.translation_epsilon", "must be positive");
    if (!(rotation_epsilon > 0.0)) throw ValidationError("icp.rotation_epsilon", "must be positive");
    if (!(mse_relative_epsilon > 0.0)) throw ValidationError("icp.mse_relative_epsilon", "must be positive");
  }
};

struct IcpResult {
  RigidTransform transform;
  int iterations_used = 0;
  double final_mse = 0.0;  // mean squared distance over gated correspondences, m^2
  bool converged = false;
  /// Gated objective at the start of each iteration and after the last one:
  /// sum over all source points of min(d^2, gate^2), divided by the source size.
  std::vector<double> objective_trace;
};

/// Least-squares rigid alignment of paired points (Kabsch / Arun et al.).
/// Returns T minimizing sum |T src_i - dst_i|^2 with det(R) = +1.
inline RigidTransform estimate_rigid_transform(std::span<const Point3> src, std::span<const Point3> dst) {
  if (src.size() != dst.size()) throw Error("correspondence lists differ in length");
  if (src.size() < 3) throw Error("degenerate correspondence set");

  const double n = static_cast<double>(src.size());
  Point3 mu_src = Point3::Zero(), mu_dst = Point3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_src += src[i];
    mu_dst += dst[i];
  }
  mu_src /= n;
  mu_dst /= n;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) cov += (dst[i] - mu_dst) * (src[i] - mu_src).transpose();

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Point3 sv = svd.singularValues();
  // Collinear or coincident sets leave the rotation about their axis undetermined.
  if (!(sv(1) > 1e-12 * std::max(1.0, sv(0)))) throw Error("degenerate correspondence set");

  Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) fix(2, 2) = -1.0;
  const Eigen::Matrix3d R = svd.matrixU() * fix * svd.matrixV().transpose();
  return {R, mu_dst - R * mu_src};
}

/// Point-to-point ICP with nearest-neighbour correspondences gated at
/// `correspondence_max_distance`. The returned transform maps `source` onto `scene`.
inline IcpResult icp_align(const PointCloud& source, const SpatialIndex& scene, const RigidTransform& init,
                           const IcpParams& params = {}) {
  if (source.empty()) throw Error("ICP source cloud is empty");
  if (scene.empty()) throw Error("ICP scene is empty");
  params.validate();

  const double gate2 = params.correspondence_max_distance * params.correspondence_max_distance;
  const double n = static_cast<double>(source.size());

  IcpResult result;
  result.transform = init;

  std::vector<Point3> src, dst;
  src.reserve(source.size());
  dst.reserve(source.size());
  // Previous partner of each source point; it seeds the next query's bound.
  std::vector<std::size_t> hints(source.size(), std::numeric_limits<std::size_t>::max());

  // Pairs the source (under `T`) with the scene; returns the gated objective.
  auto correspond = [&](const RigidTransform& T, double& inlier_mse) {
    src.clear();
    dst.clear();
    double truncated = 0.0, inlier = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) {
      const Point3 moved = T(source[i]);
      const auto nn = scene.nearest_within(moved, params.correspondence_max_distance, hints[i]);
      if (nn) {
        hints[i] = nn->id;
        const double d2 = std::min(nn->distance * nn->distance, gate2);
        src.push_back(moved);
        dst.push_back(nn->point);
        truncated += d2;
        inlier += d2;
      } else {
        truncated += gate2;
      }
    }
    inlier_mse = src.empty() ? std::numeric_limits<double>::infinity() : inlier / static_cast<double>(src.size());
    return truncated / n;
  };

  double mse = 0.0;
  double objective = correspond(result.transform, mse);
  result.objective_trace.push_back(objective);
  result.final_mse = mse;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    if (src.size() < 3) return result;

    RigidTransform step;
    try {
      step = estimate_rigid_transform(src, dst);
    } catch (const Error&) {
      return result;
    }
    const RigidTransform candidate = compose(step, result.transform);

    double candidate_mse = 0.0;
    const double candidate_objective = correspond(candidate, candidate_mse);
    if (candidate_objective > objective) {
      // A step that does not improve the objective means we are already at its floor.
      result.converged = true;
      return result;
    }
    result.transform = candidate;
    result.iterations_used = iter + 1;
    result.objective_trace.push_back(candidate_objective);
    result.final_mse = candidate_mse;

    const bool small_step = step.translation().norm() < params.translation_epsilon &&
                            step.angle() < params.rotation_epsilon;
    const double change = objective - candidate_objective;
    const bool flat = objective <= 0.0 ? true : std::abs(change) / objective < params.mse_relative_epsilon;
    objective = candidate_objective;
    if (small_step || flat) {
      result.converged = src.size() >= 3;
      return result;
    }
  }
  return result;
}

}  // namespace landmarks
