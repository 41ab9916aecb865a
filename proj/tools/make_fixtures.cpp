// Regenerates the synthetic scenes and golden files under data/fixtures.
//
//   make_fixtures <output-dir>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>

#include "landmarks/commands.hpp"
#include "landmarks/io.hpp"
#include "landmarks/synth_eval.hpp"

namespace {

using namespace landmarks;
using namespace landmarks::synth;

constexpr double kDensity = 60000.0;
constexpr double kSigma = 0.0005;
constexpr double kTableZ = 0.7;

std::vector<Primitive> knob() {
  return {{PrimitiveKind::box, RigidTransform::from_translation({0, 0, 0.025}), {0.05, 0.04, 0.05}, kDensity},
          {PrimitiveKind::sphere, RigidTransform::from_translation({0.01, 0, 0.065}), {0.02, 0, 0}, kDensity}};
}

Primitive table(double sx, double sy, double density) {
  return {PrimitiveKind::plane, RigidTransform::from_translation({0.7, 0.0, kTableZ}), {sx, sy, 0.0}, density};
}

SensorModel sensor() {
  SensorModel s;
  s.noise_sigma = kSigma;
  s.cull = true;
  return s;
}

// Written as float32 and read back, so the fixture is exactly what a reader sees.
PointCloud write_scene(const std::filesystem::path& path, const PointCloud& cloud) {
  io::write_file(path.string(), io::write_point_cloud(cloud, io::format_for_path(path.string())));
  return io::load_point_cloud(path.string()).cloud;
}

std::string box_arg(const OrientedBox& box) {
  const Point3 c = box.pose.translation();
  const Eigen::Quaterniond q = box.pose.quaternion();
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", c.x(), c.y(), c.z(),
                box.size.x(), box.size.y(), box.size.z(), q.w(), q.x(), q.y(), q.z());
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <output-dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);

  // Capture scene: the knob on a small table, yawed so two side faces face the sensor.
  const RigidTransform capture_pose = RigidTransform::from_axis_angle(Point3::UnitZ(), std::numbers::pi / 4, {0.7, 0.0, kTableZ});
  SceneSpec cap;
  cap.id = "capture_scene";
  cap.fixtures = {table(0.4, 0.4, 20000.0)};
  cap.objects.push_back({"knob", "knob-1", capture_pose, knob()});
  cap.sensor = sensor();
  const PointCloud capture_cloud = write_scene(dir / "capture_scene.pcd", generate_scene(cap, 101).cloud);

  const OrientedBox box = transform_box(OrientedBox::axis_aligned({0.005, 0.0, 0.045}, {0.09, 0.08, 0.08}), capture_pose);
  const Landmark landmark = commands::capture(capture_cloud, box, "knob", "capture_scene.pcd", "2026-01-01T00:00:00Z");
  io::write_file((dir / "knob.json").string(), io::save_landmark(landmark));
  io::write_file((dir / "knob.box").string(), box_arg(box) + "\n");

  // Planted scene: a table spanning the workspace with the landmark cloud
  // moved to a new pose and re-noised.
  const RigidTransform planted = compose(
      RigidTransform::from_axis_angle(Point3::UnitZ(), 7.0 * std::numbers::pi / 180.0, {0.45, -0.35, kTableZ}),
      RigidTransform::from_translation({-0.7, 0.0, -kTableZ}));
  SceneSpec bg;
  bg.fixtures = {table(1.0, 1.6, 10000.0)};
  bg.sensor = sensor();
  PointCloud scene = generate_scene(bg, 202).cloud;
  SeededRng noise(303);
  for (const auto& p : landmark.cloud)
    scene.points.push_back(planted(p) + kSigma * Point3(noise.normal(), noise.normal(), noise.normal()));
  write_scene(dir / "planted_scene.pcd", scene);
  const Point3 anchor = planted(centroid(voxel_downsample(landmark.cloud, 0.005)));
  io::json truth = {{"transform", io::transform_to_json(planted)}, {"centroid", io::detail::to_json(anchor)}};
  io::write_file((dir / "planted_truth.json").string(), truth.dump(2) + "\n");

  // Distractors only: a ball, a cup and a brick on the same table.
  SceneSpec ds;
  ds.fixtures = {table(1.0, 1.6, 10000.0)};
  ds.sensor = sensor();
  ds.objects.push_back({"ball", "ball-1", RigidTransform::from_translation({0.55, 0.2, kTableZ + 0.03}),
                        {{PrimitiveKind::sphere, {}, {0.03, 0, 0}, kDensity}}});
  ds.objects.push_back({"cup", "cup-1", RigidTransform::from_translation({0.85, -0.25, kTableZ + 0.04}),
                        {{PrimitiveKind::cylinder, {}, {0.03, 0.08, 0}, kDensity}}});
  ds.objects.push_back({"brick", "brick-1", RigidTransform::from_axis_angle(Point3::UnitZ(), 0.3, {0.6, -0.4, kTableZ + 0.03}),
                        {{PrimitiveKind::box, {}, {0.1, 0.05, 0.06}, kDensity}}});
  write_scene(dir / "distractor_scene.pcd", generate_scene(ds, 404).cloud);

  // Small golden clouds for the readers and writers.
  SeededRng rng(505);
  PointCloud small;
  for (int i = 0; i < 50; ++i) small.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 2)});
  const PointCloud small32 = write_scene(dir / "cloud_binary.pcd", small);
  io::write_file((dir / "cloud_ascii.pcd").string(), io::write_point_cloud(small32, io::CloudFormat::pcd_ascii));
  io::write_file((dir / "cloud_ascii.ply").string(), io::write_point_cloud(small, io::CloudFormat::ply_ascii));
  io::write_file((dir / "empty.pcd").string(), io::write_point_cloud({}, io::CloudFormat::pcd_ascii));
  io::write_file((dir / "one_point.pcd").string(),
                 io::write_point_cloud(PointCloud{{{0.5, -0.25, 1.0}}}, io::CloudFormat::pcd_ascii));
  io::write_file((dir / "params_default.json").string(), io::save_params(SearchParams{}));

  std::cout << "capture scene " << capture_cloud.size() << " points, landmark " << landmark.cloud.size()
            << " points, planted scene " << scene.size() << " points\n";
  return 0;
}
