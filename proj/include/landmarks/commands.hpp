#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "landmarks/error.hpp"
#include "landmarks/geometry.hpp"
#include "landmarks/io.hpp"
#include "landmarks/search.hpp"
#include "landmarks/synth_eval.hpp"

namespace landmarks::commands {

/// Bad command-line input (exit code 2), as opposed to bad data (exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// "cx,cy,cz,sx,sy,sz[,qw,qx,qy,qz]". Without a quaternion the box is
/// aligned with the robot base.
inline OrientedBox parse_box(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--box: '" + item + "' is not a number");
    }
  }
  if (v.size() != 6 && v.size() != 10) throw UsageError("--box expects 6 or 10 comma-separated numbers");
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  if (v.size() == 10) {
    q = Eigen::Quaterniond(v[6], v[7], v[8], v[9]);
    if (std::abs(q.norm() - 1.0) > 1e-6) throw UsageError("--box quaternion must have unit norm");
  }
  const Point3 size(v[3], v[4], v[5]);
  if (!is_finite(size) || size.minCoeff() <= 0.0) throw UsageError("--box: box extent must be positive");
  return {RigidTransform(q, Point3(v[0], v[1], v[2])), size};
}

inline std::string utc_now_iso8601() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Crops `scene` to `box`; fails when nothing is inside.
inline Landmark capture(const PointCloud& scene, const OrientedBox& box, const std::string& name,
                        const std::string& scene_id, const std::string& created_at) {
  if (name.empty()) throw ValidationError("name", "must not be empty");
  Landmark l;
  l.name = name;
  l.box = box;
  l.cloud = crop_to_box(scene, box);
  l.metadata = {scene_id, created_at};
  if (l.cloud.empty()) throw ValidationError("", "box contains no points");
  l.validate();
  return l;
}

struct CaptureArgs {
  std::string scene_path;
  std::string box;
  std::string name;
  std::string out_path;
  std::string created_at;  // empty = now
};

inline Landmark run_capture(const CaptureArgs& args) {
  const OrientedBox box = parse_box(args.box);
  const auto scene = io::load_point_cloud(args.scene_path);
  const std::string scene_id = std::filesystem::path(args.scene_path).filename().string();
  Landmark l = capture(scene.cloud, box, args.name, scene_id,
                       args.created_at.empty() ? utc_now_iso8601() : args.created_at);
  io::write_file(args.out_path, io::save_landmark(l));
  return l;
}

struct FindArgs {
  std::string scene_path;
  std::vector<std::string> landmark_paths;
  std::string params_path;  // empty = defaults
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string format = "json";  // json | table
};

inline std::string matches_table(const std::vector<io::LandmarkMatches>& results) {
  std::ostringstream ss;
  ss << std::left << std::setw(20) << "landmark" << std::right << std::setw(6) << "rank" << std::setw(12) << "error"
     << std::setw(30) << "translation" << std::setw(12) << "yaw_deg" << '\n';
  for (const auto& r : results) {
    if (r.matches.empty()) ss << std::left << std::setw(20) << r.landmark << std::right << std::setw(6) << "-"
                              << "  no matches\n";
    for (const auto& m : r.matches) {
      const Point3& t = m.transform.translation();
      std::ostringstream tr;
      tr << std::fixed << std::setprecision(4) << t.x() << "," << t.y() << "," << t.z();
      const Eigen::Matrix3d R = m.transform.rotation();
      const double yaw = std::atan2(R(1, 0), R(0, 0)) * 180.0 / std::numbers::pi;
      ss << std::left << std::setw(20) << r.landmark << std::right << std::setw(6) << m.rank << std::setw(12)
         << std::fixed << std::setprecision(6) << m.error << std::setw(30) << tr.str() << std::setw(12)
         << std::setprecision(2) << yaw << '\n';
    }
  }
  return ss.str();
}

/// Runs the search for each landmark and renders the report. The output
/// depends only on the inputs and the seed.
inline std::string run_find(const FindArgs& args) {
  if (args.landmark_paths.empty()) throw UsageError("at least one --landmark is required");
  if (args.format != "json" && args.format != "table") throw UsageError("--format must be json or table");
  SearchParams params = args.params_path.empty() ? SearchParams{} : io::load_params(io::read_file(args.params_path));
  if (args.seed) params.seed = *args.seed;

  const auto scene = io::load_point_cloud(args.scene_path);
  std::vector<io::LandmarkMatches> results;
  for (const auto& path : args.landmark_paths) {
    const Landmark l = io::load_landmark(io::read_file(path));
    results.push_back({l.name, find_landmark(scene.cloud, l, params, {args.threads})});
  }
  if (args.format == "table") return matches_table(results);
  const std::string scene_id = std::filesystem::path(args.scene_path).filename().string();
  return io::match_report_to_json(scene_id, params, results).dump(2) + "\n";
}

struct EvalArgs {
  std::string suite_path;
  std::string params_path;
  std::string out_path;  // JSON report; the text table goes next to it as .txt
  unsigned threads = 1;
};

inline std::string table_path(const std::string& json_path) {
  return std::filesystem::path(json_path).replace_extension(".txt").string();
}

inline io::json benchmark_to_json(const synth::BenchmarkResult& result) {
  io::json detections = io::json::array();
  for (const auto& d : result.detections) {
    io::json matches = io::json::array();
    for (const auto& m : d.matches) matches.push_back(io::match_to_json(m));
    detections.push_back({{"scene", d.scene_id}, {"landmark", d.landmark}, {"matches", std::move(matches)}});
  }
  io::json doc = synth::report_to_json(result.report);
  doc["detections"] = std::move(detections);
  return doc;
}

inline synth::BenchmarkResult run_eval(const EvalArgs& args) {
  const synth::Suite suite = synth::load_suite(io::read_file(args.suite_path));
  const SearchParams params =
      args.params_path.empty() ? SearchParams{} : io::load_params(io::read_file(args.params_path));
  synth::BenchmarkResult result = synth::run_benchmark(suite, params, {args.threads});
  if (!args.out_path.empty()) {
    io::write_file(args.out_path, benchmark_to_json(result).dump(2) + "\n");
    io::write_file(table_path(args.out_path), synth::report_table(result.report));
  }
  return result;
}

}  // namespace landmarks::commands
