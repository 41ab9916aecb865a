#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "landmarks/error.hpp"
#include "landmarks/geometry.hpp"
#include "landmarks/io.hpp"
#include "landmarks/search.hpp"
#include "landmarks/spatial_index.hpp"

namespace landmarks::synth {

using io::json;

// ---------------------------------------------------------------------------
// Scene generation

enum class PrimitiveKind { plane, box, sphere, cylinder, annulus };

/// A sampled surface. `dims` by kind:
///   plane    (size_x, size_y, -)    rectangle in the local xy plane
///   box      (size_x, size_y, size_z) all six faces
///   sphere   (radius, -, -)
///   cylinder (radius, height, -)    open tube along local z, centered
///   annulus  (inner, outer, -)      flat ring in the local xy plane
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::plane;
  RigidTransform pose;
  Point3 dims = Point3::Zero();
  double density = 40000.0;  // points per m^2

  void validate() const {
    const auto bad = [](const char* what) { throw ValidationError("primitive", what); };
    if (!(density > 0.0)) bad("density must be positive");
    switch (kind) {
      case PrimitiveKind::plane:
        if (!(dims.x() > 0 && dims.y() > 0)) bad("plane size must be positive");
        break;
      case PrimitiveKind::box:
        if (!(dims.minCoeff() > 0)) bad("box size must be positive");
        break;
      case PrimitiveKind::sphere:
        if (!(dims.x() > 0)) bad("sphere radius must be positive");
        break;
      case PrimitiveKind::cylinder:
        if (!(dims.x() > 0 && dims.y() > 0)) bad("cylinder radius and height must be positive");
        break;
      case PrimitiveKind::annulus:
        if (!(dims.x() >= 0 && dims.y() > dims.x())) bad("annulus needs 0 <= inner < outer");
        break;
    }
  }

  double area() const {
    constexpr double pi = std::numbers::pi;
    switch (kind) {
      case PrimitiveKind::plane: return dims.x() * dims.y();
      case PrimitiveKind::box:
        return 2.0 * (dims.x() * dims.y() + dims.y() * dims.z() + dims.x() * dims.z());
      case PrimitiveKind::sphere: return 4.0 * pi * dims.x() * dims.x();
      case PrimitiveKind::cylinder: return 2.0 * pi * dims.x() * dims.y();
      case PrimitiveKind::annulus: return pi * (dims.y() * dims.y() - dims.x() * dims.x());
    }
    return 0.0;
  }

  /// Closed surfaces are back-face culled; sheets are visible from both sides.
  bool closed() const { return kind == PrimitiveKind::box || kind == PrimitiveKind::sphere; }
};

struct SurfaceSample {
  Point3 point;
  Point3 normal;  // outward, local frame
};

inline SurfaceSample sample_surface(const Primitive& prim, SeededRng& rng) {
  const Point3& d = prim.dims;
  switch (prim.kind) {
    case PrimitiveKind::plane:
      return {{rng.uniform(-0.5, 0.5) * d.x(), rng.uniform(-0.5, 0.5) * d.y(), 0.0}, Point3::UnitZ()};
    case PrimitiveKind::box: {
      const double faces[3] = {d.y() * d.z(), d.x() * d.z(), d.x() * d.y()};
      double pick = rng.uniform() * (faces[0] + faces[1] + faces[2]);
      int axis = 0;
      while (axis < 2 && pick >= faces[axis]) pick -= faces[axis++];
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      Point3 p(rng.uniform(-0.5, 0.5) * d.x(), rng.uniform(-0.5, 0.5) * d.y(), rng.uniform(-0.5, 0.5) * d.z());
      p[axis] = sign * 0.5 * d[axis];
      Point3 n = Point3::Zero();
      n[axis] = sign;
      return {p, n};
    }
    case PrimitiveKind::sphere: {
      Point3 n;
      do {
        n = Point3(rng.normal(), rng.normal(), rng.normal());
      } while (n.norm() < 1e-12);
      n.normalize();
      return {d.x() * n, n};
    }
    case PrimitiveKind::cylinder: {
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Point3 n(std::cos(a), std::sin(a), 0.0);
      return {Point3(d.x() * n.x(), d.x() * n.y(), rng.uniform(-0.5, 0.5) * d.y()), n};
    }
    case PrimitiveKind::annulus: {
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double r = std::sqrt(rng.uniform(d.x() * d.x(), d.y() * d.y()));
      return {{r * std::cos(a), r * std::sin(a), 0.0}, Point3::UnitZ()};
    }
  }
  return {Point3::Zero(), Point3::UnitZ()};
}

struct ObjectPlacement {
  std::string object;       // template name
  std::string instance_id;
  RigidTransform pose;      // object frame -> world
  std::vector<Primitive> parts;  // in the object frame
};

struct SensorModel {
  double noise_sigma = 0.0;  // m, Gaussian along the view ray
  bool cull = false;         // drop back faces of closed primitives
  Point3 viewpoint = Point3(0.0, 0.0, 1.4);
};

struct SceneSpec {
  std::string id;
  std::vector<Primitive> fixtures;  // world frame
  std::vector<ObjectPlacement> objects;
  SensorModel sensor;
};

struct TruthInstance {
  std::string landmark;  // object name from generate_scene; landmark name after run_benchmark
  std::string instance_id;
  RigidTransform pose;
  Point3 anchor = Point3::Zero();  // where a correct detection's centroid lands
};

struct GroundTruth {
  std::string scene_id;
  std::vector<TruthInstance> instances;
};

struct GeneratedScene {
  PointCloud cloud;
  GroundTruth truth;
};

namespace detail {

inline void emit(const Primitive& prim, const RigidTransform& parent, const SensorModel& sensor, SeededRng& rng,
                 PointCloud& out) {
  prim.validate();
  const RigidTransform to_world = compose(parent, prim.pose);
  const auto n = static_cast<std::size_t>(std::llround(prim.density * prim.area()));
  for (std::size_t i = 0; i < n; ++i) {
    const SurfaceSample s = sample_surface(prim, rng);
    Point3 p = to_world(s.point);
    const Point3 ray = p - sensor.viewpoint;
    if (sensor.cull && prim.closed() && (to_world.quaternion() * s.normal).dot(ray) >= 0.0) continue;
    if (sensor.noise_sigma > 0.0 && ray.norm() > 0.0) p += sensor.noise_sigma * rng.normal() * ray.normalized();
    out.points.push_back(p);
  }
}

}  // namespace detail

/// Samples every fixture and object surface. Each primitive draws from its
/// own child generator so editing one does not reshuffle the others.
inline GeneratedScene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  if (spec.sensor.noise_sigma < 0.0) throw ValidationError("noise_sigma", "must be >= 0");
  GeneratedScene out;
  out.truth.scene_id = spec.id;
  const SeededRng root(seed);
  std::uint64_t ordinal = 0;
  for (const auto& prim : spec.fixtures) {
    SeededRng rng = root.derive(ordinal++);
    detail::emit(prim, RigidTransform::identity(), spec.sensor, rng, out.cloud);
  }
  for (const auto& obj : spec.objects) {
    for (const auto& prim : obj.parts) {
      SeededRng rng = root.derive(ordinal++);
      detail::emit(prim, obj.pose, spec.sensor, rng, out.cloud);
    }
    out.truth.instances.push_back({obj.object, obj.instance_id, obj.pose, obj.pose.translation()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

enum class EvalMode { all_pairs, in_context, one_instance };

inline const char* mode_name(EvalMode m) {
  switch (m) {
    case EvalMode::all_pairs: return "all_pairs";
    case EvalMode::in_context: return "in_context";
    case EvalMode::one_instance: return "one_instance";
  }
  return "?";
}

inline const char* mode_title(EvalMode m) {
  switch (m) {
    case EvalMode::all_pairs: return "All landmarks searched in all scenes";
    case EvalMode::in_context: return "Landmarks and scenes in context";
    case EvalMode::one_instance: return "Only find one instance of landmark";
  }
  return "?";
}

/// Matches one landmark produced in one scene.
struct Detections {
  std::string scene_id;
  std::string landmark;
  std::vector<Match> matches;
};

/// Which scenes and landmarks exist, and which pairs are searched "in context".
struct EvalUniverse {
  std::vector<std::string> scenes;
  std::vector<std::string> landmarks;
  std::set<std::pair<std::string, std::string>> context;  // (scene, landmark)
};

/// precision = tp / (tp + fp); recall = recall_hits / (recall_hits + fn).
/// recall_hits equals tp except in one_instance mode, where it counts the
/// ground-truth instances of every scene/landmark pair with at least one TP.
struct Tally {
  std::size_t tp = 0, fp = 0, fn = 0, recall_hits = 0;

  double precision() const { return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
  double recall() const {
    return recall_hits + fn == 0 ? 1.0 : static_cast<double>(recall_hits) / static_cast<double>(recall_hits + fn);
  }

  Tally& operator+=(const Tally& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    recall_hits += o.recall_hits;
    return *this;
  }
  friend bool operator==(const Tally&, const Tally&) = default;
};

struct ModeReport {
  EvalMode mode = EvalMode::all_pairs;
  Tally total;
  std::map<std::string, Tally> per_scene;

  double precision() const { return total.precision(); }
  double recall() const { return total.recall(); }
};

struct EvalReport {
  std::vector<ModeReport> modes;  // all_pairs, in_context, one_instance when populated

  const ModeReport& mode(EvalMode m) const {
    for (const auto& r : modes)
      if (r.mode == m) return r;
    throw Error(std::string("report has no mode ") + mode_name(m));
  }
};

namespace detail {

struct PairOutcome {
  std::size_t tp = 0, fp = 0, truths = 0;
};

/// Greedy one-to-one assignment by ascending error (ties: input order); each
/// detection claims the closest unclaimed truth within `radius`.
inline PairOutcome assign(const std::vector<Match>& matches, const std::vector<const TruthInstance*>& truths,
                          double radius) {
  std::vector<std::size_t> order(matches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return matches[a].error < matches[b].error; });
  std::vector<char> used(truths.size(), 0);
  PairOutcome out;
  out.truths = truths.size();
  for (const std::size_t i : order) {
    std::size_t best = truths.size();
    double best_d = radius;
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (used[t]) continue;
      const double d = (truths[t]->anchor - matches[i].centroid).norm();
      if (d <= best_d && (best == truths.size() || d < best_d)) {
        best = t;
        best_d = d;
      }
    }
    if (best < truths.size()) {
      used[best] = 1;
      ++out.tp;
    } else {
      ++out.fp;
    }
  }
  return out;
}

}  // namespace detail

/// Scores detections under one assumption. Pairs that carry ground truth
/// always count as in context.
inline ModeReport evaluate(const std::vector<Detections>& detections, const std::vector<GroundTruth>& truth,
                           const EvalUniverse& universe, EvalMode mode, double match_radius) {
  const std::set<std::string> scenes(universe.scenes.begin(), universe.scenes.end());
  const std::set<std::string> names(universe.landmarks.begin(), universe.landmarks.end());
  const auto check = [&](const std::string& scene, const std::string& landmark) {
    if (!scenes.count(scene)) throw ValidationError("scene", "unknown scene '" + scene + "'");
    if (!names.count(landmark)) throw ValidationError("landmark", "unknown landmark '" + landmark + "'");
  };

  using Key = std::pair<std::string, std::string>;
  std::map<Key, std::vector<const TruthInstance*>> truths;
  for (const auto& gt : truth)
    for (const auto& inst : gt.instances) {
      check(gt.scene_id, inst.landmark);
      truths[{gt.scene_id, inst.landmark}].push_back(&inst);
    }
  std::map<Key, std::vector<Match>> found;
  for (const auto& d : detections) {
    check(d.scene_id, d.landmark);
    auto& bucket = found[{d.scene_id, d.landmark}];
    bucket.insert(bucket.end(), d.matches.begin(), d.matches.end());
  }

  const auto in_scope = [&](const Key& k) {
    return mode == EvalMode::all_pairs || universe.context.count(k) > 0 || truths.count(k) > 0;
  };

  ModeReport report;
  report.mode = mode;
  for (const auto& s : universe.scenes) report.per_scene[s];
  for (const auto& s : universe.scenes)
    for (const auto& l : universe.landmarks) {
      const Key key{s, l};
      if (!in_scope(key)) continue;
      static const std::vector<Match> kNone;
      static const std::vector<const TruthInstance*> kNoTruth;
      const auto f = found.find(key);
      const auto t = truths.find(key);
      const auto outcome =
          detail::assign(f == found.end() ? kNone : f->second, t == truths.end() ? kNoTruth : t->second, match_radius);
      Tally tally;
      tally.tp = outcome.tp;
      tally.fp = outcome.fp;
      if (mode == EvalMode::one_instance) {
        tally.recall_hits = outcome.tp > 0 ? outcome.truths : 0;
        tally.fn = outcome.tp > 0 ? 0 : outcome.truths;
      } else {
        tally.recall_hits = outcome.tp;
        tally.fn = outcome.truths - outcome.tp;
      }
      report.per_scene[s] += tally;
      report.total += tally;
    }
  return report;
}

inline EvalReport evaluate_all(const std::vector<Detections>& detections, const std::vector<GroundTruth>& truth,
                               const EvalUniverse& universe, double match_radius) {
  EvalReport report;
  for (EvalMode m : {EvalMode::all_pairs, EvalMode::in_context, EvalMode::one_instance})
    report.modes.push_back(evaluate(detections, truth, universe, m, match_radius));
  return report;
}

// ---------------------------------------------------------------------------
// Benchmark suites

/// How a landmark is captured: the object is placed at `capture_pose` among
/// `fixtures`, and everything inside `box` (object frame) becomes the landmark.
struct LandmarkSpec {
  std::string name;
  std::string object;
  Point3 box_center = Point3::Zero();
  Point3 box_size = Point3::Constant(0.1);
  RigidTransform capture_pose;
  std::vector<Primitive> fixtures;
};

struct SuiteInstance {
  std::string object;
  std::string instance_id;
  RigidTransform pose;
};

struct SuiteScene {
  std::string id;
  std::vector<Primitive> fixtures;
  std::vector<SuiteInstance> instances;
};

struct Suite {
  std::uint64_t seed = 1;
  double match_radius = 0.03;
  SensorModel sensor;
  std::map<std::string, std::vector<Primitive>> objects;
  std::vector<LandmarkSpec> landmarks;
  std::vector<SuiteScene> scenes;
  std::set<std::pair<std::string, std::string>> context;  // (scene, landmark)

  SceneSpec scene_spec(const SuiteScene& scene) const {
    SceneSpec spec;
    spec.id = scene.id;
    spec.fixtures = scene.fixtures;
    spec.sensor = sensor;
    for (const auto& inst : scene.instances) {
      const auto it = objects.find(inst.object);
      if (it == objects.end()) throw ValidationError("scenes.instances.object", "unknown object '" + inst.object + "'");
      spec.objects.push_back({inst.object, inst.instance_id, inst.pose, it->second});
    }
    return spec;
  }

  SceneSpec capture_spec(const LandmarkSpec& l) const {
    const auto it = objects.find(l.object);
    if (it == objects.end()) throw ValidationError("landmarks.object", "unknown object '" + l.object + "'");
    SceneSpec spec;
    spec.id = "capture:" + l.name;
    spec.fixtures = l.fixtures;
    spec.sensor = sensor;
    spec.objects.push_back({l.object, l.name, l.capture_pose, it->second});
    return spec;
  }
};

/// Generates the capture scene for `spec` and crops the landmark out of it.
inline Landmark capture_landmark(const Suite& suite, const LandmarkSpec& spec, std::uint64_t seed) {
  const GeneratedScene scene = generate_scene(suite.capture_spec(spec), seed);
  Landmark l;
  l.name = spec.name;
  l.box = transform_box(OrientedBox::axis_aligned(spec.box_center, spec.box_size), spec.capture_pose);
  l.cloud = crop_to_box(scene.cloud, l.box);
  l.metadata = {"capture:" + spec.name, "1970-01-01T00:00:00Z"};
  if (l.cloud.empty()) throw ValidationError("landmarks." + spec.name, "box contains no points");
  return l;
}

struct BenchmarkResult {
  EvalReport report;
  std::vector<Detections> detections;
  std::vector<GroundTruth> truth;
  std::vector<Landmark> landmarks;
};

/// Generates every scene, searches every landmark in every scene and scores
/// the detections under all three assumptions.
inline BenchmarkResult run_benchmark(const Suite& suite, const SearchParams& params, SearchOptions options = {}) {
  BenchmarkResult out;
  EvalUniverse universe;
  universe.context = suite.context;
  std::uint64_t ordinal = 0;
  const SeededRng root(suite.seed);

  std::map<std::string, Point3> template_centroids;
  for (const auto& spec : suite.landmarks) {
    out.landmarks.push_back(capture_landmark(suite, spec, root.derive(ordinal++).next_u64()));
    template_centroids[spec.name] = centroid(voxel_downsample(out.landmarks.back().cloud, params.voxel_leaf));
    universe.landmarks.push_back(spec.name);
  }

  for (const auto& scene : suite.scenes) {
    universe.scenes.push_back(scene.id);
    const GeneratedScene generated = generate_scene(suite.scene_spec(scene), root.derive(ordinal++).next_u64());

    // Re-key object-level truth by the landmarks captured from each object.
    GroundTruth truth{scene.id, {}};
    for (const auto& inst : generated.truth.instances)
      for (const auto& spec : suite.landmarks) {
        if (spec.object != inst.landmark) continue;
        const RigidTransform capture_to_scene = compose(inst.pose, spec.capture_pose.inverse());
        truth.instances.push_back(
            {spec.name, inst.instance_id, capture_to_scene, capture_to_scene(template_centroids[spec.name])});
      }
    out.truth.push_back(std::move(truth));

    for (const auto& landmark : out.landmarks)
      out.detections.push_back({scene.id, landmark.name, find_landmark(generated.cloud, landmark, params, options)});
  }
  out.report = evaluate_all(out.detections, out.truth, universe, suite.match_radius);
  return out;
}

// ---------------------------------------------------------------------------
// Suite and report files

namespace detail {

inline RigidTransform pose_from_json(const json& j, const std::string& field) {
  if (!j.is_object()) throw ValidationError(field, "must be an object");
  io::detail::reject_unknown(j, {"translation", "rotation", "yaw_deg"}, field + ".");
  const Point3 t = j.contains("translation") ? io::detail::vec3(j["translation"], field + ".translation") : Point3::Zero();
  if (j.contains("rotation") && j.contains("yaw_deg"))
    throw ValidationError(field, "give either rotation or yaw_deg, not both");
  if (j.contains("yaw_deg")) {
    const double yaw = io::detail::number(j["yaw_deg"], field + ".yaw_deg") * std::numbers::pi / 180.0;
    return RigidTransform::from_axis_angle(Point3::UnitZ(), yaw, t);
  }
  if (j.contains("rotation")) return io::transform_from_json(j, field);
  return RigidTransform::from_translation(t);
}

inline Primitive primitive_from_json(const json& j, double default_density, const std::string& field) {
  using io::detail::number;
  using io::detail::require;
  if (!j.is_object()) throw ValidationError(field, "must be an object");
  io::detail::reject_unknown(
      j, {"kind", "pose", "size", "radius", "height", "inner_radius", "outer_radius", "density"}, field + ".");
  Primitive p;
  const json& kind = require(j, "kind", field + ".");
  if (!kind.is_string()) throw ValidationError(field + ".kind", "must be a string");
  const std::string k = kind.get<std::string>();
  if (k == "plane") {
    p.kind = PrimitiveKind::plane;
    const json& s = require(j, "size", field + ".");
    if (!s.is_array() || s.size() != 2) throw ValidationError(field + ".size", "must be [size_x, size_y]");
    p.dims = Point3(number(s[0], field + ".size"), number(s[1], field + ".size"), 0.0);
  } else if (k == "box") {
    p.kind = PrimitiveKind::box;
    p.dims = io::detail::vec3(require(j, "size", field + "."), field + ".size");
  } else if (k == "sphere") {
    p.kind = PrimitiveKind::sphere;
    p.dims = Point3(number(require(j, "radius", field + "."), field + ".radius"), 0.0, 0.0);
  } else if (k == "cylinder") {
    p.kind = PrimitiveKind::cylinder;
    p.dims = Point3(number(require(j, "radius", field + "."), field + ".radius"),
                    number(require(j, "height", field + "."), field + ".height"), 0.0);
  } else if (k == "annulus") {
    p.kind = PrimitiveKind::annulus;
    p.dims = Point3(number(require(j, "inner_radius", field + "."), field + ".inner_radius"),
                    number(require(j, "outer_radius", field + "."), field + ".outer_radius"), 0.0);
  } else {
    throw ValidationError(field + ".kind", "unknown primitive kind '" + k + "'");
  }
  if (j.contains("pose")) p.pose = pose_from_json(j["pose"], field + ".pose");
  p.density = j.contains("density") ? number(j["density"], field + ".density") : default_density;
  p.validate();
  return p;
}

inline std::vector<Primitive> primitives_from_json(const json& j, double density, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "must be an array");
  std::vector<Primitive> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(primitive_from_json(j[i], density, field + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::string string_field(const json& j, const std::string& key, const std::string& field) {
  const json& v = io::detail::require(j, key, field + ".");
  if (!v.is_string() || v.get<std::string>().empty())
    throw ValidationError(field + "." + key, "must be a non-empty string");
  return v.get<std::string>();
}

}  // namespace detail

inline Suite suite_from_json(const json& j) {
  using io::detail::number;
  using io::detail::require;
  if (!j.is_object()) throw ValidationError("", "suite must be a JSON object");
  io::detail::reject_unknown(j, {"seed", "match_radius", "density", "sensor", "objects", "landmarks", "scenes", "context"},
                             "");
  Suite s;
  if (j.contains("seed")) s.seed = io::detail::count(j["seed"], "seed", true);
  if (j.contains("match_radius")) s.match_radius = io::detail::positive(j["match_radius"], "match_radius");
  const double density = j.contains("density") ? io::detail::positive(j["density"], "density") : 40000.0;
  if (j.contains("sensor")) {
    const json& sensor = j["sensor"];
    if (!sensor.is_object()) throw ValidationError("sensor", "must be an object");
    io::detail::reject_unknown(sensor, {"noise_sigma", "cull", "viewpoint"}, "sensor.");
    if (sensor.contains("noise_sigma")) {
      s.sensor.noise_sigma = number(sensor["noise_sigma"], "sensor.noise_sigma");
      if (s.sensor.noise_sigma < 0.0) throw ValidationError("sensor.noise_sigma", "must be >= 0");
    }
    if (sensor.contains("cull")) {
      if (!sensor["cull"].is_boolean()) throw ValidationError("sensor.cull", "must be a boolean");
      s.sensor.cull = sensor["cull"].get<bool>();
    }
    if (sensor.contains("viewpoint")) s.sensor.viewpoint = io::detail::vec3(sensor["viewpoint"], "sensor.viewpoint");
  }

  const json& objects = require(j, "objects", "");
  if (!objects.is_object()) throw ValidationError("objects", "must map names to primitive lists");
  for (const auto& [name, parts] : objects.items())
    s.objects[name] = detail::primitives_from_json(parts, density, "objects." + name);

  const json& landmarks = require(j, "landmarks", "");
  if (!landmarks.is_array()) throw ValidationError("landmarks", "must be an array");
  std::set<std::string> landmark_names;
  for (std::size_t i = 0; i < landmarks.size(); ++i) {
    const std::string field = "landmarks[" + std::to_string(i) + "]";
    const json& l = landmarks[i];
    if (!l.is_object()) throw ValidationError(field, "must be an object");
    io::detail::reject_unknown(l, {"name", "object", "box", "capture_pose", "fixtures"}, field + ".");
    LandmarkSpec spec;
    spec.name = detail::string_field(l, "name", field);
    spec.object = detail::string_field(l, "object", field);
    if (!s.objects.count(spec.object)) throw ValidationError(field + ".object", "unknown object '" + spec.object + "'");
    if (!landmark_names.insert(spec.name).second) throw ValidationError(field + ".name", "duplicate landmark name");
    const json& box = require(l, "box", field + ".");
    if (!box.is_object()) throw ValidationError(field + ".box", "must be an object");
    io::detail::reject_unknown(box, {"center", "size"}, field + ".box.");
    spec.box_center = io::detail::vec3(require(box, "center", field + ".box."), field + ".box.center");
    spec.box_size = io::detail::vec3(require(box, "size", field + ".box."), field + ".box.size");
    if (spec.box_size.minCoeff() <= 0.0) throw ValidationError(field + ".box.size", "box extent must be positive");
    if (l.contains("capture_pose")) spec.capture_pose = detail::pose_from_json(l["capture_pose"], field + ".capture_pose");
    if (l.contains("fixtures")) spec.fixtures = detail::primitives_from_json(l["fixtures"], density, field + ".fixtures");
    s.landmarks.push_back(std::move(spec));
  }

  const json& scenes = require(j, "scenes", "");
  if (!scenes.is_array()) throw ValidationError("scenes", "must be an array");
  std::set<std::string> scene_ids;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const std::string field = "scenes[" + std::to_string(i) + "]";
    const json& sc = scenes[i];
    if (!sc.is_object()) throw ValidationError(field, "must be an object");
    io::detail::reject_unknown(sc, {"id", "fixtures", "instances"}, field + ".");
    SuiteScene scene;
    scene.id = detail::string_field(sc, "id", field);
    if (!scene_ids.insert(scene.id).second) throw ValidationError(field + ".id", "duplicate scene id");
    if (sc.contains("fixtures")) scene.fixtures = detail::primitives_from_json(sc["fixtures"], density, field + ".fixtures");
    if (sc.contains("instances")) {
      const json& insts = sc["instances"];
      if (!insts.is_array()) throw ValidationError(field + ".instances", "must be an array");
      for (std::size_t k = 0; k < insts.size(); ++k) {
        const std::string f = field + ".instances[" + std::to_string(k) + "]";
        if (!insts[k].is_object()) throw ValidationError(f, "must be an object");
        io::detail::reject_unknown(insts[k], {"object", "id", "pose"}, f + ".");
        SuiteInstance inst;
        inst.object = detail::string_field(insts[k], "object", f);
        if (!s.objects.count(inst.object)) throw ValidationError(f + ".object", "unknown object '" + inst.object + "'");
        inst.instance_id = insts[k].contains("id") ? detail::string_field(insts[k], "id", f)
                                                   : inst.object + "-" + std::to_string(k);
        if (insts[k].contains("pose")) inst.pose = detail::pose_from_json(insts[k]["pose"], f + ".pose");
        scene.instances.push_back(std::move(inst));
      }
    }
    s.scenes.push_back(std::move(scene));
  }

  if (j.contains("context")) {
    const json& ctx = j["context"];
    if (!ctx.is_object()) throw ValidationError("context", "must map scene ids to landmark name lists");
    for (const auto& [scene, names] : ctx.items()) {
      if (!scene_ids.count(scene)) throw ValidationError("context." + scene, "unknown scene");
      if (!names.is_array()) throw ValidationError("context." + scene, "must be an array of landmark names");
      for (const auto& n : names) {
        if (!n.is_string() || !landmark_names.count(n.get<std::string>()))
          throw ValidationError("context." + scene, "unknown landmark");
        s.context.insert({scene, n.get<std::string>()});
      }
    }
  }
  return s;
}

inline Suite load_suite(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("suite JSON: ") + e.what(), e.byte);
  }
  return suite_from_json(doc);
}

inline json tally_to_json(const Tally& t) {
  return {{"tp", t.tp}, {"fp", t.fp}, {"fn", t.fn}, {"recall_hits", t.recall_hits}};
}

inline Tally tally_from_json(const json& j, const std::string& field) {
  if (!j.is_object()) throw ValidationError(field, "must be an object");
  Tally t;
  t.tp = io::detail::count(io::detail::require(j, "tp", field + "."), field + ".tp", true);
  t.fp = io::detail::count(io::detail::require(j, "fp", field + "."), field + ".fp", true);
  t.fn = io::detail::count(io::detail::require(j, "fn", field + "."), field + ".fn", true);
  t.recall_hits = io::detail::count(io::detail::require(j, "recall_hits", field + "."), field + ".recall_hits", true);
  return t;
}

inline json report_to_json(const EvalReport& report) {
  json modes = json::object();
  for (const auto& m : report.modes) {
    json scenes = json::object();
    for (const auto& [id, t] : m.per_scene) scenes[id] = tally_to_json(t);
    modes[mode_name(m.mode)] = {{"precision", m.precision()},
                                {"recall", m.recall()},
                                {"total", tally_to_json(m.total)},
                                {"per_scene", std::move(scenes)}};
  }
  return {{"modes", std::move(modes)}};
}

inline EvalReport report_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("", "report must be an object");
  const json& modes = io::detail::require(j, "modes", "");
  if (!modes.is_object()) throw ValidationError("modes", "must be an object");
  EvalReport report;
  for (EvalMode m : {EvalMode::all_pairs, EvalMode::in_context, EvalMode::one_instance}) {
    const auto it = modes.find(mode_name(m));
    if (it == modes.end()) continue;
    const std::string field = std::string("modes.") + mode_name(m);
    ModeReport r;
    r.mode = m;
    r.total = tally_from_json(io::detail::require(*it, "total", field + "."), field + ".total");
    const json& scenes = io::detail::require(*it, "per_scene", field + ".");
    if (!scenes.is_object()) throw ValidationError(field + ".per_scene", "must be an object");
    for (const auto& [id, t] : scenes.items()) r.per_scene[id] = tally_from_json(t, field + ".per_scene." + id);
    report.modes.push_back(std::move(r));
  }
  return report;
}

inline std::string percent(double ratio) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << 100.0 * ratio << '%';
  return ss.str();
}

/// Precision/recall per assumption as an aligned text table.
inline std::string report_table(const EvalReport& report) {
  std::ostringstream ss;
  ss << std::left << std::setw(40) << "Assumption" << std::right << std::setw(11) << "Precision" << std::setw(9)
     << "Recall" << std::setw(6) << "TP" << std::setw(6) << "FP" << std::setw(6) << "FN" << '\n';
  for (const auto& m : report.modes) {
    ss << std::left << std::setw(40) << mode_title(m.mode) << std::right << std::setw(11) << percent(m.precision())
       << std::setw(9) << percent(m.recall()) << std::setw(6) << m.total.tp << std::setw(6) << m.total.fp
       << std::setw(6) << m.total.fn << '\n';
  }
  return ss.str();
}

}  // namespace landmarks::synth
