#pragma once

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "landmarks/error.hpp"
#include "landmarks/geometry.hpp"
#include "landmarks/search.hpp"

namespace landmarks::io {

using nlohmann::json;

enum class CloudFormat { pcd_ascii, pcd_binary, ply_ascii };

struct CloudReadResult {
  PointCloud cloud;
  std::size_t dropped_count = 0;  // points with a NaN/Inf coordinate
};

namespace detail {

/// Line cursor over an in-memory file that remembers byte offsets for errors.
class LineReader {
 public:
  explicit LineReader(std::string_view data) : data_(data) {}

  bool next(std::string_view& line) {
    if (pos_ >= data_.size()) return false;
    line_start_ = pos_;
    const std::size_t end = data_.find('\n', pos_);
    const std::size_t stop = end == std::string_view::npos ? data_.size() : end;
    line = data_.substr(pos_, stop - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end == std::string_view::npos ? data_.size() : end + 1;
    return true;
  }

  std::size_t pos() const noexcept { return pos_; }
  std::size_t line_start() const noexcept { return line_start_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
};

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline double parse_double(std::string_view tok, std::size_t offset) {
  double value = 0.0;
  // from_chars rejects "nan"/"inf" spelled with a sign or mixed case on some libraries.
  std::string lowered(tok);
  for (auto& ch : lowered) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (lowered == "nan" || lowered == "-nan" || lowered == "+nan") return std::numeric_limits<double>::quiet_NaN();
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError("invalid number '" + std::string(tok) + "'", offset);
  return value;
}

inline std::size_t parse_count(std::string_view tok, std::size_t offset) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError("invalid integer '" + std::string(tok) + "'", offset);
  return value;
}

/// Shortest text that parses back to the same float.
inline std::string format_float(float v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void keep(CloudReadResult& out, double x, double y, double z) {
  const Point3 p(x, y, z);
  if (is_finite(p))
    out.cloud.points.push_back(p);
  else
    ++out.dropped_count;
}

inline CloudReadResult read_pcd(std::string_view data) {
  LineReader reader(data);
  std::vector<std::string> fields;
  std::vector<std::size_t> sizes, counts;
  std::vector<char> types;
  std::size_t width = 0, height = 1, points = 0;
  bool have_points = false, have_width = false;
  std::string mode;
  std::string_view line;

  while (reader.next(line)) {
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    const std::string_view key = tokens[0];
    const std::size_t at = reader.line_start();
    if (key == "VERSION") {
      continue;
    } else if (key == "FIELDS") {
      for (std::size_t i = 1; i < tokens.size(); ++i) fields.emplace_back(tokens[i]);
    } else if (key == "SIZE") {
      for (std::size_t i = 1; i < tokens.size(); ++i) sizes.push_back(parse_count(tokens[i], at));
    } else if (key == "TYPE") {
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i].size() != 1 || std::string_view("FIU").find(tokens[i][0]) == std::string_view::npos)
          throw ParseError("unknown PCD TYPE '" + std::string(tokens[i]) + "'", at);
        types.push_back(tokens[i][0]);
      }
    } else if (key == "COUNT") {
      for (std::size_t i = 1; i < tokens.size(); ++i) counts.push_back(parse_count(tokens[i], at));
    } else if (key == "WIDTH") {
      if (tokens.size() != 2) throw ParseError("WIDTH takes one value", at);
      width = parse_count(tokens[1], at);
      have_width = true;
    } else if (key == "HEIGHT") {
      if (tokens.size() != 2) throw ParseError("HEIGHT takes one value", at);
      height = parse_count(tokens[1], at);
    } else if (key == "VIEWPOINT") {
      continue;
    } else if (key == "POINTS") {
      if (tokens.size() != 2) throw ParseError("POINTS takes one value", at);
      points = parse_count(tokens[1], at);
      have_points = true;
    } else if (key == "DATA") {
      if (tokens.size() != 2) throw ParseError("DATA takes one value", at);
      mode = std::string(tokens[1]);
      break;
    } else {
      throw ParseError("unexpected PCD header line '" + std::string(key) + "'", at);
    }
  }

  const std::size_t header_end = reader.pos();
  if (mode.empty()) throw ParseError("PCD header has no DATA line", header_end);
  if (fields.empty()) throw ParseError("PCD header has no FIELDS line", header_end);
  if (counts.empty()) counts.assign(fields.size(), 1);
  if (sizes.size() != fields.size() || types.size() != fields.size() || counts.size() != fields.size())
    throw ParseError("FIELDS, SIZE, TYPE and COUNT disagree in length", header_end);
  if (!have_points) {
    if (!have_width) throw ParseError("PCD header has neither POINTS nor WIDTH", header_end);
    points = width * height;
  }

  std::ptrdiff_t xyz[3] = {-1, -1, -1};
  std::vector<std::size_t> value_index, byte_offset;  // per field: first value slot / first byte
  std::size_t values_per_point = 0, record_bytes = 0;
  for (std::size_t f = 0; f < fields.size(); ++f) {
    value_index.push_back(values_per_point);
    byte_offset.push_back(record_bytes);
    values_per_point += counts[f];
    record_bytes += sizes[f] * counts[f];
    const char* names[3] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
      if (fields[f] != names[a]) continue;
      if (types[f] != 'F' || sizes[f] != 4 || counts[f] != 1)
        throw ParseError("field " + fields[f] + " must be a single 4-byte float", header_end);
      xyz[a] = static_cast<std::ptrdiff_t>(f);
    }
  }
  if (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0) throw ParseError("PCD FIELDS must include x, y and z", header_end);

  CloudReadResult out;
  out.cloud.points.reserve(std::min(points, data.size()));
  if (mode == "ascii") {
    std::size_t read = 0;
    while (read < points && reader.next(line)) {
      const auto tokens = split_ws(line);
      if (tokens.empty()) continue;
      if (tokens.size() != values_per_point)
        throw ParseError("expected " + std::to_string(values_per_point) + " values, found " +
                             std::to_string(tokens.size()),
                         reader.line_start());
      double v[3];
      for (int a = 0; a < 3; ++a)
        v[a] = static_cast<float>(parse_double(tokens[value_index[static_cast<std::size_t>(xyz[a])]],
                                               reader.line_start()));
      keep(out, v[0], v[1], v[2]);
      ++read;
    }
    if (read < points)
      throw ParseError("truncated data: expected " + std::to_string(points) + " points, found " +
                           std::to_string(read),
                       data.size());
  } else if (mode == "binary") {
    static_assert(std::endian::native == std::endian::little, "binary PCD support assumes little-endian host");
    if (points > (data.size() - header_end) / record_bytes)
      throw ParseError("truncated data: expected " + std::to_string(points * record_bytes) + " bytes", data.size());
    for (std::size_t i = 0; i < points; ++i) {
      const char* record = data.data() + header_end + i * record_bytes;
      float v[3];
      for (int a = 0; a < 3; ++a)
        std::memcpy(&v[a], record + byte_offset[static_cast<std::size_t>(xyz[a])], sizeof(float));
      keep(out, v[0], v[1], v[2]);
    }
  } else {
    throw ParseError("unsupported PCD DATA mode '" + mode + "'", header_end);
  }
  return out;
}

inline CloudReadResult read_ply(std::string_view data) {
  LineReader reader(data);
  std::string_view line;
  if (!reader.next(line) || line != "ply") throw ParseError("missing 'ply' magic", 0);

  std::size_t vertex_count = 0;
  bool in_vertex = false, seen_vertex = false, ascii = false;
  std::vector<std::string> props;
  std::size_t skip_before = 0;  // element lines that precede the vertex block
  std::vector<std::pair<std::size_t, bool>> elements;  // (count, is_vertex) in order

  while (true) {
    if (!reader.next(line)) throw ParseError("PLY header has no end_header", reader.pos());
    const auto tokens = split_ws(line);
    const std::size_t at = reader.line_start();
    if (tokens.empty()) continue;
    if (tokens[0] == "end_header") break;
    if (tokens[0] == "comment" || tokens[0] == "obj_info") continue;
    if (tokens[0] == "format") {
      if (tokens.size() < 2) throw ParseError("malformed format line", at);
      if (tokens[1] != "ascii") throw ParseError("only ASCII PLY is supported", at);
      ascii = true;
    } else if (tokens[0] == "element") {
      if (tokens.size() != 3) throw ParseError("malformed element line", at);
      const std::size_t n = parse_count(tokens[2], at);
      in_vertex = tokens[1] == "vertex";
      if (in_vertex) {
        vertex_count = n;
        seen_vertex = true;
      } else if (!seen_vertex) {
        skip_before += n;
      }
      elements.emplace_back(n, in_vertex);
    } else if (tokens[0] == "property") {
      if (!in_vertex) continue;
      if (tokens.size() != 3) throw ParseError("list properties are not supported on vertices", at);
      props.emplace_back(tokens[2]);
    } else {
      throw ParseError("unexpected PLY header line '" + std::string(tokens[0]) + "'", at);
    }
  }
  if (!ascii) throw ParseError("PLY header has no format line", reader.pos());
  if (!seen_vertex) throw ParseError("PLY has no vertex element", reader.pos());

  std::ptrdiff_t xyz[3] = {-1, -1, -1};
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i] == "x") xyz[0] = static_cast<std::ptrdiff_t>(i);
    if (props[i] == "y") xyz[1] = static_cast<std::ptrdiff_t>(i);
    if (props[i] == "z") xyz[2] = static_cast<std::ptrdiff_t>(i);
  }
  if (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0) throw ParseError("PLY vertex lacks x, y or z", reader.pos());

  for (std::size_t skipped = 0; skipped < skip_before;) {
    if (!reader.next(line)) throw ParseError("truncated data before vertex block", data.size());
    if (!split_ws(line).empty()) ++skipped;
  }

  CloudReadResult out;
  out.cloud.points.reserve(std::min(vertex_count, data.size()));
  std::size_t read = 0;
  while (read < vertex_count && reader.next(line)) {
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != props.size())
      throw ParseError("expected " + std::to_string(props.size()) + " vertex values, found " +
                           std::to_string(tokens.size()),
                       reader.line_start());
    double v[3];
    for (int a = 0; a < 3; ++a)
      v[a] = parse_double(tokens[static_cast<std::size_t>(xyz[a])], reader.line_start());
    keep(out, v[0], v[1], v[2]);
    ++read;
  }
  if (read < vertex_count)
    throw ParseError("truncated data: expected " + std::to_string(vertex_count) + " vertices, found " +
                         std::to_string(read),
                     data.size());
  return out;
}

}  // namespace detail

/// Decodes PCD v0.7 (ascii or binary) or ASCII PLY. Points with a
/// non-finite coordinate are dropped and counted.
inline CloudReadResult read_point_cloud(std::string_view data, CloudFormat format) {
  return format == CloudFormat::ply_ascii ? detail::read_ply(data) : detail::read_pcd(data);
}

/// Picks the decoder from the file's magic bytes.
inline CloudReadResult read_point_cloud(std::string_view data) {
  const bool ply = data.substr(0, 3) == "ply";
  return read_point_cloud(data, ply ? CloudFormat::ply_ascii : CloudFormat::pcd_ascii);
}

/// Canonical encoding: fixed header order, LF endings. PCD stores float32
/// coordinates; PLY stores doubles.
inline std::string write_point_cloud(const PointCloud& cloud, CloudFormat format) {
  std::string out;
  const std::string n = std::to_string(cloud.size());
  if (format == CloudFormat::ply_ascii) {
    out += "ply\nformat ascii 1.0\nelement vertex " + n +
           "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    for (const auto& p : cloud)
      out += detail::format_double(p.x()) + ' ' + detail::format_double(p.y()) + ' ' +
             detail::format_double(p.z()) + '\n';
    return out;
  }
  const bool binary = format == CloudFormat::pcd_binary;
  out += "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\n"
         "COUNT 1 1 1\nWIDTH " + n + "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS " + n + "\nDATA " +
         (binary ? "binary" : "ascii") + "\n";
  for (const auto& p : cloud) {
    const float v[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z())};
    if (binary) {
      out.append(reinterpret_cast<const char*>(v), sizeof v);
    } else {
      out += detail::format_float(v[0]) + ' ' + detail::format_float(v[1]) + ' ' + detail::format_float(v[2]) + '\n';
    }
  }
  return out;
}

inline CloudFormat format_for_path(const std::string& path, bool binary_pcd = true) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ply") == 0) return CloudFormat::ply_ascii;
  return binary_pcd ? CloudFormat::pcd_binary : CloudFormat::pcd_ascii;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path);
}

inline CloudReadResult load_point_cloud(const std::string& path) { return read_point_cloud(read_file(path)); }

// ---------------------------------------------------------------------------
// JSON helpers

namespace detail {

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(path + key, "missing field");
  return *it;
}

inline double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ValidationError(field, "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(field, "must be finite");
  return d;
}

inline Point3 vec3(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 3) throw ValidationError(field, "must be an array of 3 numbers");
  return {number(v[0], field), number(v[1], field), number(v[2], field)};
}

inline json to_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

inline json quaternion_json(const Eigen::Quaterniond& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

}  // namespace detail

inline json transform_to_json(const RigidTransform& T) {
  return {{"translation", detail::to_json(T.translation())}, {"rotation", detail::quaternion_json(T.quaternion())}};
}

inline RigidTransform transform_from_json(const json& j, const std::string& field = "transform") {
  if (!j.is_object()) throw ValidationError(field, "must be an object");
  const Point3 t = detail::vec3(detail::require(j, "translation", field + "."), field + ".translation");
  const json& q = detail::require(j, "rotation", field + ".");
  if (!q.is_array() || q.size() != 4) throw ValidationError(field + ".rotation", "must be [w, x, y, z]");
  const Eigen::Quaterniond quat(detail::number(q[0], field + ".rotation"), detail::number(q[1], field + ".rotation"),
                                detail::number(q[2], field + ".rotation"), detail::number(q[3], field + ".rotation"));
  if (std::abs(quat.norm() - 1.0) > 1e-6) throw ValidationError(field + ".rotation", "quaternion must have unit norm");
  return {quat, t};
}

// ---------------------------------------------------------------------------
// Landmark files

inline constexpr int kLandmarkSchemaVersion = 1;

inline json landmark_to_json(const Landmark& l) {
  json points = json::array();
  for (const auto& p : l.cloud) points.push_back(detail::to_json(p));
  return {
      {"schema_version", kLandmarkSchemaVersion},
      {"name", l.name},
      {"box",
       {{"center", detail::to_json(l.box.center())},
        {"size", detail::to_json(l.box.size)},
        {"orientation", detail::quaternion_json(l.box.pose.quaternion())}}},
      {"points", std::move(points)},
      {"capture_metadata", {{"scene_id", l.metadata.scene_id}, {"created_at", l.metadata.created_at}}},
  };
}

inline Landmark landmark_from_json(const json& doc) {
  using detail::require;
  if (!doc.is_object()) throw ValidationError("", "landmark document must be a JSON object");
  const json& version = require(doc, "schema_version", "");
  if (!version.is_number_integer() || version.get<int>() != kLandmarkSchemaVersion)
    throw ValidationError("schema_version", "unsupported schema version");

  Landmark l;
  const json& name = require(doc, "name", "");
  if (!name.is_string() || name.get<std::string>().empty()) throw ValidationError("name", "must be a non-empty string");
  l.name = name.get<std::string>();

  const json& box = require(doc, "box", "");
  if (!box.is_object()) throw ValidationError("box", "must be an object");
  const Point3 center = detail::vec3(require(box, "center", "box."), "box.center");
  const Point3 size = detail::vec3(require(box, "size", "box."), "box.size");
  if (size.minCoeff() <= 0.0) throw ValidationError("box.size", "box extent must be positive");
  const json& q = require(box, "orientation", "box.");
  if (!q.is_array() || q.size() != 4) throw ValidationError("box.orientation", "must be [w, x, y, z]");
  const Eigen::Quaterniond quat(detail::number(q[0], "box.orientation"), detail::number(q[1], "box.orientation"),
                                detail::number(q[2], "box.orientation"), detail::number(q[3], "box.orientation"));
  if (std::abs(quat.norm() - 1.0) > 1e-6) throw ValidationError("box.orientation", "quaternion must have unit norm");
  l.box = OrientedBox(RigidTransform(quat, center), size);

  const json& points = require(doc, "points", "");
  if (!points.is_array()) throw ValidationError("points", "must be an array");
  l.cloud.points.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    l.cloud.points.push_back(detail::vec3(points[i], "points[" + std::to_string(i) + "]"));

  const json& meta = require(doc, "capture_metadata", "");
  if (!meta.is_object()) throw ValidationError("capture_metadata", "must be an object");
  const json& scene_id = require(meta, "scene_id", "capture_metadata.");
  const json& created = require(meta, "created_at", "capture_metadata.");
  if (!scene_id.is_string()) throw ValidationError("capture_metadata.scene_id", "must be a string");
  if (!created.is_string()) throw ValidationError("capture_metadata.created_at", "must be a string");
  l.metadata = {scene_id.get<std::string>(), created.get<std::string>()};

  l.validate();
  return l;
}

inline std::string save_landmark(const Landmark& l) { return landmark_to_json(l).dump(2) + "\n"; }

inline Landmark load_landmark(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("landmark JSON: ") + e.what(), e.byte);
  }
  return landmark_from_json(doc);
}

// ---------------------------------------------------------------------------
// Search parameter files

inline json params_to_json(const SearchParams& p) {
  return {
      {"workspace", {{"min", detail::to_json(p.workspace.min)}, {"max", detail::to_json(p.workspace.max)}}},
      {"voxel_leaf", p.voxel_leaf},
      {"sample_fraction", p.sample_fraction},
      {"sample_max", p.sample_max},
      {"nms_radius", p.nms_radius},
      {"error_threshold", p.error_threshold},
      {"seed", p.seed},
      {"icp",
       {{"max_iterations", p.icp.max_iterations},
        {"correspondence_max_distance", p.icp.correspondence_max_distance},
        {"translation_epsilon", p.icp.translation_epsilon},
        {"rotation_epsilon", p.icp.rotation_epsilon},
        {"mse_relative_epsilon", p.icp.mse_relative_epsilon}}},
  };
}

namespace detail {

inline double positive(const json& v, const std::string& key) {
  const double d = number(v, key);
  if (!(d > 0.0)) throw ValidationError(key, "must be > 0");
  return d;
}

inline std::uint64_t count(const json& v, const std::string& key, bool allow_zero) {
  if (!v.is_number_integer()) throw ValidationError(key, "must be an integer");
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (!allow_zero && u == 0) throw ValidationError(key, "must be > 0");
    return u;
  }
  const auto s = v.get<std::int64_t>();
  if (s < 0 || (!allow_zero && s == 0)) throw ValidationError(key, allow_zero ? "must be >= 0" : "must be > 0");
  return static_cast<std::uint64_t>(s);
}

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& prefix) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw ValidationError(prefix + key, "unknown key");
  }
}

}  // namespace detail

/// Overlays the keys present in `j` onto `base`. Unknown keys are rejected.
inline SearchParams apply_params(const json& j, SearchParams base = {}) {
  using namespace detail;
  if (!j.is_object()) throw ValidationError("", "params must be a JSON object");
  reject_unknown(j,
                 {"workspace", "voxel_leaf", "sample_fraction", "sample_max", "nms_radius", "error_threshold", "seed",
                  "icp"},
                 "");
  SearchParams p = std::move(base);
  if (j.contains("workspace")) {
    const json& w = j["workspace"];
    if (!w.is_object()) throw ValidationError("workspace", "must be an object with min and max");
    reject_unknown(w, {"min", "max"}, "workspace.");
    const Point3 lo = w.contains("min") ? vec3(w["min"], "workspace.min") : p.workspace.min;
    const Point3 hi = w.contains("max") ? vec3(w["max"], "workspace.max") : p.workspace.max;
    p.workspace = AxisAlignedRegion(lo, hi);
  }
  if (j.contains("voxel_leaf")) p.voxel_leaf = positive(j["voxel_leaf"], "voxel_leaf");
  if (j.contains("sample_fraction")) {
    const double f = number(j["sample_fraction"], "sample_fraction");
    if (!(f > 0.0 && f <= 1.0)) throw ValidationError("sample_fraction", "must lie in (0, 1]");
    p.sample_fraction = f;
  }
  if (j.contains("sample_max")) p.sample_max = count(j["sample_max"], "sample_max", false);
  if (j.contains("nms_radius")) p.nms_radius = positive(j["nms_radius"], "nms_radius");
  if (j.contains("error_threshold")) p.error_threshold = positive(j["error_threshold"], "error_threshold");
  if (j.contains("seed")) p.seed = count(j["seed"], "seed", true);
  if (j.contains("icp")) {
    const json& icp = j["icp"];
    if (!icp.is_object()) throw ValidationError("icp", "must be an object");
    reject_unknown(icp,
                   {"max_iterations", "correspondence_max_distance", "translation_epsilon", "rotation_epsilon",
                    "mse_relative_epsilon"},
                   "icp.");
    if (icp.contains("max_iterations")) {
      const auto n = count(icp["max_iterations"], "icp.max_iterations", false);
      if (n > 100000) throw ValidationError("icp.max_iterations", "must be <= 100000");
      p.icp.max_iterations = static_cast<int>(n);
    }
    if (icp.contains("correspondence_max_distance"))
      p.icp.correspondence_max_distance = positive(icp["correspondence_max_distance"], "icp.correspondence_max_distance");
    if (icp.contains("translation_epsilon"))
      p.icp.translation_epsilon = positive(icp["translation_epsilon"], "icp.translation_epsilon");
    if (icp.contains("rotation_epsilon")) p.icp.rotation_epsilon = positive(icp["rotation_epsilon"], "icp.rotation_epsilon");
    if (icp.contains("mse_relative_epsilon"))
      p.icp.mse_relative_epsilon = positive(icp["mse_relative_epsilon"], "icp.mse_relative_epsilon");
  }
  p.validate();
  return p;
}

inline SearchParams load_params(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("params JSON: ") + e.what(), e.byte);
  }
  return apply_params(doc);
}

inline std::string save_params(const SearchParams& p) { return params_to_json(p).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Match reports

struct LandmarkMatches {
  std::string landmark;
  std::vector<Match> matches;
};

inline json match_to_json(const Match& m) {
  return {{"rank", m.rank},
          {"landmark", m.landmark_name},
          {"error", m.error},
          {"transform", transform_to_json(m.transform)},
          {"centroid", detail::to_json(m.centroid)},
          {"seed_point", detail::to_json(m.seed_point)},
          {"icp_converged", m.icp_converged},
          {"ordinal", m.ordinal}};
}

inline Match match_from_json(const json& j) {
  using detail::require;
  if (!j.is_object()) throw ValidationError("match", "must be an object");
  Match m;
  m.rank = detail::count(require(j, "rank", "match."), "match.rank", true);
  const json& name = require(j, "landmark", "match.");
  if (!name.is_string()) throw ValidationError("match.landmark", "must be a string");
  m.landmark_name = name.get<std::string>();
  m.error = detail::number(require(j, "error", "match."), "match.error");
  if (m.error < 0.0) throw ValidationError("match.error", "must be >= 0");
  m.transform = transform_from_json(require(j, "transform", "match."), "match.transform");
  m.centroid = detail::vec3(require(j, "centroid", "match."), "match.centroid");
  m.seed_point = detail::vec3(require(j, "seed_point", "match."), "match.seed_point");
  const json& converged = require(j, "icp_converged", "match.");
  if (!converged.is_boolean()) throw ValidationError("match.icp_converged", "must be a boolean");
  m.icp_converged = converged.get<bool>();
  m.ordinal = detail::count(require(j, "ordinal", "match."), "match.ordinal", true);
  return m;
}

inline json match_report_to_json(const std::string& scene, const SearchParams& params,
                                 const std::vector<LandmarkMatches>& results) {
  json out = json::array();
  for (const auto& r : results) {
    json matches = json::array();
    for (const auto& m : r.matches) matches.push_back(match_to_json(m));
    out.push_back({{"landmark", r.landmark}, {"matches", std::move(matches)}});
  }
  return {{"scene", scene}, {"seed", params.seed}, {"params", params_to_json(params)}, {"results", std::move(out)}};
}

inline std::vector<LandmarkMatches> match_report_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("", "report must be an object");
  const json& results = detail::require(doc, "results", "");
  if (!results.is_array()) throw ValidationError("results", "must be an array");
  std::vector<LandmarkMatches> out;
  for (const auto& r : results) {
    LandmarkMatches lm;
    const json& name = detail::require(r, "landmark", "results.");
    if (!name.is_string()) throw ValidationError("results.landmark", "must be a string");
    lm.landmark = name.get<std::string>();
    const json& matches = detail::require(r, "matches", "results.");
    if (!matches.is_array()) throw ValidationError("results.matches", "must be an array");
    for (const auto& m : matches) lm.matches.push_back(match_from_json(m));
    out.push_back(std::move(lm));
  }
  return out;
}

}  // namespace landmarks::io
