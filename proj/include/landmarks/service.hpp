#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

// Eigen must come first: httplib pulls in <resolv.h>, whose _res macro
// collides with Eigen parameter names.
#include "landmarks/commands.hpp"
#include "landmarks/io.hpp"
#include "landmarks/search.hpp"
#include "landmarks/spatial_index.hpp"

#include "httplib.h"

namespace landmarks::service {

using io::json;

/// HTTP failure carrying its status code.
class HttpError : public Error {
 public:
  HttpError(int status, const std::string& message) : Error(message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// What the capture UI talks to: one immutable scene plus a landmark store
/// persisted as JSON files under `landmark_dir`.
class ServeState {
 public:
  ServeState(PointCloud scene, std::string scene_id, std::filesystem::path landmark_dir, SearchParams defaults = {})
      : scene_(std::make_shared<const PointCloud>(std::move(scene))),
        scene_id_(std::move(scene_id)),
        landmark_dir_(std::move(landmark_dir)),
        defaults_(std::move(defaults)) {
    std::filesystem::create_directories(landmark_dir_);
    for (const auto& entry : std::filesystem::directory_iterator(landmark_dir_)) {
      if (entry.path().extension() != ".json") continue;
      Landmark l = io::load_landmark(io::read_file(entry.path().string()));
      std::string name = l.name;
      landmarks_.emplace(std::move(name), std::make_shared<const Landmark>(std::move(l)));
    }
  }

  const PointCloud& scene() const noexcept { return *scene_; }
  const std::string& scene_id() const noexcept { return scene_id_; }

  json scene_json(double leaf) const {
    if (!(leaf > 0.0)) throw HttpError(400, "leaf must be positive");
    const PointCloud down = voxel_downsample(*scene_, leaf);
    json points = json::array();
    for (const auto& p : down) points.push_back({p.x(), p.y(), p.z()});
    return {{"scene", scene_id_}, {"leaf", leaf}, {"count", down.size()}, {"points", std::move(points)}};
  }

  static json summary(const Landmark& l) {
    return {{"name", l.name},
            {"point_count", l.cloud.size()},
            {"box", io::landmark_to_json(l)["box"]},
            {"capture_metadata", {{"scene_id", l.metadata.scene_id}, {"created_at", l.metadata.created_at}}}};
  }

  json create_landmark(const json& body) {
    if (!body.is_object()) throw HttpError(400, "body must be a JSON object");
    const auto name_it = body.find("name");
    if (name_it == body.end() || !name_it->is_string() || name_it->get<std::string>().empty())
      throw HttpError(400, "name: must be a non-empty string");
    const std::string name = name_it->get<std::string>();
    if (name.find_first_of("/\\") != std::string::npos || name.front() == '.')
      throw HttpError(400, "name: must not contain path separators or start with '.'");
    const OrientedBox box = box_from_json(body.contains("box") ? body["box"] : json());

    Landmark l = commands::capture(*scene_, box, name, scene_id_, commands::utc_now_iso8601());
    std::unique_lock lock(mutex_);
    if (landmarks_.count(name)) throw HttpError(400, "name: landmark '" + name + "' already exists");
    io::write_file((landmark_dir_ / (name + ".json")).string(), io::save_landmark(l));
    auto stored = std::make_shared<const Landmark>(std::move(l));
    landmarks_.emplace(name, stored);
    return summary(*stored);
  }

  json list_landmarks() const {
    std::shared_lock lock(mutex_);
    json out = json::array();
    for (const auto& [name, l] : landmarks_) out.push_back(summary(*l));
    return out;
  }

  std::shared_ptr<const Landmark> landmark(const std::string& name) const {
    std::shared_lock lock(mutex_);
    const auto it = landmarks_.find(name);
    if (it == landmarks_.end()) throw HttpError(404, "unknown landmark '" + name + "'");
    return it->second;
  }

  json preview(const std::string& name, const std::string& box_text) const {
    OrientedBox box;
    if (box_text.empty()) {
      box = landmark(name)->box;
    } else {
      try {
        box = commands::parse_box(box_text);
      } catch (const commands::UsageError& e) {
        throw HttpError(400, e.what());
      }
    }
    const PointCloud cropped = crop_to_box(*scene_, box);
    json points = json::array();
    for (const auto& p : cropped) points.push_back({p.x(), p.y(), p.z()});
    return {{"count", cropped.size()}, {"points", std::move(points)}};
  }

  json search(const json& body) const {
    if (!body.is_object()) throw HttpError(400, "body must be a JSON object");
    const auto name_it = body.find("landmark_name");
    if (name_it == body.end() || !name_it->is_string()) throw HttpError(400, "landmark_name: must be a string");
    const auto l = landmark(name_it->get<std::string>());
    SearchParams params = defaults_;
    if (body.contains("params")) params = io::apply_params(body["params"], params);
    if (body.contains("seed")) params.seed = io::detail::count(body["seed"], "seed", true);
    const auto matches = find_landmark(*scene_, *l, params);
    json out = json::array();
    for (const auto& m : matches) out.push_back(io::match_to_json(m));
    return {{"landmark", l->name}, {"seed", params.seed}, {"matches", std::move(out)}};
  }

 private:
  static OrientedBox box_from_json(const json& j) {
    if (!j.is_object()) throw HttpError(400, "box: must be an object with center and size");
    const Point3 center = io::detail::vec3(io::detail::require(j, "center", "box."), "box.center");
    const Point3 size = io::detail::vec3(io::detail::require(j, "size", "box."), "box.size");
    if (size.minCoeff() <= 0.0) throw ValidationError("box.size", "box extent must be positive");
    Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
    if (j.contains("orientation")) {
      const json& o = j["orientation"];
      if (!o.is_array() || o.size() != 4) throw ValidationError("box.orientation", "must be [w, x, y, z]");
      q = Eigen::Quaterniond(io::detail::number(o[0], "box.orientation"), io::detail::number(o[1], "box.orientation"),
                             io::detail::number(o[2], "box.orientation"), io::detail::number(o[3], "box.orientation"));
      if (std::abs(q.norm() - 1.0) > 1e-6) throw ValidationError("box.orientation", "quaternion must have unit norm");
    }
    return {RigidTransform(q, center), size};
  }

  std::shared_ptr<const PointCloud> scene_;
  std::string scene_id_;
  std::filesystem::path landmark_dir_;
  SearchParams defaults_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const Landmark>> landmarks_;
};

namespace detail {

inline void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    reply(res, 200, fn());
  } catch (const HttpError& e) {
    reply(res, e.status(), {{"error", e.what()}});
  } catch (const ValidationError& e) {
    reply(res, 400, {{"error", e.what()}});
  } catch (const ParseError& e) {
    reply(res, 400, {{"error", e.what()}});
  } catch (const json::exception& e) {
    reply(res, 400, {{"error", e.what()}});
  } catch (const std::exception& e) {
    reply(res, 500, {{"error", e.what()}});
  }
}

inline json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw HttpError(400, std::string("invalid JSON body: ") + e.what());
  }
}

}  // namespace detail

/// Registers the /api routes on `server`. `state` must outlive the server.
inline void mount(httplib::Server& server, ServeState& state) {
  server.Get("/api/scene", [&state](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      double leaf = 0.005;
      if (req.has_param("leaf")) {
        try {
          leaf = std::stod(req.get_param_value("leaf"));
        } catch (const std::exception&) {
          throw HttpError(400, "leaf must be a number");
        }
      }
      return state.scene_json(leaf);
    });
  });
  server.Get("/api/landmarks", [&state](const httplib::Request&, httplib::Response& res) {
    detail::guarded(res, [&] { return state.list_landmarks(); });
  });
  server.Post("/api/landmarks", [&state](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] { return state.create_landmark(detail::parse_body(req)); });
  });
  server.Get(R"(/api/landmarks/([^/]+)/preview)", [&state](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      return state.preview(req.matches[1].str(), req.has_param("box") ? req.get_param_value("box") : std::string());
    });
  });
  server.Post("/api/search", [&state](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] { return state.search(detail::parse_body(req)); });
  });
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
}

}  // namespace landmarks::service
