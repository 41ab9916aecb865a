#include <gtest/gtest.h>

#include <filesystem>
#include <future>
#include <random>
#include <thread>

#include "landmarks/service.hpp"

using namespace landmarks;
using io::json;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) { return std::string(LANDMARKS_DATA_DIR) + "/fixtures/" + name; }

/// Serves the planted fixture scene on a free port for the lifetime of the test.
class Service : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("landmarks_service_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(dir_ / "landmarks");
    fs::copy_file(fixture("knob.json"), dir_ / "landmarks" / "knob.json");
    state_ = std::make_unique<service::ServeState>(io::load_point_cloud(fixture("planted_scene.pcd")).cloud,
                                                   "planted_scene.pcd", dir_ / "landmarks");
    service::mount(server_, *state_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
    fs::remove_all(dir_);
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(120, 0);
    return c;
  }

  fs::path dir_;
  std::unique_ptr<service::ServeState> state_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST_F(Service, SceneHonoursTheLeafOverride) {
  auto c = client();
  const auto fine = c.Get("/api/scene?leaf=0.005");
  const auto coarse = c.Get("/api/scene?leaf=0.02");
  ASSERT_TRUE(fine && coarse);
  ASSERT_EQ(fine->status, 200);
  ASSERT_EQ(coarse->status, 200);
  const json a = json::parse(fine->body), b = json::parse(coarse->body);
  EXPECT_LT(b["count"].get<std::size_t>(), a["count"].get<std::size_t>());
  EXPECT_EQ(b["points"].size(), b["count"].get<std::size_t>());
  EXPECT_EQ(a["scene"], "planted_scene.pcd");
  EXPECT_EQ(json::parse(c.Get("/api/scene")->body)["count"], a["count"]);
  EXPECT_EQ(c.Get("/api/scene?leaf=0")->status, 400);
  EXPECT_EQ(c.Get("/api/scene?leaf=abc")->status, 400);
}

TEST_F(Service, CreateListAndPreviewLandmarks) {
  auto c = client();
  const json body = {{"name", "patch"}, {"box", {{"center", {0.7, 0.3, 0.7}}, {"size", {0.1, 0.1, 0.02}}}}};
  const auto created = c.Post("/api/landmarks", body.dump(), "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 200) << created->body;
  const json summary = json::parse(created->body);
  EXPECT_EQ(summary["name"], "patch");
  EXPECT_GT(summary["point_count"].get<int>(), 0);
  EXPECT_EQ(summary["capture_metadata"]["scene_id"], "planted_scene.pcd");
  EXPECT_TRUE(fs::exists(dir_ / "landmarks" / "patch.json"));

  const json list = json::parse(c.Get("/api/landmarks")->body);
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0]["name"], "knob");
  EXPECT_EQ(list[1]["name"], "patch");

  const auto preview = c.Get("/api/landmarks/patch/preview");
  ASSERT_EQ(preview->status, 200);
  EXPECT_EQ(json::parse(preview->body)["count"], summary["point_count"]);
  const auto live = c.Get("/api/landmarks/patch/preview?box=0.7,0.3,0.7,0.2,0.2,0.02");
  ASSERT_EQ(live->status, 200);
  EXPECT_GT(json::parse(live->body)["count"].get<int>(), summary["point_count"].get<int>());
  EXPECT_EQ(c.Get("/api/landmarks/patch/preview?box=1,2")->status, 400);

  // Duplicates are refused; a restarted store reloads what was persisted.
  EXPECT_EQ(c.Post("/api/landmarks", body.dump(), "application/json")->status, 400);
  service::ServeState reloaded(PointCloud{{{0, 0, 0}}}, "x", dir_ / "landmarks");
  EXPECT_EQ(reloaded.list_landmarks().size(), 2u);
}

TEST_F(Service, ValidationFailuresAreBadRequests) {
  auto c = client();
  const json empty = {{"name", "air"}, {"box", {{"center", {5, 5, 5}}, {"size", {0.1, 0.1, 0.1}}}}};
  const auto r = c.Post("/api/landmarks", empty.dump(), "application/json");
  ASSERT_EQ(r->status, 400);
  EXPECT_NE(json::parse(r->body)["error"].get<std::string>().find("box contains no points"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "landmarks" / "air.json"));

  const json flat = {{"name", "flat"}, {"box", {{"center", {0.7, 0.3, 0.7}}, {"size", {0.1, 0, 0.1}}}}};
  EXPECT_EQ(c.Post("/api/landmarks", flat.dump(), "application/json")->status, 400);
  const json sneaky = {{"name", "../evil"}, {"box", {{"center", {0.7, 0.3, 0.7}}, {"size", {0.1, 0.1, 0.1}}}}};
  EXPECT_EQ(c.Post("/api/landmarks", sneaky.dump(), "application/json")->status, 400);
  EXPECT_EQ(c.Post("/api/landmarks", "{nope", "application/json")->status, 400);
  EXPECT_EQ(c.Post("/api/search", json({{"landmark_name", "knob"}, {"params", {{"sample_fraction", 2}}}}).dump(),
                   "application/json")
                ->status,
            400);
}

TEST_F(Service, UnknownLandmarksAreNotFound) {
  auto c = client();
  const auto preview = c.Get("/api/landmarks/ghost/preview");
  ASSERT_EQ(preview->status, 404);
  EXPECT_TRUE(json::parse(preview->body).contains("error"));
  EXPECT_EQ(c.Post("/api/search", R"({"landmark_name": "ghost"})", "application/json")->status, 404);
}

TEST_F(Service, SearchFindsThePlantedInstance) {
  auto c = client();
  const auto r = c.Post("/api/search", R"({"landmark_name": "knob", "seed": 3})", "application/json");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  const json doc = json::parse(r->body);
  EXPECT_EQ(doc["seed"], 3);
  ASSERT_EQ(doc["matches"].size(), 1u);
  const Match m = io::match_from_json(doc["matches"][0]);
  const json truth = json::parse(io::read_file(fixture("planted_truth.json")));
  const Point3 anchor(truth["centroid"][0], truth["centroid"][1], truth["centroid"][2]);
  EXPECT_LT((m.centroid - anchor).norm(), 0.01);
}

TEST_F(Service, ConcurrentSearchesMatchSequentialOnes) {
  const std::string body = R"({"landmark_name": "knob", "seed": 5, "params": {"sample_max": 200}})";
  const std::string sequential = client().Post("/api/search", body, "application/json")->body;
  std::vector<std::future<std::string>> pending;
  for (int i = 0; i < 4; ++i)
    pending.push_back(std::async(std::launch::async, [&] {
      auto r = client().Post("/api/search", body, "application/json");
      return r ? r->body : std::string();
    }));
  for (auto& f : pending) EXPECT_EQ(f.get(), sequential);
  EXPECT_EQ(state_->scene().size(), io::load_point_cloud(fixture("planted_scene.pcd")).cloud.size());
}
