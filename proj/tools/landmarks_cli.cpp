// Command-line front end: capture landmarks, search scenes, run benchmark
// suites and serve the HTTP API used by the capture UI.

#include "CLI11.hpp"

#include <csignal>
#include <filesystem>
#include <iostream>

#include "landmarks/commands.hpp"
#include "landmarks/io.hpp"
#include "landmarks/service.hpp"
#include "landmarks/synth_eval.hpp"

namespace {

using namespace landmarks;

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

int serve(const std::string& scene_path, const std::string& host, int port, const std::string& landmark_dir,
          const std::string& params_path) {
  const auto scene = io::load_point_cloud(scene_path);
  const SearchParams defaults = params_path.empty() ? SearchParams{} : io::load_params(io::read_file(params_path));
  service::ServeState state(scene.cloud, std::filesystem::path(scene_path).filename().string(), landmark_dir, defaults);

  httplib::Server server;
  service::mount(server, state);
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  std::cerr << "serving " << scene.cloud.size() << " points";
  if (scene.dropped_count) std::cerr << " (" << scene.dropped_count << " non-finite dropped)";
  std::cerr << " on http://" << host << ":" << port << "\n";
  if (!server.listen(host, port)) {
    std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-")
    std::cout << text;
  else
    io::write_file(out_path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Custom landmark capture and localization in point clouds"};
  app.require_subcommand(1);

  commands::CaptureArgs capture;
  auto* cap = app.add_subcommand("capture", "Crop a scene to a box and save it as a landmark");
  cap->add_option("--scene", capture.scene_path, "Scene point cloud (.pcd or .ply)")->required();
  cap->add_option("--box", capture.box, "cx,cy,cz,sx,sy,sz[,qw,qx,qy,qz] in meters")->required();
  cap->add_option("--name", capture.name, "Landmark name")->required();
  cap->add_option("--out", capture.out_path, "Landmark JSON file to write")->required();
  cap->add_option("--created-at", capture.created_at, "ISO-8601 capture time (default: now)");

  commands::FindArgs find;
  std::string find_out;
  std::uint64_t seed = 0;
  auto* fnd = app.add_subcommand("find", "Localize landmarks in a scene");
  fnd->add_option("--scene", find.scene_path, "Scene point cloud (.pcd or .ply)")->required();
  fnd->add_option("--landmark", find.landmark_paths, "Landmark JSON file (repeatable)")->required();
  fnd->add_option("--params", find.params_path, "Search parameter JSON");
  auto* seed_opt = fnd->add_option("--seed", seed, "Sampling seed (overrides params)");
  fnd->add_option("--threads", find.threads, "Worker threads, 0 = all cores")->default_val(1);
  fnd->add_option("--format", find.format, "json or table")->check(CLI::IsMember({"json", "table"}))->default_val("json");
  fnd->add_option("--out", find_out, "Report file (default: stdout)");

  commands::EvalArgs eval;
  auto* evl = app.add_subcommand("eval", "Run a synthetic benchmark suite and report precision/recall");
  evl->add_option("--suite", eval.suite_path, "Suite JSON")->required();
  evl->add_option("--params", eval.params_path, "Search parameter JSON");
  evl->add_option("--out", eval.out_path, "Report JSON (a .txt table is written alongside)");
  evl->add_option("--threads", eval.threads, "Worker threads, 0 = all cores")->default_val(1);

  std::string serve_scene, serve_dir = "landmarks", serve_host = "127.0.0.1", serve_params;
  int port = 8080;
  auto* srv = app.add_subcommand("serve", "Serve the HTTP API for the capture UI");
  srv->add_option("--scene", serve_scene, "Scene point cloud (.pcd or .ply)")->required();
  srv->add_option("--port", port, "TCP port")->default_val(8080);
  srv->add_option("--host", serve_host, "Bind address")->default_val("127.0.0.1");
  srv->add_option("--landmark-dir", serve_dir, "Directory holding landmark JSON files")->default_val("landmarks");
  srv->add_option("--params", serve_params, "Default search parameter JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*cap) {
      const Landmark l = commands::run_capture(capture);
      std::cerr << "captured '" << l.name << "' with " << l.cloud.size() << " points -> " << capture.out_path << "\n";
    } else if (*fnd) {
      if (*seed_opt) find.seed = seed;
      emit(find_out, commands::run_find(find));
    } else if (*evl) {
      const auto result = commands::run_eval(eval);
      std::cout << synth::report_table(result.report);
    } else if (*srv) {
      return serve(serve_scene, serve_host, port, serve_dir, serve_params);
    }
  } catch (const commands::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
