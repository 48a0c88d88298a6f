#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "mapalign/mapalign.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

int fail(const mapalign::Error& e) {
  std::cerr << "error: " << e.code() << ": " << e.what();
  if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
  std::cerr << '\n';
  return 1;
}

int cmd_run(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed) {
  auto doc = mapalign::read_config_document(config_path);
  auto config = mapalign::parse_config(doc, std::filesystem::path(config_path).parent_path());
  if (!out.empty()) config.output = out;
  if (seed) config.seed = *seed;
  const auto files = mapalign::run_pipeline(config);
  std::cout << "wrote " << files.size() << " files to " << config.output.string() << '\n';
  return 0;
}

int cmd_serve(const std::string& config_path, const std::string& host, int port, const std::string& ui_dir,
              const std::string& persist_dir) {
  mapalign::ApiOptions options;
  if (!config_path.empty()) {
    options.defaults = mapalign::read_config_document(config_path);
    options.defaults.erase("output");
    options.base_dir = std::filesystem::path(config_path).parent_path();
  }
  if (!persist_dir.empty()) options.persist_dir = persist_dir;
  options.summarizer = mapalign::SummarizerConfig::from_env();
  mapalign::Api api(options);
  const auto restored = api.restore();
  if (restored == 0 && options.defaults.contains("inputs")) {
    const auto res = api.handle("POST", "/sessions", {}, "{}");
    if (res.status != 201) {
      std::cerr << "error: initial session: " << res.body.dump() << '\n';
      return 1;
    }
    std::cout << "session " << res.body["id"].get<std::string>() << " ready\n";
  }

  mapalign::HttpServer server(api, ui_dir);
  const int bound = server.bind(host, port);
  std::cout << "listening on http://" << host << ':' << bound << '\n' << "port " << bound << std::endl;

  std::signal(SIGTERM, on_signal);
  std::signal(SIGINT, on_signal);
  std::thread watcher([&server] {
    while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
  });
  server.listen();
  g_stop.store(true);
  watcher.join();
  std::cout << "stopped" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compare two embeddings of the same items through aligned mapper graphs."};
  app.set_version_flag("--version", MAPALIGN_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::uint64_t seed_value = 0;
  auto* run = app.add_subcommand("run", "Run the full pipeline and write a report bundle");
  run->add_option("--config", config_path, "JSON or TOML run config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides the config)");
  auto* seed_opt = run->add_option("--seed", seed_value, "Seed (overrides the config)");

  std::string serve_config;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string ui_dir;
  std::string persist_dir;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API and UI assets");
  serve->add_option("--config", serve_config, "Session defaults; creates an initial session when it names inputs")
      ->check(CLI::ExistingFile);
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free port)")->check(CLI::Range(0, 65535));
  serve->add_option("--ui", ui_dir, "Directory of built UI assets");
  serve->add_option("--persist", persist_dir, "Directory for session persistence");

  std::string demo_out;
  std::uint64_t demo_seed = 7;
  auto* demo = app.add_subcommand("make-demo", "Write the synthetic demo fixture and configs");
  demo->add_option("--out", demo_out, "Target directory")->required();
  demo->add_option("--seed", demo_seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, out, *seed_opt ? std::optional<std::uint64_t>(seed_value) : std::nullopt);
    if (*serve) return cmd_serve(serve_config, host, port, ui_dir, persist_dir);
    if (*demo) {
      mapalign::DemoOptions opt;
      opt.seed = demo_seed;
      for (const auto& p : mapalign::write_demo(demo_out, opt)) std::cout << p.string() << '\n';
      return 0;
    }
  } catch (const mapalign::Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
