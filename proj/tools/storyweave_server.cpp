#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>

#include "storyweave/error.hpp"
#include "storyweave/http_api.hpp"
#include "storyweave/postprocess.hpp"
#include "storyweave/session.hpp"
#include "storyweave/tasks.hpp"

namespace {

httplib::Server* g_server = nullptr;

void handle_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Story-writing assistant service: builds few-shot prompts, "
               "calls a text generation backend and tracks who wrote what."};

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string backend_url = "mock";
  std::string backend_format = "dialog";
  std::string template_dir = STORYWEAVE_DEFAULT_TEMPLATE_DIR;
  std::string rules_file = STORYWEAVE_DEFAULT_RULES_FILE;
  std::string data_dir;
  int default_top_k = 40;
  int default_candidates = 3;
  int timeout_ms = 30000;
  std::optional<std::uint64_t> seed;

  app.add_option("--host", host, "Address to listen on")->capture_default_str();
  app.add_option("--port", port, "Port to listen on")->capture_default_str();
  app.add_option("--backend-url", backend_url,
                 "Generation endpoint (http://host:port/path) or \"mock\"")
      ->capture_default_str();
  app.add_option("--backend-format", backend_format,
                 "Prompt format the backend expects")
      ->check(CLI::IsMember({"dialog", "flat"}))
      ->capture_default_str();
  app.add_option("--template-dir", template_dir,
                 "Directory holding <task>.tmpl files")
      ->check(CLI::ExistingDirectory)
      ->capture_default_str();
  app.add_option("--rules-file", rules_file, "Meta-text rules file")
      ->check(CLI::ExistingFile)
      ->capture_default_str();
  app.add_option("--data-dir", data_dir,
                 "Where sessions and the interaction corpus are written; "
                 "memory-only when omitted");
  app.add_option("--default-top-k", default_top_k,
                 "top-k forwarded to the backend")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--default-candidates", default_candidates,
                 "Candidates requested per suggestion")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--timeout-ms", timeout_ms, "Backend request timeout")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", seed, "Seed for the mock backend and id generator");

  CLI11_PARSE(app, argc, argv);

  try {
    storyweave::ServiceConfig config;
    if (!data_dir.empty()) config.data_dir = data_dir;
    config.default_params.top_k = default_top_k;
    config.default_params.num_candidates = default_candidates;
    config.default_params.timeout_ms = timeout_ms;
    config.default_params.seed = seed;
    config.id_seed = seed;
    config.default_backend = "default";

    storyweave::SessionService service(
        storyweave::TaskRegistry::load_directory(template_dir),
        storyweave::PostProcessor(
            storyweave::MetaRules::load_file(rules_file)),
        config);
    service.register_backend({"default",
                              storyweave::parse_format(backend_format),
                              backend_url});
    const auto loaded = service.load_all();
    if (!loaded.empty()) {
      std::cerr << "restored " << loaded.size() << " session(s)\n";
    }

    httplib::Server server;
    storyweave::mount_routes(server, service);
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);

    std::cerr << "listening on " << host << ":" << port << " (backend "
              << backend_url << ", " << backend_format << ")\n";
    if (!server.listen(host, port)) {
      std::cerr << "error: could not listen on " << host << ":" << port << "\n";
      return 1;
    }
  } catch (const storyweave::Error& e) {
    std::cerr << "error (" << storyweave::errc_name(e.code()) << "): "
              << e.what() << "\n";
    return 1;
  }
  return 0;
}
