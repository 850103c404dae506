// Ward service: serves the /v1/ API until interrupted.
//
// Flags fall back to NOSTRA_BIND, NOSTRA_PORT, NOSTRA_DATA_DIR,
// NOSTRA_CORS_ORIGIN and NOSTRA_TOKEN.

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <cstdlib>
#include <iostream>

#include "nostra/service.hpp"

namespace {

httplib::Server* g_server = nullptr;

void stop(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ward service for infection-source attribution"};
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::string data_dir;
  nostra::ServiceOptions options;
  app.add_option("--bind", bind, "Bind address")->envname("NOSTRA_BIND");
  app.add_option("--port", port, "Port")->envname("NOSTRA_PORT");
  app.add_option("--data-dir", data_dir, "Directory for ward event logs (in-memory if empty)")
      ->envname("NOSTRA_DATA_DIR");
  app.add_option("--cors-origin", options.cors_origin, "Allowed dashboard origin")->envname("NOSTRA_CORS_ORIGIN");
  app.add_option("--token", options.bearer_token, "Static bearer token (disabled if empty)")->envname("NOSTRA_TOKEN");
  CLI11_PARSE(app, argc, argv);

  if (!data_dir.empty()) options.data_dir = data_dir;
  try {
    nostra::WardStore store(options);
    httplib::Server server;
    nostra::register_routes(server, store);
    g_server = &server;
    std::signal(SIGINT, stop);
    std::signal(SIGTERM, stop);
    std::cerr << "listening on " << bind << ":" << port << "\n";
    if (!server.listen(bind, port)) {
      std::cerr << "error: cannot listen on " << bind << ":" << port << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
