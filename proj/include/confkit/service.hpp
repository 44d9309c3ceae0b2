#pragma once

// Minimal HTTP front-end for the router: POST /route takes a question and
// returns the routed answer, GET /healthz reports liveness.

#include <cstdint>
#include <memory>
#include <string>

#include "confkit/backend.hpp"
#include "confkit/router.hpp"

namespace confkit::service {

class RouteServer {
 public:
  /// Backends must outlive the server. Routing options are fixed at
  /// construction.
  RouteServer(LlmBackend& llm, RagPipeline& rag, router::RouteOptions options);
  ~RouteServer();

  RouteServer(const RouteServer&) = delete;
  RouteServer& operator=(const RouteServer&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port; the
  /// actual port is returned. Throws if the bind fails.
  int start(const std::string& host, int port);

  void stop();

  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace confkit::service
