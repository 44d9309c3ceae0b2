#include "confkit/service.hpp"

#include <stdexcept>
#include <thread>

#include <httplib.h>

#include "confkit/core.hpp"

namespace confkit::service {

struct RouteServer::Impl {
  LlmBackend& llm;
  RagPipeline& rag;
  router::RouteOptions options;
  httplib::Server server;
  std::thread worker;

  Impl(LlmBackend& l, RagPipeline& r, router::RouteOptions o)
      : llm(l), rag(r), options(std::move(o)) {
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"status\":\"ok\"}", "application/json");
    });
    server.Post("/route", [this](const httplib::Request& req, httplib::Response& res) {
      json body;
      Question question;
      try {
        body = json::parse(req.body);
        question = question_from_json(body);
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        return;
      }
      try {
        RouterOutcome outcome = router::route(question, llm, rag, options);
        res.set_content(to_json(outcome).dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      }
    });
  }
};

RouteServer::RouteServer(LlmBackend& llm, RagPipeline& rag, router::RouteOptions options)
    : impl_(std::make_unique<Impl>(llm, rag, std::move(options))) {}

RouteServer::~RouteServer() { stop(); }

int RouteServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) {
      throw std::runtime_error("failed to bind " + host + " to any port");
    }
  } else if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("failed to bind " + host + ":" + std::to_string(port));
  }
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void RouteServer::stop() {
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

bool RouteServer::running() const { return impl_->server.is_running(); }

}  // namespace confkit::service
