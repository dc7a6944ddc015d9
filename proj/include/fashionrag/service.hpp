#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include "fashionrag/app.hpp"
#include "fashionrag/error.hpp"

namespace httplib {
class Server;
}

namespace fashionrag::app {

struct ServiceOptions {
  // Request image_path values resolve under this directory and may not leave it.
  std::filesystem::path image_root = ".";
  // Sidecar used when a request carries no query_embedding.
  retrieval::QueryEmbeddings queries;
};

struct ServiceResponse {
  int status = 200;
  std::string body;
};

// HTTP status used for an error code.
int http_status(ErrorCode code) noexcept;

// GET /health and POST /v1/post over a shared, read-only Engine.
class Service {
 public:
  Service(const Engine& engine, ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ServiceResponse health() const;
  // Body: {"image_id", "image_path", "detections": [...], "query_embedding":
  // optional number array or base64 little-endian float32}.
  ServiceResponse post(std::string_view body) const;

  // Blocks until stop() is called from elsewhere.
  void listen(const std::string& host, int port);
  // Runs in a background thread; port 0 picks a free port. Returns the port.
  int start(const std::string& host, int port);
  void stop();

 private:
  void mount();

  const Engine& engine_;
  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace fashionrag::app
