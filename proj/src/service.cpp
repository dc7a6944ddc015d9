#include "fashionrag/service.hpp"

#include <httplib.h>

#include <bit>
#include <cstring>

#include "fashionrag/error.hpp"

namespace fashionrag::app {

namespace {

namespace fs = std::filesystem;

ServiceResponse error_response(ErrorCode code, const std::string& detail) {
  return {http_status(code), nlohmann::json{{"error", to_string(code)}, {"detail", detail}}.dump()};
}

retrieval::Embedding embedding_from_request(const nlohmann::json& value) {
  if (value.is_array()) {
    std::vector<double> v;
    v.reserve(value.size());
    for (const auto& x : value) {
      if (!x.is_number()) throw Error(ErrorCode::parse_error, "query_embedding entries must be numbers");
      v.push_back(x.get<double>());
    }
    return retrieval::normalize(v);
  }
  if (value.is_string()) {
    const auto bytes = base64_decode(value.get<std::string>());
    if (!bytes) throw Error(ErrorCode::parse_error, "query_embedding is not valid base64");
    if (bytes->empty() || bytes->size() % 4 != 0) {
      throw Error(ErrorCode::parse_error, "query_embedding must hold whole float32 values");
    }
    std::vector<float> v(bytes->size() / 4);
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 3; b >= 0; --b) bits = (bits << 8) | (*bytes)[i * 4 + static_cast<std::size_t>(b)];
      v[i] = std::bit_cast<float>(bits);
    }
    return retrieval::normalize(std::span<const float>(v));
  }
  throw Error(ErrorCode::parse_error, "query_embedding must be an array or a base64 string");
}

fs::path resolve_under(const fs::path& root, const std::string& relative) {
  const fs::path p = fs::path(relative).lexically_normal();
  if (relative.empty() || p.is_absolute() || (!p.empty() && *p.begin() == "..")) {
    throw Error(ErrorCode::missing_image, "image_path must be a relative path inside the image root");
  }
  return root / p;
}

}  // namespace

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse_error:
    case ErrorCode::length_mismatch:
    case ErrorCode::duplicate_id:
      return 400;
    case ErrorCode::missing_image:
    case ErrorCode::missing_embedding:
      return 404;
    case ErrorCode::degenerate_input:
    case ErrorCode::invalid_embedding:
    case ErrorCode::dimension_mismatch:
      return 422;
    default:
      return 500;
  }
}

Service::Service(const Engine& engine, ServiceOptions options)
    : engine_(engine), options_(std::move(options)) {}

Service::~Service() { stop(); }

ServiceResponse Service::health() const {
  return {200, nlohmann::json{{"status", "ok"}, {"index_size", engine_.index().size()}}.dump()};
}

ServiceResponse Service::post(std::string_view body) const {
  try {
    const auto req = nlohmann::json::parse(body, nullptr, false);
    if (req.is_discarded() || !req.is_object()) {
      throw Error(ErrorCode::parse_error, "request body must be a JSON object");
    }
    if (!req.contains("image_id") || !req["image_id"].is_string()) {
      throw Error(ErrorCode::parse_error, "image_id (string) is required");
    }
    if (!req.contains("image_path") || !req["image_path"].is_string()) {
      throw Error(ErrorCode::missing_image, "image_path (string) is required");
    }
    detect::DetectionsEntry entry;
    entry.image_id = req["image_id"].get<std::string>();
    entry.image_path = req["image_path"].get<std::string>();
    if (req.contains("detections")) entry.detections = detect::detections_from_json(req["detections"]);

    const auto image = read_image(resolve_under(options_.image_root, entry.image_path));
    const auto query = req.contains("query_embedding") && !req["query_embedding"].is_null()
                           ? embedding_from_request(req["query_embedding"])
                           : options_.queries.at(entry.image_id);

    RunLog log;
    const auto record = run_pipeline(image, entry, query, engine_, log);
    auto out = to_json(record, true);
    nlohmann::json warnings = nlohmann::json::array();
    for (const auto& w : log.warnings()) warnings.push_back(w.event);
    out["warnings"] = std::move(warnings);
    return {200, out.dump()};
  } catch (const Error& e) {
    return error_response(e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_response(ErrorCode::parse_error, e.what());
  }
}

void Service::mount() {
  server_ = std::make_unique<httplib::Server>();
  server_->Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    const auto r = health();
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  server_->Post("/v1/post", [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = post(req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string detail = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      detail = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(nlohmann::json{{"error", "internal"}, {"detail", detail}}.dump(), "application/json");
  });
}

void Service::listen(const std::string& host, int port) {
  mount();
  if (!server_->listen(host, port)) {
    throw Error(ErrorCode::io_error, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

int Service::start(const std::string& host, int port) {
  mount();
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::io_error, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace fashionrag::app
