#pragma once

#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fashionrag {

// Structured run log. Every entry is kept in memory and, when a sink is
// attached, written immediately as one JSON line.
class RunLog {
 public:
  struct Entry {
    std::string level;
    std::string event;
    nlohmann::json data;
  };

  RunLog() = default;
  explicit RunLog(std::ostream* sink) : sink_(sink) {}

  void info(std::string event, nlohmann::json data = nlohmann::json::object());
  void warn(std::string event, nlohmann::json data = nlohmann::json::object());

  std::vector<Entry> entries() const;
  std::vector<Entry> warnings() const;
  bool has_event(const std::string& event) const;

 private:
  void record(std::string level, std::string event, nlohmann::json data);

  std::ostream* sink_ = nullptr;
  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
};

}  // namespace fashionrag
