#include "fashionrag/log.hpp"

#include <algorithm>

namespace fashionrag {

void RunLog::info(std::string event, nlohmann::json data) {
  record("info", std::move(event), std::move(data));
}

void RunLog::warn(std::string event, nlohmann::json data) {
  record("warn", std::move(event), std::move(data));
}

void RunLog::record(std::string level, std::string event, nlohmann::json data) {
  std::lock_guard lock(mutex_);
  if (sink_ != nullptr) {
    nlohmann::json line{{"level", level}, {"event", event}};
    if (!data.is_null() && !data.empty()) line["data"] = data;
    *sink_ << line.dump() << '\n';
    sink_->flush();
  }
  entries_.push_back({std::move(level), std::move(event), std::move(data)});
}

std::vector<RunLog::Entry> RunLog::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::vector<RunLog::Entry> RunLog::warnings() const {
  std::lock_guard lock(mutex_);
  std::vector<Entry> out;
  std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
               [](const Entry& e) { return e.level == "warn"; });
  return out;
}

bool RunLog::has_event(const std::string& event) const {
  std::lock_guard lock(mutex_);
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.event == event; });
}

}  // namespace fashionrag
