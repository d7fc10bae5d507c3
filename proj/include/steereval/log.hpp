#pragma once

#include <fstream>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

namespace steereval {

// Line-oriented JSON event log. One instance per run; safe for concurrent
// writers. Events go to stderr unless a file path is given.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(const std::string& file_path);

  void emit(const std::string& event, nlohmann::json fields);

 private:
  std::mutex mutex_;
  std::unique_ptr<std::ofstream> file_;
};

}  // namespace steereval
