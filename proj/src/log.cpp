#include "steereval/log.hpp"

#include <chrono>
#include <iostream>

#include "steereval/errors.hpp"

namespace steereval {

EventLog::EventLog(const std::string& file_path) {
  if (!file_path.empty()) {
    file_ = std::make_unique<std::ofstream>(file_path, std::ios::app);
    if (!*file_) throw Error(Errc::io_error, "cannot open log file " + file_path);
  }
}

void EventLog::emit(const std::string& event, nlohmann::json fields) {
  fields["event"] = event;
  fields["ts_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
  std::lock_guard lock(mutex_);
  if (file_) {
    *file_ << fields.dump() << '\n';
    file_->flush();
  } else {
    std::cerr << fields.dump() << '\n';
  }
}

}  // namespace steereval
