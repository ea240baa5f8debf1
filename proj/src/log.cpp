#include "boclab/log.hpp"

#include <iostream>
#include <mutex>

namespace boclab {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

NoteSink& sink() {
  static NoteSink s = [](const std::string& msg) { std::cerr << "note: " << msg << "\n"; };
  return s;
}

}  // namespace

void set_note_sink(NoteSink s) {
  std::lock_guard lock(sink_mutex());
  sink() = s ? std::move(s) : [](const std::string&) {};
}

void log_note(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  sink()(message);
}

}  // namespace boclab
