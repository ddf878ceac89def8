#include "rawcycle/log.hpp"

#include <iostream>

namespace rawcycle {

namespace {

void default_sink(LogLevel level, const std::string& msg) {
  std::cerr << (level == LogLevel::kWarn ? "[warn] " : "[info] ") << msg << "\n";
}

LogSink& sink() {
  static LogSink s = default_sink;
  return s;
}

}  // namespace

void set_log_sink(LogSink new_sink) {
  sink() = new_sink ? std::move(new_sink) : default_sink;
}

void log_info(const std::string& msg) { sink()(LogLevel::kInfo, msg); }
void log_warn(const std::string& msg) { sink()(LogLevel::kWarn, msg); }

}  // namespace rawcycle
