#pragma once

#include <functional>
#include <string>

namespace rawcycle {

enum class LogLevel { kInfo, kWarn };

using LogSink = std::function<void(LogLevel, const std::string&)>;

// Default sink writes to stderr. Tests install their own sink to capture
// diagnostics; pass nullptr to restore the default.
void set_log_sink(LogSink sink);

void log_info(const std::string& msg);
void log_warn(const std::string& msg);

}  // namespace rawcycle
