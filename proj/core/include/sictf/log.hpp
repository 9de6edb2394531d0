#pragma once

#include <sstream>
#include <string>

namespace sictf::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

// Threshold comes from the SICTF_LOG environment variable
// (debug|info|warn|error|off); default info.
Level threshold();
void set_threshold(Level lvl);

void emit(Level lvl, const std::string& stage, const std::string& msg);

template <typename... Args>
void line(Level lvl, const std::string& stage, Args&&... args) {
    if (lvl < threshold()) return;
    std::ostringstream os;
    (os << ... << args);
    emit(lvl, stage, os.str());
}

template <typename... Args>
void info(const std::string& stage, Args&&... args) {
    line(Level::Info, stage, std::forward<Args>(args)...);
}
template <typename... Args>
void warn(const std::string& stage, Args&&... args) {
    line(Level::Warn, stage, std::forward<Args>(args)...);
}
template <typename... Args>
void debug(const std::string& stage, Args&&... args) {
    line(Level::Debug, stage, std::forward<Args>(args)...);
}

}  // namespace sictf::log
