#include "sictf/log.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>

namespace sictf::log {

namespace {

std::optional<Level> g_override;

Level from_env() {
    const char* v = std::getenv("SICTF_LOG");
    if (!v) return Level::Info;
    if (std::strcmp(v, "debug") == 0) return Level::Debug;
    if (std::strcmp(v, "info") == 0) return Level::Info;
    if (std::strcmp(v, "warn") == 0) return Level::Warn;
    if (std::strcmp(v, "error") == 0) return Level::Error;
    if (std::strcmp(v, "off") == 0) return Level::Off;
    return Level::Info;
}

const char* name(Level lvl) {
    switch (lvl) {
        case Level::Debug: return "debug";
        case Level::Info: return "info";
        case Level::Warn: return "warn";
        case Level::Error: return "error";
        default: return "?";
    }
}

}  // namespace

Level threshold() {
    if (g_override) return *g_override;
    static Level env_level = from_env();
    return env_level;
}

void set_threshold(Level lvl) { g_override = lvl; }

void emit(Level lvl, const std::string& stage, const std::string& msg) {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    double secs = std::chrono::duration<double>(clock::now() - start).count();
    std::fprintf(stderr, "[%8.3fs] %-5s %s: %s\n", secs, name(lvl), stage.c_str(),
                 msg.c_str());
}

}  // namespace sictf::log
