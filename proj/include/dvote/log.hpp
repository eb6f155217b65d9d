#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace dvote {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

// Level comes from DVOTE_LOG={error|warn|info|debug}; default warn.
inline LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("DVOTE_LOG");
        if (!env) return LogLevel::warn;
        const std::string v(env);
        if (v == "error") return LogLevel::error;
        if (v == "warn") return LogLevel::warn;
        if (v == "info") return LogLevel::info;
        if (v == "debug") return LogLevel::debug;
        return LogLevel::warn;
    }();
    return level;
}

inline void log_msg(LogLevel lvl, const std::string& msg) {
    if (lvl > log_level()) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::fprintf(stderr, "[dvote %s] %s\n", names[static_cast<int>(lvl)], msg.c_str());
}

inline void log_error(const std::string& msg) { log_msg(LogLevel::error, msg); }
inline void log_warn(const std::string& msg) { log_msg(LogLevel::warn, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::debug, msg); }

}  // namespace dvote
