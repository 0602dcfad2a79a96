#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace chorus {

// Verbosity controlled by the CHORUS_LOG env var: error, warn, info, debug.
enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_level() {
    static LogLevel lvl = [] {
        const char* v = std::getenv("CHORUS_LOG");
        if (!v) return LogLevel::Warn;
        if (std::strcmp(v, "error") == 0) return LogLevel::Error;
        if (std::strcmp(v, "warn") == 0) return LogLevel::Warn;
        if (std::strcmp(v, "info") == 0) return LogLevel::Info;
        if (std::strcmp(v, "debug") == 0) return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return lvl;
}

inline void log_line(LogLevel lvl, const std::string& msg) {
    if (lvl > log_level()) return;
    static const char* tags[] = {"error", "warn", "info", "debug"};
    std::fprintf(stderr, "[chorus:%s] %s\n", tags[static_cast<int>(lvl)], msg.c_str());
}

inline void log_error(const std::string& m) { log_line(LogLevel::Error, m); }
inline void log_warn(const std::string& m) { log_line(LogLevel::Warn, m); }
inline void log_info(const std::string& m) { log_line(LogLevel::Info, m); }
inline void log_debug(const std::string& m) { log_line(LogLevel::Debug, m); }

} // namespace chorus
