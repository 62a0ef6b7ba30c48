#pragma once

// Minimal leveled logging to stderr. The level comes from EMOS_LOG_LEVEL
// (error, warn, info, debug; default warn).

#include <string_view>

namespace emos::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

Level level();
void set_level(Level l);
bool enabled(Level l);

void write(Level l, std::string_view message);

inline void error(std::string_view m) { write(Level::error, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void debug(std::string_view m) { write(Level::debug, m); }

}  // namespace emos::log
