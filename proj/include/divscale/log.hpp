#pragma once

#include <string_view>

namespace divscale::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

// Process-wide threshold; messages below it are dropped. Default Warn.
void set_level(Level level) noexcept;
Level level() noexcept;

void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);
void error(std::string_view msg);

}  // namespace divscale::log
