#include "ppgage/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace ppgage::log {

void init_from_env() {
  auto logger = spdlog::get("ppgage");
  if (!logger) logger = spdlog::stderr_color_mt("ppgage");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("PPGAGE_LOG")) level = spdlog::level::from_str(env);
  spdlog::set_level(level);
}

void set_level(spdlog::level::level_enum level) { spdlog::set_level(level); }

}  // namespace ppgage::log
