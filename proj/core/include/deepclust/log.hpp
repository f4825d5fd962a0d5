#pragma once

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include <utility>

namespace deepclust::logging {

// stderr logger named "deepclust". Level comes from DEEPCLUST_LOG_LEVEL
// (trace, debug, info, warn, error, off); default warn.
spdlog::logger& logger();

template <typename... Args>
void debug(fmt::format_string<Args...> fmt, Args&&... args) {
    logger().debug(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> fmt, Args&&... args) {
    logger().info(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void warn(fmt::format_string<Args...> fmt, Args&&... args) {
    logger().warn(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void error(fmt::format_string<Args...> fmt, Args&&... args) {
    logger().error(fmt, std::forward<Args>(args)...);
}

}  // namespace deepclust::logging
