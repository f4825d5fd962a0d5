#include "deepclust/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <cstdlib>
#include <memory>

namespace deepclust::logging {

spdlog::logger& logger() {
    static std::shared_ptr<spdlog::logger> instance = [] {
        auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
        auto l = std::make_shared<spdlog::logger>("deepclust", sink);
        l->set_pattern("[%l] %v");
        auto level = spdlog::level::warn;
        if (const char* env = std::getenv("DEEPCLUST_LOG_LEVEL")) {
            level = spdlog::level::from_str(env);
        }
        l->set_level(level);
        return l;
    }();
    return *instance;
}

}  // namespace deepclust::logging
