#include <cool/log.hpp>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>

namespace cool {

std::shared_ptr<spdlog::logger> logger()
{
    static const std::shared_ptr<spdlog::logger> instance = [] {
        auto l = std::make_shared<spdlog::logger>("cool", std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
        l->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
        spdlog::level::level_enum level = spdlog::level::info;
        if (const char* env = std::getenv("COOL_LOG")) {
            level = spdlog::level::from_str(env);
            // from_str maps unknown names to off; keep info instead
            if (level == spdlog::level::off && std::string_view(env) != "off") level = spdlog::level::info;
        }
        l->set_level(level);
        return l;
    }();
    return instance;
}

} // namespace cool
