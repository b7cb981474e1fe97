#include "mpr/core/error.hpp"

namespace mpr {

std::string_view to_string(const error_category category) {
    switch (category) {
        case error_category::io: return "io";
        case error_category::format: return "format";
        case error_category::invalid_argument: return "invalid_argument";
        case error_category::dimension: return "dimension";
        case error_category::degenerate: return "degenerate";
        case error_category::provider: return "provider";
        case error_category::config: return "config";
        case error_category::divergence: return "divergence";
    }
    return "unknown";
}

error::error(const error_category category, const std::string& message)
    : std::runtime_error(message), category_(category) {}

} // namespace mpr
