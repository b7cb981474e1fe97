#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpr {

/// Coarse failure classes. The cli prints the category name as the first
/// token of its single-line error message.
enum class error_category {
    io,
    format,
    invalid_argument,
    dimension,
    degenerate,
    provider,
    config,
    divergence,
};

std::string_view to_string(error_category category);

class error : public std::runtime_error {
public:
    error(error_category category, const std::string& message);

    error_category category() const noexcept { return category_; }

private:
    error_category category_;
};

} // namespace mpr
