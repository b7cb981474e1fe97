#include "mpr/core/grid.hpp"

#include <algorithm>
#include <cmath>

#include "mpr/core/error.hpp"

namespace mpr {

double sample_bilinear(const grid_d& grid, double u, double v) {
    const auto rows = static_cast<int>(grid.rows());
    const auto cols = static_cast<int>(grid.cols());
    u = std::clamp(u, 0.0, static_cast<double>(cols - 1));
    v = std::clamp(v, 0.0, static_cast<double>(rows - 1));
    const int x0 = std::min(static_cast<int>(std::floor(u)), cols - 1);
    const int y0 = std::min(static_cast<int>(std::floor(v)), rows - 1);
    const int x1 = std::min(x0 + 1, cols - 1);
    const int y1 = std::min(y0 + 1, rows - 1);
    const double fx = u - x0;
    const double fy = v - y0;
    const double top = grid(y0, x0) * (1.0 - fx) + grid(y0, x1) * fx;
    const double bottom = grid(y1, x0) * (1.0 - fx) + grid(y1, x1) * fx;
    return top * (1.0 - fy) + bottom * fy;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw error(error_category::invalid_argument, "median of an empty collection");
    }
    const auto n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (n % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

int binary_mask::area() const {
    return static_cast<int>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

} // namespace mpr
