#include "mpr/depth/densification.hpp"

#include <cmath>

#include "mpr/core/error.hpp"

namespace mpr::depth {

anchor_set collect_anchors(const relative_depth_map& relative, const point_cloud& cloud, const calibration& calib) {
    const image_size size{static_cast<int>(relative.values.rows()), static_cast<int>(relative.values.cols())};
    anchor_set anchors;
    for (const auto& p : project_points(cloud, calib, size)) {
        const double r = sample_bilinear(relative.values, p.pixel.x(), p.pixel.y());
        if (!std::isfinite(r) || !std::isfinite(p.depth) || !(r > 0.0) || !(p.depth > 0.0)) {
            continue;
        }
        anchors.push_back({r, p.depth, p.pixel});
    }
    return anchors;
}

affine_fit fit_scale(const anchor_set& anchors) {
    const auto n = static_cast<double>(anchors.size());
    if (anchors.size() < 2) {
        throw error(error_category::degenerate, "scale fit needs at least two anchors, got " +
                                                    std::to_string(anchors.size()));
    }
    double mean_r = 0.0;
    double mean_a = 0.0;
    for (const auto& p : anchors) {
        mean_r += p.relative;
        mean_a += p.absolute;
    }
    mean_r /= n;
    mean_a /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& p : anchors) {
        const double dr = p.relative - mean_r;
        sxx += dr * dr;
        sxy += dr * (p.absolute - mean_a);
    }
    if (sxx <= 1e-24 * n * (mean_r * mean_r + 1.0)) {
        throw error(error_category::degenerate, "all anchor relative depths are identical");
    }
    const double scale = sxy / sxx;
    return {scale, mean_a - scale * mean_r};
}

dense_metric_depth densify(const relative_depth_map& relative, const double scale, const double offset,
                           const double min_depth_m) {
    if (!std::isfinite(scale) || !std::isfinite(offset)) {
        throw error(error_category::invalid_argument, "densify needs a finite scale and offset");
    }
    dense_metric_depth out;
    out.values = ((relative.values.array() * scale + offset).cwiseMax(min_depth_m)).matrix();
    out.scale = scale;
    out.offset = offset;
    return out;
}

double mean_abs_residual(const anchor_set& anchors, const affine_fit& fit) {
    if (anchors.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& p : anchors) {
        sum += std::abs(fit.scale * p.relative + fit.offset - p.absolute);
    }
    return sum / static_cast<double>(anchors.size());
}

dense_metric_depth estimate_metric_depth(const relative_depth_map& relative, const point_cloud& cloud,
                                         const calibration& calib, const densify_config& config) {
    anchor_set anchors = collect_anchors(relative, cloud, calib);
    affine_fit fit;
    bool degenerate = false;
    try {
        fit = fit_scale(anchors);
        if (config.trimmed_refit) {
            std::vector<double> residuals;
            residuals.reserve(anchors.size());
            for (const auto& p : anchors) {
                residuals.push_back(fit.scale * p.relative + fit.offset - p.absolute);
            }
            const double med = median(residuals);
            std::vector<double> dev;
            dev.reserve(residuals.size());
            for (const double r : residuals) {
                dev.push_back(std::abs(r - med));
            }
            const double mad = median(dev);
            anchor_set kept;
            for (std::size_t i = 0; i < anchors.size(); ++i) {
                if (std::abs(residuals[i]) <= 3.0 * mad) {
                    kept.push_back(anchors[i]);
                }
            }
            if (kept.size() >= 2 && kept.size() < anchors.size()) {
                try {
                    fit = fit_scale(kept);
                    anchors = std::move(kept);
                } catch (const error&) {
                    // keep the untrimmed fit
                }
            }
        }
    } catch (const error& e) {
        if (e.category() != error_category::degenerate) {
            throw;
        }
        degenerate = true;
        fit.offset = 0.0;
        if (anchors.empty()) {
            fit.scale = 1.0;
        } else {
            std::vector<double> r;
            std::vector<double> a;
            for (const auto& p : anchors) {
                r.push_back(p.relative);
                a.push_back(p.absolute);
            }
            fit.scale = median(a) / median(r);
        }
    }
    dense_metric_depth out = densify(relative, fit.scale, fit.offset, config.min_depth_m);
    out.anchor_count = anchors.size();
    out.degenerate = degenerate;
    return out;
}

} // namespace mpr::depth
