#pragma once

// Reference implementations written independently of the library code and
// used only as test oracles.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace oracle {

struct tca_terms {
    double med = 0.0;
    double high = 0.0;
    double cons = 0.0;
    double total = 0.0;
};

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double population_sigma(const std::vector<double>& v) {
    long double mean = 0.0L;
    for (const double x : v) {
        mean += x;
    }
    mean /= static_cast<long double>(v.size());
    long double acc = 0.0L;
    for (const double x : v) {
        acc += (x - mean) * (x - mean);
    }
    return static_cast<double>(std::sqrt(acc / static_cast<long double>(v.size())));
}

/// Median and spread over the whole map, strict threshold count over the sampled values.
inline tca_terms tca(const std::vector<double>& sampled, const std::vector<double>& map, double tau = 0.7,
                     double alpha = 0.1, double eps = 1e-6, std::array<double, 3> lambda = {0.45, 0.45, 0.10}) {
    tca_terms t;
    t.med = median_of(map);
    std::size_t above = 0;
    for (const double c : sampled) {
        above += c > tau ? 1 : 0;
    }
    t.high = static_cast<double>(above) / static_cast<double>(sampled.size());
    t.cons = std::tanh(alpha / (population_sigma(map) + eps));
    t.total = lambda[0] * t.med + lambda[1] * t.high + lambda[2] * t.cons;
    return t;
}

/// Brute-force FAST-9 on a gray image (row-major, width w). A pixel is a
/// corner when some 9 contiguous circle pixels are all brighter than c + t or
/// all darker than c - t; its score is the larger of the summed bright and
/// dark excess over t around the whole circle.
inline int fast_score(const std::vector<int>& gray, int w, int h, int x, int y, int threshold) {
    static const int ring[16][2] = {{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
                                    {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};
    if (x < 3 || y < 3 || x >= w - 3 || y >= h - 3) {
        return 0;
    }
    const int c = gray[y * w + x];
    int p[16];
    for (int i = 0; i < 16; ++i) {
        p[i] = gray[(y + ring[i][1]) * w + (x + ring[i][0])];
    }
    bool corner = false;
    for (int start = 0; start < 16 && !corner; ++start) {
        bool all_bright = true;
        bool all_dark = true;
        for (int k = 0; k < 9; ++k) {
            const int v = p[(start + k) % 16];
            all_bright = all_bright && v > c + threshold;
            all_dark = all_dark && v < c - threshold;
        }
        corner = all_bright || all_dark;
    }
    if (!corner) {
        return 0;
    }
    int bright = 0;
    int dark = 0;
    for (int i = 0; i < 16; ++i) {
        if (p[i] > c + threshold) {
            bright += p[i] - c - threshold;
        }
        if (p[i] < c - threshold) {
            dark += c - p[i] - threshold;
        }
    }
    return std::max(bright, dark);
}

struct corner {
    int x;
    int y;
    int score;
};

/// Every corner that is the strict maximum of its 3x3 neighbourhood, with ties
/// going to the earliest pixel in raster order, sorted by descending score
/// then raster order.
inline std::vector<corner> fast_corners(const std::vector<int>& gray, int w, int h, int threshold) {
    std::vector<int> s(gray.size(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            s[y * w + x] = fast_score(gray, w, h, x, y, threshold);
        }
    }
    std::vector<corner> out;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int v = s[y * w + x];
            if (v == 0) {
                continue;
            }
            bool keep = true;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) {
                        continue;
                    }
                    const int n = s[ny * w + nx];
                    const bool before = ny * w + nx < y * w + x;
                    if (n > v || (n == v && before)) {
                        keep = false;
                    }
                }
            }
            if (keep) {
                out.push_back({x, y, v});
            }
        }
    }
    std::sort(out.begin(), out.end(), [w](const corner& a, const corner& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.y * w + a.x < b.y * w + b.x;
    });
    return out;
}

/// Indices of the k nearest rows by Euclidean distance, ties by index.
inline std::vector<std::pair<std::size_t, double>> knn(const std::vector<Eigen::VectorXd>& rows,
                                                       const Eigen::VectorXd& probe, std::size_t k) {
    std::vector<std::pair<std::size_t, double>> all;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < probe.size(); ++j) {
            const double d = rows[i](j) - probe(j);
            acc += d * d;
        }
        all.emplace_back(i, std::sqrt(acc));
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    all.resize(std::min(k, all.size()));
    return all;
}

/// Central difference derivative of f at each coordinate of x.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                        double step = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double keep = x(i);
        x(i) = keep + step;
        const double up = f(x);
        x(i) = keep - step;
        const double down = f(x);
        x(i) = keep;
        g(i) = (up - down) / (2.0 * step);
    }
    return g;
}

/// Relative error with an absolute floor on the scale.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-6) {
    const double scale = std::max({a.norm(), b.norm(), floor});
    return (a - b).norm() / scale;
}

} // namespace oracle
