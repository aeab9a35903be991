#pragma once

#include <cmath>
#include <vector>

namespace thinfilm {

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

/// Sample standard deviation (n-1 normalization); 0 for n < 2.
inline double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

inline double stderr_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : sample_std(v) / std::sqrt(double(v.size()));
}

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double residual_rms = 0.0;
};

/// Least-squares fit y = intercept + slope * x.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    LinearFit f;
    const std::size_t n = x.size();
    if (n == 0) return f;
    if (n == 1) {
        f.intercept = y[0];
        return f;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = double(n) * sxx - sx * sx;
    if (std::abs(det) < 1e-300) {
        f.intercept = sy / double(n);
    } else {
        f.slope = (double(n) * sxy - sx * sy) / det;
        f.intercept = (sy - f.slope * sx) / double(n);
    }
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        rss += r * r;
    }
    f.residual_rms = std::sqrt(rss / double(n));
    return f;
}

}  // namespace thinfilm
