#pragma once

#include <cstddef>
#include <functional>

namespace ssem {

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;  // sum of per-interval |K21 - G10| estimates
    std::size_t intervals = 0;
    bool converged = false;
};

/// Globally adaptive 21-point Gauss-Kronrod integration on [a, b]: the
/// interval with the largest error estimate is bisected until the summed
/// estimate is at most abs_tol or max_intervals is reached. The range is
/// first split into initial_pieces equal parts so narrow features are seen.
QuadratureResult integrate_gk21(const std::function<double(double)>& f, double a, double b, double abs_tol,
                                std::size_t max_intervals, std::size_t initial_pieces = 1);

}  // namespace ssem
