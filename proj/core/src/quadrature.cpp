#include "ssem/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

#include "ssem/error.hpp"
#include "ssem/numeric.hpp"

namespace ssem {

namespace {

// Abscissae of the 21-point Kronrod rule; odd indices are the 10-point Gauss nodes.
constexpr std::array<double, 11> kNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452, 0.930157491355708226001207180059508,
    0.865063366688984510732096688423493, 0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784, 0.294392862701460198131126603103866,
    0.148874338981631210884826001129720, 0.000000000000000000000000000000000,
};

constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697, 0.219086362515982043995534934228163,
    0.269266719309996355091226921569469, 0.295524224714752870173892994651338,
};

constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390, 0.054755896574351996031381300244580,
    0.075039674810919952767043140916190, 0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707, 0.142775938577060080797094273138717,
    0.147739104901338491374841515972068, 0.149445554002916905664936468389821,
};

struct Segment {
    double a;
    double b;
    double value;
    double error;

    bool operator<(const Segment& other) const noexcept { return error < other.error; }
};

Segment rule(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = kKronrodWeights[10] * fc;
    double gauss = 0.0;
    for (std::size_t j = 0; j < 10; ++j) {
        const double dx = half * kNodes[j];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kKronrodWeights[j] * pair;
        if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace

QuadratureResult integrate_gk21(const std::function<double(double)>& f, double a, double b, double abs_tol,
                                std::size_t max_intervals, std::size_t initial_pieces) {
    if (!(abs_tol > 0.0) || !(b > a) || !std::isfinite(a) || !std::isfinite(b) || initial_pieces == 0) {
        throw Error(ErrorCode::InvalidArgument, "integrate_gk21 needs finite a < b, abs_tol > 0 and pieces >= 1");
    }
    std::priority_queue<Segment> heap;
    double total_error = 0.0;
    const double width = (b - a) / static_cast<double>(initial_pieces);
    for (std::size_t i = 0; i < initial_pieces; ++i) {
        const double lo = a + width * static_cast<double>(i);
        const double hi = (i + 1 == initial_pieces) ? b : lo + width;
        Segment s = rule(f, lo, hi);
        total_error += s.error;
        heap.push(s);
    }

    while (total_error > abs_tol && heap.size() < max_intervals) {
        Segment worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;  // interval at floating-point resolution
        heap.pop();
        Segment left = rule(f, worst.a, mid);
        Segment right = rule(f, mid, worst.b);
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum from scratch so the running-update drift does not leak into the result.
    QuadratureResult result;
    result.intervals = heap.size();
    CompensatedSum value;
    CompensatedSum error;
    std::vector<Segment> segments;
    segments.reserve(heap.size());
    while (!heap.empty()) {
        segments.push_back(heap.top());
        heap.pop();
    }
    std::sort(segments.begin(), segments.end(), [](const Segment& x, const Segment& y) { return x.a < y.a; });
    for (const auto& s : segments) {
        value += s.value;
        error += s.error;
    }
    result.value = value.value();
    result.abs_error = error.value();
    result.converged = result.abs_error <= abs_tol;
    return result;
}

}  // namespace ssem
