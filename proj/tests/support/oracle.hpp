#pragma once

// Test-side oracles. They deliberately share no code with the library: the
// Monte Carlo draws use the standard-library engine and distributions, and
// the frozen constants were computed with mpmath at 30 digits.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Draws y from the Gaussian mixture (unit variance) with the given weights and means.
class GaussianMixtureSampler {
public:
    GaussianMixtureSampler(std::vector<double> pi, std::vector<double> mu, std::uint64_t seed)
        : pick_(pi.begin(), pi.end()), mu_(std::move(mu)), engine_(seed) {}

    double operator()() { return mu_[pick_(engine_)] + normal_(engine_); }

private:
    std::discrete_distribution<std::size_t> pick_;
    std::vector<double> mu_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

/// Sample mean of f(Y) with its standard error.
inline Estimate monte_carlo(const std::function<double(double)>& f, const std::function<double()>& draw,
                            std::size_t n) {
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double v = f(draw());
        const double delta = v - mean;
        mean += delta / static_cast<double>(i);
        m2 += delta * (v - mean);
    }
    return {mean, std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n))};
}

/// Ratio estimate E[a] / E[b] with a delta-method standard error.
inline Estimate monte_carlo_ratio(const std::function<double(double)>& a, const std::function<double(double)>& b,
                                  const std::function<double()>& draw, std::size_t n) {
    double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = draw();
        const double va = a(y);
        const double vb = b(y);
        sa += va;
        sb += vb;
        saa += va * va;
        sbb += vb * vb;
        sab += va * vb;
    }
    const double N = static_cast<double>(n);
    const double ma = sa / N, mb = sb / N;
    const double var_a = saa / N - ma * ma, var_b = sbb / N - mb * mb, cov = sab / N - ma * mb;
    const double r = ma / mb;
    const double var_r = (var_a - 2.0 * r * cov + r * r * var_b) / (mb * mb * N);
    return {r, std::sqrt(std::max(var_r, 0.0))};
}

inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// mpmath (30 digits) reference values.
namespace frozen {
// log p_Y(0.5) for pi = (0.3, 0.7), theta = (-1, 2).
inline constexpr double kLogMarginalGmm = -2.0439385332046727;
// Responsibility of the +2 component at y = 10, equal weights, theta = (-2, 0, 2).
inline constexpr double kResponsibilityFar = 0.99999998477002048;
// Symmetric model M_0(s) = E[tanh(Ys) Y].
inline constexpr double kSym2M0Star1At2 = 1.1182094601406151;
inline constexpr double kSym2M0Star0At17 = 0.70846089979058412;
inline constexpr double kSym2M0Star15At3 = 1.5456141830438954;
// dM_0/ds at s = theta* for theta* in {0.8, 1, 1.5, 2, 3, 5}.
inline constexpr double kDm0[] = {0.39564700079896047, 0.26608832760455672, 0.084156952588476295,
                                  0.021655482455032466, 0.00077603428060440545, 7.4503215523325424e-8};
inline constexpr double kItem2BoundStar2 = 0.17927221686002011;
inline constexpr double kItem3ConstantStar1 = 0.053771272115365189;
// P(Z > t) for t in {1, 1.5, 2, 3, 4, 5}.
inline constexpr double kTail[] = {0.15865525393145705, 0.066807201268858066, 0.022750131948179207,
                                   0.0013498980316300945, 3.1671241833119921e-5, 2.8665157187919391e-7};
// gmm pi = (0.5, 0.5), theta* = (-1, 1), probe (-1, 1.8), gamma = 0.5, component 2.
inline constexpr double kGmmC2 = 0.40650933905550351;
inline constexpr double kGmmM0Component2 = 1.2774861402735594;
inline constexpr double kGmmMGammaComponent2 = 1.124434137211642;
inline constexpr double kGmmRatioComponent2 = 0.44843370227056631;
// Poisson, theta* = (log 2, log 5), pi = (0.5, 0.5), gamma = 0.5, probe theta* + eps;
// rows eps = 0.2, 0.1, 0.05, 0.025; columns ratio_1, beta_1, ratio_2, beta_2.
inline constexpr double kPoissonThm2[4][4] = {
    {0.55416684429416862, 0.54194555990084901, 0.45849390656237867, 0.44959785539681426},
    {0.52723111580825667, 0.52121687262212748, 0.4810765782521134, 0.47681551862532637},
    {0.51362161705504845, 0.51064787129280616, 0.49095844393777036, 0.48887844516955185},
    {0.50680855116268821, 0.5053311147157716, 0.49557980773971651, 0.4945527250945921},
};
}  // namespace frozen

}  // namespace oracle
