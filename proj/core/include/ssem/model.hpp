#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ssem {

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double x) const noexcept { return lo < x && x < hi; }
};

/// Where the observations of a family live. Determines how population
/// expectations are evaluated (quadrature on a window, quadrature on a
/// half-line, or summation over the integers).
enum class Support { RealLine, PositiveHalfLine, NonNegativeIntegers };

/// One-parameter exponential family
///   p(y | theta) = exp(theta * t(y) + h(y) - alpha(theta)).
///
/// alpha_prime is the mean function E[t(Y)] and must be strictly increasing on
/// natural_domain; mean_range is its image. alpha_second (the Fisher
/// information) is supplied analytically. quantile(theta, u) is the inverse
/// CDF of a single component and is only needed for sampling.
struct ExpFamilySpec {
    std::string name;
    std::function<double(double)> t;
    std::function<double(double)> h;
    std::function<double(double)> alpha;
    std::function<double(double)> alpha_prime;
    std::function<double(double)> alpha_second;
    Interval natural_domain;
    Interval mean_range;
    Support support = Support::RealLine;
    std::function<double(double theta, double u)> quantile;
};

/// Unit-variance Gaussian: t(y) = y, h(y) = -y^2/2 - log sqrt(2 pi), alpha = theta^2/2.
ExpFamilySpec gaussian_family();
/// Poisson with natural parameter log(rate): alpha = exp(theta).
ExpFamilySpec poisson_family();
/// Exponential distribution with natural parameter -rate: alpha = -log(-theta), theta < 0.
ExpFamilySpec exponential_family();
/// Looks up one of the built-in families by name ("gaussian", "poisson", "exponential").
ExpFamilySpec family_by_name(std::string_view name);

/// Solves alpha_prime(theta) = target for theta by safeguarded Newton with a
/// bisection fallback, starting from hint when it lies in the natural domain.
/// Stops once |alpha_prime(theta) - target| < 1e-12 * max(1, |target|).
/// Throws MeanOutOfRange if target is outside mean_range and NoConvergence
/// after 200 iterations.
double inverse_mean(const ExpFamilySpec& family, double target, double hint);

enum class ModelTag { Gmm, ExpFam, Sym2 };

/// Dispatch tag over the three model families. Cheap to copy; the expfam
/// spec is shared immutably.
class ModelKind {
public:
    static ModelKind gmm();
    static ModelKind sym2();
    static ModelKind expfam(ExpFamilySpec spec);

    ModelTag tag() const noexcept { return tag_; }
    bool is_gaussian() const noexcept { return tag_ != ModelTag::ExpFam; }
    /// Throws Error(NotExpFam) unless tag() == ExpFam.
    const ExpFamilySpec& family() const;
    std::string_view name() const noexcept;

private:
    ModelKind(ModelTag tag, std::shared_ptr<const ExpFamilySpec> spec);

    ModelTag tag_;
    std::shared_ptr<const ExpFamilySpec> spec_;
};

/// Mixture weights and component parameters. Weights are validated on
/// construction (positive, summing to one within 1e-12); the symmetric
/// two-component model stores theta = (-s, +s) with s = symmetric_theta().
class MixtureParams {
public:
    MixtureParams(std::vector<double> pi, std::vector<double> theta);

    static MixtureParams symmetric(double theta);

    std::size_t size() const noexcept { return theta_.size(); }
    std::span<const double> pi() const noexcept { return pi_; }
    std::span<const double> theta() const noexcept { return theta_; }
    double pi(std::size_t k) const { return pi_.at(k); }
    double theta(std::size_t k) const { return theta_.at(k); }
    double symmetric_theta() const noexcept { return theta_.back(); }

    /// Same weights, new component parameters.
    MixtureParams with_theta(std::vector<double> theta) const;

    friend bool operator==(const MixtureParams&, const MixtureParams&) = default;

private:
    std::vector<double> pi_;
    std::vector<double> theta_;
};

/// Checks the (kind, params) pairing: natural-domain membership for expfam,
/// the tied (1/2, 1/2), (-s, +s) structure for sym2.
void validate(const ModelKind& kind, const MixtureParams& params);

/// Precomputed posterior evaluator for fixed (kind, params). Construction
/// validates once; evaluation is allocation-free and safe to share across
/// threads.
class PosteriorEvaluator {
public:
    PosteriorEvaluator(ModelKind kind, const MixtureParams& params);

    std::size_t size() const noexcept { return theta_.size(); }

    /// Writes p(X = k | y) for every k into out (size K).
    void responsibilities(double y, std::span<double> out) const;
    double log_marginal(double y) const;
    double component_log_density(std::size_t k, double y) const;

private:
    double logits(double y, std::span<double> out) const;

    ModelKind kind_;
    std::vector<double> theta_;
    std::vector<double> offset_;  // log pi_k - alpha(theta_k) (expfam) or log pi_k
};

inline constexpr double kLogSqrtTwoPi = 0.91893853320467274178032973640562;

double component_log_density(const ModelKind& kind, std::size_t k, const MixtureParams& params, double y);
double marginal_log_density(const ModelKind& kind, const MixtureParams& params, double y);
/// Posterior probability of component k at y. For sym2, k = 0 is the -theta
/// component, so responsibility(sym2, p, y, 0) = 1 / (1 + exp(2 y theta)).
double responsibility(const ModelKind& kind, const MixtureParams& params, double y, std::size_t k);

}  // namespace ssem
