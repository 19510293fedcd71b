#include "ssem/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "ssem/error.hpp"
#include "ssem/rng.hpp"

namespace ssem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double poisson_quantile(double theta, double u) {
    const double rate = std::exp(theta);
    double log_p = -rate;
    double cdf = std::exp(log_p);
    const double limit = rate + 50.0 * std::sqrt(rate) + 100.0;
    double k = 0.0;
    while (cdf < u && k < limit) {
        k += 1.0;
        log_p += theta - std::log(k);
        cdf += std::exp(log_p);
    }
    return k;
}

}  // namespace

ExpFamilySpec gaussian_family() {
    ExpFamilySpec s;
    s.name = "gaussian";
    s.t = [](double y) { return y; };
    s.h = [](double y) { return -0.5 * y * y - kLogSqrtTwoPi; };
    s.alpha = [](double th) { return 0.5 * th * th; };
    s.alpha_prime = [](double th) { return th; };
    s.alpha_second = [](double) { return 1.0; };
    s.natural_domain = {-kInf, kInf};
    s.mean_range = {-kInf, kInf};
    s.support = Support::RealLine;
    s.quantile = [](double th, double u) { return th + standard_normal_quantile(u); };
    return s;
}

ExpFamilySpec poisson_family() {
    ExpFamilySpec s;
    s.name = "poisson";
    s.t = [](double y) { return y; };
    s.h = [](double y) { return -std::lgamma(y + 1.0); };
    s.alpha = [](double th) { return std::exp(th); };
    s.alpha_prime = [](double th) { return std::exp(th); };
    s.alpha_second = [](double th) { return std::exp(th); };
    // exp overflows past ~709; keep the domain where alpha is representable.
    s.natural_domain = {-700.0, 700.0};
    s.mean_range = {std::exp(-700.0), std::exp(700.0)};
    s.support = Support::NonNegativeIntegers;
    s.quantile = poisson_quantile;
    return s;
}

ExpFamilySpec exponential_family() {
    ExpFamilySpec s;
    s.name = "exponential";
    s.t = [](double y) { return y; };
    s.h = [](double) { return 0.0; };
    s.alpha = [](double th) { return -std::log(-th); };
    s.alpha_prime = [](double th) { return -1.0 / th; };
    s.alpha_second = [](double th) { return 1.0 / (th * th); };
    s.natural_domain = {-kInf, 0.0};
    s.mean_range = {0.0, kInf};
    s.support = Support::PositiveHalfLine;
    s.quantile = [](double th, double u) { return -std::log1p(-u) / (-th); };
    return s;
}

ExpFamilySpec family_by_name(std::string_view name) {
    if (name == "gaussian") return gaussian_family();
    if (name == "poisson") return poisson_family();
    if (name == "exponential") return exponential_family();
    throw Error(ErrorCode::InvalidArgument, fmt::format("unknown exponential family '{}'", name));
}

ModelKind::ModelKind(ModelTag tag, std::shared_ptr<const ExpFamilySpec> spec)
    : tag_(tag), spec_(std::move(spec)) {}

ModelKind ModelKind::gmm() { return ModelKind(ModelTag::Gmm, nullptr); }
ModelKind ModelKind::sym2() { return ModelKind(ModelTag::Sym2, nullptr); }

ModelKind ModelKind::expfam(ExpFamilySpec spec) {
    if (!spec.t || !spec.h || !spec.alpha || !spec.alpha_prime || !spec.alpha_second) {
        throw Error(ErrorCode::InvalidArgument, "exponential family spec is missing a function");
    }
    return ModelKind(ModelTag::ExpFam, std::make_shared<const ExpFamilySpec>(std::move(spec)));
}

const ExpFamilySpec& ModelKind::family() const {
    if (tag_ != ModelTag::ExpFam) {
        throw Error(ErrorCode::NotExpFam, fmt::format("model kind '{}' has no exponential family spec", name()));
    }
    return *spec_;
}

std::string_view ModelKind::name() const noexcept {
    switch (tag_) {
    case ModelTag::Gmm: return "gmm";
    case ModelTag::ExpFam: return "expfam";
    case ModelTag::Sym2: return "sym2";
    }
    return "unknown";
}

MixtureParams::MixtureParams(std::vector<double> pi, std::vector<double> theta)
    : pi_(std::move(pi)), theta_(std::move(theta)) {
    if (theta_.empty()) throw Error(ErrorCode::InvalidArgument, "mixture needs at least one component");
    if (pi_.size() != theta_.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("pi has {} entries but theta has {}", pi_.size(), theta_.size()));
    }
    double total = 0.0;
    for (std::size_t k = 0; k < pi_.size(); ++k) {
        if (!(pi_[k] > 0.0) || !std::isfinite(pi_[k])) {
            throw Error(ErrorCode::InvalidArgument, fmt::format("pi[{}] = {} is not positive", k, pi_[k]));
        }
        if (!std::isfinite(theta_[k])) {
            throw Error(ErrorCode::InvalidArgument, fmt::format("theta[{}] is not finite", k));
        }
        total += pi_[k];
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw Error(ErrorCode::InvalidArgument, fmt::format("pi sums to {:.17g}, not 1", total));
    }
}

MixtureParams MixtureParams::symmetric(double theta) { return MixtureParams({0.5, 0.5}, {-theta, theta}); }

MixtureParams MixtureParams::with_theta(std::vector<double> theta) const {
    return MixtureParams(pi_, std::move(theta));
}

void validate(const ModelKind& kind, const MixtureParams& params) {
    switch (kind.tag()) {
    case ModelTag::Gmm: return;
    case ModelTag::Sym2:
        if (params.size() != 2 || params.pi(0) != 0.5 || params.pi(1) != 0.5 ||
            params.theta(0) != -params.theta(1)) {
            throw Error(ErrorCode::InvalidArgument, "sym2 requires pi = (1/2, 1/2) and theta = (-s, +s)");
        }
        return;
    case ModelTag::ExpFam: {
        const auto& domain = kind.family().natural_domain;
        for (std::size_t k = 0; k < params.size(); ++k) {
            if (!domain.contains(params.theta(k))) {
                throw Error(ErrorCode::Domain,
                            fmt::format("theta[{}] = {} outside natural domain ({}, {}) of '{}'", k,
                                        params.theta(k), domain.lo, domain.hi, kind.family().name));
            }
        }
        return;
    }
    }
}

PosteriorEvaluator::PosteriorEvaluator(ModelKind kind, const MixtureParams& params)
    : kind_(std::move(kind)), theta_(params.theta().begin(), params.theta().end()), offset_(params.size()) {
    validate(kind_, params);
    for (std::size_t k = 0; k < theta_.size(); ++k) {
        offset_[k] = std::log(params.pi(k));
        if (kind_.tag() == ModelTag::ExpFam) offset_[k] -= kind_.family().alpha(theta_[k]);
    }
}

// Log joint p(k, y) up to a k-independent term; returns that term.
double PosteriorEvaluator::logits(double y, std::span<double> out) const {
    if (kind_.tag() == ModelTag::ExpFam) {
        const auto& fam = kind_.family();
        const double ty = fam.t(y);
        for (std::size_t k = 0; k < theta_.size(); ++k) out[k] = offset_[k] + theta_[k] * ty;
        return fam.h(y);
    }
    for (std::size_t k = 0; k < theta_.size(); ++k) {
        const double d = y - theta_[k];
        out[k] = offset_[k] - 0.5 * d * d;
    }
    return -kLogSqrtTwoPi;
}

void PosteriorEvaluator::responsibilities(double y, std::span<double> out) const {
    if (kind_.tag() == ModelTag::Sym2) {
        // q(y) = 1 / (1 + e^{2 y theta}) for the -theta component.
        const double z = 2.0 * y * theta_[1];
        const double e = std::exp(-std::abs(z));
        const double small = e / (1.0 + e);
        const double large = 1.0 / (1.0 + e);
        out[0] = z > 0.0 ? small : large;
        out[1] = z > 0.0 ? large : small;
        return;
    }
    logits(y, out);
    const double peak = *std::max_element(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(theta_.size()));
    double total = 0.0;
    for (std::size_t k = 0; k < theta_.size(); ++k) {
        out[k] = std::exp(out[k] - peak);
        total += out[k];
    }
    for (std::size_t k = 0; k < theta_.size(); ++k) out[k] /= total;
}

double PosteriorEvaluator::log_marginal(double y) const {
    double buffer[16];
    std::vector<double> heap;
    std::span<double> l;
    if (theta_.size() <= 16) {
        l = std::span<double>(buffer, theta_.size());
    } else {
        heap.resize(theta_.size());
        l = heap;
    }
    const double common = logits(y, l);
    const double peak = *std::max_element(l.begin(), l.end());
    double total = 0.0;
    for (double v : l) total += std::exp(v - peak);
    return common + peak + std::log(total);
}

double PosteriorEvaluator::component_log_density(std::size_t k, double y) const {
    if (kind_.tag() == ModelTag::ExpFam) {
        const auto& fam = kind_.family();
        return theta_[k] * fam.t(y) + fam.h(y) - fam.alpha(theta_[k]);
    }
    const double d = y - theta_[k];
    return -0.5 * d * d - kLogSqrtTwoPi;
}

double component_log_density(const ModelKind& kind, std::size_t k, const MixtureParams& params, double y) {
    if (k >= params.size()) throw Error(ErrorCode::InvalidArgument, fmt::format("component {} out of range", k));
    return PosteriorEvaluator(kind, params).component_log_density(k, y);
}

double marginal_log_density(const ModelKind& kind, const MixtureParams& params, double y) {
    return PosteriorEvaluator(kind, params).log_marginal(y);
}

double responsibility(const ModelKind& kind, const MixtureParams& params, double y, std::size_t k) {
    if (k >= params.size()) throw Error(ErrorCode::InvalidArgument, fmt::format("component {} out of range", k));
    PosteriorEvaluator post(kind, params);
    std::vector<double> out(params.size());
    post.responsibilities(y, out);
    return out[k];
}

}  // namespace ssem

namespace ssem {

namespace {

constexpr int kMaxInversionIterations = 200;

double starting_point(const Interval& domain, double hint) {
    if (domain.contains(hint) && std::isfinite(hint)) return hint;
    if (domain.contains(0.0)) return 0.0;
    if (std::isfinite(domain.lo) && std::isfinite(domain.hi)) return 0.5 * (domain.lo + domain.hi);
    if (std::isfinite(domain.hi)) return domain.hi - 1.0;
    return domain.lo + 1.0;
}

// Moves away from `from` in direction `sign` with doubling steps, never
// leaving the open domain: once a doubled step would cross a finite bound the
// remaining distance is halved instead.
double step_towards(const Interval& domain, double from, double step, int sign) {
    const double bound = sign > 0 ? domain.hi : domain.lo;
    const double candidate = from + sign * step;
    if (std::isfinite(bound) && (sign > 0 ? candidate >= bound : candidate <= bound)) {
        return from + 0.5 * (bound - from);
    }
    return candidate;
}

}  // namespace

double inverse_mean(const ExpFamilySpec& family, double target, double hint) {
    if (!(family.mean_range.lo < target && target < family.mean_range.hi)) {
        throw Error(ErrorCode::MeanOutOfRange,
                    fmt::format("statistic {:.17g} outside the mean range ({}, {}) of '{}'", target,
                                family.mean_range.lo, family.mean_range.hi, family.name));
    }
    const auto& domain = family.natural_domain;
    const double tolerance = 1e-12 * std::max(1.0, std::abs(target));
    auto residual = [&](double x) { return family.alpha_prime(x) - target; };

    int iterations = 0;
    double x = starting_point(domain, hint);
    double fx = residual(x);
    if (std::abs(fx) < tolerance) return x;

    // Bracket [lo, hi] with residual(lo) < 0 < residual(hi).
    double lo = x;
    double hi = x;
    const int sign = fx < 0.0 ? 1 : -1;
    double step = 1.0;
    double probe = x;
    double f_probe = fx;
    while ((sign > 0) ? f_probe < 0.0 : f_probe > 0.0) {
        if (++iterations > kMaxInversionIterations) {
            throw Error(ErrorCode::NoConvergence,
                        fmt::format("could not bracket alpha_prime = {:.17g} for '{}'", target, family.name));
        }
        (sign > 0 ? lo : hi) = probe;
        probe = step_towards(domain, probe, step, sign);
        step *= 2.0;
        f_probe = residual(probe);
        if (std::abs(f_probe) < tolerance) return probe;
    }
    (sign > 0 ? hi : lo) = probe;

    x = std::clamp(x, lo, hi);
    fx = residual(x);
    while (iterations++ < kMaxInversionIterations) {
        if (std::abs(fx) < tolerance) return x;
        if (fx < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        double next = x - fx / family.alpha_second(x);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == x || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
            return x;
        }
        x = next;
        fx = residual(x);
    }
    throw Error(ErrorCode::NoConvergence,
                fmt::format("alpha_prime inversion for '{}' did not converge (target {:.17g})", family.name, target));
}

}  // namespace ssem
