#include "ssem/population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/core.h>

#include "ssem/error.hpp"
#include "ssem/numeric.hpp"
#include "ssem/quadrature.hpp"

namespace ssem {

namespace {

constexpr std::size_t kMaxSummationTerms = 10'000'000;

// Component mean and standard deviation of t(Y); used only to place the
// integration window.
double component_mean(const ModelKind& kind, double theta) {
    return kind.is_gaussian() ? theta : kind.family().alpha_prime(theta);
}

double component_sd(const ModelKind& kind, double theta) {
    return kind.is_gaussian() ? 1.0 : std::sqrt(kind.family().alpha_second(theta));
}

Support support_of(const ModelKind& kind) {
    return kind.is_gaussian() ? Support::RealLine : kind.family().support;
}

void check_component(const MixtureParams& theta, std::size_t k) {
    if (k >= theta.size()) throw Error(ErrorCode::InvalidArgument, fmt::format("component {} out of range", k));
}

void check_probe(const PopulationModel& pm, const MixtureParams& theta) {
    if (theta.size() != pm.theta_star().size()) {
        throw Error(ErrorCode::InvalidArgument, "probe and theta* differ in component count");
    }
    validate(pm.kind(), theta);
}

void require_converged(const QuadratureResult& r, double abs_tol) {
    if (!r.converged) {
        throw Error(ErrorCode::QuadratureFailure,
                    fmt::format("error estimate {:.3g} above tolerance {:.3g} after {} intervals", r.abs_error,
                                abs_tol, r.intervals));
    }
}

// Sym2 M_0(s) = E[(1 - 2 q(Y; s)) Y] = E[tanh(Y s) Y].
double sym2_m0(const PopulationModel& pm, double s) {
    return expect(pm, [s](double y) { return std::tanh(y * s) * y; });
}

// Weighted-ratio population update, shared by gmm and expfam.
double ratio_form(const PopulationModel& pm, const MixtureParams& theta, std::size_t k) {
    const auto& kind = pm.kind();
    const double gamma = pm.gamma();
    const PosteriorEvaluator post(kind, theta);
    const std::size_t K = theta.size();
    std::function<double(double)> stat = [](double y) { return y; };
    if (kind.tag() == ModelTag::ExpFam) stat = kind.family().t;

    std::vector<double> q(K);
    auto q_k = [&post, &q, k](double y) {
        post.responsibilities(y, q);
        return q[k];
    };
    const double weighted_stat = expect(pm, [&](double y) { return q_k(y) * stat(y); });
    const double weight = expect(pm, q_k);
    const double pi_star = pm.theta_star().pi(k);
    const double labeled_mean = component_mean(kind, pm.theta_star().theta(k));
    const double denominator = (1.0 - gamma) * weight + gamma * pi_star;
    if (!(denominator > 1e-12)) {
        throw Error(ErrorCode::DegenerateDenominator,
                    fmt::format("component {} population weight {:.3g} is degenerate", k + 1, denominator));
    }
    const double ratio = ((1.0 - gamma) * weighted_stat + gamma * pi_star * labeled_mean) / denominator;
    if (kind.tag() == ModelTag::ExpFam) return inverse_mean(kind.family(), ratio, theta.theta(k));
    return ratio;
}

}  // namespace

PopulationModel::PopulationModel(ModelKind kind, MixtureParams theta_star, double gamma, QuadratureScheme scheme)
    : kind_(std::move(kind)), theta_star_(std::move(theta_star)), gamma_(gamma), scheme_(scheme) {
    validate(kind_, theta_star_);
    if (!(gamma_ >= 0.0 && gamma_ < 1.0)) {
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("population gamma must lie in [0, 1), got {}", gamma_));
    }
    if (!(scheme_.abs_tol > 0.0) || !(scheme_.range_sigma >= 8.0) || scheme_.max_subdivisions < 1) {
        throw Error(ErrorCode::InvalidArgument, "quadrature scheme needs abs_tol > 0, range_sigma >= 8");
    }
}

double expect(const PopulationModel& pm, const std::function<double(double)>& f) {
    const auto& kind = pm.kind();
    const auto& truth = pm.theta_star();
    const auto& scheme = pm.scheme();
    const PosteriorEvaluator density(kind, truth);
    auto weighted = [&](double y) {
        const double p = std::exp(density.log_marginal(y));
        return p == 0.0 ? 0.0 : f(y) * p;
    };

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sd_min = lo;
    double mean_max = -lo;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const double mu = component_mean(kind, truth.theta(k));
        const double sd = component_sd(kind, truth.theta(k));
        lo = std::min(lo, mu - scheme.range_sigma * sd);
        hi = std::max(hi, mu + scheme.range_sigma * sd);
        sd_min = std::min(sd_min, sd);
        mean_max = std::max(mean_max, mu);
    }

    switch (support_of(kind)) {
    case Support::RealLine: {
        const auto pieces = static_cast<std::size_t>(std::ceil((hi - lo) / (2.0 * sd_min)));
        const auto r = integrate_gk21(weighted, lo, hi, scheme.abs_tol, scheme.max_subdivisions,
                                      std::clamp<std::size_t>(pieces, 1, 512));
        require_converged(r, scheme.abs_tol);
        return r.value;
    }
    case Support::PositiveHalfLine: {
        // y = scale * x / (1 - x) maps [0, 1) onto [0, inf).
        const double scale = std::max(mean_max, 1e-300);
        auto mapped = [&](double x) {
            const double one_minus = 1.0 - x;
            const double y = scale * x / one_minus;
            if (!std::isfinite(y)) return 0.0;
            return weighted(y) * scale / (one_minus * one_minus);
        };
        const auto r = integrate_gk21(mapped, 0.0, 1.0, scheme.abs_tol, scheme.max_subdivisions, 16);
        require_converged(r, scheme.abs_tol);
        return r.value;
    }
    case Support::NonNegativeIntegers: {
        CompensatedSum total;
        for (std::size_t y = 0; y < kMaxSummationTerms; ++y) {
            const double term = weighted(static_cast<double>(y));
            total += term;
            if (static_cast<double>(y) > mean_max + 10.0 && std::abs(term) < scheme.abs_tol * 1e-6) {
                return total.value();
            }
        }
        throw Error(ErrorCode::QuadratureFailure, "integer-support summation did not terminate");
    }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown support");
}

double c_theta(const PopulationModel& pm, const MixtureParams& theta, std::size_t k) {
    check_probe(pm, theta);
    check_component(theta, k);
    if (pm.kind().tag() == ModelTag::Sym2) {
        const double s = theta.symmetric_theta();
        const double sign = k == 0 ? 1.0 : -1.0;
        // q_0(y) = 1 / (1 + e^{2 y s}); q_1 = 1 - q_0 = q_0(-y).
        return expect(pm, [s, sign](double y) {
            const double z = sign * 2.0 * y * s;
            return z > 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
        });
    }
    const PosteriorEvaluator post(pm.kind(), theta);
    std::vector<double> q(theta.size());
    return expect(pm, [&](double y) {
        post.responsibilities(y, q);
        return q[k];
    });
}

double pop_m_gamma(const PopulationModel& pm, const MixtureParams& theta, std::size_t k) {
    check_probe(pm, theta);
    check_component(theta, k);
    if (pm.kind().tag() == ModelTag::Sym2) {
        const double gamma = pm.gamma();
        const double m0 = sym2_m0(pm, theta.symmetric_theta());
        const double m = (1.0 - gamma) * m0 + gamma * pm.theta_star().symmetric_theta();
        return k == 0 ? -m : m;
    }
    return ratio_form(pm, theta, k);
}

double pop_m0(const PopulationModel& pm, const MixtureParams& theta, std::size_t k) {
    return pop_m_gamma(pm.with_gamma(0.0), theta, k);
}

MixtureParams pop_m_gamma_all(const PopulationModel& pm, const MixtureParams& theta) {
    if (pm.kind().tag() == ModelTag::Sym2) {
        check_probe(pm, theta);
        return MixtureParams::symmetric(pop_m_gamma(pm, theta, 1));
    }
    std::vector<double> next(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) next[k] = pop_m_gamma(pm, theta, k);
    return theta.with_theta(std::move(next));
}

double theta_star_from_labels(const PopulationModel& pm, std::size_t k) {
    const auto& truth = pm.theta_star();
    check_component(truth, k);
    const double pi_k = truth.pi(k);
    if (!(pi_k > 0.0)) throw Error(ErrorCode::InvalidArgument, "component has zero weight");
    // Conditional mean of N(theta*_k, 1) is theta*_k itself.
    if (pm.kind().is_gaussian()) return truth.theta(k);
    const auto& fam = pm.kind().family();
    const double conditional_mean = (pi_k * fam.alpha_prime(truth.theta(k))) / pi_k;
    return inverse_mean(fam, conditional_mean, truth.theta(k));
}

double dm0_dtheta_sym2(const PopulationModel& pm, double s) {
    if (pm.kind().tag() != ModelTag::Sym2) {
        throw Error(ErrorCode::InvalidArgument, "dm0_dtheta_sym2 needs the sym2 model");
    }
    if (!(s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "dm0_dtheta_sym2 needs s >= 0");
    return expect(pm, [s](double y) {
        const double e = std::exp(-2.0 * std::abs(y) * s);
        const double d = 1.0 + e;
        return 4.0 * y * y * e / (d * d);
    });
}

double sym2_f(const PopulationModel& pm, double s) {
    if (pm.kind().tag() != ModelTag::Sym2) throw Error(ErrorCode::InvalidArgument, "sym2_f needs the sym2 model");
    return -expect(pm, [s](double y) {
        const double z = 2.0 * y * s;
        const double q = z > 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
        return q * y;
    });
}

Trajectory run_population_em(const PopulationModel& pm, const MixtureParams& theta0, const EmConfig& cfg) {
    if (!(cfg.tol > 0.0) || cfg.max_iters < 1) {
        throw Error(ErrorCode::InvalidArgument, "EmConfig needs tol > 0 and max_iters >= 1");
    }
    check_probe(pm, theta0);
    const auto& truth = pm.theta_star();
    Trajectory traj;
    traj.iterates.push_back(theta0);
    traj.errors.push_back(max_abs_difference(theta0, truth));
    MixtureParams current = theta0;
    for (std::size_t t = 0; t < cfg.max_iters; ++t) {
        MixtureParams next = current;
        try {
            next = pop_m_gamma_all(pm, current);
        } catch (const Error& e) {
            throw Error(e.code(), fmt::format("iteration {}: {}", t + 1, e.message()));
        }
        const double change = max_abs_difference(next, current);
        ++traj.steps;
        if (cfg.record_trajectory || traj.iterates.size() < 2) {
            traj.iterates.push_back(next);
            traj.errors.push_back(max_abs_difference(next, truth));
        } else {
            traj.iterates.back() = next;
            traj.errors.back() = max_abs_difference(next, truth);
        }
        current = std::move(next);
        if (change < cfg.tol) {
            traj.converged = true;
            break;
        }
    }
    return traj;
}

}  // namespace ssem
