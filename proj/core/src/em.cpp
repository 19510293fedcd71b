#include "ssem/em.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "ssem/error.hpp"
#include "ssem/numeric.hpp"

namespace ssem {

namespace {

void check_labels(const Dataset& data, std::size_t K) {
    for (const auto& s : data.labeled) {
        if (s.x >= K) {
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("label {} out of range for a {}-component model", s.x + 1, K));
        }
    }
}

void check_nonempty(const Dataset& data) {
    if (data.m() + data.n() == 0) throw Error(ErrorCode::InvalidArgument, "dataset is empty");
}

// Numerator and denominator of the weighted update, sum over labeled members
// of t(y) plus responsibility-weighted sum over unlabeled t(y).
struct WeightedMoments {
    std::vector<double> numerator;
    std::vector<double> denominator;
};

template <typename Stat>
WeightedMoments weighted_moments(const ModelKind& kind, const Dataset& data, const MixtureParams& theta_t,
                                 Stat&& stat) {
    const std::size_t K = theta_t.size();
    check_labels(data, K);
    std::vector<CompensatedSum> num(K), den(K);
    for (const auto& s : data.labeled) {
        num[s.x] += stat(s.y);
        den[s.x] += 1.0;
    }
    if (data.n() > 0) {
        PosteriorEvaluator post(kind, theta_t);
        std::vector<double> q(K);
        for (double y : data.unlabeled) {
            post.responsibilities(y, q);
            const double t = stat(y);
            for (std::size_t k = 0; k < K; ++k) {
                num[k] += q[k] * t;
                den[k] += q[k];
            }
        }
    }
    WeightedMoments out{std::vector<double>(K), std::vector<double>(K)};
    for (std::size_t k = 0; k < K; ++k) {
        out.numerator[k] = num[k].value();
        out.denominator[k] = den[k].value();
        if (!(out.denominator[k] >= 1e-300)) {
            throw Error(ErrorCode::EmptyComponent,
                        fmt::format("component {} has total weight {:.3g}", k + 1, out.denominator[k]));
        }
    }
    return out;
}

}  // namespace

double max_abs_difference(const MixtureParams& a, const MixtureParams& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "parameter vectors differ in length");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a.theta(k) - b.theta(k)));
    return worst;
}

double q_value(const ModelKind& kind, const Dataset& data, const MixtureParams& theta, const MixtureParams& theta_t) {
    check_nonempty(data);
    validate(kind, theta);
    const std::size_t K = theta.size();
    if (theta_t.size() != K) throw Error(ErrorCode::InvalidArgument, "theta and theta_t differ in length");
    check_labels(data, K);

    // Complete-data log-likelihood of (k, y) under theta.
    std::vector<double> log_pi(K);
    for (std::size_t k = 0; k < K; ++k) log_pi[k] = std::log(theta.pi(k));
    std::function<double(std::size_t, double)> complete;
    if (kind.tag() == ModelTag::ExpFam) {
        const auto& fam = kind.family();
        std::vector<double> alpha(K);
        for (std::size_t k = 0; k < K; ++k) alpha[k] = fam.alpha(theta.theta(k));
        complete = [&fam, &theta, alpha](std::size_t k, double y) {
            return theta.theta(k) * fam.t(y) + fam.h(y) - alpha[k];
        };
    } else {
        complete = [&theta, &log_pi](std::size_t k, double y) {
            const double d = y - theta.theta(k);
            return -(0.5 * d * d + kLogSqrtTwoPi - log_pi[k]);
        };
    }

    CompensatedSum total;
    for (const auto& s : data.labeled) total += complete(s.x, s.y);
    if (data.n() > 0) {
        PosteriorEvaluator post(kind, theta_t);
        std::vector<double> q(K);
        for (double y : data.unlabeled) {
            post.responsibilities(y, q);
            for (std::size_t k = 0; k < K; ++k) total += q[k] * complete(k, y);
        }
    }
    return total.value() / static_cast<double>(data.m() + data.n());
}

MixtureParams m_step_gmm(const Dataset& data, const MixtureParams& theta_t) {
    check_nonempty(data);
    const auto moments = weighted_moments(ModelKind::gmm(), data, theta_t, [](double y) { return y; });
    std::vector<double> next(theta_t.size());
    for (std::size_t k = 0; k < next.size(); ++k) next[k] = moments.numerator[k] / moments.denominator[k];
    return theta_t.with_theta(std::move(next));
}

MixtureParams m_step_expfam(const ExpFamilySpec& family, const Dataset& data, const MixtureParams& theta_t) {
    check_nonempty(data);
    const auto kind = ModelKind::expfam(family);
    const auto moments = weighted_moments(kind, data, theta_t, [&family](double y) { return family.t(y); });
    std::vector<double> next(theta_t.size());
    for (std::size_t k = 0; k < next.size(); ++k) {
        next[k] = inverse_mean(family, moments.numerator[k] / moments.denominator[k], theta_t.theta(k));
    }
    return theta_t.with_theta(std::move(next));
}

double m_step_sym2(const Dataset& data, double theta_t) {
    check_nonempty(data);
    check_labels(data, 2);
    CompensatedSum total;
    for (const auto& s : data.labeled) total += s.x == 0 ? -s.y : s.y;
    // 1 - 2 q(y) = tanh(y theta_t); tanh is odd, so negating the data negates the update exactly.
    for (double y : data.unlabeled) total += std::tanh(y * theta_t) * y;
    return total.value() / static_cast<double>(data.m() + data.n());
}

MixtureParams m_step(const ModelKind& kind, const Dataset& data, const MixtureParams& theta_t) {
    switch (kind.tag()) {
    case ModelTag::Gmm: return m_step_gmm(data, theta_t);
    case ModelTag::ExpFam: return m_step_expfam(kind.family(), data, theta_t);
    case ModelTag::Sym2:
        validate(kind, theta_t);
        return MixtureParams::symmetric(m_step_sym2(data, theta_t.symmetric_theta()));
    }
    throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

Trajectory run_em(const ModelKind& kind, const Dataset& data, const MixtureParams& theta0, const EmConfig& cfg,
                  const std::optional<MixtureParams>& theta_star) {
    if (!(cfg.tol > 0.0) || cfg.max_iters < 1) {
        throw Error(ErrorCode::InvalidArgument, "EmConfig needs tol > 0 and max_iters >= 1");
    }
    validate(kind, theta0);
    if (theta_star && theta_star->size() != theta0.size()) {
        throw Error(ErrorCode::InvalidArgument, "theta_star and theta0 differ in length");
    }

    Trajectory traj;
    traj.iterates.push_back(theta0);
    if (theta_star) traj.errors.push_back(max_abs_difference(theta0, *theta_star));

    MixtureParams current = theta0;
    for (std::size_t t = 0; t < cfg.max_iters; ++t) {
        MixtureParams next = current;
        double q = 0.0;
        try {
            next = m_step(kind, data, current);
            q = q_value(kind, data, next, current);
        } catch (const Error& e) {
            throw Error(e.code(), fmt::format("iteration {}: {}", t + 1, e.message()));
        }
        const double change = max_abs_difference(next, current);
        ++traj.steps;
        if (cfg.record_trajectory || traj.iterates.size() < 2) {
            traj.iterates.push_back(next);
            traj.q_values.push_back(q);
            if (theta_star) traj.errors.push_back(max_abs_difference(next, *theta_star));
        } else {
            traj.iterates.back() = next;
            traj.q_values.back() = q;
            if (theta_star) traj.errors.back() = max_abs_difference(next, *theta_star);
        }
        current = std::move(next);
        if (change < cfg.tol || data.n() == 0) {
            traj.converged = true;
            break;
        }
    }
    return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    const std::size_t K = traj.iterates.front().size();
    out << "iter";
    for (std::size_t k = 0; k < K; ++k) fmt::print(out, ",theta_{}", k + 1);
    out << ",q_value,err\n";
    for (std::size_t t = 0; t < traj.iterates.size(); ++t) {
        const std::size_t iter = (t + 1 == traj.iterates.size()) ? traj.steps : t;
        fmt::print(out, "{}", iter);
        for (double v : traj.iterates[t].theta()) fmt::print(out, ",{:.17g}", v);
        out << ',';
        if (t >= 1 && t - 1 < traj.q_values.size()) fmt::print(out, "{:.17g}", traj.q_values[t - 1]);
        out << ',';
        if (t < traj.errors.size()) fmt::print(out, "{:.17g}", traj.errors[t]);
        out << '\n';
    }
}

}  // namespace ssem
