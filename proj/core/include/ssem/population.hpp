#pragma once

#include <cstddef>
#include <functional>

#include "ssem/em.hpp"
#include "ssem/model.hpp"

namespace ssem {

struct QuadratureScheme {
    double abs_tol = 1e-10;
    /// Real-line supports are truncated to [min_k mu_k - range_sigma sd_k, max_k mu_k + range_sigma sd_k].
    double range_sigma = 12.0;
    std::size_t max_subdivisions = std::size_t{1} << 16;
};

/// The infinite-data limit: expectations are taken under p_Y(.; theta_star)
/// and a fraction gamma in [0, 1) of the mass is labeled. gamma = 1 is the
/// all-labeled limit and is answered analytically by theta_star_from_labels.
class PopulationModel {
public:
    PopulationModel(ModelKind kind, MixtureParams theta_star, double gamma, QuadratureScheme scheme = {});

    const ModelKind& kind() const noexcept { return kind_; }
    const MixtureParams& theta_star() const noexcept { return theta_star_; }
    double gamma() const noexcept { return gamma_; }
    const QuadratureScheme& scheme() const noexcept { return scheme_; }

    PopulationModel with_gamma(double gamma) const { return {kind_, theta_star_, gamma, scheme_}; }

private:
    ModelKind kind_;
    MixtureParams theta_star_;
    double gamma_;
    QuadratureScheme scheme_;
};

/// E[f(Y)] under the true marginal. Throws QuadratureFailure when the error
/// estimate stays above abs_tol.
double expect(const PopulationModel& pm, const std::function<double(double)>& f);

/// E[q(Y; theta_k)], the expected responsibility of component k.
double c_theta(const PopulationModel& pm, const MixtureParams& theta, std::size_t k);

/// One population-EM update of component k with labeled fraction pm.gamma().
/// Labeled moments are analytic: E[1{X=k}] = pi_k, E[1{X=k} t(Y)] = pi_k alpha'(theta*_k).
/// sym2 uses M_gamma = (1 - gamma) M_0 + gamma theta* with M_0(s) = E[tanh(Y s) Y].
double pop_m_gamma(const PopulationModel& pm, const MixtureParams& theta, std::size_t k);
/// pop_m_gamma with gamma = 0.
double pop_m0(const PopulationModel& pm, const MixtureParams& theta, std::size_t k);
/// All components at once.
MixtureParams pop_m_gamma_all(const PopulationModel& pm, const MixtureParams& theta);

/// The gamma -> 1 limit: component k's parameter recovered from labeled moments alone.
double theta_star_from_labels(const PopulationModel& pm, std::size_t k);

/// Derivative of the sym2 operator M_0 at s: 4 E[Y^2 / (e^{-Ys} + e^{Ys})^2], s >= 0.
double dm0_dtheta_sym2(const PopulationModel& pm, double s);

/// f(s) = -E[q(Y; s) Y] for sym2, q being the -s component's responsibility.
/// M_0(s) = 2 f(s), so f(theta*) = theta* / 2.
double sym2_f(const PopulationModel& pm, double s);

/// Iterates theta <- pop_m_gamma_all(theta) from theta0 and records exact
/// errors against theta*. q_values stay empty.
Trajectory run_population_em(const PopulationModel& pm, const MixtureParams& theta0, const EmConfig& cfg);

}  // namespace ssem
