#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ssem/em.hpp"
#include "ssem/population.hpp"

namespace ssem {

/// Additive slack on every theorem inequality.
inline constexpr double kTheoremSlack = 1e-6;
/// Additive slack on the closed-form rate-bound inequalities.
inline constexpr double kRateBoundSlack = 1e-8;

/// One checked inequality lhs <= rhs (rhs excludes the slack).
struct Check {
    std::string name;
    std::vector<double> probe;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

/// Labeled-sample contraction coefficient c / (pi gamma / (1 - gamma) + c).
double beta_theoretical(double c, double pi_k, double gamma);

/// |M_gamma(theta)_k - theta*_k| / |M_0(theta)_k - theta*_k|. Throws
/// ProbeTooCloseToFixedPoint when the denominator is within 100 abs_tol of 0.
double contraction_ratio(const PopulationModel& pm, const MixtureParams& probe, std::size_t k);

struct ContractionEntry {
    std::size_t probe_index = 0;
    std::size_t component = 0;
    bool skipped = false;
    std::string skip_reason;
    double c_theta = 0.0;
    double beta_theory = 0.0;
    double ratio_empirical = 0.0;
    /// |M_0(theta)_k - theta*_k| / max_j |theta_j - theta*_j|
    double kappa_empirical = 0.0;
    /// ratio_empirical * kappa_empirical
    double r_empirical = 0.0;
    /// M_0(theta)_k / theta*_k, the moment ratio of the labeled and unlabeled updates.
    std::optional<double> eta_raw;
    /// max(eta, 1/eta) when eta > 0 (roles swapped when the ratio is below one).
    std::optional<double> eta;
    bool bound_satisfied = false;
};

struct ContractionReport {
    double gamma = 0.0;
    std::vector<double> theta_star;
    std::vector<std::vector<double>> probe_grid;
    std::vector<ContractionEntry> entries;

    bool pass_all() const;
};

/// For every probe and component: ratio <= beta_theoretical(c_theta(probe, k), pi_k, gamma) + slack.
/// Probes at the fixed point are recorded as skipped. gmm and sym2 only.
ContractionReport verify_theorem1(const PopulationModel& pm, const std::vector<MixtureParams>& probe_grid);

struct Theorem2Entry {
    double epsilon = 0.0;
    std::size_t component = 0;
    bool skipped = false;
    std::string skip_reason;
    double ratio = 0.0;
    double beta_theory = 0.0;
    double deviation = 0.0;  // |ratio - beta_theory|
    /// |alpha'(M_gamma) - alpha'(theta*) - (M_gamma - theta*) alpha''(theta*)|
    double taylor_residual = 0.0;
};

struct Theorem2Component {
    std::size_t component = 0;
    bool monotone = false;
    /// Least-squares slope of log(taylor_residual) on log(epsilon); NaN when
    /// the expansion is exact (all residuals at rounding level).
    double residual_slope = 0.0;
    bool taylor_exact = false;
    bool slope_ok = false;
};

struct Theorem2Report {
    double gamma = 0.0;
    std::vector<double> theta_star;
    std::vector<double> epsilons;
    std::vector<Theorem2Entry> entries;
    std::vector<Theorem2Component> components;

    bool pass_all() const;
};

/// Probes theta = theta* + epsilon (every component shifted) for each
/// epsilon; checks that |ratio - beta| does not grow as epsilon shrinks and
/// that the first-order Taylor residual scales like epsilon^2 (slope 2 +- 0.3).
/// Throws NotExpFam for other kinds.
Theorem2Report verify_theorem2(const PopulationModel& pm, std::vector<double> epsilons);

struct RateBoundReport {
    int item = 0;
    double theta_star = 0.0;
    double gamma = 0.0;
    std::optional<double> theta_probe;
    double bound_value = 0.0;
    /// Precondition as stated in the theorem.
    bool applicable = false;
    /// Precondition established by the proof (item 1 only: theta* >= 2/e).
    bool applicable_proof = false;
    double measured_kappa = 0.0;
    bool pass = false;
    std::vector<Check> checks;
};

/// r = (1 - gamma) 4 / (theta*^2 e^2); measured kappa = dM_0/dtheta at theta*.
RateBoundReport rate_bound_item1(double theta_star, double gamma, const QuadratureScheme& scheme = {});
/// r = (1 - gamma) 4 [e^{-9 theta*^2 / 32} / (theta*^2 e^2) + (theta*^2 / 16) e^{-theta*^2 / 2}].
RateBoundReport rate_bound_item2(double theta_star, double gamma, const QuadratureScheme& scheme = {});
/// Gradient-smoothness constant L = 2 / (9 theta*^2 sqrt(2 pi)) e^{-theta*^2 / 2}; bound (1 - gamma) L.
/// Throws ProbeOutsideRegime unless theta_probe > theta* + 1.
RateBoundReport rate_bound_item3(double theta_star, double gamma, double theta_probe,
                                 const QuadratureScheme& scheme = {});

double item1_bound(double theta_star, double gamma);
double item2_bound(double theta_star, double gamma);
double item3_smoothness_constant(double theta_star);

struct TailSandwich {
    double lower = 0.0;
    double upper = 0.0;
    double phi_tail = 0.0;  // P(Z > t)
    bool holds = false;     // lower <= phi_tail <= upper
};

/// (1/t - 1/t^3) phi(t) <= P(Z > t) <= phi(t) / t for t > 0.
TailSandwich gaussian_tail_sandwich(double t);

struct RescueReport {
    bool rescue_needed = false;
    /// max over probes of ||M_0(theta) - theta*|| / ||theta - theta*|| (max-norm).
    double kappa = 0.0;
    std::vector<double> kappa_probe;
    /// max_k c_theta_k / pi_k at kappa_probe; beta(gamma) = rho / (gamma / (1 - gamma) + rho).
    double rho = 0.0;
    /// Solves beta(gamma) kappa = 1; present only when kappa >= 1.
    std::optional<double> gamma_min;
    double gamma_below = 0.0;
    double gamma_above = 0.0;
    Trajectory below;
    Trajectory above;
    std::vector<double> step_ratios_below;
    std::vector<double> step_ratios_above;
    /// Per step of `above`: max_k beta_k(theta^t) * kappa(theta^t), the decomposition r = beta kappa.
    std::vector<double> step_bounds_above;
    bool bound_held = false;
};

/// Measures kappa over the probes, solves for the labeled fraction that makes
/// beta kappa = 1, and runs population EM from the worst probe at labeled
/// fractions 0.1 below and above it. When kappa < 1 no rescue is needed and
/// the runs use gamma = 0 and 0.1.
RescueReport demonstrate_rescue(const PopulationModel& pm, const std::vector<MixtureParams>& probes,
                                const EmConfig& cfg);

/// max over steps of err_{t+1} / err_t with err_t = ||theta^t - theta*||, over
/// steps whose err_t exceeds floor. Throws TrajectoryTooShort when no step qualifies.
double empirical_rate(const Trajectory& traj, const MixtureParams& theta_star, double floor = 1e-8);

}  // namespace ssem
