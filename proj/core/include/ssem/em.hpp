#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ssem/model.hpp"
#include "ssem/sampling.hpp"

namespace ssem {

struct EmConfig {
    std::size_t max_iters = 500;
    double tol = 1e-10;  // stop when max_k |theta_k^{t+1} - theta_k^t| < tol
    bool record_trajectory = true;
};

/// EM iterates. iterates[0] is the initialization; q_values[t] is
/// Q(theta^{t+1}; theta^t); errors[t] is max_k |theta_k^t - theta*_k| when a
/// truth was supplied. Without record_trajectory only the first and last
/// iterate (and their entries) are kept.
struct Trajectory {
    std::vector<MixtureParams> iterates;
    std::vector<double> q_values;
    std::vector<double> errors;
    bool converged = false;
    std::size_t steps = 0;  // M-steps actually performed

    const MixtureParams& final_params() const { return iterates.back(); }
};

/// max_k |a_k - b_k|
double max_abs_difference(const MixtureParams& a, const MixtureParams& b);

/// Surrogate objective Q_{n,m}(theta; theta_t), 1/(n+m)-normalized. gmm and
/// sym2 include the log(sqrt(2 pi) / pi_k) constants; expfam follows the
/// exponential-family expansion, which has no weight term.
double q_value(const ModelKind& kind, const Dataset& data, const MixtureParams& theta, const MixtureParams& theta_t);

/// Responsibility-weighted component means. Weights are left unchanged.
/// Throws EmptyComponent when a component's total weight is below 1e-300.
MixtureParams m_step_gmm(const Dataset& data, const MixtureParams& theta_t);

/// Inverse mean function applied to the weighted average of t(y).
MixtureParams m_step_expfam(const ExpFamilySpec& family, const Dataset& data, const MixtureParams& theta_t);

/// Tied-mean update for the symmetric two-Gaussian model. Label 0 is the
/// -theta component.
double m_step_sym2(const Dataset& data, double theta_t);

/// Dispatches on kind.
MixtureParams m_step(const ModelKind& kind, const Dataset& data, const MixtureParams& theta_t);

/// Iterates m_step until the parameter change drops below cfg.tol or
/// cfg.max_iters steps have run. With no unlabeled data the update ignores
/// theta_t, so the run stops after a single step.
Trajectory run_em(const ModelKind& kind, const Dataset& data, const MixtureParams& theta0, const EmConfig& cfg,
                  const std::optional<MixtureParams>& theta_star = std::nullopt);

/// Header `iter,theta_1..theta_K,q_value,err`, 17 significant digits, empty
/// fields where a value is absent.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace ssem
