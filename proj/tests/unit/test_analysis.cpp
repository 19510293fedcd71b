#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "ssem/analysis.hpp"
#include "ssem/error.hpp"

using namespace ssem;

namespace {

constexpr double kE2 = std::numbers::e * std::numbers::e;

PopulationModel sym2(double star, double gamma) {
    return PopulationModel(ModelKind::sym2(), MixtureParams::symmetric(star), gamma);
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no ssem::Error thrown";
    return ErrorCode::InvalidArgument;
}

std::vector<MixtureParams> sym2_grid(double star) {
    std::vector<MixtureParams> grid;
    for (double d : {0.2, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) grid.push_back(MixtureParams::symmetric(star + d));
    return grid;
}

}  // namespace

TEST(BetaTheoretical, Formula) {
    EXPECT_EQ(beta_theoretical(0.37, 0.2, 0.0), 1.0);
    for (double g : {0.1, 0.4, 0.9}) EXPECT_NEAR(beta_theoretical(0.5, 0.5, g), 1.0 - g, 1e-15);
    EXPECT_NEAR(beta_theoretical(0.3, 0.25, 0.5), 6.0 / 11.0, 1e-15);
    EXPECT_EQ(code_of([] { beta_theoretical(0.5, 0.5, 1.0); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { beta_theoretical(0.0, 0.5, 0.5); }), ErrorCode::InvalidArgument);
}

TEST(ContractionRatio, Sym2IsExactlyOneMinusGamma) {
    const auto pm = sym2(1.3, 0.4);
    for (const auto& probe : sym2_grid(1.3)) EXPECT_NEAR(contraction_ratio(pm, probe, 1), 0.6, 1e-6);
}

TEST(ContractionRatio, GmmWithinBeta) {
    const PopulationModel pm(ModelKind::gmm(), MixtureParams({0.5, 0.5}, {-1.0, 1.0}), 0.5);
    const auto probe = MixtureParams({0.5, 0.5}, {-1.0, 1.8});
    const double ratio = contraction_ratio(pm, probe, 1);
    EXPECT_LE(ratio, beta_theoretical(c_theta(pm, probe, 1), 0.5, 0.5) + kTheoremSlack);
    EXPECT_NEAR(ratio, oracle::frozen::kGmmRatioComponent2, 1e-8);
}

TEST(ContractionRatio, GammaZeroIsOne) {
    const PopulationModel pm(ModelKind::gmm(), MixtureParams({0.3, 0.7}, {-1.0, 1.0}), 0.0);
    EXPECT_EQ(contraction_ratio(pm, MixtureParams({0.3, 0.7}, {0.0, 2.0}), 0), 1.0);
}

TEST(ContractionRatio, FixedPointRejected) {
    const auto pm = sym2(1.0, 0.5);
    EXPECT_EQ(code_of([&] { contraction_ratio(pm, pm.theta_star(), 1); }), ErrorCode::ProbeTooCloseToFixedPoint);
}

TEST(VerifyTheorem1, Sym2GridPasses) {
    for (double gamma : {0.1, 0.5, 0.9}) {
        const auto report = verify_theorem1(sym2(1.5, gamma), sym2_grid(1.5));
        EXPECT_TRUE(report.pass_all());
        EXPECT_EQ(report.probe_grid.size(), 7u);
        for (const auto& e : report.entries) {
            ASSERT_FALSE(e.skipped);
            EXPECT_NEAR(e.ratio_empirical, 1.0 - gamma, 1e-6);
            EXPECT_NEAR(e.r_empirical, e.ratio_empirical * e.kappa_empirical, 1e-12);
        }
    }
}

TEST(VerifyTheorem1, GammaZeroDegenerate) {
    const auto report = verify_theorem1(sym2(1.0, 0.0), sym2_grid(1.0));
    EXPECT_TRUE(report.pass_all());
    for (const auto& e : report.entries) {
        EXPECT_EQ(e.ratio_empirical, 1.0);
        EXPECT_EQ(e.beta_theory, 1.0);
    }
}

TEST(VerifyTheorem1, FixedPointSkipped) {
    const auto report = verify_theorem1(sym2(1.0, 0.5), {MixtureParams::symmetric(1.0), MixtureParams::symmetric(2.0)});
    std::size_t skipped = 0;
    for (const auto& e : report.entries) skipped += e.skipped ? 1 : 0;
    EXPECT_EQ(skipped, 2u);
    EXPECT_TRUE(report.pass_all());
}

TEST(VerifyTheorem1, EtaReportedBothWays) {
    const PopulationModel pm(ModelKind::gmm(), MixtureParams({0.5, 0.5}, {-1.0, 1.0}), 0.3);
    const auto report = verify_theorem1(pm, {MixtureParams({0.5, 0.5}, {-1.0, 1.8})});
    for (const auto& e : report.entries) {
        ASSERT_TRUE(e.eta_raw.has_value());
        ASSERT_TRUE(e.eta.has_value());
        EXPECT_GE(*e.eta, 1.0);
        EXPECT_NEAR(*e.eta, std::max(*e.eta_raw, 1.0 / *e.eta_raw), 1e-15);
    }
}

TEST(VerifyTheorem1, RejectsExpFam) {
    const PopulationModel pm(ModelKind::expfam(poisson_family()), MixtureParams({1.0}, {0.0}), 0.5);
    EXPECT_EQ(code_of([&] { verify_theorem1(pm, {MixtureParams({1.0}, {0.5})}); }), ErrorCode::InvalidArgument);
}

TEST(VerifyTheorem2, PoissonLimit) {
    const PopulationModel pm(ModelKind::expfam(poisson_family()),
                             MixtureParams({0.5, 0.5}, {std::log(2.0), std::log(5.0)}), 0.5);
    const auto report = verify_theorem2(pm, {0.025, 0.2, 0.05, 0.1});
    ASSERT_EQ(report.epsilons.front(), 0.2);  // sorted largest first
    EXPECT_TRUE(report.pass_all());
    for (const auto& c : report.components) {
        EXPECT_TRUE(c.monotone);
        EXPECT_NEAR(c.residual_slope, 2.0, 0.3);
    }
    for (const auto& e : report.entries) {
        const int row = e.epsilon == 0.2 ? 0 : e.epsilon == 0.1 ? 1 : e.epsilon == 0.05 ? 2 : 3;
        EXPECT_NEAR(e.ratio, oracle::frozen::kPoissonThm2[row][2 * e.component], 1e-8);
        EXPECT_NEAR(e.beta_theory, oracle::frozen::kPoissonThm2[row][2 * e.component + 1], 1e-9);
    }
}

TEST(VerifyTheorem2, GaussianSpecIsExact) {
    const auto truth = MixtureParams({0.5, 0.5}, {-1.0, 1.0});
    const PopulationModel pm(ModelKind::expfam(gaussian_family()), truth, 0.5);
    const PopulationModel gmm(ModelKind::gmm(), truth, 0.5);
    const auto report = verify_theorem2(pm, {0.2, 0.1, 0.05});
    for (const auto& c : report.components) EXPECT_TRUE(c.taylor_exact);
    for (const auto& e : report.entries) {
        const auto probe = truth.with_theta({-1.0 + e.epsilon, 1.0 + e.epsilon});
        EXPECT_NEAR(e.ratio, contraction_ratio(gmm, probe, e.component), 1e-9);
    }
}

TEST(VerifyTheorem2, TinyEpsilonSkipped) {
    const PopulationModel pm(ModelKind::expfam(poisson_family()),
                             MixtureParams({0.5, 0.5}, {std::log(2.0), std::log(5.0)}), 0.5);
    const auto report = verify_theorem2(pm, {1e-10});
    for (const auto& e : report.entries) EXPECT_TRUE(e.skipped);
    EXPECT_FALSE(report.pass_all());
}

TEST(VerifyTheorem2, RejectsGaussianKinds) {
    EXPECT_EQ(code_of([] { verify_theorem2(sym2(1.0, 0.5), {0.1}); }), ErrorCode::NotExpFam);
}

TEST(RateBoundItem1, Values) {
    EXPECT_NEAR(rate_bound_item1(2.0 / std::numbers::e, 0.0).bound_value, 1.0, 1e-14);
    EXPECT_NEAR(rate_bound_item1(2.0, 0.0).bound_value, 1.0 / kE2, 1e-15);
    const auto r = rate_bound_item1(1.0, 0.75);
    EXPECT_NEAR(r.bound_value, 1.0 / kE2, 1e-15);
    EXPECT_TRUE(r.applicable);
    EXPECT_TRUE(r.applicable_proof);
    EXPECT_TRUE(r.pass);
}

TEST(RateBoundItem1, ApplicabilityBothWays) {
    // 0.5 > (2/e) sqrt(0.25) but 0.5 < 2/e.
    const auto r = rate_bound_item1(0.5, 0.75);
    EXPECT_TRUE(r.applicable);
    EXPECT_FALSE(r.applicable_proof);
    EXPECT_FALSE(rate_bound_item1(0.5, 0.0).applicable);
}

TEST(RateBoundItem1, DerivativeBoundHolds) {
    const double stars[] = {0.8, 1.0, 1.5, 2.0, 3.0, 5.0};
    for (std::size_t i = 0; i < 6; ++i) {
        const auto r = rate_bound_item1(stars[i], 0.0);
        EXPECT_TRUE(r.pass) << stars[i];
        EXPECT_NEAR(r.measured_kappa, oracle::frozen::kDm0[i], 1e-9);
    }
}

TEST(RateBoundItem2, Values) {
    EXPECT_NEAR(item2_bound(2.0, 0.0), oracle::frozen::kItem2BoundStar2, 1e-15);
    EXPECT_NEAR(item2_bound(2.0, 0.0), 0.179273, 1e-6);
    EXPECT_LT(item2_bound(12.0, 0.0), 1e-20);
    EXPECT_NEAR(item2_bound(3.0, 0.5), 0.5 * item2_bound(3.0, 0.0), 1e-17);
    for (double s : {2.1, 2.5, 3.0, 4.0}) EXPECT_TRUE(rate_bound_item2(s, 0.0).pass) << s;
}

TEST(RateBoundItem2, NotApplicableBelowTwo) {
    const auto r = rate_bound_item2(1.0, 0.0);
    EXPECT_FALSE(r.applicable);
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(r.checks.empty());
}

TEST(RateBoundItem2, ComparisonWithItem1IsReported) {
    // Item 2 is looser than item 1 just above the threshold and tighter from 2.5 on.
    const auto near = rate_bound_item2(2.1, 0.0);
    const auto far = rate_bound_item2(2.5, 0.0);
    ASSERT_EQ(near.checks.size(), 2u);
    EXPECT_FALSE(near.checks[1].pass);
    EXPECT_TRUE(far.checks[1].pass);
}

TEST(RateBoundItem3, Constant) {
    EXPECT_NEAR(item3_smoothness_constant(1.0), oracle::frozen::kItem3ConstantStar1, 1e-15);
    EXPECT_NEAR(rate_bound_item3(1.0, 0.5, 2.5).bound_value, 0.5 * oracle::frozen::kItem3ConstantStar1, 1e-15);
}

TEST(RateBoundItem3, Preconditions) {
    EXPECT_EQ(code_of([] { rate_bound_item3(1.0, 0.0, 2.0); }), ErrorCode::ProbeOutsideRegime);
    const auto r = rate_bound_item3(0.5, 0.0, 2.0);
    EXPECT_FALSE(r.applicable);
    EXPECT_TRUE(r.pass);
}

TEST(RateBoundItem3, FixedPointOfF) {
    const auto r = rate_bound_item3(1.0, 0.0, 2.01);
    ASSERT_FALSE(r.checks.empty());
    EXPECT_EQ(r.checks.front().name, "f_fixed_point");
    EXPECT_TRUE(r.checks.front().pass);
}

TEST(RateBoundItem3, ReportsMeasuredViolation) {
    // The printed smoothness constant is smaller than the measured gap at
    // these probes; the check must say so rather than pass.
    const auto r = rate_bound_item3(1.0, 0.0, 2.01);
    EXPECT_FALSE(r.pass);
    EXPECT_GT(r.measured_kappa, item3_smoothness_constant(1.0));
}

TEST(TailSandwich, Values) {
    const double ts[] = {1.0, 1.5, 2.0, 3.0, 4.0, 5.0};
    for (std::size_t i = 0; i < 6; ++i) {
        const auto s = gaussian_tail_sandwich(ts[i]);
        EXPECT_NEAR(s.phi_tail, oracle::frozen::kTail[i], 1e-12 * std::max(1.0, oracle::frozen::kTail[i]));
        EXPECT_LT(s.lower, s.phi_tail);
        EXPECT_LT(s.phi_tail, s.upper);
        EXPECT_TRUE(s.holds);
    }
    const auto one = gaussian_tail_sandwich(1.0);
    EXPECT_EQ(one.lower, 0.0);
    EXPECT_NEAR(one.upper, 0.241971, 1e-6);
    const auto two = gaussian_tail_sandwich(2.0);
    EXPECT_NEAR(two.lower, 0.020247, 1e-6);
    EXPECT_NEAR(two.upper, 0.026995, 1e-6);
    const auto five = gaussian_tail_sandwich(5.0);
    EXPECT_LT((five.upper - five.lower) / five.phi_tail, 0.05);
    EXPECT_EQ(code_of([] { gaussian_tail_sandwich(0.0); }), ErrorCode::InvalidArgument);
}

TEST(DemonstrateRescue, Sym2NeedsNoRescue) {
    const auto report = demonstrate_rescue(sym2(1.5, 0.0), sym2_grid(1.5), {});
    EXPECT_FALSE(report.rescue_needed);
    EXPECT_FALSE(report.gamma_min.has_value());
    EXPECT_LT(report.kappa, 1.0);
    EXPECT_LE(report.kappa, dm0_dtheta_sym2(sym2(1.5, 0.0), 1.5) + 1e-9);  // secant below the tangent at theta*
    EXPECT_TRUE(report.bound_held);
}

TEST(DemonstrateRescue, UnequalWeightGmm) {
    const PopulationModel pm(ModelKind::gmm(), MixtureParams({0.1, 0.9}, {-0.5, 0.5}), 0.0);
    const auto report = demonstrate_rescue(pm, {MixtureParams({0.1, 0.9}, {-0.2, 0.2})}, {});
    ASSERT_TRUE(report.rescue_needed);
    ASSERT_TRUE(report.gamma_min.has_value());
    const double g = *report.gamma_min;
    EXPECT_NEAR(report.rho / (g / (1.0 - g) + report.rho) * report.kappa, 1.0, 1e-9);
    EXPECT_NEAR(report.gamma_above, std::min(0.99, g + 0.1), 1e-15);
    EXPECT_TRUE(report.bound_held);
    ASSERT_EQ(report.step_ratios_above.size(), report.step_bounds_above.size());
    for (std::size_t t = 0; t < report.step_ratios_above.size(); ++t) {
        EXPECT_LE(report.step_ratios_above[t], report.step_bounds_above[t] + kTheoremSlack);
    }
}

TEST(EmpiricalRate, PopulationSym2) {
    const auto fast = run_population_em(sym2(2.0, 0.0), MixtureParams::symmetric(3.0), {});
    EXPECT_LE(empirical_rate(fast, MixtureParams::symmetric(2.0)), 1.0 / kE2 + 1e-6);
    const auto labeled = run_population_em(sym2(2.0, 0.9), MixtureParams::symmetric(3.0), {});
    EXPECT_LE(empirical_rate(labeled, MixtureParams::symmetric(2.0)), 0.1 / kE2 + 1e-6);
}

TEST(EmpiricalRate, ConstantTrajectoryRejected) {
    Trajectory traj;
    traj.iterates.assign(4, MixtureParams::symmetric(1.0));
    EXPECT_EQ(code_of([&] { empirical_rate(traj, MixtureParams::symmetric(1.0)); }), ErrorCode::TrajectoryTooShort);
}
