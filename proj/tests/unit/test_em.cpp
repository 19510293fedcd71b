#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "ssem/em.hpp"
#include "ssem/error.hpp"
#include "ssem/sampling.hpp"

using namespace ssem;

namespace {

Dataset labeled_only(std::vector<LabeledSample> samples) {
    Dataset d;
    d.labeled = std::move(samples);
    return d;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

}  // namespace

TEST(QValue, LabeledOnlyIsCompleteLogLikelihood) {
    const auto theta = MixtureParams({0.3, 0.7}, {-1.0, 2.0});
    const auto data = labeled_only({{0, -0.5}, {1, 2.5}, {1, 1.0}});
    double expected = 0.0;
    for (const auto& s : data.labeled) {
        const double d = s.y - theta.theta(s.x);
        expected += std::log(theta.pi(s.x)) - 0.5 * d * d - kLogSqrtTwoPi;
    }
    EXPECT_NEAR(q_value(ModelKind::gmm(), data, theta, theta), expected / 3.0, 1e-14);
}

TEST(QValue, TruthMaximizesAtLargeN) {
    const auto truth = MixtureParams({0.4, 0.6}, {-1.0, 1.5});
    const auto data = sample_dataset(ModelKind::gmm(), truth, {5, 2000, 200000});
    const double at_truth = q_value(ModelKind::gmm(), data, truth, truth);
    for (double da : {-0.1, 0.0, 0.1}) {
        for (double db : {-0.1, 0.0, 0.1}) {
            if (da == 0.0 && db == 0.0) continue;
            const auto other = truth.with_theta({-1.0 + da, 1.5 + db});
            EXPECT_GT(at_truth, q_value(ModelKind::gmm(), data, other, truth));
        }
    }
}

TEST(QValue, SingleSymmetricPointPullsToZero) {
    Dataset d;
    d.unlabeled = {0.0};
    const auto at = [&](double s) {
        return q_value(ModelKind::sym2(), d, MixtureParams::symmetric(s), MixtureParams::symmetric(1.0));
    };
    EXPECT_GT(at(0.0), at(0.1));
    EXPECT_GT(at(0.0), at(-0.1));
    EXPECT_NEAR(at(0.5) - at(0.0), -0.125, 1e-14);
    EXPECT_DOUBLE_EQ(m_step_sym2(d, 1.0), 0.0);
}

TEST(MStepGmm, SingleLabeledPoint) {
    const auto theta_t = MixtureParams({0.5, 0.5}, {0.0, 0.0});
    Dataset d = labeled_only({{1, 5.0}, {0, -1.0}});
    const auto next = m_step_gmm(d, theta_t);
    EXPECT_DOUBLE_EQ(next.theta(1), 5.0);
    EXPECT_DOUBLE_EQ(next.theta(0), -1.0);
}

TEST(MStepGmm, WeightedAverageAgainstDirectSummation) {
    // Labeled y = c for both components, unlabeled points placed symmetrically
    // so the responsibilities are explicit.
    const double c = 0.75;
    const auto theta_t = MixtureParams({0.5, 0.5}, {-1.0, 1.0});
    Dataset d;
    d.labeled = {{0, c}, {1, c}, {1, c}};
    d.unlabeled = {-2.0, 2.0, 0.5};
    const auto q1 = [](double y) { return 1.0 / (1.0 + std::exp(-2.0 * y)); };  // p(X = 2 | y)
    double num = 2.0 * c, den = 2.0;
    for (double y : d.unlabeled) {
        num += q1(y) * y;
        den += q1(y);
    }
    EXPECT_NEAR(m_step_gmm(d, theta_t).theta(1), num / den, 1e-12);
}

TEST(MStepGmm, FixedPointAtLargeN) {
    const auto truth = MixtureParams({0.5, 0.5}, {-1.5, 1.5});
    const auto data = sample_dataset(ModelKind::gmm(), truth, {17, 0, 1000000});
    const auto next = m_step_gmm(data, truth);
    for (std::size_t k = 0; k < 2; ++k) {
        // Delta-method standard error of sum(q y) / sum(q) from the sample itself.
        std::size_t i = 0;
        const auto draw = [&] { return data.unlabeled[i++]; };
        const auto q = [&](double y) { return responsibility(ModelKind::gmm(), truth, y, k); };
        const auto est = oracle::monte_carlo_ratio([&](double y) { return q(y) * y; }, q, draw, data.n());
        EXPECT_NEAR(est.mean, next.theta(k), 1e-9);
        EXPECT_LT(std::abs(next.theta(k) - truth.theta(k)), 4.0 * est.std_error);
    }
}

TEST(MStepGmm, EmptyComponent) {
    const auto theta_t = MixtureParams({0.5, 0.5}, {-1.0, 40.0});
    Dataset d;
    d.unlabeled = {-1.0, -2.0};
    try {
        m_step_gmm(d, theta_t);
        FAIL() << "expected EmptyComponent";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyComponent);
    }
}

TEST(MStepExpFam, ClosedFormInversions) {
    EXPECT_DOUBLE_EQ(m_step_expfam(exponential_family(), labeled_only({{0, 2.0}}), MixtureParams({1.0}, {-1.0})).theta(0),
                     -0.5);
    const auto pois = m_step_expfam(poisson_family(), labeled_only({{0, 2.0}, {0, 4.0}, {0, 3.0}}),
                                    MixtureParams({1.0}, {0.0}));
    EXPECT_NEAR(pois.theta(0), std::log(3.0), 1e-12);
}

TEST(MStepExpFam, MeanOutOfRange) {
    try {
        m_step_expfam(poisson_family(), labeled_only({{0, 0.0}}), MixtureParams({1.0}, {0.0}));
        FAIL() << "expected MeanOutOfRange";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MeanOutOfRange);
    }
}

TEST(MStepExpFam, GaussianSpecMatchesGmm) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto truth = MixtureParams({0.35, 0.65}, {u(rng), u(rng)});
        const auto data = sample_dataset(ModelKind::gmm(), truth, {static_cast<std::uint64_t>(trial), 30, 170});
        const auto theta_t = truth.with_theta({u(rng), u(rng)});
        const auto a = m_step_gmm(data, theta_t);
        const auto b = m_step_expfam(gaussian_family(), data, theta_t);
        for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(a.theta(k), b.theta(k), 1e-10);
    }
}

TEST(MStepSym2, LabeledExamples) {
    EXPECT_DOUBLE_EQ(m_step_sym2(labeled_only({{1, 3.0}}), 0.7), 3.0);
    EXPECT_DOUBLE_EQ(m_step_sym2(labeled_only({{0, 3.0}}), 0.7), -3.0);
}

TEST(MStepSym2, SignSymmetry) {
    const auto data = sample_dataset(ModelKind::sym2(), MixtureParams::symmetric(1.2), {8, 50, 300});
    // Swapping labels 1 <-> 2 and evaluating at -theta_t negates the update. Negating every
    // observation together with the swap leaves it unchanged.
    Dataset swapped = data;
    for (auto& s : swapped.labeled) s.x = 1 - s.x;
    Dataset mirrored = swapped;
    for (auto& s : mirrored.labeled) s.y = -s.y;
    for (double& y : mirrored.unlabeled) y = -y;
    for (double theta_t : {0.3, 1.0, 2.5}) {
        EXPECT_EQ(m_step_sym2(swapped, -theta_t), -m_step_sym2(data, theta_t));
        EXPECT_EQ(m_step_sym2(mirrored, theta_t), m_step_sym2(data, theta_t));
    }
}

TEST(MStepSym2, DispatchMatchesGmmStructure) {
    const auto data = sample_dataset(ModelKind::sym2(), MixtureParams::symmetric(0.9), {2, 10, 90});
    const auto next = m_step(ModelKind::sym2(), data, MixtureParams::symmetric(1.3));
    EXPECT_EQ(next.theta(0), -next.theta(1));
    EXPECT_EQ(next.symmetric_theta(), m_step_sym2(data, 1.3));
}

TEST(RunEm, LabeledOnlyConvergesInOneStep) {
    const auto truth = MixtureParams({0.5, 0.5}, {-1.0, 1.0});
    const auto data = sample_dataset(ModelKind::gmm(), truth, {4, 200, 0});
    const auto traj = run_em(ModelKind::gmm(), data, truth.with_theta({3.0, -3.0}), {}, truth);
    EXPECT_TRUE(traj.converged);
    EXPECT_EQ(traj.steps, 1u);
    EXPECT_EQ(traj.iterates.size(), 2u);
}

TEST(RunEm, Sym2RecoversTruth) {
    const auto truth = MixtureParams::symmetric(1.5);
    const auto data = sample_dataset(ModelKind::sym2(), truth, {7, 0, 100000});
    const auto traj = run_em(ModelKind::sym2(), data, MixtureParams::symmetric(3.0), {}, truth);
    EXPECT_TRUE(traj.converged);
    EXPECT_LT(std::abs(traj.final_params().symmetric_theta() - 1.5), 0.05);
    EXPECT_EQ(traj.errors.size(), traj.iterates.size());
    EXPECT_EQ(traj.q_values.size(), traj.steps);
}

TEST(RunEm, StartAtTruthMovesBelowNoise) {
    const auto truth = MixtureParams::symmetric(1.5);
    const auto data = sample_dataset(ModelKind::sym2(), truth, {12, 0, 1000000});
    const auto traj = run_em(ModelKind::sym2(), data, truth, {}, truth);
    EXPECT_LT(std::abs(traj.final_params().symmetric_theta() - 1.5), 4.0 * 1.2 / std::sqrt(1e6));
}

TEST(RunEm, AscentAndArgmax) {
    const auto truth = MixtureParams({0.3, 0.7}, {-1.0, 1.0});
    const auto data = sample_dataset(ModelKind::gmm(), truth, {31, 100, 900});
    const auto traj = run_em(ModelKind::gmm(), data, truth.with_theta({0.5, 0.6}), {}, truth);
    ASSERT_GE(traj.steps, 2u);
    for (std::size_t t = 0; t < traj.steps; ++t) {
        const auto& cur = traj.iterates[t];
        EXPECT_GE(traj.q_values[t], q_value(ModelKind::gmm(), data, cur, cur) - 1e-10);
        for (std::size_t k = 0; k < 2; ++k) {
            const auto q_along = [&](double v) {
                std::vector<double> th{traj.iterates[t + 1].theta(0), traj.iterates[t + 1].theta(1)};
                th[k] = v;
                return q_value(ModelKind::gmm(), data, cur.with_theta(th), cur);
            };
            EXPECT_LT(std::abs(oracle::central_difference(q_along, traj.iterates[t + 1].theta(k))), 1e-6);
        }
    }
}

TEST(RunEm, ErrorCarriesIteration) {
    Dataset d;
    d.unlabeled = {-1.0, -2.0};
    try {
        run_em(ModelKind::gmm(), d, MixtureParams({0.5, 0.5}, {-1.0, 40.0}), {});
        FAIL() << "expected EmptyComponent";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyComponent);
        EXPECT_NE(e.message().find("iteration 1"), std::string::npos) << e.message();
    }
}

TEST(RunEm, RejectsBadConfig) {
    const auto data = labeled_only({{0, 1.0}});
    EmConfig cfg;
    cfg.tol = 0.0;
    EXPECT_THROW(run_em(ModelKind::gmm(), data, MixtureParams({1.0}, {0.0}), cfg), Error);
}

TEST(TrajectoryCsv, HeaderAndRoundTrip) {
    const auto truth = MixtureParams::symmetric(1.0);
    const auto data = sample_dataset(ModelKind::sym2(), truth, {1, 10, 500});
    const auto traj = run_em(ModelKind::sym2(), data, MixtureParams::symmetric(2.0), {}, truth);
    std::ostringstream out;
    write_trajectory_csv(out, traj);
    const auto lines = split_lines(out.str());
    ASSERT_EQ(lines.size(), traj.iterates.size() + 1);
    EXPECT_EQ(lines[0], "iter,theta_1,theta_2,q_value,err");
    EXPECT_EQ(lines[1].substr(0, 8), "0,-2,2,,");
    for (std::size_t t = 1; t < lines.size(); ++t) {
        std::vector<std::string> fields;
        std::istringstream row(lines[t]);
        for (std::string f; std::getline(row, f, ',');) fields.push_back(f);
        ASSERT_EQ(fields.size(), 5u);
        EXPECT_EQ(std::stod(fields[2]), traj.iterates[t - 1].theta(1));
        EXPECT_EQ(std::stod(fields[4]), traj.errors[t - 1]);
        if (t > 1) {
            EXPECT_EQ(std::stod(fields[3]), traj.q_values[t - 2]);
        }
    }
}
