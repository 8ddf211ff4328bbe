#include <gtest/gtest.h>

#include "support.hpp"

#include <trajmetric/core.hpp>
#include <trajmetric/error.hpp>

namespace {

using namespace trajmetric;

BernoulliDensity dirac(double r, double x, double y) {
    StateVector v(2);
    v << x, y;
    return BernoulliDensity(r, DiracDensity(v));
}

TEST(Tau, AbsentBeforeStart) {
    BernoulliSequence s(2, {dirac(1.0, 0, 0), dirac(0.5, 1, 1)});
    EXPECT_EQ(tau(s, 1, 5), nullptr);
}

TEST(Tau, FirstAndSecondStep) {
    BernoulliSequence s(2, {dirac(1.0, 0, 0), dirac(0.5, 1, 1)});
    ASSERT_NE(tau(s, 2, 5), nullptr);
    EXPECT_EQ(*tau(s, 2, 5), s.densities()[0]);
    ASSERT_NE(tau(s, 3, 5), nullptr);
    EXPECT_EQ(*tau(s, 3, 5), s.densities()[1]);
    EXPECT_EQ(tau(s, 4, 5), nullptr);
}

TEST(Tau, OutsideWindowThrows) {
    BernoulliSequence s(1, {dirac(1.0, 0, 0)});
    EXPECT_THROW(tau(s, 0, 3), DomainError);
    EXPECT_THROW(tau(s, 4, 3), DomainError);
}

TEST(Tau, PresentExactlyOnConsecutiveSteps) {
    tmtest::Generator gen(11);
    for (int trial = 0; trial < 100; ++trial) {
        const int window = gen.integer(1, 8);
        const auto s = gen.sequence(window);
        std::vector<int> present;
        for (int k = 1; k <= window; ++k) {
            if (tau(s, k, window)) present.push_back(k);
        }
        ASSERT_EQ(static_cast<int>(present.size()), s.length());
        for (std::size_t v = 0; v < present.size(); ++v) {
            EXPECT_EQ(present[v], s.start_time() + static_cast<int>(v));
        }
    }
}

TEST(Bernoulli, RejectsBadExistence) {
    EXPECT_THROW(dirac(1.5, 0, 0), DomainError);
    EXPECT_THROW(dirac(-0.1, 0, 0), DomainError);
    EXPECT_THROW(BernoulliSequence(1, {dirac(0.0, 0, 0)}), DomainError);
}

TEST(Gaussian, RejectsBadCovariance) {
    StateVector m = StateVector::Zero(2);
    Matrix asym(2, 2);
    asym << 1, 0.5, 0, 1;
    EXPECT_THROW(GaussianDensity(m, asym), DomainError);
    EXPECT_THROW(GaussianDensity(m, -Matrix::Identity(2, 2)), DomainError);
    EXPECT_THROW(GaussianDensity(m, Matrix::Identity(3, 3)), DomainError);
}

TEST(SequenceSet, RejectsOverflowAndMixedDimensions) {
    EXPECT_THROW(SequenceSet(1, {BernoulliSequence(1, {dirac(1, 0, 0), dirac(1, 0, 0)})}), DomainError);
    StateVector v3 = StateVector::Zero(3);
    EXPECT_THROW(SequenceSet(2, {BernoulliSequence(1, {dirac(1, 0, 0)}),
                                 BernoulliSequence(1, {BernoulliDensity(1.0, DiracDensity(v3))})}),
                 DomainError);
}

TEST(LiftGroundTruth, EmptyList) {
    const auto s = lift_ground_truth({}, 4);
    EXPECT_EQ(s.size(), 0u);
    EXPECT_EQ(s.window_length(), 4);
}

TEST(LiftGroundTruth, SingleTrajectoryAllOnes) {
    PointTrajectory t{2, {StateVector::Zero(2), StateVector::Ones(2), StateVector::Zero(2)}};
    const auto s = lift_ground_truth({t}, 4);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].length(), 3);
    EXPECT_EQ(s[0].start_time(), 2);
    for (const auto& b : s[0].densities()) {
        EXPECT_EQ(b.existence(), 1.0);
        EXPECT_TRUE(is_dirac(b.density()));
    }
}

TEST(LiftGroundTruth, OrderPreserved) {
    StateVector a = StateVector::Zero(2), b = StateVector::Ones(2);
    const auto s = lift_ground_truth({PointTrajectory{1, {a}}, PointTrajectory{3, {b}}}, 3);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].start_time(), 1);
    EXPECT_EQ(s[1].start_time(), 3);
    EXPECT_EQ(mean_of(s[1].densities()[0].density()), b);
}

TEST(LiftGroundTruth, ExceedingWindowThrows) {
    PointTrajectory t{3, {StateVector::Zero(2), StateVector::Zero(2)}};
    EXPECT_THROW(lift_ground_truth({t}, 3), DomainError);
}

TEST(MetricParams, Validation) {
    EXPECT_NO_THROW((MetricParams{10, 2, 2}.validate()));
    EXPECT_THROW((MetricParams{0, 2, 2}.validate()), DomainError);
    EXPECT_THROW((MetricParams{10, 0.5, 2}.validate()), DomainError);
    EXPECT_THROW((MetricParams{10, 2, 0}.validate()), DomainError);
}

} // namespace
