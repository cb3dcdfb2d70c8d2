#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "seqab/confseq.hpp"
#include "seqab/errors.hpp"

using seqab::ConfSeqParams;
using seqab::Interval;
using seqab::StreamingMoments;
using seqab::TwoArmState;

namespace {

long double beta_ref(long double n, long double alpha, long double rho2) {
    const long double nr = n * rho2;
    return std::sqrt(2.0L * (nr + 1.0L) / (n * n * rho2) * std::log(std::sqrt(nr + 1.0L) / alpha));
}

struct Sample {
    std::vector<double> y;
    std::vector<int> arm;
};

TwoArmState state_of(const Sample& s) {
    TwoArmState st;
    for (std::size_t i = 0; i < s.y.size(); ++i) (s.arm[i] ? st.arm1 : st.arm0).push(s.y[i]);
    return st;
}

Sample random_sample(std::mt19937_64& rng, int n, double p0, double p1) {
    Sample s;
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < n; ++i) {
        const int a = coin(rng) ? 1 : 0;
        s.arm.push_back(a);
        s.y.push_back(std::bernoulli_distribution(a ? p1 : p0)(rng) ? 1.0 : 0.0);
    }
    return s;
}

}  // namespace

TEST(Radius, MatchesClosedForm) {
    for (std::uint64_t n : {1ull, 2ull, 10ull, 1000ull, 123456ull, 100000000ull}) {
        for (double alpha : {0.01, 0.05, 0.2}) {
            for (double rho2 : {1e-6, 1e-3, 0.5}) {
                const double got = seqab::radius_beta(n, alpha, rho2);
                const long double ref = beta_ref(static_cast<long double>(n), alpha, rho2);
                EXPECT_NEAR(got / static_cast<double>(ref), 1.0, 1e-12);
            }
        }
    }
}

TEST(Radius, ShrinksWithN) {
    double prev = seqab::radius_beta(1, 0.05, 1e-3);
    for (std::uint64_t n = 2; n < 100000; n = n * 3 / 2 + 1) {
        const double r = seqab::radius_beta(n, 0.05, 1e-3);
        EXPECT_LT(r, prev);
        prev = r;
    }
}

TEST(Radius, RejectsBadArguments) {
    EXPECT_THROW(seqab::radius_beta(0, 0.05, 1e-3), seqab::DomainError);
    EXPECT_THROW(seqab::radius_beta(10, 0.0, 1e-3), seqab::DomainError);
    EXPECT_THROW(seqab::radius_beta(10, 0.05, 0.0), seqab::DomainError);
    EXPECT_THROW((ConfSeqParams{0.7, 1e-3}).validate(), seqab::DomainError);
}

TEST(AsympCS, OneSampleTwoPointExample) {
    StreamingMoments arm;
    arm.push(0.0);
    arm.push(1.0);
    const ConfSeqParams p{};
    const Interval iv = seqab::asympcs_mean(arm, p);
    const double half = 0.5 * seqab::radius_beta(2, p.alpha, p.rho2);
    EXPECT_NEAR(iv.lower, 0.5 - half, 1e-15);
    EXPECT_NEAR(iv.upper, 0.5 + half, 1e-15);
}

TEST(AsympCS, BracketMatchesBruteForceIpwVariance) {
    std::mt19937_64 rng(5);
    for (int c = 0; c < 200; ++c) {
        const int n = 5 + static_cast<int>(rng() % 500);
        Sample s = random_sample(rng, n, 0.2, 0.35);
        // real-valued outcomes too
        if (c % 2) {
            std::normal_distribution<double> noise(1.0, 3.0);
            for (double& y : s.y) y += noise(rng);
        }
        const TwoArmState st = state_of(s);
        if (st.arm0.count() == 0 || st.arm1.count() == 0) continue;
        const double n1 = static_cast<double>(st.arm1.count());
        const double pi = n1 / n;
        std::vector<double> phi;
        for (int i = 0; i < n; ++i) {
            phi.push_back(s.arm[i] ? s.y[i] / pi : -s.y[i] / (1.0 - pi));
        }
        double mean = 0.0;
        for (double v : phi) mean += v;
        mean /= n;
        double ss = 0.0;
        for (double v : phi) ss += (v - mean) * (v - mean);
        const double sample_var = ss / (n - 1);
        EXPECT_NEAR(mean, st.effect(), 1e-10);
        const double got = n / (n - 1.0) * seqab::ate_variance_bracket(st);
        EXPECT_NEAR(got, sample_var, 1e-9 * (1 + sample_var));

        const ConfSeqParams p{};
        const Interval iv = seqab::asympcs_ate(st, p);
        const double half = std::sqrt(sample_var) * static_cast<double>(beta_ref(n, p.alpha, p.rho2));
        EXPECT_NEAR(iv.lower, mean - half, 1e-9);
        EXPECT_NEAR(iv.upper, mean + half, 1e-9);
    }
}

TEST(AsympCS, ConstantOutcomesGiveDegenerateInterval) {
    TwoArmState st;
    for (int i = 0; i < 50; ++i) {
        st.arm0.push(0.0);
        st.arm1.push(0.0);
    }
    const Interval iv = seqab::asympcs_ate(st, {});
    EXPECT_EQ(iv.lower, 0.0);
    EXPECT_EQ(iv.upper, 0.0);
}

TEST(AsympCS, RoundingNegativeBracketClampsToZero) {
    // equal and opposite means with equal arms: the bracket is 0 up to rounding
    for (double m : {0.1, 0.3, 1.7, 1e3}) {
        const TwoArmState st{StreamingMoments::from_parts(10, -m, 0.0), StreamingMoments::from_parts(10, m, 0.0)};
        EXPECT_GE(seqab::ate_variance_bracket(st), 0.0);
        EXPECT_LT(seqab::ate_variance_bracket(st), 1e-9 * m * m);
    }
}

TEST(AsympCS, NeedsBothArms) {
    TwoArmState st;
    st.arm0.push(1.0);
    st.arm0.push(0.0);
    EXPECT_THROW(seqab::asympcs_ate(st, {}), seqab::InsufficientData);
}

TEST(AsympCS, LiftStepByStep) {
    const TwoArmState st{StreamingMoments::from_binary(4000, 400), StreamingMoments::from_binary(4000, 520)};
    const ConfSeqParams p{};
    const double m0 = 0.1, m1 = 0.13;
    const double r0 = std::sqrt(m0 * (1 - m0)) * seqab::radius_beta(4000, p.alpha, p.rho2);
    const double r1 = std::sqrt(m1 * (1 - m1)) * seqab::radius_beta(4000, p.alpha, p.rho2);
    const Interval iv = seqab::asympcs_lift(st, p);
    EXPECT_NEAR(iv.lower, (m1 - r1) / (m0 + r0) - 1.0, 1e-12);
    EXPECT_NEAR(iv.upper, (m1 + r1) / (m0 - r0) - 1.0, 1e-12);
    EXPECT_TRUE(iv.contains(m1 / m0 - 1.0));

    const Interval wide = seqab::asympcs_lift(st, p, 0.01);
    EXPECT_LT(wide.lower, iv.lower);
    EXPECT_GT(wide.upper, iv.upper);
}

TEST(AsympCS, LiftUnboundedWhenControlBoundTouchesZero) {
    const TwoArmState st{StreamingMoments::from_binary(20, 1), StreamingMoments::from_binary(20, 2)};
    const Interval iv = seqab::asympcs_lift(st, {});
    EXPECT_EQ(iv.lower, -1.0);
    EXPECT_TRUE(std::isinf(iv.upper));
    const TwoArmState zero{StreamingMoments::from_binary(20, 0), StreamingMoments::from_binary(20, 2)};
    EXPECT_THROW(seqab::asympcs_lift(zero, {}), seqab::DomainError);
}

TEST(AsympCS, IntervalFunctionsAreDeterministicRandomized) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::uint64_t> count(2, 100000);
    for (int c = 0; c < 100000; ++c) {
        const std::uint64_t n0 = count(rng), n1 = count(rng);
        const std::uint64_t s0 = rng() % (n0 + 1), s1 = rng() % (n1 + 1);
        const TwoArmState st{StreamingMoments::from_binary(n0, s0), StreamingMoments::from_binary(n1, s1)};
        const TwoArmState swapped{st.arm1, st.arm0};
        const ConfSeqParams p{0.05, 1e-3};
        const Interval a = seqab::asympcs_ate(st, p);
        const Interval b = seqab::asympcs_ate(st, p);
        ASSERT_EQ(a, b);
        const Interval s = seqab::asympcs_ate(swapped, p);
        ASSERT_EQ(s.lower, -a.upper);
        ASSERT_EQ(s.upper, -a.lower);
        ASSERT_LE(a.lower, st.effect());
        ASSERT_GE(a.upper, st.effect());
    }
}

TEST(MSPRT, PooledVarianceDefinition) {
    TwoArmState st;
    const std::vector<double> a{1, 2, 4, 7}, b{3, 3, 5};
    for (double v : a) st.arm0.push(v);
    for (double v : b) st.arm1.push(v);
    // within-arm sums of squares: arm0 mean 3.5 -> 21, arm1 mean 11/3 -> 8/3
    const double pooled = (21.0 + 8.0 / 3.0) / 5.0;
    EXPECT_NEAR(seqab::msprt_pooled_variance(st), 7.0 * pooled * (1.0 / 4 + 1.0 / 3), 1e-12);
}

TEST(MSPRT, CsExclusionMatchesLikelihoodThreshold) {
    std::mt19937_64 rng(9);
    const ConfSeqParams p{0.05, 1e-3};
    for (int c = 0; c < 2000; ++c) {
        const Sample s = random_sample(rng, 50 + static_cast<int>(rng() % 5000), 0.1, 0.14);
        const TwoArmState st = state_of(s);
        const Interval iv = seqab::msprt_cs(st, p);
        for (double t : {-1.0, -0.5, 0.0, 0.25, 0.5, 1.0}) {
            const double theta0 = iv.lower + (t + 1.0) * 0.5 * iv.width() * 1.5 - 0.25 * iv.width();
            const double ll = seqab::msprt_log_lambda(st, p, theta0);
            const double margin = std::fabs(ll - std::log(1.0 / p.alpha));
            if (margin < 1e-9) continue;
            EXPECT_EQ(iv.excludes(theta0), ll >= std::log(1.0 / p.alpha)) << theta0;
        }
        EXPECT_NEAR(seqab::msprt_log_lambda(st, p, iv.upper), std::log(1.0 / p.alpha), 1e-8);
        EXPECT_NEAR(seqab::msprt_log_lambda(st, p, iv.lower), std::log(1.0 / p.alpha), 1e-8);
    }
}

TEST(MSPRT, OneSampleUsesUnbiasedVariance) {
    StreamingMoments arm;
    for (double v : {0.0, 1.0, 1.0, 0.0, 1.0}) arm.push(v);
    const ConfSeqParams p{0.05, 0.1};
    const double v = arm.unbiased_variance();
    const double n = 5, nr = n * p.rho2, d = arm.mean() - 0.5;
    const double ref = 0.5 * std::log(v / (v + nr)) + n * nr * d * d / (2 * v * (v + nr));
    EXPECT_NEAR(seqab::msprt_log_lambda(arm, p, 0.5), ref, 1e-14);
}

TEST(MSPRT, PProcessIsNonincreasingRandomized) {
    std::mt19937_64 rng(31);
    const ConfSeqParams p{0.05, 1e-3};
    for (int c = 0; c < 100000; ++c) {
        std::uint64_t n0 = 2, n1 = 2, s0 = rng() % 3, s1 = rng() % 3;
        double prev = 1.0;
        const double q0 = 0.05 + 0.3 * std::uniform_real_distribution<double>()(rng);
        const double q1 = q0 + 0.05 * std::uniform_real_distribution<double>(-1, 1)(rng);
        for (int step = 0; step < 8; ++step) {
            const std::uint64_t d = 1 + rng() % 200;
            const std::uint64_t d1 = std::binomial_distribution<std::uint64_t>(d, 0.5)(rng);
            s0 += std::binomial_distribution<std::uint64_t>(d - d1, q0)(rng);
            s1 += std::binomial_distribution<std::uint64_t>(d1, q1)(rng);
            n0 += d - d1;
            n1 += d1;
            const TwoArmState st{StreamingMoments::from_binary(n0, std::min(s0, n0)),
                                 StreamingMoments::from_binary(n1, std::min(s1, n1))};
            double next;
            try {
                next = seqab::msprt_p_step(prev, st, p, 0.0);
            } catch (const seqab::InsufficientData&) {
                continue;
            }
            ASSERT_LE(next, prev);
            ASSERT_GT(next, 0.0);
            prev = next;
        }
    }
}

TEST(RunningIntersection, KeepsPreviousOnEmpty) {
    seqab::RunningIntersection ri;
    EXPECT_EQ(ri.apply({-1.0, 1.0}), (Interval{-1.0, 1.0}));
    EXPECT_EQ(ri.apply({-0.5, 2.0}), (Interval{-0.5, 1.0}));
    EXPECT_EQ(ri.apply({3.0, 4.0}), (Interval{-0.5, 1.0}));
}
