#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "randde/randomization_math.hpp"

namespace {

using randde::DesignParams;
using randde::RateBounds;

DesignParams design(std::int64_t m, std::int64_t k, double eta = 0.05, double beta = 0.10) {
    DesignParams p;
    p.m = m;
    p.k = k;
    p.eta = eta;
    p.beta = beta;
    return p;
}

// Exhaustive check over all k-subsets of {0, .., pool-1}: fraction of subsets
// intersecting the first `marked` elements.
double enumerated_hit_fraction(std::int64_t pool, std::int64_t k, std::int64_t marked) {
    std::vector<bool> pick(static_cast<std::size_t>(pool), false);
    std::fill(pick.begin(), pick.begin() + k, true);
    std::int64_t total = 0, hits = 0;
    do {
        total += 1;
        bool hit = false;
        for (std::int64_t i = 0; i < marked && !hit; ++i) {
            hit = pick[static_cast<std::size_t>(i)];
        }
        hits += hit ? 1 : 0;
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
}

TEST(Kappa, MatchesClosedFormAndChecksDomain) {
    EXPECT_DOUBLE_EQ(randde::kappa(10, 3), 0.7);
    EXPECT_DOUBLE_EQ(randde::kappa(500, 10), 0.98);
    EXPECT_THROW(randde::kappa(10, 0), randde::ConfigError);
    EXPECT_THROW(randde::kappa(10, 10), randde::ConfigError);
}

TEST(InclusionProbabilities, MatchExhaustiveEnumerationForSmallDesigns) {
    for (std::int64_t m = 3; m <= 12; ++m) {
        for (std::int64_t k = 1; k <= m - 1; ++k) {
            for (std::int64_t d = 0; d <= m - 1; ++d) {
                // Invariant tested gene: subset of the other m-1 genes must
                // dodge all d DE genes among them.
                const double want0 = enumerated_hit_fraction(m - 1, k, std::min(d, m - 1));
                EXPECT_NEAR(randde::pi0(m, k, d), want0, 1e-12) << "m=" << m << " k=" << k << " d=" << d;
            }
            for (std::int64_t d = 1; d <= m - 1; ++d) {
                // DE tested gene: d - 1 DE genes remain among the other m-1.
                const double want1 = enumerated_hit_fraction(m - 1, k, std::min(d - 1, m - 1));
                EXPECT_NEAR(randde::pi1(m, k, d), want1, 1e-12) << "m=" << m << " k=" << k << " d=" << d;
            }
            EXPECT_EQ(randde::pi1(m, k, 0), 0.0);
        }
    }
}

TEST(InclusionProbabilities, WrongSubsetIsMoreLikelyForInvariantGenesWithVanishingGap) {
    for (const std::int64_t m : {50, 100, 200}) {
        for (const std::int64_t k : {5, 10, 20}) {
            // A lone DE gene can never contaminate a subset that avoids it.
            EXPECT_EQ(randde::pi1(m, k, 1), 0.0);
            EXPECT_GT(randde::pi0(m, k, 1), 0.0);
            double prev_ratio = std::numeric_limits<double>::infinity();
            for (std::int64_t d = 2; d <= m - k; ++d) {
                // The complements C(m-d-1,k)/C(m-1,k) and C(m-d,k)/C(m-1,k)
                // stay strictly ordered at full precision even where both
                // probabilities round to 1.
                const double c0 = randde::internal::choose_ratio(m - d - 1, m - 1, k);
                const double c1 = randde::internal::choose_ratio(m - d, m - 1, k);
                ASSERT_LT(c0, c1) << "m=" << m << " k=" << k << " d=" << d;
                const double p0 = randde::pi0(m, k, d);
                const double p1 = randde::pi1(m, k, d);
                ASSERT_GE(p0, p1) << "m=" << m << " k=" << k << " d=" << d;
                const double ratio = p0 / p1;
                ASSERT_LE(ratio, prev_ratio + 1e-12) << "m=" << m << " k=" << k << " d=" << d;
                if (ratio > 1.0 + 1e-12) {
                    ASSERT_LT(ratio, prev_ratio) << "m=" << m << " k=" << k << " d=" << d;
                }
                prev_ratio = ratio;
            }
            EXPECT_LT(prev_ratio, 1.0 + 1e-6);
            EXPECT_GE(prev_ratio, 1.0);
        }
    }
}

TEST(RateBoundsValues, MatchIndependentScalarEvaluation) {
    const RateBounds rb0 = randde::rate_bounds(design(500, 10), 0);
    EXPECT_NEAR(rb0.theta0, 0.049, 1e-15);
    EXPECT_NEAR(rb0.theta1, 0.882, 1e-15);
    const RateBounds rb2 = randde::rate_bounds(design(10, 3), 2);
    EXPECT_NEAR(rb2.theta0, 0.4229166666666666, 1e-12);
    EXPECT_NEAR(rb2.theta1, 0.42, 1e-12);
}

TEST(BinomCdf, MatchesDirectPmfSummationForSmallTrialCounts) {
    for (const double p : {0.001, 0.049, 0.2, 0.5, 0.8, 0.97, 0.999}) {
        for (std::int64_t n = 1; n <= 30; ++n) {
            // Direct summation with exact integer coefficients.
            long double cdf = 0;
            for (std::int64_t x = 0; x < n; ++x) {
                long double coeff = 1;
                for (std::int64_t i = 0; i < x; ++i) {
                    coeff = coeff * static_cast<long double>(n - i) / static_cast<long double>(i + 1);
                }
                cdf += coeff * std::pow(static_cast<long double>(p), static_cast<long double>(x))
                       * std::pow(static_cast<long double>(1 - p), static_cast<long double>(n - x));
                ASSERT_NEAR(randde::binom_cdf(x, n, p), static_cast<double>(cdf), 1e-12)
                    << "x=" << x << " n=" << n << " p=" << p;
            }
        }
    }
    EXPECT_NEAR(randde::binom_cdf(2, 4, 0.5), 11.0 / 16.0, 1e-15);
}

TEST(BinomCdf, HandlesEdgesAndRejectsBadInputs) {
    EXPECT_EQ(randde::binom_cdf(-1, 10, 0.3), 0.0);
    EXPECT_EQ(randde::binom_cdf(10, 10, 0.3), 1.0);
    EXPECT_EQ(randde::binom_cdf(25, 10, 0.3), 1.0);
    EXPECT_EQ(randde::binom_cdf(0, 10, 0.0), 1.0);
    EXPECT_EQ(randde::binom_cdf(9, 10, 1.0), 0.0);
    EXPECT_THROW(randde::binom_cdf(2, -1, 0.3), randde::ConfigError);
    EXPECT_THROW(randde::binom_cdf(2, 10, -0.1), randde::ConfigError);
    EXPECT_THROW(randde::binom_cdf(2, 10, 1.1), randde::ConfigError);
}

TEST(BinomCdf, IsMonotoneInThresholdAndComplementsTheTail) {
    for (const double p : {0.049, 0.5, 0.97}) {
        for (const std::int64_t n : {1LL, 7LL, 30LL, 2500LL}) {
            double prev = -1;
            for (std::int64_t x = 0; x <= n; ++x) {
                const double cdf = randde::binom_cdf(x, n, p);
                ASSERT_GE(cdf, prev);
                prev = cdf;
                ASSERT_NEAR(cdf + randde::internal::binom_sf(x, n, p), 1.0, 1e-14);
            }
        }
    }
}

TEST(BinomTail, MatchesHighPrecisionReferenceAtLargeTrialCounts) {
    // Reference values from an independent arbitrary-precision evaluation.
    EXPECT_NEAR(randde::internal::binom_sf(140, 2500, 0.049) / 0.0500099988807292, 1.0, 1e-10);
    EXPECT_NEAR(randde::internal::binom_sf(122, 2500, 0.049) / 0.4944380147236868, 1.0, 1e-10);
    EXPECT_NEAR(randde::internal::binom_sf(200, 2500, 0.049) / 1.387594903794514e-11, 1.0, 1e-9);
    EXPECT_NEAR(randde::internal::binom_sf(5, 30, 0.2) / 0.572487562409678, 1.0, 1e-12);
    EXPECT_NEAR(randde::internal::binom_sf(0, 10, 0.5) / 0.9990234375, 1.0, 1e-13);
    EXPECT_NEAR(randde::internal::binom_sf(17, 30, 0.6) / 0.5784657285461176, 1.0, 1e-12);
    EXPECT_NEAR(randde::internal::binom_sf(29, 30, 0.97) / 0.40100706854315743, 1.0, 1e-12);
}

TEST(PooledPValue, DecreasesInTheDetectionCountDownToZero) {
    struct Point {
        std::int64_t m, k, r;
        std::int64_t d;
    };
    for (const Point pt : {Point{500, 10, 2500, 0}, Point{500, 10, 2500, 12}, Point{50, 5, 400, 3}}) {
        DesignParams p = design(pt.m, pt.k);
        p.r = pt.r;
        double prev = 2;
        for (std::int64_t R = 0; R <= p.r; ++R) {
            const double pv = randde::pooled_p_value(R, p, pt.d);
            ASSERT_LE(pv, prev) << "R=" << R;
            ASSERT_GE(pv, 0.0);
            // Strict decrease everywhere the values are representable; the
            // ends saturate at 1 and 0 in double precision.
            if (prev > 1e-300 && prev < 1.0 - 1e-12) {
                ASSERT_LT(pv, prev) << "R=" << R;
            }
            prev = pv;
        }
        EXPECT_EQ(randde::pooled_p_value(p.r, p, pt.d), 0.0);
    }
    {
        // Small enough draw count that the top of the range stays below 1.
        DesignParams small = design(20, 10);
        small.r = 30;
        EXPECT_LT(randde::pooled_p_value(0, small, 1), 1.0);
        EXPECT_GT(randde::pooled_p_value(0, small, 1), 0.9);
    }
    DesignParams p = design(500, 10);
    EXPECT_THROW(randde::pooled_p_value(-1, p, 0), randde::ConfigError);
    EXPECT_THROW(randde::pooled_p_value(p.r + 1, p, 0), randde::ConfigError);
}

TEST(DeltaCap, MatchesIndependentScanAndFailsAtTheCapPlusOne) {
    EXPECT_EQ(randde::delta_cap(design(500, 10)), 29);
    EXPECT_EQ(randde::delta_cap(design(200, 10)), 12);
    EXPECT_EQ(randde::delta_cap(design(20, 10)), 1);
    for (const std::int64_t m : {20LL, 200LL, 500LL}) {
        const std::int64_t cap = randde::delta_cap(design(m, 10));
        EXPECT_TRUE(randde::rates_separated(design(m, 10), cap));
        EXPECT_FALSE(randde::rates_separated(design(m, 10), cap + 1));
    }
    // 1 - beta <= eta leaves nothing detectable even at d = 0.
    EXPECT_THROW(randde::delta_cap(design(500, 10, 0.05, 0.96)), randde::ConfigError);
}

TEST(MassartTail, MatchesClosedFormAndGuardsItsDomain) {
    EXPECT_NEAR(randde::massart_tail(1000, 0.3, 0.1) / 1.6918979226151304e-10, 1.0, 1e-12);
    EXPECT_LE(randde::massart_tail(1, 0.5, 0.25), 1.0);
    EXPECT_THROW(randde::massart_tail(10, 0.0, 0.1), randde::ConfigError);
    EXPECT_THROW(randde::massart_tail(10, 1.0, 0.1), randde::ConfigError);
    EXPECT_THROW(randde::massart_tail(10, 0.3, 0.0), randde::ConfigError);
    EXPECT_THROW(randde::massart_tail(10, 0.3, 0.7), randde::ConfigError);
}

TEST(MinRandomizations, MatchesScalarOracleAndDetectsUnderpoweredDesigns) {
    EXPECT_EQ(randde::min_randomizations(design(500, 10), 0), 604);
    const std::int64_t cap = randde::delta_cap(design(500, 10));
    EXPECT_THROW(randde::min_randomizations(design(500, 10), cap + 5), randde::InfeasibleDesignError);
    EXPECT_EQ(randde::min_randomizations_fwer(design(500, 10), 0, 0.3), 1882);
    EXPECT_THROW(randde::min_randomizations_fwer(design(500, 10), 0, 0.5), randde::ConfigError);
    EXPECT_THROW(randde::min_randomizations_fwer(design(500, 10), 0, 0.0), randde::ConfigError);
}

TEST(DesignValidation, RejectsOutOfRangeParameters) {
    EXPECT_NO_THROW(randde::validate(design(500, 10)));
    EXPECT_THROW(randde::validate(design(10, 0)), randde::ConfigError);
    EXPECT_THROW(randde::validate(design(10, 10)), randde::ConfigError);
    // m = k + 1 is a valid combinatorial design but leaves nothing testable.
    EXPECT_THROW(randde::validate(design(11, 10)), randde::ConfigError);
    EXPECT_NO_THROW(randde::validate(design(11, 10), false));
    DesignParams bad = design(500, 10);
    bad.eta = 0;
    EXPECT_THROW(randde::validate(bad), randde::ConfigError);
    bad = design(500, 10);
    bad.r = 0;
    EXPECT_THROW(randde::validate(bad), randde::ConfigError);
    bad = design(500, 10);
    bad.xi = 0.5;
    EXPECT_THROW(randde::validate(bad), randde::ConfigError);
}

}
