#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "randde/baselines.hpp"
#include "randde/simulator.hpp"

namespace {

using randde::BaselineMethod;
using randde::BaselineResult;
using randde::CountMatrix;
using randde::Group;
using randde::ScalingFactors;

CountMatrix two_group_matrix(std::vector<std::int64_t> counts, std::int64_t m) {
    CountMatrix data;
    for (std::int64_t j = 0; j < m; ++j) {
        data.gene_ids.push_back("g" + std::to_string(j + 1));
    }
    data.sample_ids = {"a1", "a2", "b1", "b2"};
    data.groups = {Group::A, Group::A, Group::B, Group::B};
    data.n_A = 2;
    data.n_B = 2;
    data.counts = std::move(counts);
    return data;
}

TEST(BaselineScaling, TotalCountMatchesLibrarySizeRatios) {
    const CountMatrix data = two_group_matrix(
        {
            10, 20, 40, 10,  //
            10, 20, 40, 10,  //
            20, 40, 80, 20,  //
        },
        3);
    const ScalingFactors s = randde::baseline_scaling(data, BaselineMethod::total_count());
    // Library sizes 40, 80, 160, 40 over 320; factors sum to 4.
    EXPECT_DOUBLE_EQ(s.s_hat[0], 0.5);
    EXPECT_DOUBLE_EQ(s.s_hat[1], 1.0);
    EXPECT_DOUBLE_EQ(s.s_hat[2], 2.0);
    EXPECT_DOUBLE_EQ(s.s_hat[3], 0.5);
    EXPECT_NEAR(std::accumulate(s.s_hat.begin(), s.s_hat.end(), 0.0), 4.0, 1e-12);
}

TEST(BaselineScaling, UpperQuartileUsesTheNonzeroQuantile) {
    // Sample columns: {1,2,3,4}, {2,4,6,8}, {1,1,1,1}, {0,5,5,10} (nonzero).
    const CountMatrix data = two_group_matrix(
        {
            1, 2, 1, 0,   //
            2, 4, 1, 5,   //
            3, 6, 1, 5,   //
            4, 8, 1, 10,  //
        },
        4);
    const ScalingFactors s = randde::baseline_scaling(data, BaselineMethod::upper_quartile());
    // Type-7 q3 of the nonzero values: 3.25, 6.5, 1, 7.5; renormalized to n.
    const double total = 3.25 + 6.5 + 1.0 + 7.5;
    EXPECT_NEAR(s.s_hat[0], 4.0 * 3.25 / total, 1e-12);
    EXPECT_NEAR(s.s_hat[1], 4.0 * 6.5 / total, 1e-12);
    EXPECT_NEAR(s.s_hat[2], 4.0 * 1.0 / total, 1e-12);
    EXPECT_NEAR(s.s_hat[3], 4.0 * 7.5 / total, 1e-12);
}

TEST(BaselineScaling, AllMethodsRecoverProportionalColumns) {
    // Column i is exactly lambda_i times a fixed profile, the no-DE ideal.
    const std::vector<std::int64_t> profile = {10, 25, 40, 5, 100, 60, 15, 30};
    const std::vector<std::int64_t> lambda = {1, 2, 3, 4};
    CountMatrix data;
    for (std::int64_t j = 0; j < 8; ++j) {
        data.gene_ids.push_back("g" + std::to_string(j + 1));
    }
    data.sample_ids = {"a1", "a2", "b1", "b2"};
    data.groups = {Group::A, Group::A, Group::B, Group::B};
    data.n_A = 2;
    data.n_B = 2;
    data.counts.resize(32);
    for (std::int64_t j = 0; j < 8; ++j) {
        for (std::int64_t i = 0; i < 4; ++i) {
            data.counts[static_cast<std::size_t>(j * 4 + i)] = profile[static_cast<std::size_t>(j)] * lambda[static_cast<std::size_t>(i)];
        }
    }
    for (const BaselineMethod& method :
         {BaselineMethod::total_count(), BaselineMethod::upper_quartile(), BaselineMethod::trimmed_mean_m()}) {
        const ScalingFactors s = randde::baseline_scaling(data, method);
        for (std::int64_t i = 0; i < 4; ++i) {
            EXPECT_NEAR(s.s_hat[static_cast<std::size_t>(i)], 0.4 * static_cast<double>(lambda[static_cast<std::size_t>(i)]), 1e-9)
                << "method kind " << static_cast<int>(method.kind) << " sample " << i;
        }
    }
}

TEST(BaselineScaling, TrimmedMeanIgnoresAFewWildLogRatios) {
    // 20 proportional genes plus one wildly DE gene that trimming must drop.
    const std::int64_t m = 21;
    CountMatrix data;
    for (std::int64_t j = 0; j < m; ++j) {
        data.gene_ids.push_back("g" + std::to_string(j + 1));
    }
    data.sample_ids = {"a1", "a2", "b1", "b2"};
    data.groups = {Group::A, Group::A, Group::B, Group::B};
    data.n_A = 2;
    data.n_B = 2;
    data.counts.assign(static_cast<std::size_t>(m * 4), 0);
    for (std::int64_t j = 0; j + 1 < m; ++j) {
        const std::int64_t base = 50 + 10 * (j % 5);
        for (std::int64_t i = 0; i < 4; ++i) {
            data.counts[static_cast<std::size_t>(j * 4 + i)] = base;
        }
    }
    // The outlier is 40x in the last sample only.
    data.counts[static_cast<std::size_t>((m - 1) * 4 + 0)] = 50;
    data.counts[static_cast<std::size_t>((m - 1) * 4 + 1)] = 50;
    data.counts[static_cast<std::size_t>((m - 1) * 4 + 2)] = 50;
    data.counts[static_cast<std::size_t>((m - 1) * 4 + 3)] = 2000;

    const ScalingFactors tmm = randde::baseline_scaling(data, BaselineMethod::trimmed_mean_m());
    const ScalingFactors tc = randde::baseline_scaling(data, BaselineMethod::total_count());
    // Total-count absorbs the outlier into sample 4's factor; TMM must not.
    EXPECT_GT(tc.s_hat[3], 1.5);
    EXPECT_LT(tmm.s_hat[3], 1.25);
    EXPECT_NEAR(std::accumulate(tmm.s_hat.begin(), tmm.s_hat.end(), 0.0), 4.0, 1e-9);
}

TEST(BaselineScaling, RejectsDegenerateInputs) {
    CountMatrix data = two_group_matrix(
        {
            1, 0, 1, 1,  //
            1, 0, 1, 1,  //
        },
        2);
    EXPECT_THROW(randde::baseline_scaling(data, BaselineMethod::total_count()), randde::ConfigError);
    BaselineMethod bad = BaselineMethod::upper_quartile();
    bad.q = 1.0;
    EXPECT_THROW(randde::baseline_scaling(two_group_matrix({1, 1, 1, 1, 2, 2, 2, 2}, 2), bad),
                 randde::ConfigError);
}

TEST(BaselineDetect, HolmPassDeclaresOnlyTheShiftedGene) {
    randde::SimulationScenario sc = randde::make_null_scenario(200, 6, 6, 100.0);
    sc.m1 = 1;
    sc.fold[0] = 4.0;
    sc.seed = 131;
    const CountMatrix data = randde::generate(sc, 0);
    const randde::TestParams params = randde::test_params_for(data, 0.05, 0.0);

    const BaselineResult res = randde::baseline_detect(data, BaselineMethod::total_count(), params, 0.05);
    ASSERT_EQ(res.genes.size(), 200u);
    ASSERT_EQ(res.detected.size(), 1u);
    EXPECT_EQ(res.detected[0], 0);
    EXPECT_TRUE(res.genes[0].detected);
    EXPECT_TRUE(res.genes[0].single_test_rejected);
    EXPECT_TRUE(res.genes[0].decided);
    EXPECT_LT(res.genes[0].p_value, 0.05 / 200.0);
    for (std::size_t j = 1; j < res.genes.size(); ++j) {
        EXPECT_FALSE(res.genes[j].detected);
        EXPECT_TRUE(res.genes[j].decided);
        EXPECT_EQ(res.genes[j].gene_index, static_cast<std::int64_t>(j));
    }
    EXPECT_THROW(randde::baseline_detect(data, BaselineMethod::total_count(), params, 0.0), randde::ConfigError);
}

TEST(BaselineDetect, DegenerateGenesAreNeverDeclared) {
    // Equal library columns give unit factors, so genes constant within each
    // group stabilize to within-group constants and carry no decision.
    const CountMatrix data = two_group_matrix(
        {
            5,  5,  7,  7,   //
            3,  3,  3,  3,   //
            2,  2,  40, 40,  //
            41, 41, 1,  1,   //
            1,  9,  2,  8,   //
            9,  1,  8,  2,   //
        },
        6);
    const randde::TestParams params = randde::test_params_for(data, 0.05, 0.0);
    const BaselineResult res = randde::baseline_detect(data, BaselineMethod::total_count(), params, 0.05);
    std::int64_t undecided = 0;
    for (const auto& g : res.genes) {
        if (!g.decided) {
            undecided += 1;
            EXPECT_EQ(g.p_value, 1.0);
            EXPECT_FALSE(g.detected);
            EXPECT_FALSE(g.single_test_rejected);
        }
    }
    EXPECT_EQ(undecided, 4);
    EXPECT_TRUE(res.genes[4].decided);
    EXPECT_TRUE(res.genes[5].decided);
}

}
