#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include <genlab/etv_stats.hpp>

using namespace genlab;

namespace {

EtvHistogram make_hist(std::map<std::uint32_t, std::uint64_t> counts, int horizon = 10) {
    EtvHistogram h;
    h.counts = std::move(counts);
    h.total = 0;
    for (const auto& [x, n] : h.counts) {
        h.total += n;
    }
    h.horizon = horizon;
    return h;
}

EtvHistogram random_hist(std::mt19937_64& rng) {
    std::map<std::uint32_t, std::uint64_t> counts;
    std::uniform_int_distribution<std::uint32_t> x(1, 30);
    std::uniform_int_distribution<std::uint64_t> n(1, 500);
    for (int k = 0; k < 12; ++k) {
        counts[x(rng)] += n(rng);
    }
    return make_hist(counts);
}

} // namespace

TEST(Histogram, AllOnes) {
    const EtvTable table(1, 10, std::vector<std::uint32_t>(10, 1));
    const auto h = histogram(table);
    EXPECT_EQ(h.counts, (std::map<std::uint32_t, std::uint64_t>{{1, 10}}));
    EXPECT_EQ(h.total, 10u);
}

TEST(Histogram, ChainFixtureWithDetachment) {
    // A -> B -> {C1, C2} with detachment: ETV A=1, B=2, C1=C2=1.
    const EtvTable table(3, std::vector<std::size_t>{0, 1, 2, 4}, {1, 2, 1, 1});
    const auto h = histogram(table);
    EXPECT_EQ(h.counts, (std::map<std::uint32_t, std::uint64_t>{{1, 3}, {2, 1}}));
    EXPECT_EQ(h.total, 4u);
}

TEST(Histogram, FullRunCountsEveryNode) {
    const EtvTable table(500, 100, std::vector<std::uint32_t>(50000, 1));
    EXPECT_EQ(histogram(table).total, 50000u);
}

TEST(Pool, TwoRunArithmetic) {
    const std::vector<EtvHistogram> hists{make_hist({{1, 8}, {3, 2}}), make_hist({{1, 6}, {2, 4}})};
    const auto d = pool(hists);
    ASSERT_EQ(d.size(), 3u);
    EXPECT_DOUBLE_EQ(d.frequency_at(1), 0.7);
    EXPECT_DOUBLE_EQ(d.frequency_at(2), 0.2);
    EXPECT_DOUBLE_EQ(d.frequency_at(3), 0.1);
    EXPECT_EQ(d.total, 20u);
    EXPECT_EQ(d.runs, 2u);
    EXPECT_DOUBLE_EQ(d.frequency_at(4), 0.0);
}

TEST(Pool, SingleRunEqualsItsOwnFrequencies) {
    const auto h = make_hist({{1, 7}, {3, 2}, {9, 1}});
    const auto d = pool(std::vector<EtvHistogram>{h});
    EXPECT_DOUBLE_EQ(d.frequency_at(1), 0.7);
    EXPECT_DOUBLE_EQ(d.frequency_at(3), 0.2);
    EXPECT_DOUBLE_EQ(d.frequency_at(9), 0.1);
}

TEST(Pool, EmptyInputRejected) {
    EXPECT_THROW(pool(std::vector<EtvHistogram>{}), std::invalid_argument);
}

TEST(Pool, PropertiesOnRandomHistograms) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<EtvHistogram> hists;
        const int runs = 1 + trial % 20;
        for (int r = 0; r < runs; ++r) {
            hists.push_back(random_hist(rng));
        }
        const auto d = pool(hists);
        const double sum = std::accumulate(d.frequency.begin(), d.frequency.end(), 0.0);
        EXPECT_NEAR(sum, 1.0, 1e-12);
        EXPECT_TRUE(std::is_sorted(d.x.begin(), d.x.end()));
        for (std::size_t k = 0; k < d.size(); ++k) {
            EXPECT_GE(d.x[k], 1u);
            EXPECT_GT(d.frequency[k], 0.0);
        }

        auto shuffled = hists;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto d2 = pool(shuffled);
        EXPECT_EQ(d.x, d2.x);
        EXPECT_EQ(d.count, d2.count);

        const std::vector<EtvHistogram> same(5, hists.front());
        const auto one = pool(std::vector<EtvHistogram>{hists.front()});
        const auto five = pool(same);
        EXPECT_EQ(one.x, five.x);
        for (std::size_t k = 0; k < one.size(); ++k) {
            EXPECT_NEAR(one.frequency[k], five.frequency[k], 1e-15);
        }
    }
}

TEST(MaxEtvMean, Arithmetic) {
    const std::vector<std::uint32_t> maxima{10, 12};
    EXPECT_DOUBLE_EQ(max_etv_mean(maxima), 11.0);
    const std::vector<std::uint32_t> saturated(20, 100);
    EXPECT_DOUBLE_EQ(max_etv_mean(saturated), 100.0);
    EXPECT_THROW(max_etv_mean(std::vector<std::uint32_t>{}), std::invalid_argument);

    const std::vector<EtvTable> tables{EtvTable(1, 3, {1, 4, 2}), EtvTable(1, 3, {6, 1, 1})};
    EXPECT_DOUBLE_EQ(max_etv_mean(tables), 5.0);
}
