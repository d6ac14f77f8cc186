#include <gtest/gtest.h>

#include "../support/toy_run.hpp"
#include "gridco/error.hpp"
#include "gridco/harness.hpp"
#include "gridco/report.hpp"

using namespace gridco;
using gridco::testing::slurp;
using gridco::testing::TempDir;
using gridco::testing::toy_config;

namespace {

MetricsLog bid_log(const std::vector<double>& bids) {
    MetricsLog log;
    log.header.agents = {"A"};
    log.header.agent_costs = {50.0};
    for (std::size_t t = 0; t < bids.size(); ++t) {
        StepRecord s;
        s.episode = 0;
        s.t = t;
        s.bids = {bids[t]};
        log.steps.push_back(s);
    }
    return log;
}

}  // namespace

TEST(BidCheck, AcceptsFeasibleSeries) {
    EXPECT_TRUE(check_bid_constraints(bid_log({55, 60.5, 66.55, 73.205, 75})).empty());
}

TEST(BidCheck, FlagsStepViolation) {
    const auto v = check_bid_constraints(bid_log({55, 62}));
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, "step");
    EXPECT_EQ(v[0].t, 1u);
    EXPECT_NEAR(v[0].value, 62.0 / 55.0, 1e-12);
}

TEST(BidCheck, FirstBidIsMeasuredFromCost) {
    const auto v = check_bid_constraints(bid_log({56}));
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].t, 0u);
}

TEST(BidCheck, FlagsSpreadViolation) {
    // Steps of exactly 10% from cost reach 80.5 > 1.5 * 50.
    std::vector<double> bids;
    double b = 50.0;
    for (int i = 0; i < 5; ++i) bids.push_back(b *= 1.1);
    const auto v = check_bid_constraints(bid_log(bids));
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, "spread");
}

TEST(BidCheck, RequiresStepRecords) {
    MetricsLog log;
    EXPECT_THROW(check_bid_constraints(log), ValidationError);
}

TEST(Report, WritesPlotReadyFiles) {
    TempDir dir("report");
    run(toy_config(dir / "runA", {}, 10));
    run(toy_config(dir / "runB", {"seed=5"}, 10));

    const auto one = write_report({dir / "runA"}, dir / "out1");
    EXPECT_EQ(one.runs, 1u);
    EXPECT_TRUE(one.violations.empty());
    EXPECT_EQ(one.steps_checked, 40u);
    EXPECT_FALSE(std::filesystem::exists(dir / "out1" / "comparison.csv"));
    const auto breakdown = slurp(dir / "out1" / "breakdown.csv");
    EXPECT_EQ(breakdown.substr(0, breakdown.find('\n')),
              "run_id,mode,window,operational_cost,expansion_cost,total_cost,revenue_Peaker,profit_Peaker,shed_mwh,"
              "converged");
    EXPECT_NE(breakdown.find("\nrunA,co-opt-continuous,1,"), std::string::npos);

    const auto bids = slurp(dir / "out1" / "bids.csv");
    EXPECT_EQ(std::count(bids.begin(), bids.end(), '\n'), 11);
    const auto mu = slurp(dir / "out1" / "mu.csv");
    EXPECT_EQ(std::count(mu.begin(), mu.end(), '\n'), 11);

    const auto two = write_report({dir / "runA", dir / "runB"}, dir / "out2");
    EXPECT_EQ(two.runs, 2u);
    const auto cmp = slurp(dir / "out2" / "comparison.csv");
    EXPECT_NE(cmp.find("\nrunA,"), std::string::npos);
    EXPECT_NE(cmp.find("\nrunB,"), std::string::npos);
}

TEST(Report, EmptyDirectoryIsAnInputError) {
    TempDir dir("empty");
    EXPECT_THROW(write_report({dir.path()}, dir / "out"), ParseError);
}
