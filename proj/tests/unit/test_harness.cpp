#include <gtest/gtest.h>

#include <fstream>

#include <json.hpp>

#include "../support/toy_run.hpp"
#include "gridco/error.hpp"
#include "gridco/harness.hpp"

using namespace gridco;
using gridco::testing::slurp;
using gridco::testing::TempDir;
using gridco::testing::toy_config;

namespace {

MetricsLog constant_log(std::size_t episodes, double op_cost, double exp_cost, double w) {
    MetricsLog log;
    log.header.mode = "co-opt-continuous";
    log.header.agents = {"A", "B"};
    log.header.w_anu = w;
    for (std::size_t e = 0; e < episodes; ++e) {
        EpisodeRecord r;
        r.episode = e;
        r.operational_cost = op_cost;
        r.expansion_cost = exp_cost;
        r.profits = {100.0, 200.0};
        r.revenues = {1000.0, 2000.0};
        r.mean_bids = {55.0, 60.0 + static_cast<double>(e)};
        log.episodes.push_back(r);
    }
    return log;
}

}  // namespace

TEST(Summary, WindowIsCeilingOfFraction) {
    EXPECT_EQ(summary_window(1000, 0.1), 100u);
    EXPECT_EQ(summary_window(15, 0.1), 2u);
    EXPECT_EQ(summary_window(5, 0.1), 1u);
    EXPECT_EQ(summary_window(0, 0.1), 1u);
}

TEST(Summary, AnnualizesOperationalCostAndAddsExpansion) {
    // 655,945 $ per 48-step episode at w = 8760/48.
    const auto s = summarize(constant_log(10, 655945.0, 8.14e6, 182.5), 5, "run");
    EXPECT_NEAR(s.operational_cost, 119.71e6, 0.01e6);
    EXPECT_NEAR(s.total_cost, 127.85e6, 0.01e6);
    EXPECT_DOUBLE_EQ(s.total_cost, s.operational_cost + s.expansion_cost);
    EXPECT_DOUBLE_EQ(s.profits[1], 182.5 * 200.0);
    EXPECT_DOUBLE_EQ(s.mean_bids[1], 60.0 + 7.0);  // mean of episodes 5..9
    EXPECT_TRUE(s.converged);
}

TEST(Summary, RejectsBadWindow) {
    const auto log = constant_log(3, 1.0, 0.0, 1.0);
    EXPECT_THROW(summarize(log, 0), ValidationError);
    EXPECT_THROW(summarize(log, 4), ValidationError);
}

TEST(Summary, SheddingMarksNotConverged) {
    auto log = constant_log(3, 1.0, 0.0, 1.0);
    log.episodes[2].shed = 1.0;
    EXPECT_FALSE(summarize(log, 1).converged);
    EXPECT_TRUE(summarize(constant_log(3, 1.0, 0.0, 1.0), 1).converged);
}

TEST(Summary, CsvHasPlannedColumnsOnlyWhenPresent) {
    auto s = summarize(constant_log(2, 1.0, 2.0, 1.0), 1, "r1");
    auto csv = summary_csv({s});
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "run_id,mode,window,bid_A,bid_B,profit_A,profit_B,operational_cost,expansion_cost,total_cost,shed_mwh,"
              "converged");
    s.planned = PlannedCosts{5.0, 6.0, 11.0};
    csv = summary_csv({s});
    EXPECT_NE(csv.find("planned_total"), std::string::npos);
    EXPECT_NE(csv.find(",5,6,11\n"), std::string::npos);
}

TEST(Harness, CoOptimizationWritesArtifacts) {
    TempDir dir("coopt");
    const auto cfg = toy_config(dir / "run");
    std::size_t seen = 0;
    const auto art = run(cfg, [&](const EpisodeRecord&) { ++seen; });
    EXPECT_EQ(seen, 20u);

    const auto log = read_metrics(art.metrics);
    EXPECT_EQ(log.header.mode, "co-opt-continuous");
    EXPECT_EQ(log.header.agents, std::vector<std::string>{"Peaker"});
    EXPECT_EQ(log.header.candidates, std::vector<std::string>{"1-2"});
    EXPECT_DOUBLE_EQ(log.header.w_anu, 8760.0 / 4.0);
    EXPECT_EQ(log.episodes.size(), 20u);
    EXPECT_EQ(log.steps.size(), 80u);
    EXPECT_NE(log.header.config_json.find("\"n_up\":5"), std::string::npos);

    std::size_t updates = 0;
    for (const auto& e : log.episodes) {
        if (e.design_updated) {
            ++updates;
            EXPECT_EQ((e.episode + 1) % 5, 0u);
        }
        EXPECT_GE(e.design.at(0), 0.0);
        // Logged values carry 15 significant digits.
        EXPECT_NEAR(e.g_total, -(log.header.w_anu * (e.operational_cost + e.shed_cost) + e.expansion_cost),
                    1e-13 * std::abs(e.g_total));
        EXPECT_NEAR(e.expansion_cost, 1e5 * e.design[0], 1e-6 * (1.0 + e.expansion_cost));
    }
    EXPECT_EQ(updates, 4u);

    for (const auto* name : {"episode_000010", "episode_000020", "final"}) {
        EXPECT_TRUE(std::filesystem::exists(art.dir / "checkpoints" / name / "maddpg.txt")) << name;
        EXPECT_TRUE(std::filesystem::exists(art.dir / "checkpoints" / name / "design_policy.txt")) << name;
    }
    EXPECT_TRUE(std::filesystem::exists(art.summary_csv));

    const auto design = nlohmann::json::parse(slurp(art.design));
    ASSERT_EQ(design["lines"].size(), 1u);
    EXPECT_EQ(design["lines"][0]["line"], "1-2");
    EXPECT_DOUBLE_EQ(design["lines"][0]["design"].get<double>(), art.final_design[0]);
    EXPECT_DOUBLE_EQ(design["lines"][0]["mu"].get<double>(), log.episodes.back().mu[0]);
    EXPECT_EQ(art.summary.window, 2u);
}

TEST(Harness, IdenticalSeedsGiveIdenticalMetrics) {
    TempDir dir("det");
    const auto a = run(toy_config(dir / "a"));
    const auto b = run(toy_config(dir / "b"));
    EXPECT_EQ(slurp(a.metrics), slurp(b.metrics));
    const auto c = run(toy_config(dir / "c", {"seed=12"}));
    EXPECT_NE(slurp(a.metrics), slurp(c.metrics));
}

TEST(Harness, StepLoggingCanBeDisabled) {
    TempDir dir("nosteps");
    const auto art = run(toy_config(dir / "r", {"output.log_steps=false"}, 10));
    const auto log = read_metrics(art.metrics);
    EXPECT_TRUE(log.steps.empty());
    EXPECT_EQ(log.episodes.size(), 10u);
}

TEST(Harness, DiscreteModeDrawsBinaryDesigns) {
    TempDir dir("disc");
    const auto art = run(toy_config(dir / "r", {"mode=co-opt-discrete"}, 10));
    const auto log = read_metrics(art.metrics, false);
    for (const auto& e : log.episodes) {
        EXPECT_TRUE(e.design[0] == 0.0 || e.design[0] == 1.0);
        EXPECT_DOUBLE_EQ(e.expansion_cost, e.design[0] * 50.0 * 1e5);
    }
    EXPECT_TRUE(art.final_design[0] == 0.0 || art.final_design[0] == 1.0);
}

TEST(Harness, TwoStageMatchesFixedDesignTraining) {
    TempDir dir("two");
    const auto cfg = toy_config(dir / "two", {"mode=two-stage", "scenario.bids={Peaker: 80}"}, 10);
    const auto two = run(cfg);
    ASSERT_TRUE(two.stage1.has_value());
    EXPECT_EQ(two.final_design, two.stage1->expansion);

    auto fixed_cfg = cfg;
    fixed_cfg.output_dir = dir / "fixed";
    const auto fixed = run_fixed_design(fixed_cfg, two.stage1->expansion);

    const auto a = read_metrics(two.metrics);
    const auto b = read_metrics(fixed.metrics);
    ASSERT_TRUE(a.header.planned_operational.has_value());
    EXPECT_FALSE(b.header.planned_operational.has_value());
    ASSERT_EQ(a.episodes.size(), b.episodes.size());
    for (std::size_t e = 0; e < a.episodes.size(); ++e) {
        EXPECT_EQ(a.episodes[e].operational_cost, b.episodes[e].operational_cost);
        EXPECT_EQ(a.episodes[e].profits, b.episodes[e].profits);
        EXPECT_EQ(a.episodes[e].design, b.episodes[e].design);
    }
    ASSERT_TRUE(two.summary.planned.has_value());
    EXPECT_NEAR(two.summary.planned->total, two.stage1->objective, 1e-6 * two.stage1->objective);
    EXPECT_NE(slurp(two.summary_csv).find("planned_total"), std::string::npos);
}

TEST(Harness, ScenarioMustCoverStrategicUnits) {
    auto cfg = toy_config("unused", {"mode=two-stage", "scenario.bids={Base: 55}"});
    const auto net = load_run_case(cfg);
    EXPECT_THROW(scenario_bids(cfg, net), ConfigError);
    cfg = toy_config("unused", {"mode=two-stage", "scenario.bids={Nope: 55}"});
    EXPECT_THROW(scenario_bids(cfg, net), ConfigError);
    cfg = toy_config("unused", {"mode=two-stage", "scenario.bids={Peaker: 90}"});
    const auto bids = scenario_bids(cfg, net);
    EXPECT_EQ(bids, (std::vector<double>{50.0, 90.0}));
}

TEST(Harness, ClearOnlyModeHasNoTrainingRun) {
    TempDir dir("clear");
    EXPECT_THROW(run(toy_config(dir / "r", {"mode=clear-only"})), ConfigError);
}

TEST(Harness, InfeasibleClearingKeepsPartialArtifacts) {
    TempDir dir("infeas");
    const auto case_path = dir / "short.case";
    {
        std::ofstream out(case_path);
        out << "name: short\nbase_mva: 100\nslack_bus: 0\n"
               "buses:\n  - {id: 0, demand_base: 150}\nlines: []\n"
               "generators:\n  - {name: G, bus: 0, p_max: 100, marginal_cost: 50, strategic: true, alpha: 1}\n"
               "profile: [1, 1]\n";
    }
    auto cfg = toy_config(dir / "r", {"market.shed_penalty=null", "horizon=2"});
    cfg.case_path = case_path;
    try {
        run(cfg);
        FAIL() << "expected InfeasibleError";
    } catch (const InfeasibleError& e) {
        EXPECT_NE(std::string(e.what()).find("episode 0, step 0"), std::string::npos) << e.what();
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "r" / "checkpoints" / "partial" / "maddpg.txt"));
    EXPECT_TRUE(std::filesystem::exists(dir / "r" / "metrics.jsonl"));
}
