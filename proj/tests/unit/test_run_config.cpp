#include <gtest/gtest.h>

#include <string>

#include "gridco/error.hpp"
#include "gridco/run_config.hpp"

using namespace gridco;

namespace {

const char* kBase = R"(
case: toy3.case
mode: co-opt-continuous
episodes: 20
seed: 7
design:
  n_up: 10
)";

std::string message_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
    try {
        parse_run_config(text, overrides);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(RunConfig, ParsesDefaults) {
    const auto cfg = parse_run_config(kBase, {}, "/data");
    EXPECT_EQ(cfg.case_path, std::filesystem::path("/data/toy3.case"));
    EXPECT_EQ(cfg.mode, RunMode::co_opt_continuous);
    EXPECT_EQ(cfg.episodes, 20u);
    EXPECT_EQ(cfg.seed, 7u);
    EXPECT_EQ(cfg.design.n_up, 10u);
    EXPECT_FALSE(cfg.design.lr.has_value());
    EXPECT_DOUBLE_EQ(cfg.maddpg.gamma, 0.99);
    ASSERT_TRUE(cfg.market.shed_penalty.has_value());
    EXPECT_DOUBLE_EQ(*cfg.market.shed_penalty, 1e4);
}

TEST(RunConfig, UnknownKeyNamesDottedPath) {
    EXPECT_EQ(message_of(std::string(kBase) + "  nup: 3\n"), "unknown key 'design.nup'");
    EXPECT_EQ(message_of(std::string(kBase) + "epochs: 3\n"), "unknown key 'epochs'");
}

TEST(RunConfig, OverrideSetsNestedValue) {
    const auto cfg = parse_run_config(kBase, {"design.n_up=5", "maddpg.actor_lr=1e-4", "market.shed_penalty=null"});
    EXPECT_EQ(cfg.design.n_up, 5u);
    EXPECT_DOUBLE_EQ(cfg.maddpg.actor_lr, 1e-4);
    EXPECT_FALSE(cfg.market.shed_penalty.has_value());
    EXPECT_NE(run_config_json(cfg).find("\"n_up\":5"), std::string::npos);
}

TEST(RunConfig, OverrideCreatesMissingSection) {
    const auto cfg = parse_run_config(kBase, {"output.log_steps=false"});
    EXPECT_FALSE(cfg.output.log_steps);
}

TEST(RunConfig, OverrideIsTypeChecked) {
    EXPECT_EQ(message_of(kBase, {"design.n_up=many"}), "design.n_up: expected a non-negative integer, got 'many'");
    EXPECT_EQ(message_of(kBase, {"design.typo=1"}), "unknown key 'design.typo'");
    EXPECT_FALSE(message_of(kBase, {"design.n_up"}).empty());
}

TEST(RunConfig, EpisodesBelowUpdateIntervalRejected) {
    EXPECT_EQ(message_of(kBase, {"episodes=5"}), "N ≥ N_up required (episodes 5, design.n_up 10)");
}

TEST(RunConfig, InvalidModeListsChoices) {
    const auto msg = message_of(kBase, {"mode=co-opt"});
    EXPECT_NE(msg.find("mode: unknown mode 'co-opt'"), std::string::npos);
    EXPECT_NE(msg.find("two-stage"), std::string::npos);
}

TEST(RunConfig, TwoStageNeedsScenario) {
    EXPECT_EQ(message_of(kBase, {"mode=two-stage"}), "scenario: required in two-stage mode");
    const auto cfg = parse_run_config(kBase, {"mode=two-stage", "scenario.bids={Peaker: 90}"});
    ASSERT_TRUE(cfg.scenario.has_value());
    EXPECT_DOUBLE_EQ(cfg.scenario->bids.at("Peaker"), 90.0);
}

TEST(RunConfig, MissingCaseRejected) {
    EXPECT_EQ(message_of("mode: two-stage\n"), "config: missing key 'case'");
}

TEST(RunConfig, JsonIsStable) {
    const auto a = run_config_json(parse_run_config(kBase));
    const auto b = run_config_json(parse_run_config(kBase));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.find("output_dir"), std::string::npos);
}

TEST(RunConfig, RngStreamsAreIndependentAndReproducible) {
    auto a1 = rng_stream(1, "agents");
    auto a2 = rng_stream(1, "agents");
    auto b = rng_stream(1, "noise");
    auto c = rng_stream(2, "agents");
    const auto x = a1();
    EXPECT_EQ(x, a2());
    EXPECT_NE(x, b());
    EXPECT_NE(x, c());
}

TEST(RunConfig, HorizonTruncatesProfile) {
    auto cfg = parse_run_config(kBase, {"horizon=4"}, GRIDCO_DATA_DIR);
    EXPECT_EQ(load_run_case(cfg).profile.horizon(), 4u);
    EXPECT_DOUBLE_EQ(run_annualization(cfg, load_run_case(cfg)), 8760.0 / 4.0);
    cfg.horizon = 100;
    EXPECT_THROW(load_run_case(cfg), ConfigError);
}
