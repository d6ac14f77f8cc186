#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gridco/error.hpp"
#include "gridco/grid_model.hpp"

using namespace gridco;

namespace {

const std::filesystem::path kData{GRIDCO_DATA_DIR};

bool has_error(const std::vector<Diagnostic>& diags, const std::string& needle) {
    for (const auto& d : diags)
        if (d.is_error() && (d.message.find(needle) != std::string::npos || d.where.find(needle) != std::string::npos))
            return true;
    return false;
}

NetworkCase two_bus() {
    return load_case(kData / "toy2.case");
}

}  // namespace

TEST(GridModel, LoadsBundledIeee30) {
    auto net = load_case(kData / "ieee30.case");
    EXPECT_EQ(net.num_buses(), 30u);
    EXPECT_EQ(net.num_lines(), 41u);
    auto strategic = net.strategic_generators();
    ASSERT_EQ(strategic.size(), 3u);
    std::vector<std::string> buses;
    for (auto g : strategic) {
        buses.push_back(net.buses[net.generators[g].bus].name);
        EXPECT_DOUBLE_EQ(net.generators[g].marginal_cost, 50.0);
    }
    EXPECT_EQ(buses, (std::vector<std::string>{"2", "27", "23"}));
    for (const auto& g : net.generators)
        if (!g.strategic) EXPECT_DOUBLE_EQ(g.marginal_cost, 55.0);
    EXPECT_TRUE(validate(net).empty());
    EXPECT_EQ(net.profile.horizon(), 48u);
}

TEST(GridModel, Ieee30CandidateLines) {
    auto net = load_case(kData / "ieee30.case");
    for (const char* name : {"1-2", "3-4", "6-10", "9-10"}) {
        const auto& l = net.lines[net.line_index(name)];
        EXPECT_DOUBLE_EQ(l.base_capacity, 20.0) << name;
        EXPECT_DOUBLE_EQ(l.expansion_cost, 100000.0) << name;
        EXPECT_TRUE(l.candidate);
    }
    for (const char* name : {"4-12", "27-28"}) {
        const auto& l = net.lines[net.line_index(name)];
        EXPECT_DOUBLE_EQ(l.base_capacity, 10.0) << name;
        EXPECT_DOUBLE_EQ(l.expansion_cost, 100000.0) << name;
    }
    EXPECT_EQ(net.candidate_lines().size(), 6u);
}

TEST(GridModel, ProfileShape) {
    auto net = load_case(kData / "ieee30.case");
    const auto& s = net.profile.shape;
    EXPECT_DOUBLE_EQ(s[4], 0.7);
    EXPECT_DOUBLE_EQ(s[18], 1.1);
    for (std::size_t t = 0; t < 24; ++t) EXPECT_DOUBLE_EQ(s[t], s[t + 24]);
    EXPECT_NEAR(net.peak_total_demand(), 283.4 * 1.1, 1e-9);
}

TEST(GridModel, NonexistentBusNamesTheLine) {
    const char* text = R"(
slack_bus: 0
buses: [{id: 0, demand_base: 10}, {id: 1, demand_base: 0}]
lines: [{name: "bad", from_bus: 0, to_bus: 99, susceptance: 10, base_capacity: 5}]
generators: [{bus: 0, p_max: 50, marginal_cost: 20}]
profile: [1]
)";
    try {
        parse_case(text);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("99"), std::string::npos);
    }
}

TEST(GridModel, NegativeBaseCapacityRejected) {
    const char* text = R"(
slack_bus: 0
buses: [{id: 0, demand_base: 10}, {id: 1, demand_base: 0}]
lines: [{from_bus: 0, to_bus: 1, susceptance: 10, base_capacity: -5}]
generators: [{bus: 0, p_max: 50, marginal_cost: 20}]
profile: [1]
)";
    EXPECT_THROW(parse_case(text), ValidationError);
}

TEST(GridModel, MalformedFileIsParseError) {
    EXPECT_THROW(parse_case("buses: [unterminated"), ParseError);
    EXPECT_THROW(parse_case("slack_bus: 0\nbuses: []\n"), ParseError);
    EXPECT_THROW(parse_case("slack_bus: 0\nbogus: 1\nbuses: []\nlines: []\ngenerators: []\nprofile: []\n"),
                 ParseError);
    EXPECT_THROW(load_case(kData / "does-not-exist.case"), ParseError);
}

TEST(GridModel, ValidateReportsDisconnection) {
    auto net = two_bus();
    net.buses.push_back({2, 0.0, "3"});
    net.buses.push_back({3, 5.0, "4"});
    net.lines.push_back({2, 3, 10.0, 10.0, 0.0, false, "3-4"});
    EXPECT_TRUE(has_error(validate(net), "network not connected"));
}

TEST(GridModel, ValidateAdequacyIsWarningOnly) {
    auto net = two_bus();
    net.buses[1].demand_base = 300.0;
    net.generators[0].p_max = 125.0;
    net.generators[1].p_max = 125.0;
    auto diags = validate(net);
    ASSERT_EQ(diags.size(), 1u);
    EXPECT_EQ(diags[0].severity, Diagnostic::Severity::warning);
    EXPECT_TRUE(validate(two_bus()).empty());
}

TEST(GridModel, EffectiveCapacityExamples) {
    Line l10;
    l10.base_capacity = 10.0;
    EXPECT_NEAR(effective_capacity(l10, 76.1, DesignMode::continuous, 0.0), 86.1, 1e-12);
    Line l20;
    l20.base_capacity = 20.0;
    EXPECT_DOUBLE_EQ(effective_capacity(l20, 0.0, DesignMode::discrete, 50.0), 20.0);
    EXPECT_DOUBLE_EQ(effective_capacity(l20, 1.0, DesignMode::discrete, 50.0), 70.0);
    EXPECT_THROW(effective_capacity(l20, -1.0, DesignMode::continuous, 0.0), ValidationError);
    EXPECT_THROW(effective_capacity(l20, 0.5, DesignMode::discrete, 50.0), ValidationError);
}

TEST(GridModel, EffectiveCapacityMonotone) {
    Line l;
    l.base_capacity = 12.5;
    double prev = effective_capacity(l, 0.0, DesignMode::continuous, 0.0);
    EXPECT_DOUBLE_EQ(prev, l.base_capacity);
    for (double w = 0.25; w < 200.0; w += 0.25) {
        double cur = effective_capacity(l, w, DesignMode::continuous, 0.0);
        EXPECT_GE(cur, prev);
        prev = cur;
    }
}

TEST(GridModel, SerializationRoundTrip) {
    for (const char* file : {"ieee30.case", "toy2.case", "toy3.case", "mono1.case", "duo1.case"}) {
        auto net = load_case(kData / file);
        auto again = parse_case(serialize_case(net));
        EXPECT_EQ(serialize_case(again), serialize_case(net)) << file;
        ASSERT_EQ(again.num_lines(), net.num_lines());
        for (std::size_t l = 0; l < net.num_lines(); ++l) {
            EXPECT_EQ(again.lines[l].susceptance, net.lines[l].susceptance);
            EXPECT_EQ(again.lines[l].name, net.lines[l].name);
        }
        EXPECT_EQ(again.profile.shape, net.profile.shape);
    }
}
