#include <gtest/gtest.h>

#include "biofeed/config/instance.hpp"

namespace biofeed {
namespace {

TEST(Config, RoundTripIsExact) {
    auto inst = default_instance();
    inst.scenario.target_rate = 2.72;
    inst.scenario.sequence_strategy = SequenceStrategy::Explicit;
    inst.scenario.horizon_bales = 3;
    inst.scenario.explicit_sequence = {MoistureLevel::Low, MoistureLevel::High, MoistureLevel::Med};
    inst.run.stall_eps = 1e-5;
    const auto text = to_yaml(inst);
    const auto back = parse_instance(text);
    EXPECT_EQ(to_yaml(back), text);
    EXPECT_EQ(back.scenario.explicit_sequence, inst.scenario.explicit_sequence);
    EXPECT_EQ(back.physics, inst.physics);
    EXPECT_EQ(back.moisture, inst.moisture);
    EXPECT_EQ(back.run, inst.run);
}

TEST(Config, ShippedBaseCaseMatchesDefaults) {
    const auto inst = load_instance(BIOFEED_SOURCE_DIR "/configs/base_case.yaml");
    EXPECT_EQ(to_yaml(inst), to_yaml(default_instance()));
}

TEST(Config, EmptyDocumentGivesDefaults) {
    EXPECT_EQ(to_yaml(parse_instance("")), to_yaml(default_instance()));
}

TEST(Config, PartialSectionKeepsOtherDefaults) {
    const auto inst = parse_instance("scenario:\n  target_rate: 2.5\n  mix: {low: 1, med: 0, high: 0}\n");
    EXPECT_EQ(inst.scenario.target_rate, 2.5);
    EXPECT_EQ(inst.scenario.mix[MoistureLevel::Low], 1.0);
    EXPECT_EQ(inst.scenario.horizon_bales, 50);
}

TEST(Config, UnknownKeyRejectedWithLine) {
    try {
        (void)parse_instance("scenario:\n  horizon_bales: 10\n  target_rte: 2.5\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3);
        EXPECT_NE(std::string(e.what()).find("target_rte"), std::string::npos);
    }
}

TEST(Config, UnknownTopLevelSection) {
    try {
        (void)parse_instance("scenario:\n  seed: 3\nplots: true\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3);
    }
}

TEST(Config, BadValueReportsLine) {
    try {
        (void)parse_instance("scenario:\n  seed: 3\n  target_rate: fast\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3);
    }
}

TEST(Config, InvalidEnumReportsLine) {
    try {
        (void)parse_instance("scenario:\n  sequence: zigzag\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 2);
        EXPECT_NE(std::string(e.what()).find("zigzag"), std::string::npos);
    }
}

TEST(Config, NetworkErrorsSurface) {
    const std::string text =
        "network:\n"
        "  reactor_feeder: b\n"
        "  equipment:\n"
        "    - {id: a, kind: transport, system_feed_rate: {low: 1, med: 1, high: 1}}\n"
        "    - {id: b, kind: transport, colour: red}\n"
        "  arcs: [[a, b]]\n";
    try {
        (void)parse_instance(text);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 5);
    }
}

TEST(Config, InvalidMixRejected) {
    EXPECT_THROW((void)parse_instance("scenario:\n  mix: {low: 0.5, med: 0.1, high: 0.1}\n"), ConfigError);
}

TEST(Config, SyntaxErrorHasLine) {
    try {
        (void)parse_instance("scenario:\n  seed: [1,\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_GT(e.line(), 0);
    }
}

TEST(Config, FormatDoubleRoundTrips) {
    for (double v : {0.1, 2.95, 1e-4, 203.04, 1.0 / 3.0, 5.0}) {
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(5.0), "5.0");
}

}  // namespace
}  // namespace biofeed
