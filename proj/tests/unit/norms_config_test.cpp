#include "psyeval/config.hpp"
#include "psyeval/error.hpp"
#include "psyeval/norms.hpp"
#include "psyeval/util.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

namespace psyeval {
namespace {

using testing::TempDir;

TEST(Norms, BundledProfileCoversBothScales) {
    const auto norms = load_norms(testing::data_dir() / "norms" / "johnson2014.json");
    EXPECT_EQ(norms.per_item_mean.size(), 5u);
    EXPECT_EQ(norms.sha256.size(), 64u);
    EXPECT_FALSE(norms.source.empty());
    EXPECT_NO_THROW(validate_norms_cover(norms, testing::bundled_scale("bfm")));
    EXPECT_NO_THROW(validate_norms_cover(norms, testing::bundled_scale("neo")));
    EXPECT_EQ(norms.human_inc.at("NEO").size(), 5u);
}

TEST(Norms, RejectsBadProfiles) {
    EXPECT_THROW((void)parse_norms(R"({"source":"s","per_item_mean":{"EXT":3},"extra":1})", "n.json"), ParseError);
    EXPECT_THROW((void)parse_norms(R"({"source":"s","per_item_mean":{"EXT":6}})", "n.json"), ValidationError);
    EXPECT_THROW((void)parse_norms(R"({"source":"s","per_item_mean":{"EXT":3},"human_inc":{"BFM":{"EXT":1.5}}})",
                                   "n.json"),
                 ValidationError);
    const auto partial = parse_norms(R"({"source":"s","per_item_mean":{"EXT":3}})", "n.json");
    EXPECT_THROW(validate_norms_cover(partial, testing::bundled_scale("bfm")), ValidationError);
    EXPECT_THROW((void)load_norms("/nonexistent/norms.json"), NotFoundError);
}

class ConfigTest : public ::testing::Test {
protected:
    void SetUp() override {
        write_text_file_atomic(dir_ / "fx.json", "[]");
        write_text_file_atomic(dir_ / "verdicts.json", "[]");
    }
    std::filesystem::path write(const std::string& text) {
        const auto p = dir_ / "config.json";
        write_text_file_atomic(p, text);
        return p;
    }
    TempDir dir_;
};

TEST_F(ConfigTest, FullConfigResolvesRelativePaths) {
    const auto data = testing::data_dir().string();
    const auto path = write(R"({
      "output_dir": "out",
      "in_flight": 2,
      "endpoints": [
        {"id": "m", "base_url": "scripted", "fixture": "fx.json", "max_tokens": 30},
        {"id": "live", "base_url": "https://api.example.com/v1", "api_style": "chat", "timeout_ms": 1000}
      ],
      "scales": [")" + data + R"(/scales/bfm.json"],
      "plan": {"endpoints": ["m"], "temperatures": [0, 1], "repetitions_nonzero": 3},
      "templates": {"item_assessment": ")" + data + R"(/prompts/item_assessment.txt"},
      "classifier": {"kind": "scripted", "fixture": "verdicts.json"},
      "behavior": {"generator_endpoint": "m", "subject_endpoints": ["m"], "dimensions": ["EXT"],
                   "curated_occasions": {"EXT": ["at parties"]}, "mode": "probability"}
    })");
    const auto cfg = load_config(path);
    EXPECT_EQ(cfg.output_dir, dir_.path() / "out");
    EXPECT_EQ(cfg.store_dir("BFM"), dir_.path() / "out" / "BFM");
    EXPECT_EQ(cfg.in_flight, 2);
    ASSERT_EQ(cfg.endpoints.size(), 2u);
    EXPECT_EQ(cfg.endpoints[0].fixture, dir_.path() / "fx.json");
    EXPECT_EQ(cfg.endpoints[0].endpoint.max_tokens, 30);
    EXPECT_EQ(cfg.endpoints[1].endpoint.api_style, ApiStyle::Chat);
    EXPECT_EQ(cfg.plan.temperatures, (std::vector<double>{0, 1}));
    EXPECT_EQ(cfg.plan.repetitions_nonzero, 3);
    ASSERT_TRUE(cfg.behavior.has_value());
    EXPECT_EQ(cfg.behavior->output_dir, dir_.path() / "behavior");
    EXPECT_EQ(cfg.behavior->spec.mode, CrsMode::Probability);
    EXPECT_EQ(cfg.behavior->spec.curated_occasions.at("EXT").size(), 1u);
    auto gw = build_gateway(cfg);
    EXPECT_TRUE(gw->has_endpoint("live"));
    EXPECT_EQ(build_classifier(cfg, *gw)->kind(), ClassifierKind::Scripted);
}

TEST_F(ConfigTest, UnknownKeyNamesThePath) {
    const auto path = write(R"({"endpoints":[{"id":"m","base_url":"scripted","fixture":"fx.json","colour":1}]})");
    try {
        (void)load_config(path);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.location(), "$.endpoints[0].colour");
    }
}

TEST_F(ConfigTest, MissingFileNamesThePath) {
    const auto path = write(R"({"endpoints":[{"id":"m","base_url":"scripted","fixture":"absent.json"}]})");
    try {
        (void)load_config(path);
        FAIL();
    } catch (const NotFoundError& e) {
        EXPECT_NE(std::string(e.what()).find("absent.json"), std::string::npos);
    }
}

TEST_F(ConfigTest, MissingClassifierMessageNamesTheKinds) {
    const auto path = write(R"({"endpoints":[{"id":"m","base_url":"scripted","fixture":"fx.json"}]})");
    const auto cfg = load_config(path);
    auto gw = build_gateway(cfg);
    try {
        (void)build_classifier(cfg, *gw);
        FAIL();
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("scripted"), std::string::npos);
        EXPECT_NE(msg.find("remote"), std::string::npos);
        EXPECT_NE(msg.find("judge"), std::string::npos);
    }
}

TEST_F(ConfigTest, UndefinedEndpointReferences) {
    EXPECT_THROW((void)load_config(write(
                     R"({"endpoints":[{"id":"m","base_url":"scripted","fixture":"fx.json"}],"plan":{"endpoints":["x"]}})")),
                 ValidationError);
    EXPECT_THROW((void)load_config(write(R"({"endpoints":[{"id":"m","base_url":"scripted","fixture":"fx.json"}],
        "behavior":{"generator_endpoint":"x","subject_endpoints":["m"]}})")),
                 ValidationError);
    EXPECT_THROW((void)load_config(write(R"({"endpoints":[{"id":"m","base_url":"scripted","fixture":"fx.json"},
        {"id":"m","base_url":"scripted","fixture":"fx.json"}]})")),
                 ValidationError);
    EXPECT_THROW((void)load_config(write(R"({"endpoints":[{"id":"m","base_url":"scripted"}]})")), ParseError);
    EXPECT_THROW((void)load_config(write(R"({"endpoints":[]})")), ParseError);
    EXPECT_THROW((void)load_config(write("{ not json")), ParseError);
}

TEST_F(ConfigTest, CuratedOccasionsMustBelongToConfiguredDimensions) {
    const auto path = write(R"({"endpoints":[{"id":"m","base_url":"scripted","fixture":"fx.json"}],
        "behavior":{"generator_endpoint":"m","subject_endpoints":["m"],"dimensions":["EXT"],
                    "curated_occasions":{"AGR":["at work"]}}})");
    EXPECT_THROW((void)load_config(path), ParseError);
}

}  // namespace
}  // namespace psyeval
