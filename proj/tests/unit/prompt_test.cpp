#include "psyeval/error.hpp"
#include "psyeval/prompt.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

namespace psyeval {
namespace {

TEST(PromptTemplate, RendersItem) {
    const auto tmpl = testing::item_template();
    const auto text = render_prompt(tmpl, {{"ITEM", "Am the life of the party."}});
    EXPECT_NE(text.find("Am the life of the party."), std::string::npos);
    EXPECT_EQ(text.find("[ITEM]"), std::string::npos);
    EXPECT_NE(text.find("(E). Very Accurate"), std::string::npos);
}

TEST(PromptTemplate, RendersBehaviourTemplate) {
    const auto templates = testing::behavior_templates();
    const auto text = render_prompt(templates.pseudo,
                                    {{"POLARITY", "is not"}, {"FACTOR", "extraverted"}, {"OCCASION", "at parties"}});
    EXPECT_NE(text.find("is not extraverted"), std::string::npos);
    EXPECT_NE(text.find("at parties"), std::string::npos);
    EXPECT_EQ(text.find('['), std::string::npos);
}

TEST(PromptTemplate, MissingBindingIsARenderError) {
    const auto tmpl = testing::item_template();
    try {
        (void)render_prompt(tmpl, {});
        FAIL() << "expected RenderError";
    } catch (const RenderError& e) {
        EXPECT_NE(std::string(e.what()).find("ITEM"), std::string::npos);
    }
}

TEST(PromptTemplate, SubstitutionIsSinglePass) {
    const PromptTemplate tmpl("t", "A [X] B [Y]", {"X", "Y"});
    EXPECT_EQ(render_prompt(tmpl, {{"X", "[Y]"}, {"Y", "y"}}), "A [Y] B y");
}

TEST(PromptTemplate, RequiredPlaceholderMustOccurOnce) {
    EXPECT_THROW(PromptTemplate("t", "no slot", {"ITEM"}), ValidationError);
    EXPECT_THROW(PromptTemplate("t", "[ITEM] and [ITEM]", {"ITEM"}), ValidationError);
}

TEST(PromptTemplate, HashFollowsBody) {
    const PromptTemplate a("a", "x [ITEM]", {"ITEM"});
    const PromptTemplate b("b", "x [ITEM]", {"ITEM"});
    const PromptTemplate c("a", "y [ITEM]", {"ITEM"});
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_NE(a.hash(), c.hash());
    EXPECT_EQ(a.hash().size(), 64u);
}

TEST(PromptTemplate, BundledTemplatesLoad) {
    EXPECT_NO_THROW((void)testing::behavior_templates());
    EXPECT_NO_THROW(
        (void)load_template(testing::data_dir() / "prompts" / "judge.txt", "judge", {"FACTOR", "BEHAVIOR"}));
    EXPECT_THROW((void)load_template(testing::data_dir() / "prompts" / "missing.txt", "x", {}), NotFoundError);
}

}  // namespace
}  // namespace psyeval
