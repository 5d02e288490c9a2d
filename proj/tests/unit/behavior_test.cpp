#include "psyeval/behavior.hpp"
#include "psyeval/error.hpp"
#include "psyeval/util.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <fstream>

namespace psyeval {
namespace {

using testing::TempDir;

TEST(Occasions, Normalization) {
    EXPECT_EQ(normalize_occasion("  \"At  parties.\" "), "At parties");
    EXPECT_EQ(normalize_occasion("during a job interview"), "during a job interview");
    EXPECT_EQ(normalize_occasion("'at work'"), "at work");
}

TEST(Occasions, GenerationFlagsDuplicates) {
    auto world = testing::behavior_world({"s"}, {"EXT"});
    const auto templates = testing::behavior_templates();
    const auto gen = generate_occasions(*world.gateway, "generator", templates.occasion, "EXT", "extraverted");
    ASSERT_EQ(gen.occasions.size(), 40u);
    EXPECT_TRUE(gen.errors.empty());
    std::size_t dups = 0;
    for (std::size_t i = 0; i < gen.occasions.size(); ++i) {
        EXPECT_EQ(gen.occasions[i].duplicate, i >= 35) << i;
        dups += gen.occasions[i].duplicate ? 1 : 0;
        EXPECT_FALSE(gen.occasions[i].accepted);
    }
    EXPECT_EQ(dups, 5u);
    EXPECT_EQ(gen.occasions[35].text, "In Situation EXT 0");
}

TEST(Occasions, AutoAcceptTakesFirstNonDuplicates) {
    std::vector<Occasion> occ;
    for (int i = 0; i < 40; ++i) {
        occ.push_back({"EXT", "o" + std::to_string(i % 38)});
    }
    flag_duplicates(occ);
    auto_accept(occ, 35);
    const auto accepted = accepted_occasions(occ, 35);
    ASSERT_EQ(accepted.size(), 35u);
    EXPECT_EQ(accepted.back().text, "o34");
    for (const auto& o : accepted) {
        EXPECT_FALSE(o.duplicate);
    }
}

TEST(Occasions, AcceptedSetIsValidated) {
    std::vector<Occasion> occ{{"EXT", "At parties", OccasionSource::Curated, true},
                              {"EXT", "at parties", OccasionSource::Curated, true}};
    EXPECT_THROW((void)accepted_occasions(occ, 35), ValidationError);
    std::vector<Occasion> many;
    for (int i = 0; i < 36; ++i) {
        many.push_back({"EXT", "o" + std::to_string(i), OccasionSource::Curated, true});
    }
    EXPECT_THROW((void)accepted_occasions(many, 35), ValidationError);
}

TEST(ReviewFile, RoundTripAndPendingRefusal) {
    TempDir dir;
    std::vector<Occasion> occ{{"EXT", "at parties"}, {"EXT", "at work"}, {"EXT", "At parties"}};
    flag_duplicates(occ);
    write_review_file(dir / "r.tsv", occ);
    auto entries = read_review_file(dir / "r.tsv");
    ASSERT_EQ(entries.size(), 3u);
    EXPECT_EQ(entries[0].mark, ReviewMark::Pending);
    EXPECT_EQ(entries[2].mark, ReviewMark::Reject);
    try {
        (void)apply_review(entries, dir / "r.tsv");
        FAIL();
    } catch (const CurationRequiredError& e) {
        EXPECT_EQ(e.review_file(), dir / "r.tsv");
        EXPECT_NE(std::string(e.what()).find("r.tsv"), std::string::npos);
    }
    entries[0].mark = ReviewMark::Accept;
    entries[1].mark = ReviewMark::Reject;
    const auto applied = apply_review(entries, dir / "r.tsv");
    const auto accepted = accepted_occasions(applied);
    ASSERT_EQ(accepted.size(), 1u);
    EXPECT_EQ(accepted[0].text, "at parties");
}

TEST(ReviewFile, HandEditedFile) {
    TempDir dir;
    write_text_file_atomic(dir / "r.tsv", "# reviewed\ny\tEXT\tat parties\nn\tEXT\tin bed\n\ny\tEXT\tat work\n");
    const auto entries = read_review_file(dir / "r.tsv");
    ASSERT_EQ(entries.size(), 3u);
    EXPECT_EQ(accepted_occasions(apply_review(entries, dir / "r.tsv")).size(), 2u);
    write_text_file_atomic(dir / "bad.tsv", "x\tEXT\tat parties\n");
    EXPECT_THROW((void)read_review_file(dir / "bad.tsv"), Error);
}

std::vector<Occasion> world_occasions(const std::string& dim, std::size_t n = 35) {
    std::vector<Occasion> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({dim, "in situation " + to_lower_ascii(dim) + " " + std::to_string(i),
                       OccasionSource::Generated, true});
    }
    return out;
}

TEST(PseudoDataset, SevenHundredBalancedExamples) {
    auto world = testing::behavior_world({"s"}, {"CONS"});
    const auto templates = testing::behavior_templates();
    const auto occ = world_occasions("CONS");
    const auto ds = generate_pseudo_dataset(*world.gateway, "generator", templates.pseudo, occ, "CONS",
                                            "conscientious");
    EXPECT_EQ(ds.examples.size(), 700u);
    EXPECT_TRUE(ds.missing.empty());
    std::map<std::string, std::pair<int, int>> balance;
    for (const auto& e : ds.examples) {
        auto& b = balance[e.occasion];
        (e.polarity == Polarity::Positive ? b.first : b.second) += 1;
    }
    ASSERT_EQ(balance.size(), 35u);
    for (const auto& [o, b] : balance) {
        EXPECT_EQ(b.first, 10) << o;
        EXPECT_EQ(b.second, 10) << o;
    }
    EXPECT_NE(ds.examples.front().description.find("is conscientious"), std::string::npos);
}

TEST(PseudoDataset, EmptyGenerationIsRetriedThenMissing) {
    const auto templates = testing::behavior_templates();
    const std::vector<Occasion> occ{{"EXT", "at parties", OccasionSource::Curated, true}};
    auto fx = std::make_shared<ScriptedFixture>();
    auto prompt_for = [&](const char* word) {
        return render_prompt(templates.pseudo,
                             {{"POLARITY", word}, {"FACTOR", "extraverted"}, {"OCCASION", "at parties"}});
    };
    // Positive slot 0 is empty once and recovers on the retry (call 0 + per_polarity).
    fx->add_for_prompt(prompt_for("is"), 1.0, 0, "");
    fx->add_for_prompt(prompt_for("is"), 1.0, 2, "recovered");
    fx->add_for_prompt(prompt_for("is"), 1.0, 1, "text y1");
    // Negative slot 1 stays empty.
    fx->add_for_prompt(prompt_for("is not"), 1.0, 0, "text n0");
    fx->add_for_prompt(prompt_for("is not"), 1.0, 1, "   ");
    fx->add_for_prompt(prompt_for("is not"), 1.0, 3, "");
    auto gw = testing::scripted_gateway({{"generator", fx}});
    PseudoDatasetOptions opts;
    opts.per_polarity = 2;
    const auto ds = generate_pseudo_dataset(*gw, "generator", templates.pseudo, occ, "EXT", "extraverted", opts);
    EXPECT_EQ(ds.examples.size(), 3u);
    ASSERT_EQ(ds.missing.size(), 1u);
    EXPECT_EQ(ds.missing[0].polarity, Polarity::Negative);
    EXPECT_EQ(ds.missing[0].slot, 1);
    EXPECT_EQ(ds.examples[0].description, "recovered");
}

TEST(PseudoDataset, ResumesFromFile) {
    TempDir dir;
    auto world = testing::behavior_world({"s"}, {"EXT"});
    const auto templates = testing::behavior_templates();
    const auto occ = world_occasions("EXT", 3);
    PseudoDatasetOptions opts;
    opts.dataset_file = dir / "dataset_EXT.jsonl";
    const auto first = generate_pseudo_dataset(*world.gateway, "generator", templates.pseudo, occ, "EXT",
                                               "extraverted", opts);
    EXPECT_EQ(first.generated_now, 60u);
    const auto second = generate_pseudo_dataset(*world.gateway, "generator", templates.pseudo, occ, "EXT",
                                                "extraverted", opts);
    EXPECT_EQ(second.generated_now, 0u);
    EXPECT_EQ(second.skipped, 60u);
    EXPECT_EQ(second.examples, first.examples);
    const auto stored = read_pseudo_dataset(opts.dataset_file);
    EXPECT_EQ(stored.size(), 60u);
    const auto line = nlohmann::json::parse(read_text_file(opts.dataset_file).substr(
        0, read_text_file(opts.dataset_file).find('\n')));
    EXPECT_EQ(line.at("polarity"), "y");
    EXPECT_TRUE(line.contains("dimension"));
    EXPECT_TRUE(line.contains("occasion"));
    EXPECT_TRUE(line.contains("description"));
}

TEST(Elicitation, FourHundredFiftyFiveDescriptions) {
    auto world = testing::behavior_world({"s"}, {"EXT"});
    const auto templates = testing::behavior_templates();
    const auto occ = world_occasions("EXT");
    const ElicitationPlan plan;
    EXPECT_EQ(planned_description_count(plan, 35), 455u);
    const auto e = elicit_behaviors(*world.gateway, "s", templates.elicitation, occ, "EXT", plan);
    EXPECT_EQ(e.descriptions.size(), 455u);
    EXPECT_TRUE(e.failures.empty());
}

TEST(Elicitation, GreedyOnlySingleOccasion) {
    auto world = testing::behavior_world({"s"}, {"EXT"});
    const auto templates = testing::behavior_templates();
    ElicitationPlan plan;
    plan.temperatures = {0.0};
    EXPECT_EQ(planned_description_count(plan, 1), 1u);
    const auto e = elicit_behaviors(*world.gateway, "s", templates.elicitation, world_occasions("EXT", 1), "EXT", plan);
    ASSERT_EQ(e.descriptions.size(), 1u);
    EXPECT_EQ(e.descriptions[0].subject, (Subject{"s", 0.0}));
}

TEST(Elicitation, FailuresAreRecorded) {
    auto world = testing::behavior_world({"s"}, {"EXT"});
    const auto templates = testing::behavior_templates();
    std::vector<Occasion> occ{{"EXT", "somewhere unscripted", OccasionSource::Curated, true}};
    const auto e = elicit_behaviors(*world.gateway, "s", templates.elicitation, occ, "EXT");
    EXPECT_TRUE(e.descriptions.empty());
    EXPECT_EQ(e.failures.size(), 13u);
}

ClassifierVerdict v(double p) {
    return make_verdict(p >= 0.5 ? Polarity::Positive : Polarity::Negative, p, "t");
}

TEST(Crs, IndicatorAndProbability) {
    const std::vector<ClassifierVerdict> verdicts{v(0.9), v(0.8), v(0.7), v(0.4), v(0.3), v(0.2)};
    EXPECT_DOUBLE_EQ(crs(verdicts, CrsMode::Indicator), 0.5);
    EXPECT_NEAR(crs(verdicts, CrsMode::Probability), 0.55, 1e-12);
    EXPECT_EQ(crs(std::vector<ClassifierVerdict>{v(0.6)}, CrsMode::Indicator), 1.0);
    EXPECT_EQ(crs(std::vector<ClassifierVerdict>{v(0.1)}, CrsMode::Indicator), 0.0);
    EXPECT_THROW((void)crs(std::vector<ClassifierVerdict>{}, CrsMode::Indicator), ContractViolation);
}

TEST(Crs, ModeNames) {
    EXPECT_EQ(to_string(CrsMode::Indicator), "indicator");
    EXPECT_EQ(parse_crs_mode("probability"), CrsMode::Probability);
    EXPECT_THROW((void)parse_crs_mode("vote"), ValidationError);
}

TEST(CriterionScores, PerSubjectPooledAndUnparsed) {
    std::vector<VerdictRecord> records;
    auto add = [&](const std::string& ep, double t, std::optional<double> p) {
        BehaviorDescription d{{ep, t}, "EXT", "o", static_cast<int>(records.size()), "p", "x"};
        records.push_back({d, p ? std::optional(v(*p)) : std::nullopt});
    };
    add("a", 0.5, 0.9);
    add("a", 0.5, 0.2);
    add("a", 1.0, 0.7);
    add("a", 1.0, std::nullopt);
    const auto scores = criterion_scores(records, CrsMode::Indicator);
    ASSERT_EQ(scores.size(), 3u);
    EXPECT_EQ(scores[0].label(), "a@0.5");
    EXPECT_DOUBLE_EQ(scores[0].value, 0.5);
    EXPECT_EQ(scores[1].label(), "a@1");
    EXPECT_DOUBLE_EQ(scores[1].value, 1.0);
    EXPECT_EQ(scores[1].unparsed, 1u);
    EXPECT_EQ(scores[2].label(), "a");
    EXPECT_FALSE(scores[2].temperature.has_value());
    EXPECT_NEAR(scores[2].value, 2.0 / 3.0, 1e-12);
    EXPECT_EQ(scores[2].unparsed, 1u);
    const auto series = criterion_series(scores);
    ASSERT_TRUE(series.contains("EXT"));
    EXPECT_EQ(series.at("EXT").scale_id, "behavior");
    EXPECT_EQ(series.at("EXT").points.size(), 2u);
}

TEST(RunBehavior, RefusesUncuratedOccasions) {
    TempDir dir;
    auto world = testing::behavior_world({"s"}, {"EXT"});
    try {
        (void)run_behavior(world.spec, testing::behavior_templates(), *world.gateway, *world.classifier,
                           dir / "b");
        FAIL();
    } catch (const CurationRequiredError& e) {
        EXPECT_EQ(e.review_file(), dir / "b" / "occasions_EXT.tsv");
    }
    EXPECT_EQ(read_review_file(dir / "b" / "occasions_EXT.tsv").size(), 40u);
}

TEST(RunBehavior, EndToEndMatchesHandCounts) {
    TempDir dir;
    auto world = testing::behavior_world({"s1", "s2"}, {"EXT", "AGR"});
    const auto templates = testing::behavior_templates();
    const auto result =
        run_behavior(world.spec, templates, *world.gateway, *world.classifier, dir / "b", {true});
    ASSERT_EQ(result.dimensions.size(), 2u);
    for (const auto& d : result.dimensions) {
        EXPECT_EQ(d.occasions, 35u);
        EXPECT_EQ(d.pseudo_examples, 700u);
        EXPECT_EQ(d.missing_examples, 0u);
        EXPECT_EQ(d.descriptions, 910u);
    }
    EXPECT_EQ(result.failures, 0u);
    EXPECT_EQ(result.unparsed, 0u);
    std::size_t checked = 0;
    for (const auto& s : result.scores) {
        if (!s.temperature) {
            continue;
        }
        const auto& [pos, total] = world.expected_counts.at({s.endpoint_id, *s.temperature, s.dimension_code});
        EXPECT_NEAR(s.value, static_cast<double>(pos) / total, 1e-12) << s.label();
        EXPECT_EQ(s.n_descriptions, static_cast<std::size_t>(total));
        ++checked;
    }
    EXPECT_EQ(checked, 2u * 5u * 2u);

    const auto store = BehaviorStore::open(dir / "b");
    EXPECT_EQ(store.id(), result.store_id);
    EXPECT_EQ(store.verdicts().size(), 1820u);
    const auto prob = store.scores(CrsMode::Probability);
    for (const auto& s : prob) {
        if (s.temperature) {
            const auto key = std::tuple{s.endpoint_id, *s.temperature, s.dimension_code};
            EXPECT_NEAR(s.value, world.expected_p_sum.at(key) / world.expected_counts.at(key).second, 1e-12);
        }
    }
    const auto review = read_review_file(dir / "b" / "occasions_EXT.tsv");
    EXPECT_EQ(std::count_if(review.begin(), review.end(), [](const ReviewEntry& e) { return e.mark == ReviewMark::Accept; }),
              35);
}

TEST(RunBehavior, DeterministicAndResumable) {
    TempDir dir;
    const auto templates = testing::behavior_templates();
    auto w1 = testing::behavior_world({"s"}, {"OPEN"});
    const auto r1 = run_behavior(w1.spec, templates, *w1.gateway, *w1.classifier, dir / "one", {true});
    auto w2 = testing::behavior_world({"s"}, {"OPEN"});
    const auto r2 = run_behavior(w2.spec, templates, *w2.gateway, *w2.classifier, dir / "two", {true});
    EXPECT_EQ(r1.store_id, r2.store_id);
    for (const auto* f : {"behaviors.jsonl", "verdicts.jsonl", "dataset_OPEN.jsonl", "occasions_OPEN.tsv", "crs.json"}) {
        EXPECT_EQ(read_text_file(dir / "one" / f), read_text_file(dir / "two" / f)) << f;
    }
    auto w3 = testing::behavior_world({"s"}, {"OPEN"});
    const auto r3 = run_behavior(w3.spec, templates, *w3.gateway, *w3.classifier, dir / "one", {true});
    EXPECT_EQ(read_text_file(dir / "one" / "behaviors.jsonl"), read_text_file(dir / "two" / "behaviors.jsonl"));
    ASSERT_EQ(r3.scores.size(), r1.scores.size());
    for (std::size_t i = 0; i < r1.scores.size(); ++i) {
        EXPECT_EQ(r3.scores[i].value, r1.scores[i].value);
    }
}

TEST(RunBehavior, ChangedConfigurationIsRejected) {
    TempDir dir;
    const auto templates = testing::behavior_templates();
    auto w = testing::behavior_world({"s"}, {"OPEN"});
    (void)run_behavior(w.spec, templates, *w.gateway, *w.classifier, dir / "b", {true});
    auto changed = w.spec;
    changed.mode = CrsMode::Probability;
    EXPECT_THROW((void)run_behavior(changed, templates, *w.gateway, *w.classifier, dir / "b", {true}),
                 ValidationError);
}

TEST(RunBehavior, CuratedOccasionsBypassGeneration) {
    TempDir dir;
    const auto templates = testing::behavior_templates();
    auto w = testing::behavior_world({"s"}, {"EXT"});
    w.spec.curated_occasions["EXT"] = {"in situation ext 3", "in situation ext 7"};
    const auto r = run_behavior(w.spec, templates, *w.gateway, *w.classifier, dir / "b");
    ASSERT_EQ(r.dimensions.size(), 1u);
    EXPECT_EQ(r.dimensions[0].occasions, 2u);
    EXPECT_EQ(r.dimensions[0].descriptions, 26u);
}

}  // namespace
}  // namespace psyeval
