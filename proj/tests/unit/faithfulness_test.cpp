#include "psyeval/error.hpp"
#include "psyeval/faithfulness.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

namespace psyeval {
namespace {

Scale one_dimension_scale(const std::string& id, int items) {
    Scale s;
    s.id = id;
    s.name = id;
    DimensionSpec d{"EXT", "Extraversion", {}};
    for (int i = 1; i <= items; ++i) {
        d.items.push_back({i, "item " + std::to_string(i), Keying::Positive});
    }
    s.dimensions.push_back(d);
    return s;
}

/// Records for one subject: reps[rep][item] keyed scores (positive keying, so letter = score).
void add_subject(std::vector<TrialRecord>& out, const Scale& scale, const Subject& subject,
                 const std::vector<std::vector<int>>& reps) {
    for (std::size_t rep = 0; rep < reps.size(); ++rep) {
        for (std::size_t i = 0; i < reps[rep].size(); ++i) {
            TrialRecord r;
            r.subject = subject;
            r.scale_id = scale.id;
            r.dimension_code = "EXT";
            r.item_ordinal = static_cast<int>(i) + 1;
            r.repetition_index = static_cast<int>(rep);
            r.keyed_score = reps[rep][i];
            r.parsed_choice = std::string(1, static_cast<char>('A' + reps[rep][i] - 1));
            out.push_back(r);
        }
    }
}

TEST(SubjectRetest, HandFixture) {
    const std::vector<std::vector<int>> reps{{1, 2, 3}, {3, 2, 1}};
    EXPECT_NEAR(*subject_retest(reps, true), 0.0, 1e-12);
    EXPECT_NEAR(*subject_retest(reps, false), -1.0, 1e-12);
}

TEST(SubjectRetest, IdenticalRepetitionsGiveOne) {
    const std::vector<std::vector<int>> reps{{1, 4, 2, 5}, {1, 4, 2, 5}, {1, 4, 2, 5}, {1, 4, 2, 5}};
    EXPECT_EQ(*subject_retest(reps, true), 1.0);
    EXPECT_EQ(*subject_retest(reps, false), 1.0);
}

TEST(SubjectRetest, ConstantVectorsAreLeftOut) {
    const std::vector<std::vector<int>> reps{{3, 3, 3}, {3, 3, 3}};
    EXPECT_FALSE(subject_retest(reps).has_value());
    const std::vector<std::vector<int>> mixed{{1, 2, 3}, {3, 3, 3}, {1, 2, 3}};
    // Only pairs among repetitions 0 and 2 are defined, all equal to 1.
    EXPECT_EQ(*subject_retest(mixed), 1.0);
}

TEST(Trc, AveragesSubjectsAndExcludesGreedy) {
    const auto scale = one_dimension_scale("T", 3);
    std::vector<TrialRecord> records;
    add_subject(records, scale, {"a", 0.5}, {{1, 2, 3}, {1, 2, 3}});
    add_subject(records, scale, {"b", 0.5}, {{1, 2, 3}, {2, 1, 2}});
    add_subject(records, scale, {"a", 0.0}, {{5, 1, 5}});
    const auto m = ScoreMatrix::from_records(records, scale);
    const auto with = trc(m, "EXT");
    ASSERT_TRUE(with.value.has_value());
    EXPECT_NEAR(*with.value, 0.75, 1e-12);
    ASSERT_FALSE(with.flags.empty());
    EXPECT_NE(with.flags.front().find("temperature-0"), std::string::npos);
    const auto without = trc(m, "EXT", {false});
    EXPECT_NEAR(*without.value, 0.5, 1e-12);
}

TEST(Trc, NoEligibleSubjects) {
    const auto scale = one_dimension_scale("T", 3);
    std::vector<TrialRecord> records;
    add_subject(records, scale, {"a", 0.0}, {{5, 1, 5}});
    const auto m = ScoreMatrix::from_records(records, scale);
    const auto v = trc(m, "EXT");
    EXPECT_FALSE(v.value.has_value());
    EXPECT_FALSE(v.flags.empty());
}

TEST(Inc, AlphaOverVotedScores) {
    const auto scale = one_dimension_scale("T", 3);
    std::vector<TrialRecord> records;
    add_subject(records, scale, {"a", 0.5}, {{1, 2, 2}});
    add_subject(records, scale, {"b", 0.5}, {{3, 3, 4}});
    add_subject(records, scale, {"c", 0.5}, {{4, 5, 4}});
    add_subject(records, scale, {"d", 0.5}, {{2, 2, 3}});
    const auto m = ScoreMatrix::from_records(records, scale);
    EXPECT_NEAR(*inc(m, "EXT").value, 1.5 * (1 - 3.4375 / 9.1875), 1e-12);
    EXPECT_NEAR(*inc(m, "EXT", AlphaFormula::PrintedRatio).value, 1.5 * 3.4375 / 9.1875, 1e-12);
}

TEST(Inc, ZeroVarianceIsFlagged) {
    const auto scale = one_dimension_scale("T", 2);
    std::vector<TrialRecord> records;
    add_subject(records, scale, {"a", 0.5}, {{1, 5}});
    add_subject(records, scale, {"b", 0.5}, {{5, 1}});
    const auto v = inc(ScoreMatrix::from_records(records, scale), "EXT");
    EXPECT_FALSE(v.value.has_value());
    EXPECT_FALSE(v.flags.empty());
}

ScoreSeries series(const std::string& scale, std::vector<double> values) {
    ScoreSeries s{scale, "EXT", {}};
    for (std::size_t i = 0; i < values.size(); ++i) {
        s.points["m" + std::to_string(i) + "@0.5"] = values[i];
    }
    return s;
}

TEST(Exc, ProportionalAndReversedSeries) {
    const auto x = series("BFM", {2.0, 3.0, 4.5, 1.5});
    EXPECT_NEAR(*exc(x, series("NEO", {4.0, 6.0, 9.0, 3.0})).value, 1.0, 1e-12);
    EXPECT_NEAR(*exc(x, series("NEO", {-2.0, -3.0, -4.5, -1.5})).value, -1.0, 1e-12);
}

TEST(Exc, Preconditions) {
    const auto x = series("BFM", {2.0, 3.0, 4.5});
    EXPECT_THROW((void)exc(x, x), ContractViolation);
    auto other_dim = series("NEO", {1.0, 2.0, 3.0});
    other_dim.dimension_code = "AGR";
    EXPECT_THROW((void)exc(x, other_dim), ContractViolation);
    EXPECT_THROW((void)exc(x, series("NEO", {1.0, 2.0})), ContractViolation);
    const auto two = exc(series("BFM", {1.0, 2.0}), series("NEO", {2.0, 1.0}));
    EXPECT_FALSE(two.value.has_value());
    EXPECT_FALSE(two.flags.empty());
}

TEST(Bc, ConstantCriterionIsUndefined) {
    const auto v = bc(series("BFM", {2.0, 3.0, 4.5}), series("behavior", {0.5, 0.5, 0.5}));
    EXPECT_FALSE(v.value.has_value());
    ASSERT_FALSE(v.flags.empty());
    EXPECT_NE(v.flags.front().find("zero variance"), std::string::npos);
}

TEST(Bc, MinMaxNormalisedCriterionGivesOne) {
    const std::vector<double> x{2.0, 3.0, 4.5, 1.5};
    std::vector<double> c;
    for (double v : x) {
        c.push_back((v - 1.5) / 3.0);
    }
    EXPECT_NEAR(*bc(series("BFM", x), series("behavior", c)).value, 1.0, 1e-12);
    EXPECT_THROW((void)bc(series("BFM", x), series("behavior", {0.1, 0.2, 1.2, 0.0})), ContractViolation);
}

TEST(EvaluateFaithfulness, FillsEveryCell) {
    const auto a = one_dimension_scale("A", 3);
    const auto b = one_dimension_scale("B", 3);
    std::vector<TrialRecord> ra;
    std::vector<TrialRecord> rb;
    const std::vector<std::vector<int>> p1{{1, 2, 3}, {1, 2, 3}};
    const std::vector<std::vector<int>> p2{{3, 4, 3}, {3, 4, 3}};
    const std::vector<std::vector<int>> p3{{5, 5, 4}, {5, 5, 4}};
    add_subject(ra, a, {"x", 0.5}, p1);
    add_subject(ra, a, {"y", 0.5}, p2);
    add_subject(ra, a, {"z", 0.5}, p3);
    add_subject(rb, b, {"x", 0.5}, p1);
    add_subject(rb, b, {"y", 0.5}, p2);
    add_subject(rb, b, {"z", 0.5}, p3);
    add_subject(rb, b, {"w", 0.5}, p3);
    std::vector<ScaleEvaluation> evals;
    for (auto* pair : {&ra, &rb}) {
        const auto& scale = pair == &ra ? a : b;
        auto m = ScoreMatrix::from_records(*pair, scale);
        RunSummary summary;
        summary.planned = summary.completed = pair->size();
        auto t = score_table(m, scale.id + "-store", summary);
        evals.push_back({std::move(m), std::move(t)});
    }
    CriterionSeries criteria;
    criteria["EXT"] = ScoreSeries{"behavior", "EXT", {{"x@0.5", 0.1}, {"y@0.5", 0.5}, {"z@0.5", 0.9}}};
    const auto report = evaluate_faithfulness(evals, &criteria, {"beh"});
    const auto* cell = report.find("A", "EXT");
    ASSERT_NE(cell, nullptr);
    EXPECT_EQ(*cell->trc.value, 1.0);
    ASSERT_TRUE(cell->exc.contains("B"));
    EXPECT_NEAR(*cell->exc.at("B").value, 1.0, 1e-12);
    ASSERT_TRUE(cell->bc.has_value());
    EXPECT_TRUE(cell->bc->value.has_value());
    const auto* bcell = report.find("B", "EXT");
    ASSERT_NE(bcell, nullptr);
    EXPECT_FALSE(bcell->exc.at("A").flags.empty());
    EXPECT_EQ(report.find("A", "AGR"), nullptr);
    EXPECT_EQ(report.sources, (std::vector<std::string>{"A-store", "B-store", "beh"}));
}

}  // namespace
}  // namespace psyeval
