#include "cid/decider/evaluation.hpp"
#include "cid/decider/features.hpp"
#include "cid/error.hpp"

#include "decider_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

using namespace cid;
using namespace cid::decider;
namespace ch = cid::challenger;

namespace {

Confusion confusion(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    Confusion c;
    c.tp = tp;
    c.fp = fp;
    c.fn = fn;
    c.tn = tn;
    return c;
}

Dataset canonical_synthetic(std::size_t n, std::uint64_t seed) {
    auto d = synthetic_dataset(n, 24, 0.5, seed);
    const auto names = feature_names();
    d.feature_names.assign(names.begin(), names.end());
    return d;
}

}  // namespace

TEST(Metrics, HandComputedExample) {
    const auto m = compute_metrics(confusion(2, 1, 1, 6));
    EXPECT_DOUBLE_EQ(m.incorrect.precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.incorrect.recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.incorrect.f1, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.8);
    EXPECT_DOUBLE_EQ(m.correct.precision, 6.0 / 7.0);
}

TEST(Metrics, PerfectAndDegenerate) {
    const auto perfect = compute_metrics(confusion(5, 0, 0, 5));
    EXPECT_EQ(perfect.accuracy, 1.0);
    EXPECT_EQ(perfect.macro.f1, 1.0);

    // Majority-class predictor on an 81/19 split.
    const auto majority = compute_metrics(confusion(0, 0, 19, 81));
    EXPECT_DOUBLE_EQ(majority.accuracy, 0.81);
    EXPECT_EQ(majority.incorrect.precision, 0.0);
    EXPECT_EQ(majority.incorrect.f1, 0.0);

    EXPECT_THROW(compute_metrics(Confusion{}), PreconditionError);
}

TEST(Metrics, ConfusionIdentitiesOnRandomMatrices) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::size_t> u(0, 50);
    for (int it = 0; it < 1000; ++it) {
        const auto c = confusion(u(rng), u(rng), u(rng), u(rng) + 1);
        const auto m = compute_metrics(c);
        const double n = static_cast<double>(c.total());
        EXPECT_DOUBLE_EQ(m.accuracy, static_cast<double>(c.tp + c.tn) / n);
        const double p = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
        const double r = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
        EXPECT_DOUBLE_EQ(m.incorrect.precision, p);
        EXPECT_DOUBLE_EQ(m.incorrect.recall, r);
        EXPECT_NEAR(m.incorrect.f1, p + r > 0 ? 2 * p * r / (p + r) : 0.0, 1e-12);
        EXPECT_NEAR(m.macro.f1, (m.incorrect.f1 + m.correct.f1) / 2.0, 1e-12);
        const double pos = static_cast<double>(c.tp + c.fn), neg = static_cast<double>(c.fp + c.tn);
        EXPECT_NEAR(m.weighted.recall, (pos * m.incorrect.recall + neg * m.correct.recall) / n, 1e-12);
        // Support-weighted recall is accuracy.
        EXPECT_NEAR(m.weighted.recall, m.accuracy, 1e-12);
        for (double v : {m.incorrect.f1, m.correct.f1, m.macro.f1, m.weighted.f1}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Folds, TenFoldsOver341Examples) {
    std::vector<Label> labels;
    for (std::size_t i = 0; i < 341; ++i) labels.push_back(i < 64 ? Label::Incorrect : Label::Correct);
    const auto folds = stratified_folds(labels, 10, 42);
    ASSERT_EQ(folds.size(), 10u);
    std::multiset<std::size_t> sizes;
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (const auto& f : folds) {
        sizes.insert(f.size());
        total += f.size();
        seen.insert(f.begin(), f.end());
    }
    EXPECT_EQ(total, 341u);
    EXPECT_EQ(seen.size(), 341u);
    EXPECT_EQ(sizes.count(35), 1u);
    EXPECT_EQ(sizes.count(34), 9u);

    std::vector<std::size_t> pos;
    for (const auto& f : folds) {
        pos.push_back(static_cast<std::size_t>(
            std::count_if(f.begin(), f.end(), [&](std::size_t i) { return labels[i] == Label::Incorrect; })));
    }
    EXPECT_LE(*std::max_element(pos.begin(), pos.end()) - *std::min_element(pos.begin(), pos.end()), 1u);
    EXPECT_EQ(folds, stratified_folds(labels, 10, 42));
    EXPECT_NE(folds, stratified_folds(labels, 10, 43));
}

TEST(Folds, KMustFitTheMinorityClass) {
    std::vector<Label> labels(20, Label::Correct);
    labels[0] = labels[1] = labels[2] = Label::Incorrect;
    EXPECT_NO_THROW(stratified_folds(labels, 3, 1));
    EXPECT_THROW(stratified_folds(labels, 4, 1), PreconditionError);
    EXPECT_THROW(stratified_folds(labels, 1, 1), PreconditionError);
}

TEST(CrossValidation, PredictionsComeFromHeldOutFolds) {
    const auto d = synthetic_dataset(100, 6, 0.3, 21);
    const auto cv = cross_validate(d, ModelKind::LinearSvm, 5, 1);
    ASSERT_EQ(cv.predictions.size(), d.size());
    EXPECT_EQ(cv.metrics.confusion.total(), d.size());
    Confusion c;
    for (std::size_t i = 0; i < d.size(); ++i) c.add(d.examples[i].label, cv.predictions[i].label);
    EXPECT_EQ(c, cv.metrics.confusion);
    for (const auto& fold : cv.folds) {
        Dataset train_split{d.feature_names, {}};
        std::set<std::size_t> held(fold.begin(), fold.end());
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (!held.count(i)) train_split.examples.push_back(d.examples[i]);
        }
        const auto m = train(train_split, ModelKind::LinearSvm);
        for (auto i : fold) EXPECT_EQ(predict(m, d.examples[i].features).score, cv.predictions[i].score);
    }
}

TEST(Ablation, KeptFeatureCounts) {
    EXPECT_EQ(kept_features({}).size(), 24u);
    EXPECT_EQ(kept_features({{}, ch::Stage::Mutated}).size(), 12u);
    EXPECT_EQ(kept_features({{}, ch::Stage::Basic}).size(), 12u);
    // Dropping one kind removes, per stage, 1 E-R, 2 R-R pairs, 1 Q-R and 2 Q-Q pairs.
    for (auto k : ch::kAllKinds) EXPECT_EQ(kept_features({{k}, std::nullopt}).size(), 12u);
    EXPECT_EQ(kept_features({{ch::ChallengeKind::Why, ch::ChallengeKind::How}, std::nullopt}).size(), 4u);
    for (auto i : kept_features({{}, ch::Stage::Mutated})) EXPECT_EQ(feature_specs()[i].stage, ch::Stage::Basic);
}

TEST(Ablation, DroppingNothingMatchesCrossValidation) {
    const auto d = canonical_synthetic(120, 4);
    const auto a = ablate(d, {}, ModelKind::LinearSvm, 10, 42);
    const auto b = cross_validate(d, ModelKind::LinearSvm, 10, 42);
    EXPECT_EQ(a.metrics, b.metrics);
    ASSERT_EQ(a.predictions.size(), b.predictions.size());
    for (std::size_t i = 0; i < a.predictions.size(); ++i) EXPECT_EQ(a.predictions[i].score, b.predictions[i].score);
}

TEST(Ablation, EverythingDroppedIsAnError) {
    const auto d = canonical_synthetic(40, 4);
    AblationSpec all;
    all.drop_kinds = {ch::ChallengeKind::Why, ch::ChallengeKind::How, ch::ChallengeKind::Really};
    EXPECT_THROW(ablate(d, all, ModelKind::LinearSvm), PreconditionError);
    EXPECT_EQ(ablate(d, {{}, ch::Stage::Basic}, ModelKind::LinearSvm, 5).feature_count, 12u);
}

TEST(CrossValidation, SyntheticSeparableScoresHigh) {
    const auto d = synthetic_dataset(200, 24, 1.0, 42);
    for (auto kind : {ModelKind::LogisticRegression, ModelKind::LinearSvm}) {
        EXPECT_GE(cross_validate(d, kind).metrics.macro.f1, 0.95) << model_kind_name(kind);
    }
}
