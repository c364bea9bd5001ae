#include "cid/decider/evaluation.hpp"

#include "cid/decider/features.hpp"
#include "cid/error.hpp"

#include <algorithm>
#include <random>

namespace cid::decider {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ClassMetrics class_metrics(std::size_t hit, std::size_t false_alarm, std::size_t miss) {
    ClassMetrics m;
    m.precision = ratio(hit, hit + false_alarm);
    m.recall = ratio(hit, hit + miss);
    const double s = m.precision + m.recall;
    m.f1 = s == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / s;
    return m;
}

/// Unbiased integer in [0, bound) from raw mt19937_64 output; portable,
/// unlike std::uniform_int_distribution.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[bounded(rng, i)]);
    }
}

nlohmann::json to_json(const ClassMetrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

}  // namespace

void Confusion::add(Label truth, Label predicted) noexcept {
    if (truth == Label::Incorrect) {
        (predicted == Label::Incorrect ? tp : fn)++;
    } else {
        (predicted == Label::Incorrect ? fp : tn)++;
    }
}

ModelMetrics compute_metrics(const Confusion& c) {
    if (c.total() == 0) throw PreconditionError("metrics of an empty confusion matrix");
    ModelMetrics m;
    m.confusion = c;
    m.incorrect = class_metrics(c.tp, c.fp, c.fn);
    m.correct = class_metrics(c.tn, c.fn, c.fp);
    m.macro.precision = (m.incorrect.precision + m.correct.precision) / 2.0;
    m.macro.recall = (m.incorrect.recall + m.correct.recall) / 2.0;
    m.macro.f1 = (m.incorrect.f1 + m.correct.f1) / 2.0;
    const double total = static_cast<double>(c.total());
    const double w_pos = static_cast<double>(c.tp + c.fn) / total;
    const double w_neg = static_cast<double>(c.tn + c.fp) / total;
    m.weighted.precision = w_pos * m.incorrect.precision + w_neg * m.correct.precision;
    m.weighted.recall = w_pos * m.incorrect.recall + w_neg * m.correct.recall;
    m.weighted.f1 = w_pos * m.incorrect.f1 + w_neg * m.correct.f1;
    m.accuracy = static_cast<double>(c.tp + c.tn) / total;
    return m;
}

nlohmann::json to_json(const ModelMetrics& m) {
    return {{"incorrect", to_json(m.incorrect)},
            {"correct", to_json(m.correct)},
            {"macro", to_json(m.macro)},
            {"weighted", to_json(m.weighted)},
            {"accuracy", m.accuracy},
            {"confusion", {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}, {"tn", m.confusion.tn}}}};
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<Label>& labels, std::size_t k,
                                                       std::uint64_t seed) {
    if (k < 2) throw PreconditionError("cross-validation needs k >= 2");
    std::vector<std::size_t> incorrect;
    std::vector<std::size_t> correct;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] == Label::Incorrect ? incorrect : correct).push_back(i);
    }
    const std::size_t minority = std::min(incorrect.size(), correct.size());
    if (k > minority) {
        throw PreconditionError("k = " + std::to_string(k) + " exceeds the minority class size " +
                                std::to_string(minority));
    }
    std::mt19937_64 rng(seed);
    shuffle(correct, rng);
    shuffle(incorrect, rng);

    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t pos = 0;
    for (const auto* cls : {&correct, &incorrect}) {
        for (auto idx : *cls) folds[pos++ % k].push_back(idx);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

CvResult cross_validate(const Dataset& d, ModelKind kind, std::size_t k, std::uint64_t seed, const Hyperparams& hp) {
    d.validate();
    std::vector<Label> labels;
    labels.reserve(d.size());
    for (const auto& e : d.examples) labels.push_back(e.label);

    CvResult out;
    out.folds = stratified_folds(labels, k, seed);
    out.feature_count = d.dim();
    out.predictions.assign(d.size(), Prediction{Label::Correct, 0.0});

    Confusion pooled;
    std::vector<char> in_test(d.size());
    for (std::size_t f = 0; f < out.folds.size(); ++f) {
        std::fill(in_test.begin(), in_test.end(), 0);
        for (auto i : out.folds[f]) in_test[i] = 1;
        Dataset train_set{d.feature_names, {}};
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (!in_test[i]) train_set.examples.push_back(d.examples[i]);
        }
        const auto model = train(train_set, kind, hp, seed + f);
        for (auto i : out.folds[f]) {
            const auto p = predict(model, d.examples[i].features);
            out.predictions[i] = p;
            pooled.add(d.examples[i].label, p.label);
        }
    }
    out.metrics = compute_metrics(pooled);
    return out;
}

std::string AblationSpec::describe() const {
    if (drop_stage) return "without " + std::string(challenger::stage_name(*drop_stage));
    if (drop_kinds.empty()) return "all features";
    std::string out = "without";
    for (auto k : drop_kinds) {
        out += " ";
        out += challenger::kind_word(k);
    }
    return out;
}

std::vector<std::size_t> kept_features(const AblationSpec& spec) {
    std::vector<std::size_t> kept;
    const auto& specs = feature_specs();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (spec.drop_stage && specs[i].stage == *spec.drop_stage) continue;
        const bool touches = std::any_of(spec.drop_kinds.begin(), spec.drop_kinds.end(),
                                         [&](auto k) { return specs[i].involves(k); });
        if (!touches) kept.push_back(i);
    }
    return kept;
}

CvResult ablate(const Dataset& d, const AblationSpec& spec, ModelKind kind, std::size_t k, std::uint64_t seed,
                const Hyperparams& hp) {
    if (d.feature_names != feature_names()) {
        throw PreconditionError("ablation needs the 24 canonical feature columns");
    }
    const auto kept = kept_features(spec);
    if (kept.empty()) throw PreconditionError("ablation '" + spec.describe() + "' leaves no features");
    return cross_validate(d.select(kept), kind, k, seed, hp);
}

}  // namespace cid::decider
