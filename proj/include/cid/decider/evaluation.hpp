#pragma once
// Metrics, stratified k-fold cross-validation and feature ablations.

#include "cid/challenger.hpp"
#include "cid/decider/dataset.hpp"
#include "cid/decider/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cid::decider {

/// Positive class is Incorrect.
struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
    void add(Label truth, Label predicted) noexcept;
    bool operator==(const Confusion&) const = default;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const ClassMetrics&) const = default;
};

struct ModelMetrics {
    ClassMetrics incorrect;  // positive class
    ClassMetrics correct;
    ClassMetrics macro;      // unweighted mean of the two classes
    ClassMetrics weighted;   // support-weighted mean
    double accuracy = 0.0;
    Confusion confusion;

    bool operator==(const ModelMetrics&) const = default;
};

/// Zero denominators give 0 for that precision, recall or F1.
/// Throws PreconditionError on an empty matrix.
ModelMetrics compute_metrics(const Confusion& c);

nlohmann::json to_json(const ModelMetrics& m);

/// Fold index lists. Each class is shuffled with `seed` (mt19937_64) and the
/// classes are dealt round-robin, so fold sizes and per-class counts each
/// differ by at most one. Requires 2 <= k <= size of the minority class.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<Label>& labels, std::size_t k,
                                                       std::uint64_t seed);

struct CvResult {
    ModelMetrics metrics;
    std::vector<std::vector<std::size_t>> folds;
    /// One per example, in dataset order.
    std::vector<Prediction> predictions;
    std::size_t feature_count = 0;
};

/// Metrics come from the confusion matrix pooled over all test folds.
CvResult cross_validate(const Dataset& d, ModelKind kind, std::size_t k = 10, std::uint64_t seed = 42,
                        const Hyperparams& hp = {});

struct AblationSpec {
    std::set<challenger::ChallengeKind> drop_kinds;
    std::optional<challenger::Stage> drop_stage;

    std::string describe() const;
};

/// Canonical feature indices that survive the ablation: drop_stage removes
/// that stage's 12 features; drop_kinds removes every feature that involves
/// a question or response of a dropped kind.
std::vector<std::size_t> kept_features(const AblationSpec& spec);

/// Requires the canonical 24 columns. Throws PreconditionError when nothing is left.
CvResult ablate(const Dataset& d, const AblationSpec& spec, ModelKind kind, std::size_t k = 10,
                std::uint64_t seed = 42, const Hyperparams& hp = {});

}  // namespace cid::decider
