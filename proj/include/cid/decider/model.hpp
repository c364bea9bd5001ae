#pragma once
// Standardization and the two linear detection models.

#include "cid/decider/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cid::decider {

/// Per-feature z-scoring fitted on a training split. Features whose
/// population stddev is (numerically) zero are dropped: they scale to 0.
struct Scaler {
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<std::size_t> dropped;

    static Scaler fit(const Dataset& d);
    std::vector<double> apply(std::span<const double> raw) const;
    /// Inverse of apply for every kept feature; dropped features return their mean.
    std::vector<double> unapply(std::span<const double> scaled) const;
    bool is_dropped(std::size_t i) const noexcept;

    bool operator==(const Scaler&) const = default;
};

struct Standardized {
    Dataset data;
    Scaler scaler;
};

/// Requires at least 2 examples. Not idempotent: a second pass re-fits on
/// already-scaled data.
Standardized standardize(const Dataset& d);
Dataset apply_scaler(const Scaler& s, const Dataset& d);

enum class ModelKind { LogisticRegression, LinearSvm };

std::string_view model_kind_name(ModelKind k) noexcept;  // "lr" / "svm"
ModelKind parse_model_kind(std::string_view s);

struct Hyperparams {
    /// Objective: (1/n) sum c_i loss_i + (l2 / 2n) |w|^2, bias unregularized.
    double l2 = 1.0;
    double learning_rate = 0.1;
    int epochs = 2000;
    /// c_i = n / (2 n_class(i)) when on, 1 otherwise.
    bool class_weighting = true;

    bool operator==(const Hyperparams&) const = default;
};

struct DetectionModel {
    ModelKind kind = ModelKind::LinearSvm;
    std::vector<std::string> feature_names;
    std::vector<double> weights;
    double bias = 0.0;
    Scaler scaler;
    Hyperparams hyperparams;
    std::uint64_t seed = 42;

    /// w . scale(x) + b. Positive values point to Incorrect.
    double decision(std::span<const double> raw_features) const;

    bool operator==(const DetectionModel&) const = default;
};

struct Prediction {
    Label label;
    /// Decision value: logit for LR, signed margin for SVM.
    double score;
};

/// Full-batch gradient descent from zero weights on standardized features;
/// LR minimizes log-loss, LinearSvm hinge loss (subgradient). Deterministic.
/// Throws TrainingError when the dataset lacks either class.
DetectionModel train(const Dataset& d, ModelKind kind, const Hyperparams& hp = {}, std::uint64_t seed = 42);

/// Incorrect when the decision value is >= 0 (ties are flagged for review).
Prediction predict(const DetectionModel& model, std::span<const double> raw_features);

nlohmann::json to_json(const DetectionModel& m);
DetectionModel model_from_json(const nlohmann::json& j, const std::string& origin);
void save_model(const std::filesystem::path& path, const DetectionModel& m);
DetectionModel load_model(const std::filesystem::path& path);

}  // namespace cid::decider
