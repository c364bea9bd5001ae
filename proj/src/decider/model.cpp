#include "cid/decider/model.hpp"

#include "cid/error.hpp"
#include "cid/simd/kernels.hpp"
#include "cid/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cid::decider {

namespace {

constexpr double kMinStd = 1e-12;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double target_of(Label l) { return l == Label::Incorrect ? 1.0 : -1.0; }

}  // namespace

Scaler Scaler::fit(const Dataset& d) {
    if (d.size() < 2) throw PreconditionError("standardization needs at least 2 examples");
    d.validate();
    const std::size_t dim = d.dim();
    const double n = static_cast<double>(d.size());
    Scaler s;
    s.means.assign(dim, 0.0);
    s.stds.assign(dim, 0.0);
    for (const auto& e : d.examples) {
        for (std::size_t j = 0; j < dim; ++j) s.means[j] += e.features[j];
    }
    for (double& m : s.means) m /= n;
    for (const auto& e : d.examples) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double c = e.features[j] - s.means[j];
            s.stds[j] += c * c;
        }
    }
    for (std::size_t j = 0; j < dim; ++j) {
        s.stds[j] = std::sqrt(s.stds[j] / n);
        if (!(s.stds[j] > kMinStd * std::max(1.0, std::abs(s.means[j])))) {
            s.dropped.push_back(j);
            s.stds[j] = 1.0;
        }
    }
    return s;
}

bool Scaler::is_dropped(std::size_t i) const noexcept {
    return std::find(dropped.begin(), dropped.end(), i) != dropped.end();
}

std::vector<double> Scaler::apply(std::span<const double> raw) const {
    if (raw.size() != means.size()) {
        throw PreconditionError("scaler expects " + std::to_string(means.size()) + " features, got " +
                                std::to_string(raw.size()));
    }
    std::vector<double> out(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) out[j] = (raw[j] - means[j]) / stds[j];
    for (auto j : dropped) out[j] = 0.0;
    return out;
}

std::vector<double> Scaler::unapply(std::span<const double> scaled) const {
    if (scaled.size() != means.size()) throw PreconditionError("scaler dimension mismatch");
    std::vector<double> out(scaled.size());
    for (std::size_t j = 0; j < scaled.size(); ++j) out[j] = scaled[j] * stds[j] + means[j];
    for (auto j : dropped) out[j] = means[j];
    return out;
}

Dataset apply_scaler(const Scaler& s, const Dataset& d) {
    Dataset out{d.feature_names, {}};
    out.examples.reserve(d.size());
    for (const auto& e : d.examples) out.examples.push_back({s.apply(e.features), e.label, e.explanation_ref});
    return out;
}

Standardized standardize(const Dataset& d) {
    auto scaler = Scaler::fit(d);
    return {apply_scaler(scaler, d), std::move(scaler)};
}

std::string_view model_kind_name(ModelKind k) noexcept {
    return k == ModelKind::LogisticRegression ? "lr" : "svm";
}

ModelKind parse_model_kind(std::string_view s) {
    const auto lower = text::to_lower_ascii(text::trim(s));
    if (lower == "lr" || lower == "logistic" || lower == "logisticregression") return ModelKind::LogisticRegression;
    if (lower == "svm" || lower == "linearsvm") return ModelKind::LinearSvm;
    throw PreconditionError("unknown model kind '" + std::string(s) + "' (expected lr or svm)");
}

double DetectionModel::decision(std::span<const double> raw_features) const {
    const auto x = scaler.apply(raw_features);
    return simd::dot(weights, x) + bias;
}

DetectionModel train(const Dataset& d, ModelKind kind, const Hyperparams& hp, std::uint64_t seed) {
    const std::size_t n_pos = d.count(Label::Incorrect);
    const std::size_t n_neg = d.count(Label::Correct);
    if (n_pos == 0 || n_neg == 0) throw TrainingError("training data must contain both classes");
    if (hp.epochs < 1 || !(hp.learning_rate > 0.0) || !(hp.l2 >= 0.0)) {
        throw PreconditionError("invalid hyperparameters");
    }

    auto [scaled, scaler] = standardize(d);
    const std::size_t dim = d.dim();
    const std::size_t n = d.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<double> y(n);
    std::vector<double> c(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = target_of(scaled.examples[i].label);
        if (hp.class_weighting) {
            const double count = static_cast<double>(y[i] > 0 ? n_pos : n_neg);
            c[i] = static_cast<double>(n) / (2.0 * count);
        }
    }

    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    std::vector<double> grad(dim);
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& x = scaled.examples[i].features;
            const double margin = y[i] * (simd::dot(w, x) + b);
            double coef = 0.0;  // d loss_i / d f_i
            if (kind == ModelKind::LogisticRegression) {
                coef = -y[i] * sigmoid(-margin);
            } else if (margin < 1.0) {
                coef = -y[i];
            }
            if (coef != 0.0) {
                const double scaled_coef = c[i] * coef * inv_n;
                simd::axpy(scaled_coef, x, grad);
                grad_b += scaled_coef;
            }
        }
        simd::axpy(hp.l2 * inv_n, w, grad);
        simd::axpy(-hp.learning_rate, grad, w);
        b -= hp.learning_rate * grad_b;
    }

    DetectionModel m;
    m.kind = kind;
    m.feature_names = d.feature_names;
    m.weights = std::move(w);
    m.bias = b;
    m.scaler = std::move(scaler);
    m.hyperparams = hp;
    m.seed = seed;
    for (double v : m.weights) {
        if (!std::isfinite(v)) throw TrainingError("training diverged (non-finite weight)");
    }
    return m;
}

Prediction predict(const DetectionModel& model, std::span<const double> raw_features) {
    const double score = model.decision(raw_features);
    return Prediction{score >= 0.0 ? Label::Incorrect : Label::Correct, score};
}

nlohmann::json to_json(const DetectionModel& m) {
    return {{"schema_version", 1},
            {"kind", model_kind_name(m.kind)},
            {"feature_names", m.feature_names},
            {"weights", m.weights},
            {"bias", m.bias},
            {"scaler", {{"means", m.scaler.means}, {"stds", m.scaler.stds}, {"dropped", m.scaler.dropped}}},
            {"hyperparams",
             {{"l2", m.hyperparams.l2},
              {"learning_rate", m.hyperparams.learning_rate},
              {"epochs", m.hyperparams.epochs},
              {"class_weighting", m.hyperparams.class_weighting}}},
            {"seed", m.seed}};
}

DetectionModel model_from_json(const nlohmann::json& j, const std::string& origin) {
    try {
        if (j.at("schema_version").get<int>() != 1) throw SchemaError(origin, "unsupported model schema_version");
        DetectionModel m;
        m.kind = parse_model_kind(j.at("kind").get<std::string>());
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        const auto& s = j.at("scaler");
        m.scaler.means = s.at("means").get<std::vector<double>>();
        m.scaler.stds = s.at("stds").get<std::vector<double>>();
        m.scaler.dropped = s.at("dropped").get<std::vector<std::size_t>>();
        const auto& hp = j.at("hyperparams");
        m.hyperparams.l2 = hp.at("l2").get<double>();
        m.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
        m.hyperparams.epochs = hp.at("epochs").get<int>();
        m.hyperparams.class_weighting = hp.at("class_weighting").get<bool>();
        m.seed = j.at("seed").get<std::uint64_t>();
        const auto dim = m.feature_names.size();
        if (m.weights.size() != dim || m.scaler.means.size() != dim || m.scaler.stds.size() != dim) {
            throw SchemaError(origin, "weights and scaler must match the feature count");
        }
        for (double v : m.weights) {
            if (!std::isfinite(v)) throw SchemaError(origin, "non-finite weight");
        }
        for (double v : m.scaler.stds) {
            if (!(v > 0.0)) throw SchemaError(origin, "scaler stddev must be positive");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(origin, e.what());
    } catch (const PreconditionError& e) {
        throw SchemaError(origin, e.what());
    }
}

void save_model(const std::filesystem::path& path, const DetectionModel& m) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + path.string());
    out << text::canonical_json(to_json(m));
}

DetectionModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot read model " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    auto j = nlohmann::json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw SchemaError(path.string(), "model file is not valid JSON");
    return model_from_json(j, path.string());
}

}  // namespace cid::decider
