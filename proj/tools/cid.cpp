// cid: interrogate, export features, train, evaluate, ablate, detect, mutate.
//
// Exit codes: 0 success, 1 usage error, 2 pipeline or data error.

#include "cid/challenger.hpp"
#include "cid/config.hpp"
#include "cid/decider/evaluation.hpp"
#include "cid/decider/model.hpp"
#include "cid/error.hpp"
#include "cid/pipeline.hpp"
#include "cid/store.hpp"
#include "cid/text.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cid;

namespace {

struct Common {
    std::string config_path;
    bool json_out = false;
};

config::Config load(const Common& c) {
    return c.config_path.empty() ? config::Config{} : config::load_config(c.config_path);
}

void emit_json(const json& j) { std::cout << j.dump(2) << "\n"; }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::vector<InterrogationRecord> load_records_from(const fs::path& dir) {
    if (fs::is_directory(dir / "records")) return store::BenchmarkStore(dir).load_records();
    if (!fs::is_directory(dir)) throw StoreError("no record directory at " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<InterrogationRecord> out;
    for (const auto& f : files) out.push_back(store::load_record_file(f));
    return out;
}

void print_metrics_rows(const std::string& label, const decider::ModelMetrics& m) {
    const std::pair<const char*, const decider::ClassMetrics*> rows[] = {
        {"incorrect", &m.incorrect}, {"correct", &m.correct}, {"macro", &m.macro}, {"weighted", &m.weighted}};
    for (const auto& [name, cm] : rows) {
        std::printf("%-22s %-10s %9s %9s %9s %9s\n", label.c_str(), name, fmt(cm->precision).c_str(),
                    fmt(cm->recall).c_str(), fmt(cm->f1).c_str(), fmt(m.accuracy).c_str());
    }
}

void print_metrics_header(const char* first) {
    std::printf("%-22s %-10s %9s %9s %9s %9s\n", first, "class", "precision", "recall", "f1", "accuracy");
}

std::vector<decider::ModelKind> kinds_from(const std::string& s) {
    if (s == "all") return {decider::ModelKind::LogisticRegression, decider::ModelKind::LinearSvm};
    return {decider::parse_model_kind(s)};
}

struct Hyper {
    std::optional<double> l2, lr;
    std::optional<int> epochs;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> folds;

    void add_to(CLI::App* app, bool with_folds) {
        app->add_option("--seed", seed, "Random seed (fold shuffling)");
        app->add_option("--l2", l2, "L2 regularization strength")->check(CLI::NonNegativeNumber);
        app->add_option("--learning-rate", lr, "Gradient step size")->check(CLI::PositiveNumber);
        app->add_option("--epochs", epochs, "Full-batch gradient steps")->check(CLI::PositiveNumber);
        if (with_folds) app->add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
    }
    void apply(config::Config& c) const {
        if (l2) c.hyperparams.l2 = *l2;
        if (lr) c.hyperparams.learning_rate = *lr;
        if (epochs) c.hyperparams.epochs = *epochs;
        if (seed) c.seed = *seed;
        if (folds) c.folds = *folds;
    }
};

const std::vector<std::string> kModelKinds{"lr", "svm"};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CID: detect incorrect LLM answers by interrogating the model"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_flag("--json", common.json_out, "Machine-readable JSON on stdout");
    app.fallthrough();

    // interrogate
    auto* interrogate = app.add_subcommand("interrogate", "Run the interrogation over a benchmark file");
    std::string in_path, out_dir, replay, kb_path, backend_kind, cache_dir;
    std::optional<std::size_t> concurrency;
    interrogate->add_option("--input", in_path, "Benchmark JSON")->required()->check(CLI::ExistingFile);
    interrogate->add_option("--out", out_dir, "Output store directory")->required();
    interrogate->add_option("--replay", replay, "Serve replies from recorded transcripts")->check(CLI::ExistingPath);
    interrogate->add_option("--kb", kb_path, "MR1 knowledge base")->check(CLI::ExistingFile);
    interrogate->add_option("--backend", backend_kind, "simulated|openai|replay")
        ->check(CLI::IsMember({"simulated", "mock", "openai", "replay"}));
    interrogate->add_option("--concurrency", concurrency, "Interrogations in flight")->check(CLI::PositiveNumber);
    interrogate->add_option("--embed-cache", cache_dir, "Embedding cache directory");

    // features
    auto* features = app.add_subcommand("features", "Export the labeled feature matrix");
    std::string records_dir, labels_path, features_out;
    features->add_option("--records", records_dir, "Store root or records directory")->required();
    features->add_option("--labels", labels_path, "Label file")->required()->check(CLI::ExistingFile);
    features->add_option("--out", features_out, "Output CSV")->required();

    // train
    auto* train = app.add_subcommand("train", "Train a detection model");
    std::string features_in, model_kind = "svm", model_out;
    Hyper train_hp;
    train->add_option("--features", features_in, "Feature CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--model-kind", model_kind, "svm|lr")->check(CLI::IsMember(kModelKinds));
    train->add_option("--out", model_out, "Model JSON")->required();
    train_hp.add_to(train, false);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Stratified k-fold cross-validation");
    std::string eval_kind = "all";
    Hyper eval_hp;
    evaluate->add_option("--features", features_in, "Feature CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--model-kind", eval_kind, "svm|lr|all")->check(CLI::IsMember({"lr", "svm", "all"}));
    eval_hp.add_to(evaluate, true);

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Cross-validate with feature groups removed");
    std::string drop_stage;
    std::vector<std::string> drop_kinds;
    std::string ablate_kind = "svm";
    Hyper ablate_hp;
    ablate->add_option("--features", features_in, "Feature CSV")->required()->check(CLI::ExistingFile);
    ablate->add_option("--drop-stage", drop_stage, "basic|mutated")->check(CLI::IsMember({"basic", "mutated"}));
    ablate->add_option("--drop-kind", drop_kinds, "why|how|really (repeatable)")
        ->check(CLI::IsMember({"why", "how", "really"}, CLI::ignore_case));
    ablate->add_option("--model-kind", ablate_kind, "svm|lr")->check(CLI::IsMember(kModelKinds));
    ablate_hp.add_to(ablate, true);

    // detect
    auto* detect = app.add_subcommand("detect", "Classify each explanation of a record");
    std::string record_path, model_path;
    detect->add_option("--record", record_path, "Record JSON")->required()->check(CLI::ExistingFile);
    detect->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);

    // mutate
    auto* mutate = app.add_subcommand("mutate", "Mutate one question with a metamorphic relation");
    std::string question, clause, relation = "MR1", kind_name = "why";
    std::vector<std::string> peers;
    mutate->add_option("--question", question, "Basic challenge question")->required();
    mutate->add_option("--kb", kb_path, "Knowledge base JSON")->check(CLI::ExistingFile);
    mutate->add_option("--clause", clause, "Subordinate clause (default: the one for --kind)");
    mutate->add_option("--relation", relation, "MR1|MR2")->check(CLI::IsMember({"MR1", "MR2"}, CLI::ignore_case));
    mutate->add_option("--peer", peers, "Peer question for MR2 (repeatable)");
    mutate->add_option("--kind", kind_name, "why|how|really")
        ->check(CLI::IsMember({"why", "how", "really"}, CLI::ignore_case));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        auto cfg = load(common);
        auto embedder = config::make_embedder(cfg.embedder);

        if (*interrogate) {
            if (!replay.empty()) {
                cfg.backend.kind = "replay";
                cfg.backend.replay = replay;
            }
            if (!backend_kind.empty()) cfg.backend.kind = backend_kind;
            if (!kb_path.empty()) cfg.kb_path = kb_path;
            if (concurrency) cfg.concurrency = *concurrency;
            if (!cache_dir.empty()) {
                cfg.embedder.cache_dir = cache_dir;
                embedder = config::make_embedder(cfg.embedder);
            }
            gateway::Gateway gw(config::make_backend(cfg.backend), config::make_retry_policy(cfg.backend));
            std::optional<challenger::KnowledgeBase> kb;
            if (!cfg.kb_path.empty()) kb = challenger::KnowledgeBase::load(cfg.kb_path, *embedder);
            const auto queries = store::load_benchmark(in_path);
            const store::BenchmarkStore st(out_dir);
            const auto report = pipeline::run_benchmark(queries, config::make_pipeline_config(cfg),
                                                        {gw, *embedder, kb ? &*kb : nullptr}, st);
            st.save_report("batch", report.to_json());
            if (common.json_out) {
                emit_json(report.to_json());
            } else {
                for (const auto& e : report.entries) {
                    std::printf("%-40s %-12s %zu explanations%s%s\n", e.record_id.c_str(),
                                e.status == RecordStatus::Complete ? "complete" : "quarantined", e.explanations,
                                e.failed_stage.empty() ? "" : "  stage=", e.failed_stage.c_str());
                }
                std::printf("completed %zu, quarantined %zu, failed %zu, explanations %zu\n", report.completed,
                            report.quarantined, report.failed, report.explanation_count);
            }
            for (const auto& e : report.entries) {
                if (!e.error.empty()) std::cerr << e.record_id << ": " << e.error << "\n";
            }
            return report.failed == 0 ? 0 : 2;
        }

        if (*features) {
            const auto records = load_records_from(records_dir);
            const auto labels = store::LabelFile::load(labels_path);
            const auto result = store::export_features(records, labels, *embedder);
            decider::write_csv(features_out, result.dataset);
            for (const auto& [ref, why] : result.skipped) std::cerr << "skipped " << ref << ": " << why << "\n";
            if (common.json_out) {
                json skipped = json::array();
                for (const auto& [ref, why] : result.skipped) skipped.push_back({{"ref", ref}, {"reason", why}});
                emit_json({{"rows", result.dataset.size()},
                           {"incorrect", result.dataset.count(decider::Label::Incorrect)},
                           {"correct", result.dataset.count(decider::Label::Correct)},
                           {"skipped", skipped},
                           {"unlabeled", result.unlabeled},
                           {"out", features_out}});
            } else {
                std::printf("wrote %zu rows (%zu incorrect, %zu correct) to %s; %zu skipped, %zu unlabeled\n",
                            result.dataset.size(), result.dataset.count(decider::Label::Incorrect),
                            result.dataset.count(decider::Label::Correct), features_out.c_str(),
                            result.skipped.size(), result.unlabeled.size());
            }
            return 0;
        }

        if (*train) {
            train_hp.apply(cfg);
            const auto data = decider::read_csv(features_in);
            const auto model = decider::train(data, decider::parse_model_kind(model_kind), cfg.hyperparams, cfg.seed);
            decider::save_model(model_out, model);
            if (common.json_out) {
                emit_json({{"model", decider::to_json(model)}, {"out", model_out}});
            } else {
                std::printf("trained %s on %zu examples x %zu features; wrote %s\n",
                            std::string(decider::model_kind_name(model.kind)).c_str(), data.size(), data.dim(),
                            model_out.c_str());
            }
            return 0;
        }

        if (*evaluate) {
            eval_hp.apply(cfg);
            const auto data = decider::read_csv(features_in);
            json out = json::array();
            if (!common.json_out) {
                std::printf("%zu examples (%zu incorrect, %zu correct), %zu features, %zu-fold CV, seed %llu\n",
                            data.size(), data.count(decider::Label::Incorrect), data.count(decider::Label::Correct),
                            data.dim(), cfg.folds, static_cast<unsigned long long>(cfg.seed));
                print_metrics_header("model");
            }
            for (auto k : kinds_from(eval_kind)) {
                const auto cv = decider::cross_validate(data, k, cfg.folds, cfg.seed, cfg.hyperparams);
                const std::string name(decider::model_kind_name(k));
                if (common.json_out) {
                    out.push_back({{"model", name}, {"folds", cfg.folds}, {"seed", cfg.seed},
                                   {"features", cv.feature_count}, {"metrics", decider::to_json(cv.metrics)}});
                } else {
                    print_metrics_rows(name == "lr" ? "logistic regression" : "linear svm", cv.metrics);
                }
            }
            if (common.json_out) emit_json(out);
            return 0;
        }

        if (*ablate) {
            ablate_hp.apply(cfg);
            const auto data = decider::read_csv(features_in);
            const auto kind = decider::parse_model_kind(ablate_kind);
            std::vector<decider::AblationSpec> specs;
            if (drop_stage.empty() && drop_kinds.empty()) {
                specs.push_back({});
                specs.push_back({{}, challenger::Stage::Basic});
                specs.push_back({{}, challenger::Stage::Mutated});
                for (auto k : challenger::kAllKinds) specs.push_back({{k}, std::nullopt});
            } else {
                decider::AblationSpec s;
                if (!drop_stage.empty()) s.drop_stage = challenger::parse_stage(drop_stage);
                for (const auto& k : drop_kinds) s.drop_kinds.insert(challenger::parse_kind(k));
                specs.push_back(s);
            }
            json out = json::array();
            if (!common.json_out) print_metrics_header("setting (features)");
            for (const auto& s : specs) {
                const auto cv = decider::ablate(data, s, kind, cfg.folds, cfg.seed, cfg.hyperparams);
                if (common.json_out) {
                    out.push_back({{"setting", s.describe()}, {"features_used", cv.feature_count},
                                   {"model", std::string(decider::model_kind_name(kind))},
                                   {"metrics", decider::to_json(cv.metrics)}});
                } else {
                    print_metrics_rows(s.describe() + " (" + std::to_string(cv.feature_count) + ")", cv.metrics);
                }
            }
            if (common.json_out) {
                emit_json(out);
            } else if (specs.size() == 1) {
                std::printf("%zu features used\n", decider::kept_features(specs[0]).size());
            }
            return 0;
        }

        if (*detect) {
            const auto record = store::load_record_file(record_path);
            const auto model = decider::load_model(model_path);
            const auto report = pipeline::detect(record, model, *embedder);
            if (common.json_out) {
                emit_json(report.to_json());
            } else if (!report.reason.empty()) {
                std::printf("%s: skipped (%s)\n", report.record_id.c_str(), report.reason.c_str());
            } else {
                for (const auto& v : report.verdicts) {
                    if (v.prediction) {
                        std::printf("%-40s %-10s score %+.6f\n", v.explanation_ref.c_str(),
                                    std::string(decider::label_name(v.prediction->label)).c_str(), v.prediction->score);
                    } else {
                        std::printf("%-40s skipped (%s)\n", v.explanation_ref.c_str(), v.skip_reason.c_str());
                    }
                }
            }
            return 0;
        }

        if (*mutate) {
            const auto rel = challenger::parse_relation(relation);
            const auto kind = challenger::parse_kind(kind_name);
            challenger::KnowledgeBase kb;
            if (!kb_path.empty()) kb = challenger::KnowledgeBase::load(kb_path, *embedder);
            const challenger::ChallengeQuestion basic{kind, challenger::Stage::Basic, question, "cli#0", std::nullopt};
            std::vector<challenger::ChallengeQuestion> peer_qs;
            for (std::size_t i = 0; i < peers.size(); ++i) {
                peer_qs.push_back({challenger::kAllKinds[i % 3], challenger::Stage::Basic, peers[i], "cli#0", std::nullopt});
            }
            const auto choice = challenger::select_redundant_sentence(basic, rel, kb, peer_qs, *embedder);
            const auto& clauses = cfg.clauses;
            const std::string joint = clause.empty() ? clauses[static_cast<std::size_t>(kind) % clauses.size()] : clause;
            const auto m = challenger::mutate_question(basic, choice.sentence, joint, rel, choice.source_id);
            if (common.json_out) {
                emit_json({{"basic", question},
                           {"mutated", m.text},
                           {"relation", std::string(challenger::relation_name(rel))},
                           {"clause", joint},
                           {"redundant_sentence", choice.sentence},
                           {"source_id", choice.source_id},
                           {"candidate_index", choice.candidate_index},
                           {"similarity", choice.similarity}});
            } else {
                std::printf("%s\n", m.text.c_str());
                std::printf("relation %s, clause \"%s\", candidate %zu (%s), similarity %.6f\n",
                            std::string(challenger::relation_name(rel)).c_str(), joint.c_str(), choice.candidate_index,
                            choice.source_id.c_str(), choice.similarity);
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
