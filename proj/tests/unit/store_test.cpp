#include "cid/error.hpp"
#include "cid/store.hpp"

#include "pipeline_support.hpp"

#include <gtest/gtest.h>

using namespace cid;
using namespace cid::store;
namespace ts = testing_support;

namespace {

/// Runs the benchmark into `root` and returns the store.
BenchmarkStore populated(const ts::fs::path& root) {
    SimulatedRun run;
    BenchmarkStore store(root);
    const auto report = pipeline::run_benchmark(SimulatedRun::benchmark(), run.config, run.deps(), store);
    EXPECT_EQ(report.completed, 3u);
    return store;
}

}  // namespace

TEST(Store, SaveLoadSaveIsByteStable) {
    ts::TempDir a, b;
    const auto store = populated(a.path());
    BenchmarkStore copy(b.path());
    for (const auto& id : store.record_ids()) {
        const auto r = store.load_record(id);
        copy.save_transcript(id, store.load_transcript(r));
        copy.save_record(r);
        EXPECT_EQ(ts::slurp(copy.record_path(id)), ts::slurp(store.record_path(id)));
        EXPECT_EQ(copy.load_record(id), r);
    }
}

TEST(Store, CorruptRecordNamesThePath) {
    ts::TempDir dir;
    const auto store = populated(dir.path());
    const auto id = store.record_ids().front();
    ts::spit(store.record_path(id), "{ not json");
    try {
        store.load_record(id);
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find(store.record_path(id).string()), std::string::npos);
    }
}

TEST(Store, SchemaVersionMismatchIsRejected) {
    ts::TempDir dir;
    const auto store = populated(dir.path());
    const auto id = store.record_ids().front();
    auto j = nlohmann::json::parse(ts::slurp(store.record_path(id)));
    j["schema_version"] = 99;
    ts::spit(store.record_path(id), j.dump());
    EXPECT_THROW(store.load_record(id), SchemaError);
}

TEST(Store, RecordsAreAppendOnly) {
    ts::TempDir dir;
    const auto store = populated(dir.path());
    auto r = store.load_record(store.record_ids().front());
    EXPECT_NO_THROW(store.save_record(r));
    r.model_name = "something-else";
    EXPECT_THROW(store.save_record(r), StoreError);
    EXPECT_THROW(store.save_transcript(r.record_id, {}), StoreError);
}

TEST(Store, JoinKeepsLabeledAndListsUnlabeled) {
    SimulatedRun run;
    std::vector<InterrogationRecord> records{run.one(0).record, run.one(1).record};
    for (auto& r : records) {
        ASSERT_GE(r.explanations.size(), 3u);
        r.explanations.resize(3);
    }
    LabelFile labels;
    for (std::size_t i = 0; i < 3; ++i) labels.entries.push_back({records[0].record_id, i, decider::Label::Correct, "a"});
    labels.entries.push_back({records[1].record_id, 2, decider::Label::Incorrect, "a"});
    labels.entries.push_back({records[1].record_id, 0, decider::Label::Correct, "b"});

    const auto joined = join_labels(records, labels);
    ASSERT_EQ(joined.examples.size(), 5u);
    EXPECT_EQ(joined.unlabeled, std::vector<std::string>{records[1].record_id + "#1"});
    EXPECT_EQ(joined.examples[3].explanation_index, 0u);
    EXPECT_EQ(joined.examples[4].label, decider::Label::Incorrect);

    EXPECT_TRUE(join_labels(records, LabelFile{}).examples.empty());
    EXPECT_EQ(join_labels(records, LabelFile{}).unlabeled.size(), 6u);

    labels.entries.push_back({records[1].record_id, 7, decider::Label::Correct, "a"});
    labels.entries.push_back({"missing", 0, decider::Label::Correct, "a"});
    try {
        join_labels(records, labels);
        FAIL() << "expected StoreError";
    } catch (const StoreError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("missing#0"), std::string::npos);
        EXPECT_NE(what.find(records[1].record_id + "#7"), std::string::npos);
    }
}

TEST(Store, DuplicateLabelsAreRejected) {
    LabelFile labels;
    labels.entries.push_back({"r", 0, decider::Label::Correct, "a"});
    labels.entries.push_back({"r", 0, decider::Label::Incorrect, "b"});
    EXPECT_THROW(labels.validate(), SchemaError);
}

TEST(Store, LabelFileRoundTrip) {
    ts::TempDir dir;
    const auto labels = LabelFile::load(ts::data_dir() / "labels.json");
    labels.save(dir.path() / "l.json");
    EXPECT_EQ(LabelFile::load(dir.path() / "l.json").entries, labels.entries);
}

TEST(Store, FeatureExportIsDeterministicAndMatchesOracle) {
    ts::TempDir dir;
    const auto store = populated(dir.path());
    const auto labels = LabelFile::load(ts::data_dir() / "labels.json");
    embed::HashedBagOfTokens h;
    const auto a = export_features(store.load_records(), labels, h);
    const auto b = export_features(store.load_records(), labels, h);
    EXPECT_EQ(decider::to_csv(a.dataset), decider::to_csv(b.dataset));
    ASSERT_EQ(a.dataset.size(), labels.entries.size());
    EXPECT_TRUE(a.skipped.empty());

    const auto& row = a.dataset.examples.at(1);
    const auto hash = row.explanation_ref.find('#');
    const std::string record_id = row.explanation_ref.substr(0, hash);
    const auto i = std::stoul(row.explanation_ref.substr(hash + 1));
    const auto tr = ts::oracle_read_transcript(store.root() / BenchmarkStore::transcript_relpath(record_id));
    const auto expected = ts::oracle_features(tr, record_id, i);
    for (std::size_t k = 0; k < 24; ++k) EXPECT_EQ(row.features[k], expected[k]) << k;
}

TEST(Store, MappedCsvAdapterRenamesColumns) {
    ts::TempDir dir;
    nlohmann::json mapping{{"label", {{"column", "y"}, {"correct", "0"}, {"incorrect", "1"}}}, {"ref", "id"}};
    std::string header = "id,y";
    std::string row1 = "a,1", row2 = "b,0";
    const auto names = decider::feature_names();
    for (std::size_t k = 0; k < names.size(); ++k) {
        mapping["features"][names[k]] = "c" + std::to_string(23 - k);
    }
    for (std::size_t k = 0; k < names.size(); ++k) {
        header += ",c" + std::to_string(k);
        row1 += "," + std::to_string(k) + ".5";
        row2 += ",-" + std::to_string(k);
    }
    ts::spit(dir.path() / "x.csv", header + "\n" + row1 + "\n" + row2 + "\n");
    const auto d = MappedCsvAdapter(mapping).import(dir.path() / "x.csv");
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d.examples[0].label, decider::Label::Incorrect);
    EXPECT_EQ(d.examples[0].explanation_ref, "a");
    EXPECT_EQ(d.examples[0].features[0], 23.5);  // canonical 0 <- c23
    EXPECT_EQ(d.examples[1].features[23], 0.0);

    mapping["features"].erase(names[3]);
    EXPECT_THROW(MappedCsvAdapter{mapping}, SchemaError);
}

TEST(Store, BenchmarkLoads) {
    const auto qs = SimulatedRun::benchmark();
    ASSERT_EQ(qs.size(), 3u);
    EXPECT_EQ(qs[0].context.source_id, "so-50413133");
}
