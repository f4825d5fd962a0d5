#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "deepclust/dataio.hpp"
#include "deepclust/errors.hpp"

using namespace deepclust;

namespace {

std::size_t count_tag(const std::vector<Split>& tags, const std::vector<int>& labels, Split s, int label) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < tags.size(); ++i) n += (tags[i] == s && labels[i] == label) ? 1 : 0;
    return n;
}

}  // namespace

TEST_SUITE("dataio") {

TEST_CASE("synthetic counts and determinism") {
    BlobSpec spec;
    spec.n_maj = 900;
    spec.n_min = 15;
    spec.dim = 8;
    spec.seed = 1;
    const LabeledDataset ds = synth_imbalanced(spec);
    CHECK(ds.size() == 915);
    CHECK(ds.dim() == 8);
    CHECK(ds.count(1) == 15);
    CHECK(static_cast<double>(ds.count(1)) / 915.0 == doctest::Approx(0.0164).epsilon(0.01));
    CHECK(synth_imbalanced(spec).features == ds.features);
    spec.seed = 2;
    CHECK(synth_imbalanced(spec).features != ds.features);

    BlobSpec bal;
    bal.n_maj = bal.n_min = 40;
    const LabeledDataset b = synth_imbalanced(bal);
    CHECK(b.count(0) == b.count(1));
}

TEST_CASE("default class means sit the requested distance apart") {
    BlobSpec spec;
    spec.separation = 3.0;
    spec.sigma_maj = 2.0;
    const auto a = spec.resolved_mean_maj(), b = spec.resolved_mean_min();
    double d2 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d2 += (a[i] - b[i]) * (a[i] - b[i]);
        CHECK(a[i] == -b[i]);
    }
    CHECK(std::sqrt(d2) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("spec validation") {
    BlobSpec spec;
    spec.n_min = 0;
    CHECK_THROWS_AS(spec.validate(), InvalidSpec);
    spec = BlobSpec{};
    spec.n_maj = 10;
    spec.n_min = 20;
    CHECK_THROWS_AS(spec.validate(), InvalidSpec);
    spec = BlobSpec{};
    spec.sigma_min = 0;
    CHECK_THROWS_AS(spec.validate(), InvalidSpec);
    spec = BlobSpec{};
    spec.mean_maj = {1.0};
    CHECK_THROWS_AS(spec.validate(), InvalidSpec);
}

TEST_CASE("stratified split fractions") {
    BlobSpec spec;
    spec.n_maj = spec.n_min = 400;
    const LabeledDataset bal = synth_imbalanced(spec);
    const auto tags = split_dataset(bal, 3);
    CHECK(std::count(tags.begin(), tags.end(), Split::train) == 600);
    CHECK(std::count(tags.begin(), tags.end(), Split::val) == 100);
    CHECK(std::count(tags.begin(), tags.end(), Split::test) == 100);
    CHECK(split_dataset(bal, 3) == tags);
    CHECK(split_dataset(bal, 4) != tags);

    spec.n_maj = 900;
    spec.n_min = 15;
    const LabeledDataset imb = synth_imbalanced(spec);
    const auto t2 = split_dataset(imb, 5);
    CHECK(count_tag(t2, imb.labels, Split::train, 1) == 11);
    CHECK(count_tag(t2, imb.labels, Split::val, 1) == 2);
    CHECK(count_tag(t2, imb.labels, Split::test, 1) == 2);
    const double z = 915;
    CHECK(std::abs(static_cast<double>(std::count(t2.begin(), t2.end(), Split::train)) - 0.75 * z) <= 1.0);
    CHECK(std::abs(static_cast<double>(std::count(t2.begin(), t2.end(), Split::val)) - 0.125 * z) <= 1.0);
}

TEST_CASE("splits keep every class present whenever it has three members") {
    for (std::size_t n_min = 3; n_min <= 20; ++n_min) {
        BlobSpec spec;
        spec.n_maj = 40;
        spec.n_min = n_min;
        const LabeledDataset ds = synth_imbalanced(spec);
        const auto tags = split_dataset(ds, n_min);
        for (Split s : {Split::train, Split::val, Split::test}) {
            CHECK(count_tag(tags, ds.labels, s, 1) >= 1);
            CHECK(count_tag(tags, ds.labels, s, 0) >= 1);
        }
    }
    LabeledDataset tiny;
    tiny.features = Matrix(7, 2);
    tiny.labels.assign(7, 0);
    CHECK_THROWS_AS(split_dataset(tiny, 1), TooFewSamples);
}

TEST_CASE("CSV parsing") {
    const auto ds = parse_csv("f0,f1,label\n1.5,2,0\n-3,4e-2,1\n0,0,0\n");
    CHECK(ds.size() == 3);
    CHECK(ds.dim() == 2);
    CHECK(ds.features(1, 1) == 0.04);
    CHECK(ds.labels == std::vector<int>{0, 1, 0});

    try {
        parse_csv("f0,label\n1,0\n2,2\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_csv("f0,label\n1,0,3\n"), ParseError);
    CHECK_THROWS_AS(parse_csv("f0,label\nabc,0\n"), ParseError);
    CHECK_THROWS_AS(parse_csv("f0,label\ninf,0\n"), ParseError);
    CHECK_THROWS_AS(parse_csv("f0,f1\n1,0\n"), MissingColumn);
    CHECK_THROWS_AS(parse_csv("a,label\n1,0\n"), MissingColumn);
    CHECK_THROWS_AS(parse_csv(""), MissingColumn);
    CHECK_THROWS_AS(load_csv("/nonexistent/dir/x.csv"), IoError);
}

TEST_CASE("CSV round trip is exact") {
    BlobSpec spec;
    spec.n_maj = 50;
    spec.n_min = 10;
    const LabeledDataset ds = synth_imbalanced(spec);
    const auto path = std::filesystem::temp_directory_path() / "deepclust_roundtrip.csv";
    save_csv(path, ds);
    const LabeledDataset back = load_csv(path);
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
    CHECK(format_csv(back) == format_csv(ds));
    std::filesystem::remove(path);
}

TEST_CASE("results record round trip") {
    ResultsRecord r;
    r.command = "train-sdc --seed 3";
    r.config_json = R"({"batch_size":15})";
    r.seed = 3;
    r.splits = {{"test", MetricSet{0.9, 0.8, 0.7, 0.9, 0.85, 0.95, 100}},
                {"train", MetricSet{1, 1, 1, 1, 1, NAN, 600}}};
    r.prototype_separation = 1.5;
    const std::string text = format_results(r);
    CHECK(text.find("\"metrics\"") != std::string::npos);
    const ResultsRecord back = parse_results(text);
    CHECK(back.command == r.command);
    CHECK(back.seed == 3);
    CHECK(back.prototype_separation == 1.5);
    REQUIRE(back.splits.size() == 2);
    CHECK(back.splits[0].second.auc == 0.95);
    CHECK(std::isnan(back.splits[1].second.auc));
    CHECK(format_results(back) == text);
    CHECK_THROWS_AS(parse_results("{"), ParseError);
}

}  // TEST_SUITE
