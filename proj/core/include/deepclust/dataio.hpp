#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deepclust/numcore/matrix.hpp"

namespace deepclust {

enum class Split : std::uint8_t { train, val, test };

std::string_view to_string(Split s) noexcept;

// Z x D features (one sample per row), labels 0 = majority / 1 = minority,
// split tags (empty until split_dataset is applied).
struct LabeledDataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<Split> splits;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols(); }
    std::size_t count(int label) const;

    std::vector<std::size_t> indices(Split split) const;
    // D x n batch of the given rows, one sample per column.
    Matrix batch(std::span<const std::size_t> rows) const;
    std::vector<int> labels_of(std::span<const std::size_t> rows) const;
    // Rows of one split as a standalone dataset (splits cleared).
    LabeledDataset subset(std::span<const std::size_t> rows) const;

    void validate() const;  // throws LengthMismatch / InvalidSpec
};

// Two isotropic Gaussian classes. Unless explicit means are given, the class
// means sit symmetrically about the origin on the all-ones diagonal,
// `separation * sigma_maj` apart (majority on the negative side).
struct BlobSpec {
    std::size_t dim = 8;
    std::size_t n_maj = 900;
    std::size_t n_min = 15;
    double sigma_maj = 1.0;
    double sigma_min = 1.0;
    double separation = 2.5;  // mean distance in sigma units
    std::vector<double> mean_maj;
    std::vector<double> mean_min;
    std::uint64_t seed = 0;

    void validate() const;  // throws InvalidSpec
    std::vector<double> resolved_mean_maj() const;
    std::vector<double> resolved_mean_min() const;
};

// Majority rows first, then minority rows. Deterministic per seed.
LabeledDataset synth_imbalanced(const BlobSpec& spec);

// Stratified 75 / 12.5 / 12.5 split with a seeded per-class shuffle. Classes
// with >= 3 members get at least one sample in every split. Throws TooFewSamples when Z < 8.
std::vector<Split> split_dataset(const LabeledDataset& dataset, std::uint64_t seed);

// CSV with header f0,...,f{D-1},label. Throws IoError, MissingColumn, ParseError (with line).
LabeledDataset load_csv(const std::filesystem::path& path);
LabeledDataset parse_csv(std::string_view text);
// Shortest round-trip formatting, so save -> load reproduces values exactly.
void save_csv(const std::filesystem::path& path, const LabeledDataset& dataset);
std::string format_csv(const LabeledDataset& dataset);

// Evaluation summary of one split. auc is NaN when the split holds a single class.
struct MetricSet {
    double recall = 0.0;
    double precision = 0.0;
    double specificity = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    std::size_t samples = 0;
};

// Structured results document: {command, config, seed, metrics, splits,
// prototype_separation}. `metrics` is the headline split (test when present).
struct ResultsRecord {
    std::string command;
    std::string config_json = "{}";  // JSON object, embedded verbatim
    std::uint64_t seed = 0;
    std::string headline_split = "test";
    std::vector<std::pair<std::string, MetricSet>> splits;
    std::optional<double> prototype_separation;
};

std::string format_results(const ResultsRecord& record);
ResultsRecord parse_results(std::string_view text);  // throws ParseError
void save_results(const std::filesystem::path& path, const ResultsRecord& record);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace deepclust
