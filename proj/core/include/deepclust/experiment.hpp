#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deepclust/checkpoint.hpp"
#include "deepclust/dataio.hpp"
#include "deepclust/training.hpp"

namespace deepclust {

enum class Method { sdc_com, sdc_triplet, classifier, classifier_lw, udc_com, udc_triplet };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view name);  // throws InvalidConfig
// Loss / margin / weighting implied by a method name, applied on top of `base`.
TrainConfig configure_for(Method m, TrainConfig base);

// JSON (de)serialisation of TrainConfig. Missing keys keep their defaults;
// the seed is not part of the document.
std::string config_to_json(const TrainConfig& config);
TrainConfig config_from_json(std::string_view text, TrainConfig base = {});  // throws ParseError

struct TrainingRun {
    Checkpoint checkpoint;
    ResultsRecord results;
    std::vector<IterationRecord> log;
};

// Splits `dataset` with config.seed, trains on the train split and evaluates
// the train, val and test splits.
TrainingRun run_training(Method method, const LabeledDataset& dataset, const TrainConfig& config,
                         std::string command);

// ---- imbalance sweep -------------------------------------------------------

struct SweepConfig {
    std::vector<std::pair<std::size_t, std::size_t>> ratios;  // (n_maj, n_min)
    std::vector<std::uint64_t> seeds;
    std::vector<Method> methods;
    BlobSpec blobs{};  // dim / sigma / separation; counts and seed come from each cell
    TrainConfig train{};
    std::size_t threads = 1;

    void validate() const;  // throws InvalidConfig (fewer than two ratios, empty lists)
};

// The six majority:minority ratios 900:{900, 450, 225, 60, 25, 15}.
std::vector<std::pair<std::size_t, std::size_t>> default_sweep_ratios();

struct SweepRow {
    std::size_t n_maj = 0;
    std::size_t n_min = 0;
    Method method = Method::sdc_com;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    MetricSet test;
    double separation = 0.0;  // NaN for classifiers
};

// One row per (ratio, method, seed), in that nesting order regardless of threading.
// A failing cell is recorded in its row and never aborts the sweep.
std::vector<SweepRow> run_sweep(const SweepConfig& config);

std::string format_sweep_rows(const std::vector<SweepRow>& rows);
// Median test AUC per ratio x method over successful seeds.
std::string format_sweep_summary(const std::vector<SweepRow>& rows);

// Median of the successful rows' test AUC for one cell group; NaN if none.
double median_auc(const std::vector<SweepRow>& rows, std::size_t n_maj, std::size_t n_min, Method method);

// Dataset seed of a sweep cell; shared by every method for the same (ratio, seed).
std::uint64_t sweep_data_seed(std::size_t n_maj, std::size_t n_min, std::uint64_t seed);

}  // namespace deepclust
