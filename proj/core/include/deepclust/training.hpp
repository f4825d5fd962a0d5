#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepclust/dataio.hpp"
#include "deepclust/encoder.hpp"
#include "deepclust/gmm.hpp"
#include "deepclust/losses.hpp"
#include "deepclust/numcore/rng.hpp"
#include "deepclust/prototypes.hpp"
#include "deepclust/types.hpp"

namespace deepclust {

struct TrainConfig {
    std::size_t batch_size = 15;  // M
    std::size_t epochs = 15;
    // Overrides epochs * floor(Z_train / M) when set.
    std::optional<std::size_t> iterations;
    LossKind loss = LossKind::com_triplet;
    MarginSpec margin = MarginSpec::adaptive();
    std::uint64_t seed = 0;
    AdamConfig optimizer{};
    EncoderConfig encoder{};  // input_dim 0 means "take it from the data"
    EmConfig gmm{};
    bool feature_selection = true;

    void validate() const;  // throws InvalidConfig
    // epochs * floor(z_train / M), or the override. Throws InvalidConfig when it is 0.
    std::size_t iterations_for(std::size_t z_train) const;
};

struct IterationRecord {
    std::size_t iteration = 0;
    double loss = 0.0;
    double separation = 0.0;
    double nll = 0.0;  // GMM NLL of the batch; NaN outside UDC
};

struct TrainLog {
    std::vector<IterationRecord> records;
    Prototypes prototypes;
    EncoderParams encoder;
    std::size_t warnings = 0;
};

// One JSON object per line: {"iteration", "loss", "separation"[, "nll"]}.
std::string format_train_log(std::span<const IterationRecord> records);

struct TripletBatch {
    std::vector<std::size_t> anchors;
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    std::vector<Label> anchor_classes;
    std::size_t singleton_positives = 0;  // triplets where P had to equal A
};

// Anchors uniform over `pool`; P uniform over same-class pool rows other than
// A (A itself when its class has one member); N uniform over the other class.
// Throws MissingClass when the pool lacks a class.
TripletBatch sample_triplets(const LabeledDataset& dataset, std::span<const std::size_t> pool, std::size_t m,
                             Rng& rng);

// Training rows: the train split when the dataset is split, every row otherwise.
std::vector<std::size_t> training_pool(const LabeledDataset& dataset);

// Supervised deep clustering. Throws MissingClass, NonFiniteLoss, InvalidConfig.
TrainLog train_sdc(const LabeledDataset& dataset, const TrainConfig& config);

// Unsupervised deep clustering with GMM pseudo-labels (labels are ignored).
// Throws TooFewSamples, DegenerateComponent, NonFiniteLoss.
TrainLog train_udc(const LabeledDataset& dataset, const TrainConfig& config);

enum class ClassWeighting { equal, inverse_frequency };

// Per-batch class weights: B / (2 n_c) for inverse_frequency, (1, 1) when a class is absent.
ClassWeights batch_class_weights(std::span<const int> batch_labels, ClassWeighting weighting);

// Encoder followed by a two-way softmax head.
struct ClassifierModel {
    EncoderParams encoder;
    DenseLayer head;  // 2 x S
    AdamState adam;
    std::vector<IterationRecord> records;

    std::vector<Matrix*> tensors();
};

struct ClassifierGraph {
    Var logits;  // 1 x B, z_min - z_maj
    Var probs;   // 1 x B minority probabilities, sigmoid(logits)
    std::vector<Var> tensors;
};

ClassifierGraph classifier_forward(Tape& tape, const ClassifierModel& model, const Matrix& x, bool train_mode,
                                   Rng* rng);
std::vector<double> predict_proba(const ClassifierModel& model, const Matrix& x);

ClassifierModel train_classifier(const LabeledDataset& dataset, const TrainConfig& config,
                                 ClassWeighting weighting);

// ---- inference --------------------------------------------------------------

struct Scored {
    std::vector<int> predictions;  // 1 = minority
    std::vector<double> scores;    // higher = more minority-like
};

// Prototype inference on a D x n batch: label by nearest prototype, score = malignancy.
Scored score_prototypes(const EncoderParams& encoder, const Prototypes& prototypes, const Matrix& x);
// Classifier inference: score = p(minority), prediction = p > 0.5.
Scored score_classifier(const ClassifierModel& model, const Matrix& x);

// Weighted metrics and AUC (NaN when only one class is present).
MetricSet evaluate(std::span<const int> labels, const Scored& scored);

}  // namespace deepclust
