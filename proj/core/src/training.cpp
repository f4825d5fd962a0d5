#include "deepclust/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "deepclust/errors.hpp"
#include "deepclust/log.hpp"
#include "deepclust/metrics.hpp"

namespace deepclust {

void TrainConfig::validate() const {
    if (batch_size < 1) throw InvalidConfig("batch size M must be >= 1");
    if (iterations && *iterations == 0) throw InvalidConfig("iteration count must be >= 1");
    if (loss == LossKind::triplet && margin.is_adaptive()) {
        throw InvalidConfig("the traditional triplet loss needs a constant margin");
    }
    if (!margin.is_adaptive()) MarginSpec::constant(margin.alpha);
    optimizer.validate();
}

std::size_t TrainConfig::iterations_for(std::size_t z_train) const {
    const std::size_t t = iterations ? *iterations : epochs * (z_train / batch_size);
    if (t == 0) {
        throw InvalidConfig("zero training iterations (epochs " + std::to_string(epochs) + ", " +
                            std::to_string(z_train) + " training rows, M " + std::to_string(batch_size) + ")");
    }
    return t;
}

std::string format_train_log(std::span<const IterationRecord> records) {
    std::string out;
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["iteration"] = r.iteration;
        j["loss"] = r.loss;
        j["separation"] = r.separation;
        if (std::isfinite(r.nll)) j["nll"] = r.nll;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<std::size_t> training_pool(const LabeledDataset& dataset) {
    if (dataset.splits.empty()) {
        std::vector<std::size_t> all(dataset.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
    }
    return dataset.indices(Split::train);
}

TripletBatch sample_triplets(const LabeledDataset& dataset, std::span<const std::size_t> pool, std::size_t m,
                             Rng& rng) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t row : pool) by_class[dataset.labels.at(row)].push_back(row);
    if (by_class[0].empty() || by_class[1].empty()) {
        throw MissingClass(std::string("training pool has no ") + (by_class[1].empty() ? "minority" : "majority") +
                           " samples");
    }
    TripletBatch batch;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t a = pool[rng.index(pool.size())];
        const int cls = dataset.labels[a];
        const auto& same = by_class[cls];
        const auto& other = by_class[1 - cls];
        std::size_t p = a;
        if (same.size() > 1) {
            // Uniform over same-class rows other than A.
            const auto a_pos = static_cast<std::size_t>(std::find(same.begin(), same.end(), a) - same.begin());
            std::size_t k = rng.index(same.size() - 1);
            if (k >= a_pos) ++k;
            p = same[k];
        } else {
            ++batch.singleton_positives;
        }
        batch.anchors.push_back(a);
        batch.positives.push_back(p);
        batch.negatives.push_back(other[rng.index(other.size())]);
        batch.anchor_classes.push_back(cls == 1 ? Label::minority : Label::majority);
    }
    if (batch.singleton_positives > 0) {
        logging::warn("sample_triplets: {} triplet(s) reuse the anchor as positive (single-member class)",
                  batch.singleton_positives);
    }
    return batch;
}

namespace {

EncoderConfig resolved_encoder(const TrainConfig& config, const LabeledDataset& dataset) {
    EncoderConfig enc = config.encoder;
    if (enc.input_dim == 0) enc.input_dim = dataset.dim();
    if (enc.input_dim != dataset.dim()) {
        throw DimensionMismatch("encoder expects " + std::to_string(enc.input_dim) + " features, data has " +
                                std::to_string(dataset.dim()));
    }
    enc.validate();
    return enc;
}

void require_finite(double loss, std::size_t iteration) {
    if (!std::isfinite(loss)) {
        throw NonFiniteLoss("loss became " + std::to_string(loss) + " at iteration " + std::to_string(iteration));
    }
}

void require_finite(std::span<const Matrix> grads, std::size_t iteration) {
    for (const Matrix& g : grads) {
        if (!g.all_finite()) {
            throw NonFiniteLoss("non-finite gradient at iteration " + std::to_string(iteration));
        }
    }
}

void finalize_prototypes(Prototypes& proto, bool feature_selection) {
    proto.feature_mask = feature_selection ? feature_mask(proto.cl_min, proto.cl_maj)
                                           : std::vector<bool>(proto.cl_min.size(), true);
}

// k distinct rows when the pool allows it, with replacement otherwise.
std::vector<std::size_t> sample_rows(std::span<const std::size_t> pool, std::size_t k, Rng& rng) {
    std::vector<std::size_t> out;
    if (pool.size() >= k) {
        std::vector<std::size_t> scratch(pool.begin(), pool.end());
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + rng.index(scratch.size() - i);
            std::swap(scratch[i], scratch[j]);
            out.push_back(scratch[i]);
        }
    } else {
        for (std::size_t i = 0; i < k; ++i) out.push_back(pool[rng.index(pool.size())]);
    }
    return out;
}

}  // namespace

TrainLog train_sdc(const LabeledDataset& dataset, const TrainConfig& config) {
    dataset.validate();
    config.validate();
    const auto pool = training_pool(dataset);
    const std::size_t iterations = config.iterations_for(pool.size());
    const std::size_t m = config.batch_size;

    Rng rng(config.seed);
    Rng init_rng = rng.split();
    Rng dropout_rng = rng.split();
    TrainLog log;
    log.encoder = EncoderParams::init(resolved_encoder(config, dataset), init_rng);

    for (std::size_t it = 0; it < iterations; ++it) {
        const TripletBatch triplets = sample_triplets(dataset, pool, m, rng);
        log.warnings += triplets.singleton_positives;

        std::vector<std::size_t> rows;
        rows.insert(rows.end(), triplets.anchors.begin(), triplets.anchors.end());
        rows.insert(rows.end(), triplets.positives.begin(), triplets.positives.end());
        rows.insert(rows.end(), triplets.negatives.begin(), triplets.negatives.end());
        const Matrix x = dataset.batch(rows);

        Tape tape;
        const EncoderGraph graph = forward(tape, log.encoder, x, true, &dropout_rng);
        Var ea = cols(graph.output, 0, m);
        Var ep = cols(graph.output, m, m);
        Var en = cols(graph.output, 2 * m, m);
        Var loss = config.loss == LossKind::com_triplet ? com_triplet_loss(ea, ep, en, config.margin)
                                                        : triplet_loss(ea, ep, en, config.margin.alpha);
        require_finite(loss.scalar(), it);
        tape.backward(loss);
        const std::vector<Matrix> grads = gradients(tape, graph);
        require_finite(grads, it);

        // Class centers from the pre-update encoder, without dropout.
        std::vector<Label> classes = triplets.anchor_classes;
        classes.insert(classes.end(), triplets.anchor_classes.begin(), triplets.anchor_classes.end());
        for (Label c : triplets.anchor_classes) classes.push_back(opposite(c));
        log.prototypes = update_prototypes(log.prototypes, batch_centers(embed(log.encoder, x), classes));

        adam_step(log.encoder, grads, config.optimizer);
        log.records.push_back({it, loss.scalar(), log.prototypes.separation, std::numeric_limits<double>::quiet_NaN()});
    }
    finalize_prototypes(log.prototypes, config.feature_selection);
    return log;
}

TrainLog train_udc(const LabeledDataset& dataset, const TrainConfig& config) {
    dataset.validate();
    config.validate();
    const auto pool = training_pool(dataset);
    const std::size_t iterations = config.iterations_for(pool.size());
    const std::size_t batch = 3 * config.batch_size;
    if (pool.size() < 2 * kMixtureComponents) {
        throw TooFewSamples("UDC needs at least " + std::to_string(2 * kMixtureComponents) + " training rows");
    }
    if (pool.size() < 2 * batch) {
        logging::warn("train_udc: {} training rows is below the recommended 2 x 3M = {}", pool.size(), 2 * batch);
    }

    Rng rng(config.seed);
    Rng init_rng = rng.split();
    Rng dropout_rng = rng.split();
    TrainLog log;
    log.encoder = EncoderParams::init(resolved_encoder(config, dataset), init_rng);

    for (std::size_t it = 0; it < iterations; ++it) {
        const std::vector<std::size_t> rows = sample_rows(pool, batch, rng);
        const Matrix x = dataset.batch(rows);

        // Pseudo-labels from a GMM fitted on the dropout-free embeddings.
        const Matrix clean = embed(log.encoder, x);
        EmConfig em = config.gmm;
        em.kmeans.seed = mix_seed(config.seed, it);
        const EmFit fit = fit_em(clean, em);
        PseudoLabels labels = responsibilities(fit.model, clean);
        labels.minority_component = identify_minority(fit.model, labels);
        std::vector<Label> pseudo(rows.size());
        for (std::size_t j = 0; j < rows.size(); ++j) {
            pseudo[j] = labels.assignments[j] == labels.minority_component ? Label::minority : Label::majority;
        }
        const auto& mu_min = fit.model.components[labels.minority_component].mean;
        const auto& mu_maj = fit.model.components[1 - labels.minority_component].mean;

        Tape tape;
        const EncoderGraph graph = forward(tape, log.encoder, x, true, &dropout_rng);
        Var vmin = tape.constant(Matrix::column(mu_min));
        Var vmaj = tape.constant(Matrix::column(mu_maj));
        Var loss = config.loss == LossKind::com_triplet
                       ? udc_com_loss(graph.output, vmin, vmaj, pseudo, config.margin)
                       : udc_triplet_loss(graph.output, vmin, vmaj, pseudo, config.margin.alpha);
        require_finite(loss.scalar(), it);
        tape.backward(loss);
        const std::vector<Matrix> grads = gradients(tape, graph);
        require_finite(grads, it);

        log.prototypes = update_prototypes(log.prototypes, CenterPair{mu_min, mu_maj});
        adam_step(log.encoder, grads, config.optimizer);
        log.records.push_back({it, loss.scalar(), log.prototypes.separation, fit.nll_history.back()});
    }
    finalize_prototypes(log.prototypes, config.feature_selection);
    return log;
}

// ---- classifier baseline ----------------------------------------------------

ClassWeights batch_class_weights(std::span<const int> batch_labels, ClassWeighting weighting) {
    if (weighting == ClassWeighting::equal) return {};
    const auto n_min = static_cast<double>(std::count(batch_labels.begin(), batch_labels.end(), 1));
    const double n = static_cast<double>(batch_labels.size());
    const double n_maj = n - n_min;
    if (n_min == 0.0 || n_maj == 0.0) return {};
    return {n / (2.0 * n_min), n / (2.0 * n_maj)};
}

std::vector<Matrix*> ClassifierModel::tensors() {
    std::vector<Matrix*> out = encoder.tensors();
    out.push_back(&head.weight);
    out.push_back(&head.bias);
    return out;
}

ClassifierGraph classifier_forward(Tape& tape, const ClassifierModel& model, const Matrix& x, bool train_mode,
                                   Rng* rng) {
    const EncoderGraph enc = forward(tape, model.encoder, x, train_mode, rng);
    Var w = tape.leaf(model.head.weight);
    Var b = tape.leaf(model.head.bias);
    Var logits = add_bias(matmul(w, enc.output), b);
    ClassifierGraph out;
    // Two-way softmax: p(minority) = sigmoid(z_min - z_maj).
    out.logits = row(logits, 1) - row(logits, 0);
    out.probs = sigmoid(out.logits);
    out.tensors = enc.tensors;
    out.tensors.push_back(w);
    out.tensors.push_back(b);
    return out;
}

std::vector<double> predict_proba(const ClassifierModel& model, const Matrix& x) {
    const Matrix e = embed(model.encoder, x);
    Matrix logits = matmul(model.head.weight, e);
    std::vector<double> out(x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        const double z = (logits(1, c) + model.head.bias[1]) - (logits(0, c) + model.head.bias[0]);
        out[c] = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    }
    return out;
}

ClassifierModel train_classifier(const LabeledDataset& dataset, const TrainConfig& config,
                                 ClassWeighting weighting) {
    dataset.validate();
    config.validate();
    const auto pool = training_pool(dataset);
    {
        bool has[2] = {false, false};
        for (std::size_t r : pool) has[dataset.labels[r]] = true;
        if (!has[0] || !has[1]) throw MissingClass("classifier training pool lacks a class");
    }
    const std::size_t iterations = config.iterations_for(pool.size());

    Rng rng(config.seed);
    Rng init_rng = rng.split();
    Rng dropout_rng = rng.split();
    ClassifierModel model;
    model.encoder = EncoderParams::init(resolved_encoder(config, dataset), init_rng);
    const std::size_t s = model.encoder.config.embedding_dim;
    model.head = DenseLayer{Matrix(2, s), Matrix(2, 1)};
    const double limit = std::sqrt(6.0 / static_cast<double>(s + 2));  // Glorot-uniform softmax head
    for (double& w : model.head.weight.data()) w = init_rng.uniform(-limit, limit);

    for (std::size_t it = 0; it < iterations; ++it) {
        std::vector<std::size_t> rows(config.batch_size);
        for (auto& r : rows) r = pool[rng.index(pool.size())];
        const std::vector<int> y = dataset.labels_of(rows);
        const ClassWeights weights = batch_class_weights(y, weighting);

        Tape tape;
        const ClassifierGraph graph = classifier_forward(tape, model, dataset.batch(rows), true, &dropout_rng);
        Var loss = weighted_cross_entropy_logits(y, graph.logits, weights);
        require_finite(loss.scalar(), it);
        tape.backward(loss);
        std::vector<Matrix> grads;
        for (const Var& v : graph.tensors) grads.push_back(tape.grad(v));
        require_finite(grads, it);
        const std::vector<Matrix*> params = model.tensors();
        adam_step(params, grads, model.adam, config.optimizer);
        model.records.push_back({it, loss.scalar(), 0.0, std::numeric_limits<double>::quiet_NaN()});
    }
    return model;
}

// ---- inference --------------------------------------------------------------

Scored score_prototypes(const EncoderParams& encoder, const Prototypes& prototypes, const Matrix& x) {
    const Matrix e = embed(encoder, x);
    Scored out;
    for (std::size_t c = 0; c < e.cols(); ++c) {
        const std::vector<double> col = e.col(c);
        const double score = malignancy_score(col, prototypes);
        out.scores.push_back(score);
        out.predictions.push_back(score >= 0.5 ? 1 : 0);
    }
    return out;
}

Scored score_classifier(const ClassifierModel& model, const Matrix& x) {
    Scored out;
    out.scores = predict_proba(model, x);
    for (double p : out.scores) out.predictions.push_back(p > 0.5 ? 1 : 0);
    return out;
}

MetricSet evaluate(std::span<const int> labels, const Scored& scored) {
    const WeightedMetrics w = weighted_metrics(labels, scored.predictions);
    MetricSet m{w.recall, w.precision, w.specificity, w.accuracy, w.f1, std::numeric_limits<double>::quiet_NaN(),
                labels.size()};
    const auto n_min = std::count(labels.begin(), labels.end(), 1);
    if (n_min > 0 && static_cast<std::size_t>(n_min) < labels.size()) m.auc = roc_auc(labels, scored.scores);
    return m;
}

}  // namespace deepclust
