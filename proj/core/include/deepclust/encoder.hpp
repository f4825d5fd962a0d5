#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "deepclust/numcore/matrix.hpp"
#include "deepclust/numcore/rng.hpp"
#include "deepclust/numcore/tape.hpp"

namespace deepclust {

// MLP embedding map: [affine -> ReLU] x hidden, dropout, affine to S dims.
struct EncoderConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden{64, 64};
    std::size_t embedding_dim = 32;
    double dropout_rate = 0.3;

    void validate() const;  // throws InvalidConfig
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double epsilon = 1e-7;

    // lr 1e-5 as used with pre-trained image backbones.
    static AdamConfig reference() { return {1e-5, 0.9, 0.99, 1e-7}; }
    void validate() const;  // throws InvalidConfig
};

struct DenseLayer {
    Matrix weight;  // out x in
    Matrix bias;    // out x 1
};

struct AdamState {
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::uint64_t step = 0;
};

// One Adam update with bias correction over an ordered parameter list.
// Moments are lazily sized on the first call. Throws ShapeMismatch.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamConfig& config);

struct EncoderParams {
    EncoderConfig config;
    std::vector<DenseLayer> layers;  // hidden layers, then the embedding layer
    AdamState adam;

    // He-uniform weights, zero biases.
    static EncoderParams init(const EncoderConfig& config, Rng& rng);

    // Weight then bias for every layer, in layer order.
    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
    std::size_t parameter_count() const;
};

struct EncoderGraph {
    Var output;                 // S x B embeddings
    std::vector<Var> tensors;   // leaves, same order as EncoderParams::tensors()
};

// Records the forward pass on `tape`. x is D x B. Dropout is applied only
// when train_mode is set (rng required then). Throws ShapeMismatch.
EncoderGraph forward(Tape& tape, const EncoderParams& params, const Matrix& x, bool train_mode, Rng* rng);

// Eval-mode forward without a tape.
Matrix embed(const EncoderParams& params, const Matrix& x);

// Leaf gradients after tape.backward(), aligned with EncoderParams::tensors().
std::vector<Matrix> gradients(const Tape& tape, const EncoderGraph& graph);

void adam_step(EncoderParams& params, std::span<const Matrix> grads, const AdamConfig& config);

}  // namespace deepclust
