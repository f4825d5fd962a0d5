#include "deepclust/encoder.hpp"

#include <cmath>
#include <string>

#include "deepclust/errors.hpp"

namespace deepclust {

void EncoderConfig::validate() const {
    if (input_dim == 0) throw InvalidConfig("encoder input_dim must be >= 1");
    if (embedding_dim < 2) throw InvalidConfig("embedding_dim must be >= 2");
    for (std::size_t h : hidden) {
        if (h == 0) throw InvalidConfig("hidden layer sizes must be >= 1");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidConfig("dropout_rate must be in [0, 1)");
}

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InvalidConfig("learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidConfig("beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidConfig("beta2 must be in [0, 1)");
    if (!(epsilon > 0.0)) throw InvalidConfig("epsilon must be > 0");
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamConfig& config) {
    if (params.size() != grads.size()) throw ShapeMismatch("adam: parameter/gradient count differs");
    if (state.first_moment.empty()) {
        for (const Matrix* p : params) {
            state.first_moment.emplace_back(p->rows(), p->cols());
            state.second_moment.emplace_back(p->rows(), p->cols());
        }
    }
    if (state.first_moment.size() != params.size()) throw ShapeMismatch("adam: state size differs");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(grads[i]) || !params[i]->same_shape(state.first_moment[i])) {
            throw ShapeMismatch("adam: gradient " + std::to_string(i) + " shape differs from parameter");
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& w = *params[i];
        Matrix& m = state.first_moment[i];
        Matrix& v = state.second_moment[i];
        const Matrix& g = grads[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
            const double m_hat = m[k] / c1;
            const double v_hat = v[k] / c2;
            w[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

EncoderParams EncoderParams::init(const EncoderConfig& config, Rng& rng) {
    config.validate();
    EncoderParams p;
    p.config = config;
    std::size_t fan_in = config.input_dim;
    auto add_layer = [&](std::size_t out) {
        DenseLayer layer{Matrix(out, fan_in), Matrix(out, 1)};
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (double& w : layer.weight.data()) w = rng.uniform(-limit, limit);
        p.layers.push_back(std::move(layer));
        fan_in = out;
    };
    for (std::size_t h : config.hidden) add_layer(h);
    add_layer(config.embedding_dim);
    return p;
}

std::vector<Matrix*> EncoderParams::tensors() {
    std::vector<Matrix*> out;
    for (auto& layer : layers) {
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
    return out;
}

std::vector<const Matrix*> EncoderParams::tensors() const {
    std::vector<const Matrix*> out;
    for (const auto& layer : layers) {
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
    return out;
}

std::size_t EncoderParams::parameter_count() const {
    std::size_t n = 0;
    for (const Matrix* t : tensors()) n += t->size();
    return n;
}

namespace {

void check_input(const EncoderParams& params, const Matrix& x) {
    if (params.layers.empty()) throw InvalidConfig("encoder has no layers");
    if (x.rows() != params.layers.front().weight.cols()) {
        throw ShapeMismatch("encoder expects " + std::to_string(params.layers.front().weight.cols()) +
                            " input features, got " + std::to_string(x.rows()));
    }
    if (x.cols() == 0) throw ShapeMismatch("encoder input has no columns");
}

}  // namespace

EncoderGraph forward(Tape& tape, const EncoderParams& params, const Matrix& x, bool train_mode, Rng* rng) {
    check_input(params, x);
    const double rate = params.config.dropout_rate;
    if (train_mode && rate > 0.0 && rng == nullptr) throw InvalidConfig("train-mode forward needs an rng");

    EncoderGraph graph;
    Var h = tape.constant(x);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const DenseLayer& layer = params.layers[l];
        Var w = tape.leaf(layer.weight);
        Var b = tape.leaf(layer.bias);
        graph.tensors.push_back(w);
        graph.tensors.push_back(b);
        const bool last = l + 1 == params.layers.size();
        if (last && train_mode && rate > 0.0) {
            Matrix mask(h.rows(), h.cols());
            const double keep_scale = 1.0 / (1.0 - rate);
            for (double& m : mask.data()) m = rng->bernoulli(rate) ? 0.0 : keep_scale;
            h = hadamard_const(h, mask);
        }
        h = add_bias(matmul(w, h), b);
        if (!last) h = relu(h);
    }
    graph.output = h;
    return graph;
}

Matrix embed(const EncoderParams& params, const Matrix& x) {
    check_input(params, x);
    Matrix h = x;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const DenseLayer& layer = params.layers[l];
        Matrix z = matmul(layer.weight, h);
        for (std::size_t r = 0; r < z.rows(); ++r) {
            for (std::size_t c = 0; c < z.cols(); ++c) z(r, c) += layer.bias[r];
        }
        if (l + 1 < params.layers.size()) {
            for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
        }
        h = std::move(z);
    }
    return h;
}

std::vector<Matrix> gradients(const Tape& tape, const EncoderGraph& graph) {
    std::vector<Matrix> out;
    for (const Var& v : graph.tensors) {
        const Matrix& g = tape.grad(v);
        out.push_back(g.same_shape(v.value()) ? g : Matrix(v.rows(), v.cols()));
    }
    return out;
}

void adam_step(EncoderParams& params, std::span<const Matrix> grads, const AdamConfig& config) {
    const std::vector<Matrix*> tensors = params.tensors();
    adam_step(tensors, grads, params.adam, config);
}

}  // namespace deepclust
