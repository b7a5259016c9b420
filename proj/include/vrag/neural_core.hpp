/*
 * Copyright 2026 The vrag Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrag/error.hpp"
#include "vrag/random.hpp"
#include "vrag/vector_math.hpp"

namespace vrag {

enum class Activation { Relu };

/// Three fully connected layers: d_in -> h1 -> h2 -> d_out, ReLU on the two
/// hidden layers, linear output. weights[l] is dims[l+1] x dims[l], row-major.
struct MlpParams {
    std::array<std::size_t, 4> layer_dims{};
    std::array<std::vector<double>, 3> weights;
    std::array<Vector, 3> biases;
    Activation activation = Activation::Relu;

    [[nodiscard]] std::size_t in_dim() const { return layer_dims[0]; }
    [[nodiscard]] std::size_t out_dim() const { return layer_dims[3]; }

    bool operator==(const MlpParams&) const = default;
};

/// Gradients share the parameter layout.
using MlpGradients = MlpParams;

inline MlpParams zero_mlp(const std::array<std::size_t, 4>& dims) {
    for (std::size_t d : dims) {
        if (d == 0) fail(ErrorKind::InvalidConfig, "MLP layer widths must be positive");
    }
    MlpParams p;
    p.layer_dims = dims;
    for (std::size_t l = 0; l < 3; ++l) {
        p.weights[l].assign(dims[l + 1] * dims[l], 0.0);
        p.biases[l].assign(dims[l + 1], 0.0);
    }
    return p;
}

/// Glorot-uniform weights, zero biases.
inline MlpParams make_mlp(const std::array<std::size_t, 4>& dims, std::uint64_t seed) {
    MlpParams p = zero_mlp(dims);
    Rng rng(seed);
    for (std::size_t l = 0; l < 3; ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        for (double& w : p.weights[l]) w = rng.uniform(-limit, limit);
    }
    return p;
}

/// Parameter blocks in a fixed order (W0, b0, W1, b1, W2, b2).
inline std::array<std::vector<double>*, 6> parameter_blocks(MlpParams& p) {
    return {&p.weights[0], &p.biases[0], &p.weights[1], &p.biases[1], &p.weights[2], &p.biases[2]};
}

inline std::array<const std::vector<double>*, 6> parameter_blocks(const MlpParams& p) {
    return {&p.weights[0], &p.biases[0], &p.weights[1], &p.biases[1], &p.weights[2], &p.biases[2]};
}

struct ForwardTrace {
    std::array<Vector, 3> pre;   // affine outputs per layer
    std::array<Vector, 3> post;  // relu(pre) for hidden layers, logits for the last
};

namespace detail {

inline Vector affine(const std::vector<double>& w, const Vector& b, std::span<const double> x) {
    const std::size_t rows = b.size();
    const std::size_t cols = x.size();
    Vector out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = b[r];
        const double* row = w.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) sum += row[c] * x[c];
        out[r] = sum;
    }
    return out;
}

}  // namespace detail

inline ForwardTrace mlp_forward_trace(const MlpParams& p, std::span<const double> x) {
    if (x.size() != p.in_dim()) {
        fail(ErrorKind::DimMismatch, "MLP input " + std::to_string(x.size()) + " vs " + std::to_string(p.in_dim()));
    }
    ForwardTrace t;
    std::span<const double> input = x;
    for (std::size_t l = 0; l < 3; ++l) {
        t.pre[l] = detail::affine(p.weights[l], p.biases[l], input);
        t.post[l] = t.pre[l];
        if (l < 2) {
            for (double& v : t.post[l]) v = std::max(v, 0.0);
        }
        input = t.post[l];
    }
    return t;
}

inline Vector mlp_forward(const MlpParams& p, std::span<const double> x) { return mlp_forward_trace(p, x).post[2]; }

/// Max-subtracted softmax.
inline Vector softmax(std::span<const double> logits) {
    if (logits.empty()) fail(ErrorKind::EmptyInput, "softmax of empty logits");
    const double top = *std::max_element(logits.begin(), logits.end());
    Vector out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - top);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

/// -log softmax(logits)[label], computed as logsumexp - logit.
inline double cross_entropy_loss(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size()) {
        fail(ErrorKind::LabelOutOfRange, "label " + std::to_string(label) + " for " + std::to_string(logits.size()) + " classes");
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - top);
    return std::max(0.0, top + std::log(sum) - logits[label]);
}

/// Adds d(objective)/d(params) into `grads` given d(objective)/d(logits).
/// Returns d(objective)/d(input).
inline Vector mlp_backward_accumulate(const MlpParams& p, std::span<const double> x, const ForwardTrace& t,
                                      std::span<const double> d_logits, MlpGradients& grads) {
    if (d_logits.size() != p.out_dim()) fail(ErrorKind::DimMismatch, "output gradient size");
    Vector delta(d_logits.begin(), d_logits.end());
    for (std::size_t l = 3; l-- > 0;) {
        std::span<const double> input = l == 0 ? x : std::span<const double>(t.post[l - 1]);
        const std::size_t rows = p.layer_dims[l + 1];
        const std::size_t cols = p.layer_dims[l];
        auto& gw = grads.weights[l];
        auto& gb = grads.biases[l];
        Vector below(cols, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = delta[r];
            gb[r] += d;
            if (d == 0.0) continue;
            double* grow = gw.data() + r * cols;
            const double* wrow = p.weights[l].data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) {
                grow[c] += d * input[c];
                below[c] += d * wrow[c];
            }
        }
        if (l > 0) {
            for (std::size_t c = 0; c < cols; ++c) {
                if (!(t.pre[l - 1][c] > 0.0)) below[c] = 0.0;
            }
        }
        delta = std::move(below);
    }
    return delta;
}

/// Exact gradient of cross_entropy_loss(mlp_forward(p, x), label).
inline MlpGradients mlp_backward(const MlpParams& p, std::span<const double> x, std::size_t label) {
    const ForwardTrace t = mlp_forward_trace(p, x);
    if (label >= p.out_dim()) fail(ErrorKind::LabelOutOfRange, "label " + std::to_string(label));
    Vector d_logits = softmax(t.post[2]);
    d_logits[label] -= 1.0;
    MlpGradients g = zero_mlp(p.layer_dims);
    mlp_backward_accumulate(p, x, t, d_logits, g);
    return g;
}

/// Central differences of the cross-entropy objective, one parameter at a time.
inline MlpGradients finite_difference_gradients(const MlpParams& p, std::span<const double> x, std::size_t label, double h = 1e-5) {
    MlpParams probe = p;
    MlpGradients g = zero_mlp(p.layer_dims);
    auto probe_blocks = parameter_blocks(probe);
    auto grad_blocks = parameter_blocks(g);
    for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
        auto& values = *probe_blocks[b];
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + h;
            const double up = cross_entropy_loss(mlp_forward(probe, x), label);
            values[i] = saved - h;
            const double down = cross_entropy_loss(mlp_forward(probe, x), label);
            values[i] = saved;
            (*grad_blocks[b])[i] = (up - down) / (2.0 * h);
        }
    }
    return g;
}

/// max over parameters of |a - b| / max(|a|, |b|, floor).
inline double max_relative_error(const MlpGradients& a, const MlpGradients& b, double floor = 1e-6) {
    const auto ab = parameter_blocks(a);
    const auto bb = parameter_blocks(b);
    double worst = 0.0;
    for (std::size_t k = 0; k < ab.size(); ++k) {
        for (std::size_t i = 0; i < ab[k]->size(); ++i) {
            const double x = (*ab[k])[i];
            const double y = (*bb[k])[i];
            worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor}));
        }
    }
    return worst;
}

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

inline void validate(const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) fail(ErrorKind::InvalidConfig, "learning_rate must be > 0");
    if (cfg.batch_size < 1) fail(ErrorKind::InvalidConfig, "batch_size must be >= 1");
}

/// Adam or plain SGD over an arbitrary list of parameter blocks. Moment
/// buffers are sized on the first step and tied to block order.
class Optimizer {
  public:
    explicit Optimizer(const TrainConfig& cfg) : cfg_(cfg) {}

    void step(std::span<std::vector<double>* const> params, std::span<const std::vector<double>* const> grads) {
        if (params.size() != grads.size()) fail(ErrorKind::DimMismatch, "optimizer block count");
        if (cfg_.optimizer == OptimizerKind::Sgd) {
            for (std::size_t b = 0; b < params.size(); ++b) {
                auto& p = *params[b];
                const auto& g = *grads[b];
                for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg_.learning_rate * g[i];
            }
            return;
        }
        if (first_.empty()) {
            for (auto* p : params) {
                first_.emplace_back(p->size(), 0.0);
                second_.emplace_back(p->size(), 0.0);
            }
        }
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t b = 0; b < params.size(); ++b) {
            auto& p = *params[b];
            const auto& g = *grads[b];
            auto& m = first_[b];
            auto& v = second_[b];
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                p[i] -= cfg_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
            }
        }
    }

  private:
    TrainConfig cfg_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> first_;
    std::vector<std::vector<double>> second_;
};

struct LabeledExample {
    Vector x;
    std::size_t label = 0;
};

struct TrainResult {
    MlpParams params;
    std::vector<double> loss_trace;  // mean per-example loss seen during each epoch
};

inline std::size_t predict_class(const MlpParams& p, std::span<const double> x) {
    const Vector logits = mlp_forward(p, x);
    return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

inline double accuracy(const MlpParams& p, std::span<const LabeledExample> data) {
    if (data.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& ex : data) hits += predict_class(p, ex.x) == ex.label ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

/// Mini-batch softmax cross-entropy training. Each epoch reshuffles with the
/// seeded generator, so the whole parameter trajectory is a function of
/// (params, data, cfg).
inline TrainResult train(MlpParams params, std::span<const LabeledExample> data, const TrainConfig& cfg) {
    validate(cfg);
    if (data.empty()) fail(ErrorKind::EmptyDataset, "no training examples");
    for (const auto& ex : data) {
        if (ex.x.size() != params.in_dim()) fail(ErrorKind::DimMismatch, "training input width");
        if (ex.label >= params.out_dim()) fail(ErrorKind::LabelOutOfRange, "label " + std::to_string(ex.label));
    }
    TrainResult result{std::move(params), {}};
    Optimizer opt(cfg);
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    MlpGradients grads = zero_mlp(result.params.layer_dims);
    auto param_blocks = parameter_blocks(result.params);
    auto grad_blocks = parameter_blocks(grads);
    std::array<const std::vector<double>*, 6> grad_view{};
    std::copy(grad_blocks.begin(), grad_blocks.end(), grad_view.begin());

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            for (auto* block : grad_blocks) std::fill(block->begin(), block->end(), 0.0);
            for (std::size_t j = start; j < end; ++j) {
                const auto& ex = data[order[j]];
                const ForwardTrace t = mlp_forward_trace(result.params, ex.x);
                loss_sum += cross_entropy_loss(t.post[2], ex.label);
                Vector d_logits = softmax(t.post[2]);
                d_logits[ex.label] -= 1.0;
                mlp_backward_accumulate(result.params, ex.x, t, d_logits, grads);
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            for (auto* block : grad_blocks) {
                for (double& g : *block) g *= scale;
            }
            opt.step(param_blocks, grad_view);
        }
        result.loss_trace.push_back(loss_sum / static_cast<double>(data.size()));
    }
    return result;
}

inline nlohmann::ordered_json mlp_to_json(const MlpParams& p, std::string_view mode) {
    nlohmann::ordered_json j;
    j["layer_dims"] = p.layer_dims;
    j["weights"] = nlohmann::ordered_json::array();
    for (std::size_t l = 0; l < 3; ++l) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        const std::size_t cols = p.layer_dims[l];
        for (std::size_t r = 0; r < p.layer_dims[l + 1]; ++r) {
            rows.push_back(std::vector<double>(p.weights[l].begin() + static_cast<std::ptrdiff_t>(r * cols),
                                               p.weights[l].begin() + static_cast<std::ptrdiff_t>((r + 1) * cols)));
        }
        j["weights"].push_back(std::move(rows));
    }
    j["biases"] = p.biases;
    j["activation"] = "relu";
    j["mode"] = mode;
    return j;
}

inline MlpParams mlp_from_json(const nlohmann::json& j) {
    try {
        const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
        if (dims.size() != 4) fail(ErrorKind::SchemaViolation, "layer_dims (expected 4 entries, i.e. 3 layers)");
        if (j.at("activation").get<std::string>() != "relu") fail(ErrorKind::SchemaViolation, "activation (only relu)");
        MlpParams p = zero_mlp({dims[0], dims[1], dims[2], dims[3]});
        const auto& weights = j.at("weights");
        const auto& biases = j.at("biases");
        if (weights.size() != 3 || biases.size() != 3) fail(ErrorKind::SchemaViolation, "weights/biases (expected 3 layers)");
        for (std::size_t l = 0; l < 3; ++l) {
            const auto rows = weights[l].get<std::vector<std::vector<double>>>();
            if (rows.size() != dims[l + 1]) fail(ErrorKind::SchemaViolation, "weights[" + std::to_string(l) + "] row count");
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != dims[l]) fail(ErrorKind::SchemaViolation, "weights[" + std::to_string(l) + "] column count");
                std::copy(rows[r].begin(), rows[r].end(), p.weights[l].begin() + static_cast<std::ptrdiff_t>(r * dims[l]));
            }
            p.biases[l] = biases[l].get<Vector>();
            if (p.biases[l].size() != dims[l + 1]) fail(ErrorKind::SchemaViolation, "biases[" + std::to_string(l) + "] size");
        }
        for (const auto* block : parameter_blocks(p)) {
            if (!all_finite(*block)) fail(ErrorKind::NonFiniteValue, "MLP parameter");
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaViolation, std::string("MLP JSON: ") + e.what());
    }
}

}  // namespace vrag
