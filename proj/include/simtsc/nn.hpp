#pragma once

// Layers with explicit forward/backward passes, the three backbone
// architectures, and the joint backbone + graph-convolution model.
//
// Forward caches whatever backward needs; backward accumulates parameter
// gradients and returns the input gradient. All loops run in a fixed order,
// so a forward/backward pass is a deterministic function of inputs, weights
// and the dropout stream.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "simtsc/graph.hpp"
#include "simtsc/rng.hpp"
#include "simtsc/tensor.hpp"

namespace simtsc {

using NamedParams = std::vector<std::pair<std::string, Parameter*>>;
using NamedBuffers = std::vector<std::pair<std::string, std::vector<double>*>>;

// 1-D cross-correlation with zero "same" padding; kernel size must be odd so
// the time axis is preserved for residual additions.
struct Conv1d {
    size_t in_ch = 0, out_ch = 0, kernel = 0;
    Parameter weight;  // [out][in][kernel]
    Parameter bias;    // [out]

    Conv1d() = default;
    Conv1d(size_t in, size_t out, size_t k);
    void init(Rng& rng);
    Tensor forward(const Tensor& x, bool training);  // [B,Cin,T] -> [B,Cout,T]
    Tensor backward(const Tensor& grad_out);
    void collect(const std::string& prefix, NamedParams& params);

private:
    std::vector<double> xpad_;  // [B][Cin][T+2p], kept for the weight gradient
    size_t cached_batch_ = 0, cached_len_ = 0;
};

struct BatchNorm1d {
    size_t channels = 0;
    Parameter gamma, beta;
    std::vector<double> running_mean, running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    BatchNorm1d() = default;
    explicit BatchNorm1d(size_t c);
    Tensor forward(const Tensor& x, bool training);  // [B,C,T]
    Tensor backward(const Tensor& grad_out);
    void collect(const std::string& prefix, NamedParams& params, NamedBuffers& buffers);

private:
    std::vector<double> xhat_;
    std::vector<double> invstd_;  // per channel
    size_t cached_batch_ = 0, cached_len_ = 0;
    bool cached_training_ = false;
};

struct Relu {
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out);

private:
    std::vector<uint8_t> mask_;
};

// Inverted dropout: train zeroes with probability p and scales survivors by
// 1/(1-p); eval is the identity.
struct Dropout {
    double p = 0.0;

    Dropout() = default;
    explicit Dropout(double p_);
    Tensor forward(const Tensor& x, bool training, Rng& rng);
    Tensor backward(const Tensor& grad_out);

private:
    std::vector<uint8_t> keep_;
};

struct GlobalAvgPool {
    Tensor forward(const Tensor& x, bool training);  // [B,C,T] -> [B,C]
    Tensor backward(const Tensor& grad_out);

private:
    size_t cached_len_ = 0;
};

struct Linear {
    size_t in_f = 0, out_f = 0;
    Parameter weight;  // [out][in]
    Parameter bias;    // [out]

    Linear() = default;
    Linear(size_t in, size_t out);
    void init(Rng& rng);
    Tensor forward(const Tensor& x, bool training);  // [N,in] -> [N,out]
    Tensor backward(const Tensor& grad_out);
    void collect(const std::string& prefix, NamedParams& params);

private:
    Tensor cached_x_;
};

// Graph convolution: aggregate(adjacency, x @ W) + bias. Adjacency weights
// are constants, so no gradient flows into the graph.
struct GcnLayer {
    size_t in_f = 0, out_f = 0;
    Parameter weight;  // [out][in]
    Parameter bias;    // [out]

    GcnLayer() = default;
    GcnLayer(size_t in, size_t out);
    void init(Rng& rng);
    Tensor forward(const SparseGraph& adj, const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out);
    void collect(const std::string& prefix, NamedParams& params);

private:
    Tensor cached_x_;
    const SparseGraph* cached_adj_ = nullptr;
};

// Conv -> BN -> ReLU three times, then ReLU(h + shortcut). When the input
// channel count differs from the output the shortcut is a 1x1 convolution
// followed by batch normalization.
struct ResidualBlock {
    ResidualBlock() = default;
    ResidualBlock(size_t in_ch, size_t out_ch, const std::vector<size_t>& kernels);
    void init(Rng& rng);
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out);
    void collect(const std::string& prefix, NamedParams& params, NamedBuffers& buffers);

    Conv1d conv1, conv2, conv3;
    BatchNorm1d bn1, bn2, bn3;
    Relu relu1, relu2, relu3, relu_out;
    bool project = false;
    Conv1d shortcut_conv;
    BatchNorm1d shortcut_bn;
};

enum class BackboneKind { resnet, fcn, mlp };

struct BackboneSpec {
    BackboneKind kind = BackboneKind::resnet;
    size_t channels = 64;
    std::vector<size_t> kernels{7, 5, 3};
    size_t hidden = 500;
    std::vector<double> mlp_dropout{0.1, 0.2, 0.2, 0.3};

    static BackboneSpec resnet();
    static BackboneSpec fcn();
    static BackboneSpec mlp();
};

const char* backbone_kind_name(BackboneKind kind);
BackboneKind backbone_kind_from_name(const std::string& name);

struct Backbone {
    virtual ~Backbone() = default;
    virtual Tensor forward(const Tensor& x, bool training, Rng& dropout_rng) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void collect(NamedParams& params, NamedBuffers& buffers) = 0;
    virtual size_t feature_dim() const = 0;
};

std::unique_ptr<Backbone> make_backbone(const BackboneSpec& spec, size_t in_channels,
                                        size_t in_len, Rng& init_rng);

enum class HeadKind { gcn, linear };

struct ModelConfig {
    BackboneSpec backbone;
    size_t in_channels = 1;
    size_t in_len = 0;
    size_t num_classes = 2;
    HeadKind head = HeadKind::gcn;
    size_t gcn_layers = 1;
    size_t gcn_hidden = 64;
    double gcn_dropout = 0.5;
};

struct Model {
    ModelConfig cfg;
    std::unique_ptr<Backbone> backbone;
    std::vector<GcnLayer> gcn;
    std::vector<Relu> gcn_relu;
    std::vector<Dropout> gcn_drop;
    Linear fc;  // linear head

    static Model build(const ModelConfig& cfg, Rng& init_rng);

    // adj is required for a gcn head and ignored for a linear head.
    Tensor forward(const Tensor& x, const SparseGraph* adj, bool training, Rng& dropout_rng);
    void backward(const Tensor& grad_logits);

    NamedParams named_parameters();
    NamedBuffers named_buffers();
    void adam_step_all(double lr, double beta1, double beta2, double eps);

    // Flat copy of all parameters and buffers, for best-epoch checkpointing.
    std::vector<double> state() ;
    void set_state(const std::vector<double>& state);
};

// Masked softmax cross-entropy, summed (not averaged) over masked rows.
// grad_out receives d(loss)/d(logits): softmax - onehot on masked rows,
// zero elsewhere.
double softmax_cross_entropy(const Tensor& logits, const std::vector<double>& onehot,
                             const std::vector<uint8_t>& mask, Tensor& grad_out);

// Row-wise softmax probabilities of [N,C] logits.
std::vector<double> softmax_rows(const Tensor& logits);

// Checkpoint file ("STSW"): magic, u32 version, architecture descriptor,
// then named f64 blobs. Round-trips losslessly.
void save_checkpoint(Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace simtsc
