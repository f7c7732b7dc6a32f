#include "simtsc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "simtsc/binio.hpp"
#include "simtsc/kernels.hpp"

namespace simtsc {

namespace {

void check_shape(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("shape mismatch: ") + what);
}

void init_uniform(Parameter& p, double bound, Rng& rng) {
    for (double& v : p.value.data) v = rng.next_uniform(-bound, bound);
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv1d

Conv1d::Conv1d(size_t in, size_t out, size_t k) : in_ch(in), out_ch(out), kernel(k) {
    if (k % 2 == 0) throw std::invalid_argument("Conv1d: kernel size must be odd");
    weight = Parameter({out, in, k});
    bias = Parameter({out});
}

void Conv1d::init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * kernel));
    init_uniform(weight, bound, rng);
    init_uniform(bias, bound, rng);
}

// Output channels are processed in blocks of eight so the block's output
// rows stay cache-resident while each padded input row streams through once
// per block. The per-element accumulation order over (ci, s) is unchanged,
// so blocking does not alter results.
static constexpr size_t kConvBlock = 8;

Tensor Conv1d::forward(const Tensor& x, bool /*training*/) {
    check_shape(x.shape.size() == 3 && x.dim(1) == in_ch, "Conv1d input");
    const size_t batch = x.dim(0), t_len = x.dim(2);
    const size_t pad = (kernel - 1) / 2;
    const size_t padded = t_len + 2 * pad;

    xpad_.resize(batch * in_ch * padded);
    for (size_t b = 0; b < batch; ++b)
        for (size_t ci = 0; ci < in_ch; ++ci) {
            double* dst = xpad_.data() + (b * in_ch + ci) * padded;
            std::fill(dst, dst + pad, 0.0);
            const double* src = x.data.data() + (b * in_ch + ci) * t_len;
            std::copy(src, src + t_len, dst + pad);
            std::fill(dst + pad + t_len, dst + padded, 0.0);
        }
    cached_batch_ = batch;
    cached_len_ = t_len;

    Tensor y({batch, out_ch, t_len});
    const double* w = weight.data();
    for (size_t b = 0; b < batch; ++b) {
        for (size_t co0 = 0; co0 < out_ch; co0 += kConvBlock) {
            const size_t co1 = std::min(out_ch, co0 + kConvBlock);
            for (size_t co = co0; co < co1; ++co) {
                double* yrow = y.data.data() + (b * out_ch + co) * t_len;
                std::fill(yrow, yrow + t_len, bias.data()[co]);
            }
            for (size_t ci = 0; ci < in_ch; ++ci) {
                const double* xrow = xpad_.data() + (b * in_ch + ci) * padded;
                for (size_t co = co0; co < co1; ++co) {
                    double* yrow = y.data.data() + (b * out_ch + co) * t_len;
                    const double* wrow = w + (co * in_ch + ci) * kernel;
                    kernels::conv_taps(yrow, xrow, wrow, kernel, t_len);
                }
            }
        }
    }
    return y;
}

Tensor Conv1d::backward(const Tensor& grad_out) {
    const size_t batch = cached_batch_, t_len = cached_len_;
    check_shape(grad_out.shape.size() == 3 && grad_out.dim(0) == batch &&
                    grad_out.dim(1) == out_ch && grad_out.dim(2) == t_len,
                "Conv1d grad");
    const size_t pad = (kernel - 1) / 2;
    const size_t padded = t_len + 2 * pad;

    Tensor dx({batch, in_ch, t_len});
    std::vector<double> dxpad(in_ch * padded);
    const double* w = weight.data();
    double* dw = weight.grad();
    double* db = bias.grad();

    for (size_t b = 0; b < batch; ++b) {
        std::fill(dxpad.begin(), dxpad.end(), 0.0);
        for (size_t co0 = 0; co0 < out_ch; co0 += kConvBlock) {
            const size_t co1 = std::min(out_ch, co0 + kConvBlock);
            for (size_t co = co0; co < co1; ++co)
                db[co] += kernels::sum(grad_out.data.data() + (b * out_ch + co) * t_len, t_len);
            for (size_t ci = 0; ci < in_ch; ++ci) {
                const double* xrow = xpad_.data() + (b * in_ch + ci) * padded;
                double* dxrow = dxpad.data() + ci * padded;
                for (size_t co = co0; co < co1; ++co) {
                    const double* gro = grad_out.data.data() + (b * out_ch + co) * t_len;
                    const double* wrow = w + (co * in_ch + ci) * kernel;
                    double* dwrow = dw + (co * in_ch + ci) * kernel;
                    kernels::dot_taps(gro, xrow, kernel, t_len, dwrow);

                    // dxpad[u] += sum_s w[s]*gro[u-s]: fused interior with the
                    // reversed taps, explicit partial sums at the edges.
                    double wrev[kernels::kMaxTaps];
                    for (size_t s = 0; s < kernel; ++s) wrev[s] = wrow[kernel - 1 - s];
                    if (t_len >= kernel)
                        kernels::conv_taps(dxrow + (kernel - 1), gro, wrev, kernel,
                                           t_len - kernel + 1);
                    auto edge_cell = [&](size_t u) {
                        const size_t s_lo = u + 1 > t_len ? u + 1 - t_len : 0;
                        const size_t s_hi = std::min(kernel - 1, u);
                        double acc = dxrow[u];
                        for (size_t s = s_lo; s <= s_hi; ++s) acc += wrow[s] * gro[u - s];
                        dxrow[u] = acc;
                    };
                    const size_t edge_hi = t_len + kernel - 1;
                    const size_t left_stop = std::min(kernel - 1, edge_hi);
                    for (size_t u = 0; u < left_stop; ++u) edge_cell(u);
                    for (size_t u = std::max(t_len, left_stop); u < edge_hi; ++u) edge_cell(u);
                }
            }
        }
        for (size_t ci = 0; ci < in_ch; ++ci) {
            const double* src = dxpad.data() + ci * padded + pad;
            double* dst = dx.data.data() + (b * in_ch + ci) * t_len;
            std::copy(src, src + t_len, dst);
        }
    }
    return dx;
}

void Conv1d::collect(const std::string& prefix, NamedParams& params) {
    params.emplace_back(prefix + ".weight", &weight);
    params.emplace_back(prefix + ".bias", &bias);
}

// ---------------------------------------------------------------------------
// BatchNorm1d

BatchNorm1d::BatchNorm1d(size_t c) : channels(c) {
    gamma = Parameter({c});
    beta = Parameter({c});
    std::fill(gamma.value.data.begin(), gamma.value.data.end(), 1.0);
    running_mean.assign(c, 0.0);
    running_var.assign(c, 1.0);
}

Tensor BatchNorm1d::forward(const Tensor& x, bool training) {
    check_shape(x.shape.size() == 3 && x.dim(1) == channels, "BatchNorm1d input");
    const size_t batch = x.dim(0), t_len = x.dim(2);
    const size_t count = batch * t_len;
    if (training && count < 2)
        throw std::invalid_argument("BatchNorm1d: training needs at least 2 values per channel");

    cached_batch_ = batch;
    cached_len_ = t_len;
    cached_training_ = training;
    xhat_.resize(x.data.size());
    invstd_.resize(channels);

    Tensor y(x.shape);
    for (size_t c = 0; c < channels; ++c) {
        double mean, var;
        if (training) {
            double total = 0.0;
            for (size_t b = 0; b < batch; ++b)
                total += kernels::sum(x.data.data() + (b * channels + c) * t_len, t_len);
            mean = total / static_cast<double>(count);
            double sq = 0.0;
            for (size_t b = 0; b < batch; ++b)
                sq += kernels::sum_sq_diff(x.data.data() + (b * channels + c) * t_len, mean,
                                           t_len);
            var = sq / static_cast<double>(count);
            running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean;
            const double unbiased =
                count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1)
                          : var;
            running_var[c] = (1.0 - momentum) * running_var[c] + momentum * unbiased;
        } else {
            mean = running_mean[c];
            var = running_var[c];
        }
        const double invstd = 1.0 / std::sqrt(var + eps);
        invstd_[c] = invstd;
        const double g = gamma.data()[c], bv = beta.data()[c];
        for (size_t b = 0; b < batch; ++b) {
            const double* xr = x.data.data() + (b * channels + c) * t_len;
            double* hr = xhat_.data() + (b * channels + c) * t_len;
            double* yr = y.data.data() + (b * channels + c) * t_len;
            for (size_t t = 0; t < t_len; ++t) {
                const double h = (xr[t] - mean) * invstd;
                hr[t] = h;
                yr[t] = g * h + bv;
            }
        }
    }
    return y;
}

Tensor BatchNorm1d::backward(const Tensor& grad_out) {
    const size_t batch = cached_batch_, t_len = cached_len_;
    check_shape(grad_out.shape.size() == 3 && grad_out.dim(0) == batch &&
                    grad_out.dim(1) == channels && grad_out.dim(2) == t_len,
                "BatchNorm1d grad");
    const double count = static_cast<double>(batch * t_len);

    Tensor dx(grad_out.shape);
    for (size_t c = 0; c < channels; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (size_t b = 0; b < batch; ++b) {
            const double* gr = grad_out.data.data() + (b * channels + c) * t_len;
            const double* hr = xhat_.data() + (b * channels + c) * t_len;
            sum_dy += kernels::sum(gr, t_len);
            sum_dy_xhat += kernels::dot(gr, hr, t_len);
        }
        gamma.grad()[c] += sum_dy_xhat;
        beta.grad()[c] += sum_dy;

        const double g = gamma.data()[c];
        const double invstd = invstd_[c];
        if (cached_training_) {
            const double k1 = sum_dy / count, k2 = sum_dy_xhat / count;
            for (size_t b = 0; b < batch; ++b) {
                const double* gr = grad_out.data.data() + (b * channels + c) * t_len;
                const double* hr = xhat_.data() + (b * channels + c) * t_len;
                double* dr = dx.data.data() + (b * channels + c) * t_len;
                for (size_t t = 0; t < t_len; ++t)
                    dr[t] = g * invstd * (gr[t] - k1 - hr[t] * k2);
            }
        } else {
            for (size_t b = 0; b < batch; ++b) {
                const double* gr = grad_out.data.data() + (b * channels + c) * t_len;
                double* dr = dx.data.data() + (b * channels + c) * t_len;
                for (size_t t = 0; t < t_len; ++t) dr[t] = g * invstd * gr[t];
            }
        }
    }
    return dx;
}

void BatchNorm1d::collect(const std::string& prefix, NamedParams& params,
                          NamedBuffers& buffers) {
    params.emplace_back(prefix + ".gamma", &gamma);
    params.emplace_back(prefix + ".beta", &beta);
    buffers.emplace_back(prefix + ".running_mean", &running_mean);
    buffers.emplace_back(prefix + ".running_var", &running_var);
}

// ---------------------------------------------------------------------------
// Relu / Dropout / GlobalAvgPool

Tensor Relu::forward(const Tensor& x, bool training) {
    Tensor y(x.shape);
    if (training) mask_.assign(x.data.size(), 0);
    for (size_t i = 0; i < x.data.size(); ++i) {
        const bool pos = x.data[i] > 0.0;
        y.data[i] = pos ? x.data[i] : 0.0;
        if (training && pos) mask_[i] = 1;
    }
    return y;
}

Tensor Relu::backward(const Tensor& grad_out) {
    check_shape(grad_out.data.size() == mask_.size(), "Relu grad");
    Tensor dx(grad_out.shape);
    for (size_t i = 0; i < grad_out.data.size(); ++i)
        dx.data[i] = mask_[i] ? grad_out.data[i] : 0.0;
    return dx;
}

Dropout::Dropout(double p_) : p(p_) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("Dropout: p must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, bool training, Rng& rng) {
    if (!training || p == 0.0) {
        keep_.clear();
        return x;
    }
    const double scale = 1.0 / (1.0 - p);
    keep_.assign(x.data.size(), 0);
    Tensor y(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) {
        if (rng.next_double() >= p) {
            keep_[i] = 1;
            y.data[i] = x.data[i] * scale;
        }
    }
    return y;
}

Tensor Dropout::backward(const Tensor& grad_out) {
    if (keep_.empty()) return grad_out;
    check_shape(grad_out.data.size() == keep_.size(), "Dropout grad");
    const double scale = 1.0 / (1.0 - p);
    Tensor dx(grad_out.shape);
    for (size_t i = 0; i < grad_out.data.size(); ++i)
        dx.data[i] = keep_[i] ? grad_out.data[i] * scale : 0.0;
    return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool /*training*/) {
    check_shape(x.shape.size() == 3, "GlobalAvgPool input");
    const size_t batch = x.dim(0), ch = x.dim(1), t_len = x.dim(2);
    cached_len_ = t_len;
    Tensor y({batch, ch});
    for (size_t b = 0; b < batch; ++b)
        for (size_t c = 0; c < ch; ++c)
            y.data[b * ch + c] = kernels::sum(x.data.data() + (b * ch + c) * t_len, t_len) /
                                 static_cast<double>(t_len);
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
    check_shape(grad_out.shape.size() == 2, "GlobalAvgPool grad");
    const size_t batch = grad_out.dim(0), ch = grad_out.dim(1), t_len = cached_len_;
    Tensor dx({batch, ch, t_len});
    for (size_t b = 0; b < batch; ++b)
        for (size_t c = 0; c < ch; ++c) {
            const double g = grad_out.data[b * ch + c] / static_cast<double>(t_len);
            double* dr = dx.data.data() + (b * ch + c) * t_len;
            std::fill(dr, dr + t_len, g);
        }
    return dx;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(size_t in, size_t out) : in_f(in), out_f(out) {
    weight = Parameter({out, in});
    bias = Parameter({out});
}

void Linear::init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_f));
    init_uniform(weight, bound, rng);
    init_uniform(bias, bound, rng);
}

Tensor Linear::forward(const Tensor& x, bool /*training*/) {
    check_shape(x.shape.size() == 2 && x.dim(1) == in_f, "Linear input");
    const size_t rows = x.dim(0);
    cached_x_ = x;
    Tensor y({rows, out_f});
    const double* w = weight.data();
    for (size_t i = 0; i < rows; ++i) {
        const double* xr = x.data.data() + i * in_f;
        double* yr = y.data.data() + i * out_f;
        for (size_t o = 0; o < out_f; ++o)
            yr[o] = kernels::dot(xr, w + o * in_f, in_f) + bias.data()[o];
    }
    return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
    const size_t rows = cached_x_.dim(0);
    check_shape(grad_out.shape.size() == 2 && grad_out.dim(0) == rows &&
                    grad_out.dim(1) == out_f,
                "Linear grad");
    Tensor dx({rows, in_f});
    const double* w = weight.data();
    double* dw = weight.grad();
    double* db = bias.grad();
    for (size_t i = 0; i < rows; ++i) {
        const double* xr = cached_x_.data.data() + i * in_f;
        const double* gr = grad_out.data.data() + i * out_f;
        double* dr = dx.data.data() + i * in_f;
        for (size_t o = 0; o < out_f; ++o) {
            const double g = gr[o];
            db[o] += g;
            kernels::axpy(dw + o * in_f, xr, g, in_f);
            kernels::axpy(dr, w + o * in_f, g, in_f);
        }
    }
    return dx;
}

void Linear::collect(const std::string& prefix, NamedParams& params) {
    params.emplace_back(prefix + ".weight", &weight);
    params.emplace_back(prefix + ".bias", &bias);
}

// ---------------------------------------------------------------------------
// GcnLayer

GcnLayer::GcnLayer(size_t in, size_t out) : in_f(in), out_f(out) {
    weight = Parameter({out, in});
    bias = Parameter({out});
}

void GcnLayer::init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_f));
    init_uniform(weight, bound, rng);
    init_uniform(bias, bound, rng);
}

Tensor GcnLayer::forward(const SparseGraph& adj, const Tensor& x, bool /*training*/) {
    check_shape(x.shape.size() == 2 && x.dim(1) == in_f, "GcnLayer input");
    check_shape(adj.n == x.dim(0), "GcnLayer adjacency");
    const size_t rows = x.dim(0);
    cached_x_ = x;
    cached_adj_ = &adj;

    // h = x W^T, then aggregate rows of h through the graph, then bias.
    Tensor h({rows, out_f});
    const double* w = weight.data();
    for (size_t i = 0; i < rows; ++i) {
        const double* xr = x.data.data() + i * in_f;
        double* hr = h.data.data() + i * out_f;
        for (size_t o = 0; o < out_f; ++o) hr[o] = kernels::dot(xr, w + o * in_f, in_f);
    }
    Tensor z({rows, out_f});
    for (size_t i = 0; i < rows; ++i) {
        double* zr = z.data.data() + i * out_f;
        for (const auto& e : adj.rows[i])
            kernels::axpy(zr, h.data.data() + static_cast<size_t>(e.col) * out_f, e.weight,
                          out_f);
        for (size_t o = 0; o < out_f; ++o) zr[o] += bias.data()[o];
    }
    return z;
}

Tensor GcnLayer::backward(const Tensor& grad_out) {
    const size_t rows = cached_x_.dim(0);
    check_shape(grad_out.shape.size() == 2 && grad_out.dim(0) == rows &&
                    grad_out.dim(1) == out_f,
                "GcnLayer grad");
    const SparseGraph& adj = *cached_adj_;

    double* db = bias.grad();
    Tensor dh({rows, out_f});
    for (size_t i = 0; i < rows; ++i) {
        const double* gr = grad_out.data.data() + i * out_f;
        for (size_t o = 0; o < out_f; ++o) db[o] += gr[o];
        for (const auto& e : adj.rows[i])
            kernels::axpy(dh.data.data() + static_cast<size_t>(e.col) * out_f, gr, e.weight,
                          out_f);
    }

    Tensor dx({rows, in_f});
    const double* w = weight.data();
    double* dw = weight.grad();
    for (size_t i = 0; i < rows; ++i) {
        const double* xr = cached_x_.data.data() + i * in_f;
        const double* ghr = dh.data.data() + i * out_f;
        double* dr = dx.data.data() + i * in_f;
        for (size_t o = 0; o < out_f; ++o) {
            const double g = ghr[o];
            kernels::axpy(dw + o * in_f, xr, g, in_f);
            kernels::axpy(dr, w + o * in_f, g, in_f);
        }
    }
    return dx;
}

void GcnLayer::collect(const std::string& prefix, NamedParams& params) {
    params.emplace_back(prefix + ".weight", &weight);
    params.emplace_back(prefix + ".bias", &bias);
}

// ---------------------------------------------------------------------------
// ResidualBlock

ResidualBlock::ResidualBlock(size_t in_ch, size_t out_ch, const std::vector<size_t>& kernels)
    : conv1(in_ch, out_ch, kernels.at(0)),
      conv2(out_ch, out_ch, kernels.at(1)),
      conv3(out_ch, out_ch, kernels.at(2)),
      bn1(out_ch),
      bn2(out_ch),
      bn3(out_ch),
      project(in_ch != out_ch),
      shortcut_conv(project ? Conv1d(in_ch, out_ch, 1) : Conv1d()),
      shortcut_bn(project ? BatchNorm1d(out_ch) : BatchNorm1d()) {}

void ResidualBlock::init(Rng& rng) {
    conv1.init(rng);
    conv2.init(rng);
    conv3.init(rng);
    if (project) shortcut_conv.init(rng);
}

Tensor ResidualBlock::forward(const Tensor& x, bool training) {
    Tensor h = relu1.forward(bn1.forward(conv1.forward(x, training), training), training);
    h = relu2.forward(bn2.forward(conv2.forward(h, training), training), training);
    h = relu3.forward(bn3.forward(conv3.forward(h, training), training), training);
    Tensor s = project
                   ? shortcut_bn.forward(shortcut_conv.forward(x, training), training)
                   : x;
    check_shape(s.data.size() == h.data.size(), "ResidualBlock shortcut");
    for (size_t i = 0; i < h.data.size(); ++i) h.data[i] += s.data[i];
    return relu_out.forward(h, training);
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
    Tensor g = relu_out.backward(grad_out);
    Tensor dx_main = conv1.backward(bn1.backward(relu1.backward(
        conv2.backward(bn2.backward(relu2.backward(
            conv3.backward(bn3.backward(relu3.backward(g)))))))));
    Tensor dx_short = project ? shortcut_conv.backward(shortcut_bn.backward(g)) : g;
    for (size_t i = 0; i < dx_main.data.size(); ++i) dx_main.data[i] += dx_short.data[i];
    return dx_main;
}

void ResidualBlock::collect(const std::string& prefix, NamedParams& params,
                            NamedBuffers& buffers) {
    conv1.collect(prefix + ".conv1", params);
    bn1.collect(prefix + ".bn1", params, buffers);
    conv2.collect(prefix + ".conv2", params);
    bn2.collect(prefix + ".bn2", params, buffers);
    conv3.collect(prefix + ".conv3", params);
    bn3.collect(prefix + ".bn3", params, buffers);
    if (project) {
        shortcut_conv.collect(prefix + ".shortcut_conv", params);
        shortcut_bn.collect(prefix + ".shortcut_bn", params, buffers);
    }
}

// ---------------------------------------------------------------------------
// Backbones

BackboneSpec BackboneSpec::resnet() { return BackboneSpec{}; }

BackboneSpec BackboneSpec::fcn() {
    BackboneSpec s;
    s.kind = BackboneKind::fcn;
    return s;
}

BackboneSpec BackboneSpec::mlp() {
    BackboneSpec s;
    s.kind = BackboneKind::mlp;
    return s;
}

const char* backbone_kind_name(BackboneKind kind) {
    switch (kind) {
        case BackboneKind::resnet: return "resnet";
        case BackboneKind::fcn: return "fcn";
        case BackboneKind::mlp: return "mlp";
    }
    return "?";
}

BackboneKind backbone_kind_from_name(const std::string& name) {
    if (name == "resnet") return BackboneKind::resnet;
    if (name == "fcn") return BackboneKind::fcn;
    if (name == "mlp") return BackboneKind::mlp;
    throw std::invalid_argument("unknown backbone: " + name);
}

namespace {

struct ResNetBackbone : Backbone {
    ResidualBlock block1, block2, block3;
    GlobalAvgPool gap;
    size_t channels;

    ResNetBackbone(const BackboneSpec& spec, size_t in_channels, Rng& rng)
        : block1(in_channels, spec.channels, spec.kernels),
          block2(spec.channels, spec.channels, spec.kernels),
          block3(spec.channels, spec.channels, spec.kernels),
          channels(spec.channels) {
        block1.init(rng);
        block2.init(rng);
        block3.init(rng);
    }

    Tensor forward(const Tensor& x, bool training, Rng&) override {
        Tensor h = block1.forward(x, training);
        h = block2.forward(h, training);
        h = block3.forward(h, training);
        return gap.forward(h, training);
    }
    Tensor backward(const Tensor& g) override {
        Tensor h = gap.backward(g);
        h = block3.backward(h);
        h = block2.backward(h);
        return block1.backward(h);
    }
    void collect(NamedParams& params, NamedBuffers& buffers) override {
        block1.collect("backbone.block1", params, buffers);
        block2.collect("backbone.block2", params, buffers);
        block3.collect("backbone.block3", params, buffers);
    }
    size_t feature_dim() const override { return channels; }
};

struct FcnBackbone : Backbone {
    Conv1d conv1, conv2, conv3;
    BatchNorm1d bn1, bn2, bn3;
    Relu relu1, relu2, relu3;
    GlobalAvgPool gap;
    size_t channels;

    FcnBackbone(const BackboneSpec& spec, size_t in_channels, Rng& rng)
        : conv1(in_channels, spec.channels, spec.kernels.at(0)),
          conv2(spec.channels, spec.channels, spec.kernels.at(1)),
          conv3(spec.channels, spec.channels, spec.kernels.at(2)),
          bn1(spec.channels),
          bn2(spec.channels),
          bn3(spec.channels),
          channels(spec.channels) {
        conv1.init(rng);
        conv2.init(rng);
        conv3.init(rng);
    }

    Tensor forward(const Tensor& x, bool training, Rng&) override {
        Tensor h = relu1.forward(bn1.forward(conv1.forward(x, training), training), training);
        h = relu2.forward(bn2.forward(conv2.forward(h, training), training), training);
        h = relu3.forward(bn3.forward(conv3.forward(h, training), training), training);
        return gap.forward(h, training);
    }
    Tensor backward(const Tensor& g) override {
        Tensor h = gap.backward(g);
        h = conv3.backward(bn3.backward(relu3.backward(h)));
        h = conv2.backward(bn2.backward(relu2.backward(h)));
        return conv1.backward(bn1.backward(relu1.backward(h)));
    }
    void collect(NamedParams& params, NamedBuffers& buffers) override {
        conv1.collect("backbone.conv1", params);
        bn1.collect("backbone.bn1", params, buffers);
        conv2.collect("backbone.conv2", params);
        bn2.collect("backbone.bn2", params, buffers);
        conv3.collect("backbone.conv3", params);
        bn3.collect("backbone.bn3", params, buffers);
    }
    size_t feature_dim() const override { return channels; }
};

struct MlpBackbone : Backbone {
    std::vector<Linear> fcs;
    std::vector<Relu> relus;
    std::vector<Dropout> drops;
    size_t in_flat, hidden;

    MlpBackbone(const BackboneSpec& spec, size_t in_channels, size_t in_len, Rng& rng)
        : in_flat(in_channels * in_len), hidden(spec.hidden) {
        size_t in = in_flat;
        for (size_t l = 0; l < spec.mlp_dropout.size(); ++l) {
            fcs.emplace_back(in, spec.hidden);
            fcs.back().init(rng);
            relus.emplace_back();
            drops.emplace_back(spec.mlp_dropout[l]);
            in = spec.hidden;
        }
    }

    Tensor forward(const Tensor& x, bool training, Rng& dropout_rng) override {
        check_shape(x.shape.size() == 3 && x.dim(1) * x.dim(2) == in_flat, "Mlp input");
        Tensor h({x.dim(0), in_flat});
        h.data = x.data;
        for (size_t l = 0; l < fcs.size(); ++l) {
            h = relus[l].forward(fcs[l].forward(h, training), training);
            h = drops[l].forward(h, training, dropout_rng);
        }
        return h;
    }
    Tensor backward(const Tensor& g) override {
        Tensor h = g;
        for (size_t l = fcs.size(); l-- > 0;)
            h = fcs[l].backward(relus[l].backward(drops[l].backward(h)));
        return h;  // caller reshapes if needed
    }
    void collect(NamedParams& params, NamedBuffers&) override {
        for (size_t l = 0; l < fcs.size(); ++l)
            fcs[l].collect("backbone.fc" + std::to_string(l + 1), params);
    }
    size_t feature_dim() const override { return hidden; }
};

}  // namespace

std::unique_ptr<Backbone> make_backbone(const BackboneSpec& spec, size_t in_channels,
                                        size_t in_len, Rng& init_rng) {
    switch (spec.kind) {
        case BackboneKind::resnet:
            return std::make_unique<ResNetBackbone>(spec, in_channels, init_rng);
        case BackboneKind::fcn:
            return std::make_unique<FcnBackbone>(spec, in_channels, init_rng);
        case BackboneKind::mlp:
            return std::make_unique<MlpBackbone>(spec, in_channels, in_len, init_rng);
    }
    throw std::invalid_argument("make_backbone: bad kind");
}

// ---------------------------------------------------------------------------
// Model

Model Model::build(const ModelConfig& cfg, Rng& init_rng) {
    Model m;
    m.cfg = cfg;
    m.backbone = make_backbone(cfg.backbone, cfg.in_channels, cfg.in_len, init_rng);
    const size_t feat = m.backbone->feature_dim();
    if (cfg.head == HeadKind::gcn) {
        if (cfg.gcn_layers < 1) throw std::invalid_argument("Model: gcn_layers must be >= 1");
        size_t in = feat;
        for (size_t l = 0; l < cfg.gcn_layers; ++l) {
            const bool last = l + 1 == cfg.gcn_layers;
            const size_t out = last ? cfg.num_classes : cfg.gcn_hidden;
            m.gcn.emplace_back(in, out);
            m.gcn.back().init(init_rng);
            if (!last) {
                m.gcn_relu.emplace_back();
                m.gcn_drop.emplace_back(cfg.gcn_dropout);
            }
            in = out;
        }
    } else {
        m.fc = Linear(feat, cfg.num_classes);
        m.fc.init(init_rng);
    }
    return m;
}

Tensor Model::forward(const Tensor& x, const SparseGraph* adj, bool training, Rng& dropout_rng) {
    Tensor feats = backbone->forward(x, training, dropout_rng);
    if (cfg.head == HeadKind::gcn) {
        if (adj == nullptr) throw std::invalid_argument("Model: gcn head needs an adjacency");
        Tensor h = std::move(feats);
        for (size_t l = 0; l < gcn.size(); ++l) {
            h = gcn[l].forward(*adj, h, training);
            if (l + 1 < gcn.size()) {
                h = gcn_relu[l].forward(h, training);
                h = gcn_drop[l].forward(h, training, dropout_rng);
            }
        }
        return h;
    }
    return fc.forward(feats, training);
}

void Model::backward(const Tensor& grad_logits) {
    Tensor g = grad_logits;
    if (cfg.head == HeadKind::gcn) {
        for (size_t l = gcn.size(); l-- > 0;) {
            if (l + 1 < gcn.size()) g = gcn_relu[l].backward(gcn_drop[l].backward(g));
            g = gcn[l].backward(g);
        }
    } else {
        g = fc.backward(g);
    }
    backbone->backward(g);
}

NamedParams Model::named_parameters() {
    NamedParams params;
    NamedBuffers buffers;
    backbone->collect(params, buffers);
    if (cfg.head == HeadKind::gcn) {
        for (size_t l = 0; l < gcn.size(); ++l)
            gcn[l].collect("head.gcn" + std::to_string(l + 1), params);
    } else {
        fc.collect("head.fc", params);
    }
    return params;
}

NamedBuffers Model::named_buffers() {
    NamedParams params;
    NamedBuffers buffers;
    backbone->collect(params, buffers);
    return buffers;
}

void Model::adam_step_all(double lr, double beta1, double beta2, double eps) {
    for (auto& [name, p] : named_parameters()) adam_step(*p, lr, beta1, beta2, eps);
}

std::vector<double> Model::state() {
    std::vector<double> out;
    for (auto& [name, p] : named_parameters())
        out.insert(out.end(), p->value.data.begin(), p->value.data.end());
    for (auto& [name, b] : named_buffers()) out.insert(out.end(), b->begin(), b->end());
    return out;
}

void Model::set_state(const std::vector<double>& state) {
    size_t pos = 0;
    for (auto& [name, p] : named_parameters()) {
        std::copy(state.begin() + pos, state.begin() + pos + p->size(), p->value.data.begin());
        pos += p->size();
    }
    for (auto& [name, b] : named_buffers()) {
        std::copy(state.begin() + pos, state.begin() + pos + b->size(), b->begin());
        pos += b->size();
    }
    if (pos != state.size()) throw std::invalid_argument("Model::set_state: size mismatch");
}

// ---------------------------------------------------------------------------
// Loss

double softmax_cross_entropy(const Tensor& logits, const std::vector<double>& onehot,
                             const std::vector<uint8_t>& mask, Tensor& grad_out) {
    check_shape(logits.shape.size() == 2, "softmax_cross_entropy logits");
    const size_t rows = logits.dim(0), classes = logits.dim(1);
    check_shape(onehot.size() == rows * classes && mask.size() == rows,
                "softmax_cross_entropy targets");
    bool any = false;
    for (uint8_t m : mask) any |= m != 0;
    if (!any) throw std::invalid_argument("softmax_cross_entropy: empty mask");

    grad_out = Tensor({rows, classes});
    double loss = 0.0;
    std::vector<double> probs(classes);
    for (size_t i = 0; i < rows; ++i) {
        if (!mask[i]) continue;
        const double* row = logits.data.data() + i * classes;
        double hi = row[0];
        for (size_t j = 1; j < classes; ++j) hi = std::max(hi, row[j]);
        double z = 0.0;
        for (size_t j = 0; j < classes; ++j) {
            probs[j] = std::exp(row[j] - hi);
            z += probs[j];
        }
        const double logz = std::log(z);
        double* gr = grad_out.data.data() + i * classes;
        for (size_t j = 0; j < classes; ++j) {
            const double p = probs[j] / z;
            const double y = onehot[i * classes + j];
            loss -= y * ((row[j] - hi) - logz);
            gr[j] = p - y;
        }
    }
    return loss;
}

std::vector<double> softmax_rows(const Tensor& logits) {
    const size_t rows = logits.dim(0), classes = logits.dim(1);
    std::vector<double> out(rows * classes);
    for (size_t i = 0; i < rows; ++i) {
        const double* row = logits.data.data() + i * classes;
        double hi = row[0];
        for (size_t j = 1; j < classes; ++j) hi = std::max(hi, row[j]);
        double z = 0.0;
        for (size_t j = 0; j < classes; ++j) {
            out[i * classes + j] = std::exp(row[j] - hi);
            z += out[i * classes + j];
        }
        for (size_t j = 0; j < classes; ++j) out[i * classes + j] /= z;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[4] = {'S', 'T', 'S', 'W'};

std::string describe(const ModelConfig& cfg) {
    std::ostringstream out;
    out << "backbone=" << backbone_kind_name(cfg.backbone.kind)
        << " in_channels=" << cfg.in_channels << " in_len=" << cfg.in_len
        << " classes=" << cfg.num_classes
        << " head=" << (cfg.head == HeadKind::gcn ? "gcn" : "linear")
        << " gcn_layers=" << cfg.gcn_layers << " gcn_hidden=" << cfg.gcn_hidden
        << " gcn_dropout=" << cfg.gcn_dropout;
    return out.str();
}

ModelConfig parse_descriptor(const std::string& desc) {
    ModelConfig cfg;
    std::istringstream in(desc);
    std::string tok;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::runtime_error("checkpoint: bad descriptor");
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "backbone")
            cfg.backbone = val == "resnet"  ? BackboneSpec::resnet()
                           : val == "fcn"   ? BackboneSpec::fcn()
                           : val == "mlp"   ? BackboneSpec::mlp()
                                            : throw std::runtime_error("checkpoint: bad backbone");
        else if (key == "in_channels")
            cfg.in_channels = std::stoul(val);
        else if (key == "in_len")
            cfg.in_len = std::stoul(val);
        else if (key == "classes")
            cfg.num_classes = std::stoul(val);
        else if (key == "head")
            cfg.head = val == "gcn" ? HeadKind::gcn : HeadKind::linear;
        else if (key == "gcn_layers")
            cfg.gcn_layers = std::stoul(val);
        else if (key == "gcn_hidden")
            cfg.gcn_hidden = std::stoul(val);
        else if (key == "gcn_dropout")
            cfg.gcn_dropout = std::stod(val);
        else
            throw std::runtime_error("checkpoint: unknown descriptor key " + key);
    }
    return cfg;
}

void write_blob(std::ostream& out, const std::string& name, const double* data, size_t n) {
    write_le<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<uint64_t>(out, n);
    write_f64_array(out, data, n);
}

}  // namespace

void save_checkpoint(Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    write_magic(out, kCheckpointMagic);
    write_le<uint32_t>(out, kCheckpointVersion);
    const std::string desc = describe(model.cfg);
    write_le<uint32_t>(out, static_cast<uint32_t>(desc.size()));
    out.write(desc.data(), static_cast<std::streamsize>(desc.size()));

    const auto params = model.named_parameters();
    const auto buffers = model.named_buffers();
    write_le<uint32_t>(out, static_cast<uint32_t>(params.size() + buffers.size()));
    for (const auto& [name, p] : params) write_blob(out, name, p->data(), p->size());
    for (const auto& [name, b] : buffers) write_blob(out, name, b->data(), b->size());
    if (!out) throw std::runtime_error("write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    expect_magic(in, kCheckpointMagic, path);
    const uint32_t version = read_le<uint32_t>(in);
    if (version != kCheckpointVersion)
        throw std::runtime_error(path + ": unsupported checkpoint version");
    const uint32_t desc_len = read_le<uint32_t>(in);
    std::string desc(desc_len, '\0');
    in.read(desc.data(), desc_len);
    if (!in) throw std::runtime_error(path + ": truncated descriptor");

    Rng scratch(0);
    Model model = Model::build(parse_descriptor(desc), scratch);

    std::map<std::string, std::vector<double>> blobs;
    const uint32_t count = read_le<uint32_t>(in);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_le<uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw std::runtime_error(path + ": truncated blob name");
        const uint64_t n = read_le<uint64_t>(in);
        std::vector<double> data(n);
        read_f64_array(in, data.data(), n);
        blobs.emplace(std::move(name), std::move(data));
    }

    for (auto& [name, p] : model.named_parameters()) {
        auto it = blobs.find(name);
        if (it == blobs.end() || it->second.size() != p->size())
            throw std::runtime_error(path + ": missing or mismatched blob " + name);
        std::copy(it->second.begin(), it->second.end(), p->value.data.begin());
    }
    for (auto& [name, b] : model.named_buffers()) {
        auto it = blobs.find(name);
        if (it == blobs.end() || it->second.size() != b->size())
            throw std::runtime_error(path + ": missing or mismatched blob " + name);
        *b = it->second;
    }
    return model;
}

}  // namespace simtsc
