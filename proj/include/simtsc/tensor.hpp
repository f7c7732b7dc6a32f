#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

namespace simtsc {

// Dense row-major f64 array with an optional gradient slot of the same shape.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;
    std::vector<double> grad;

    Tensor() = default;
    explicit Tensor(std::vector<size_t> s) : shape(std::move(s)) { data.assign(numel(), 0.0); }

    size_t numel() const {
        size_t p = 1;
        for (size_t d : shape) p *= d;
        return p;
    }
    size_t dim(size_t i) const { return shape[i]; }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

// Trainable tensor plus Adam state.
struct Parameter {
    Tensor value;
    std::vector<double> adam_m;
    std::vector<double> adam_v;
    int64_t step_count = 0;

    Parameter() = default;
    explicit Parameter(std::vector<size_t> shape) : value(std::move(shape)) {
        value.ensure_grad();
        adam_m.assign(value.data.size(), 0.0);
        adam_v.assign(value.data.size(), 0.0);
    }

    size_t size() const { return value.data.size(); }
    double* data() { return value.data.data(); }
    const double* data() const { return value.data.data(); }
    double* grad() { return value.grad.data(); }
};

// Bias-corrected Adam update; clears the gradient and bumps step_count.
void adam_step(Parameter& p, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

}  // namespace simtsc
