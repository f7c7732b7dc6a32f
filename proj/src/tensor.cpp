#include "simtsc/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace simtsc {

void adam_step(Parameter& p, double lr, double beta1, double beta2, double eps) {
    if (p.value.grad.size() != p.value.data.size())
        throw std::invalid_argument("adam_step: parameter has no gradient");
    p.step_count += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(p.step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(p.step_count));
    double* value = p.value.data.data();
    double* grad = p.value.grad.data();
    for (size_t i = 0; i < p.value.data.size(); ++i) {
        const double g = grad[i];
        p.adam_m[i] = beta1 * p.adam_m[i] + (1.0 - beta1) * g;
        p.adam_v[i] = beta2 * p.adam_v[i] + (1.0 - beta2) * g * g;
        const double m_hat = p.adam_m[i] / bc1;
        const double v_hat = p.adam_v[i] / bc2;
        value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        grad[i] = 0.0;
    }
}

}  // namespace simtsc
