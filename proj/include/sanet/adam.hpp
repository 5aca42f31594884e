#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sanet/tensor.hpp"

namespace sanet {

// Bias-corrected Adam (beta1=0.9, beta2=0.999, eps=1e-8). Moment buffers are
// stored in T so they serialize alongside parameters; the update itself runs
// in double. beta^t powers are kept as running products and rebuilt by the
// same multiplication sequence on resume, keeping runs bit-identical.
template <typename T>
struct AdamStateT {
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;

    int64_t t = 0;
    double beta1_t = 1.0, beta2_t = 1.0;  // beta^t
    std::map<std::string, BasicTensor<T>> m, v;

    void reset_to_step(int64_t step) {
        t = step;
        beta1_t = 1.0;
        beta2_t = 1.0;
        for (int64_t i = 0; i < step; ++i) {
            beta1_t *= beta1;
            beta2_t *= beta2;
        }
    }
};

using AdamState = AdamStateT<float>;

template <typename T>
void adam_step(const std::vector<std::pair<std::string, BasicTensor<T>*>>& params,
               const std::map<std::string, BasicTensor<T>>& grads, AdamStateT<T>& state,
               double lr) {
    if (lr <= 0) throw std::invalid_argument("adam_step: learning rate must be positive");
    for (const auto& [name, p] : params) {
        auto it = grads.find(name);
        if (it == grads.end()) throw std::invalid_argument("adam_step: missing gradient for " + name);
        if (!(it->second.shape == p->shape)) {
            throw std::invalid_argument("adam_step: gradient shape mismatch for " + name);
        }
        if (!it->second.all_finite()) {
            throw std::runtime_error("adam_step: non-finite gradient in " + name + "; step rejected");
        }
    }
    state.t += 1;
    state.beta1_t *= AdamStateT<T>::beta1;
    state.beta2_t *= AdamStateT<T>::beta2;
    const double bc1 = 1.0 - state.beta1_t;
    const double bc2 = 1.0 - state.beta2_t;
    for (const auto& [name, p] : params) {
        const BasicTensor<T>& g = grads.at(name);
        BasicTensor<T>& m = state.m.try_emplace(name, p->shape).first->second;
        BasicTensor<T>& v = state.v.try_emplace(name, p->shape).first->second;
        for (int i = 0; i < p->numel(); ++i) {
            const double gi = g.data[i];
            const double mi = AdamStateT<T>::beta1 * m.data[i] + (1.0 - AdamStateT<T>::beta1) * gi;
            const double vi = AdamStateT<T>::beta2 * v.data[i] + (1.0 - AdamStateT<T>::beta2) * gi * gi;
            m.data[i] = static_cast<T>(mi);
            v.data[i] = static_cast<T>(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            p->data[i] = static_cast<T>(p->data[i] - lr * mhat / (std::sqrt(vhat) + AdamStateT<T>::eps));
        }
    }
}

}  // namespace sanet
