// adam.hpp - bias-corrected Adam over the network parameter tensors

#pragma once

#include <cmath>
#include <vector>

#include "uwamod/net/model.hpp"

namespace uwamod {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double lr = 1e-3;
    double epsilon = 1e-8;
};

template <class S>
struct AdamState {
    AdamHyper hyper;
    long long t = 0;
    std::vector<std::vector<S>> m;  // first moments, aligned with learnable
    std::vector<std::vector<S>> v;  // second moments

    static AdamState init(const NetworkParams<S>& params, AdamHyper hyper = {}) {
        AdamState st;
        st.hyper = hyper;
        st.m.resize(params.learnable.size());
        st.v.resize(params.learnable.size());
        for (std::size_t i = 0; i < params.learnable.size(); ++i) {
            st.m[i].assign(params.learnable[i].size(), S(0));
            st.v[i].assign(params.learnable[i].size(), S(0));
        }
        return st;
    }
};

template <class S>
void adam_step(NetworkParams<S>& params, const ParamGrads<S>& grads, AdamState<S>& state) {
    if (grads.size() != params.learnable.size() || state.m.size() != grads.size())
        throw Error("adam_step: shape mismatch");
    state.t += 1;
    const S b1 = static_cast<S>(state.hyper.beta1);
    const S b2 = static_cast<S>(state.hyper.beta2);
    const S corr1 = S(1) - static_cast<S>(std::pow(state.hyper.beta1, static_cast<double>(state.t)));
    const S corr2 = S(1) - static_cast<S>(std::pow(state.hyper.beta2, static_cast<double>(state.t)));
    const S lr = static_cast<S>(state.hyper.lr);
    const S eps = static_cast<S>(state.hyper.epsilon);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        auto& pv = params.learnable[i].v;
        auto& mv = state.m[i];
        auto& vv = state.v[i];
        if (grads[i].size() != pv.size()) throw Error("adam_step: gradient size mismatch");
        for (std::size_t j = 0; j < pv.size(); ++j) {
            const S g = grads[i][j];
            mv[j] = b1 * mv[j] + (S(1) - b1) * g;
            vv[j] = b2 * vv[j] + (S(1) - b2) * g * g;
            const S mhat = mv[j] / corr1;
            const S vhat = vv[j] / corr2;
            pv[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

}  // namespace uwamod
