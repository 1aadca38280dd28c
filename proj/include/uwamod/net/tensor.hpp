// tensor.hpp - minimal dense (channels, height, width) array for the network

#pragma once

#include <cstddef>
#include <vector>

#include "uwamod/error.hpp"

namespace uwamod {

template <class S>
struct Tensor3 {
    int c = 0, h = 0, w = 0;
    std::vector<S> v;

    Tensor3() = default;
    Tensor3(int c_, int h_, int w_)
        : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, S(0)) {}

    S* row(int ci, int y) { return v.data() + (static_cast<std::size_t>(ci) * h + y) * w; }
    const S* row(int ci, int y) const { return v.data() + (static_cast<std::size_t>(ci) * h + y) * w; }

    S& at(int ci, int y, int x) { return row(ci, y)[x]; }
    S at(int ci, int y, int x) const { return row(ci, y)[x]; }

    std::size_t size() const { return v.size(); }

    void fill_zero() { std::fill(v.begin(), v.end(), S(0)); }
};

// Stacks tensors along the channel axis.
template <class S>
Tensor3<S> concat_channels(const std::vector<const Tensor3<S>*>& parts) {
    if (parts.empty()) throw Error("concat_channels: nothing to concatenate");
    const int h = parts[0]->h, w = parts[0]->w;
    int c = 0;
    for (const auto* t : parts) {
        if (t->h != h || t->w != w) throw Error("concat_channels: spatial shapes differ");
        c += t->c;
    }
    Tensor3<S> out(c, h, w);
    std::size_t off = 0;
    for (const auto* t : parts) {
        std::copy(t->v.begin(), t->v.end(), out.v.begin() + off);
        off += t->v.size();
    }
    return out;
}

}  // namespace uwamod
