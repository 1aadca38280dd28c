// layers.hpp - forward/backward primitives: convolution, batch norm,
// leaky ReLU, adaptive average pooling, fully connected
//
// All layers run in the network's scalar type. Convolutions are stride-1
// with zero "same" padding (the dense concatenation requires equal spatial
// shapes everywhere). Batch normalization statistics are taken per channel
// over (batch, height, width).

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "uwamod/net/tensor.hpp"

namespace uwamod {

// out[oc] = sum_ic kernel[oc][ic] (*) in[ic], kernel layout [co][ci][k][k].
template <class S>
void conv2d_forward(const Tensor3<S>& in, const S* kernel, int co, int k, Tensor3<S>& out) {
    const int pad = (k - 1) / 2;
    const int h = in.h, w = in.w, ci = in.c;
    out.fill_zero();
    for (int oc = 0; oc < co; ++oc) {
        for (int ic = 0; ic < ci; ++ic) {
            const S* kbase = kernel + (static_cast<std::size_t>(oc) * ci + ic) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                const int y0 = std::max(0, pad - ky);
                const int y1 = std::min(h, h + pad - ky);
                for (int kx = 0; kx < k; ++kx) {
                    const S kv = kbase[ky * k + kx];
                    if (kv == S(0)) continue;
                    const int x0 = std::max(0, pad - kx);
                    const int x1 = std::min(w, w + pad - kx);
                    for (int y = y0; y < y1; ++y) {
                        const S* src = in.row(ic, y + ky - pad);
                        S* dst = out.row(oc, y);
                        for (int x = x0; x < x1; ++x) dst[x] += kv * src[x + kx - pad];
                    }
                }
            }
        }
    }
}

// Accumulates the kernel gradient and (optionally) the input gradient.
template <class S>
void conv2d_backward(const Tensor3<S>& in, const S* kernel, int co, int k,
                     const Tensor3<S>& d_out, S* d_kernel, Tensor3<S>* d_in) {
    const int pad = (k - 1) / 2;
    const int h = in.h, w = in.w, ci = in.c;
    for (int oc = 0; oc < co; ++oc) {
        for (int ic = 0; ic < ci; ++ic) {
            const std::size_t koff = (static_cast<std::size_t>(oc) * ci + ic) * k * k;
            const S* kbase = kernel + koff;
            S* dkbase = d_kernel + koff;
            for (int ky = 0; ky < k; ++ky) {
                const int y0 = std::max(0, pad - ky);
                const int y1 = std::min(h, h + pad - ky);
                for (int kx = 0; kx < k; ++kx) {
                    const int x0 = std::max(0, pad - kx);
                    const int x1 = std::min(w, w + pad - kx);
                    const S kv = kbase[ky * k + kx];
                    S acc = S(0);
                    for (int y = y0; y < y1; ++y) {
                        const S* src = in.row(ic, y + ky - pad);
                        const S* dptr = d_out.row(oc, y);
                        S* dsrc = d_in ? d_in->row(ic, y + ky - pad) : nullptr;
                        if (dsrc) {
                            for (int x = x0; x < x1; ++x) {
                                acc += dptr[x] * src[x + kx - pad];
                                dsrc[x + kx - pad] += kv * dptr[x];
                            }
                        } else {
                            for (int x = x0; x < x1; ++x) acc += dptr[x] * src[x + kx - pad];
                        }
                    }
                    dkbase[ky * k + kx] += acc;
                }
            }
        }
    }
}

template <class S>
struct BatchNormStats {
    std::vector<S> mean;  // per channel
    std::vector<S> var;   // biased (1/n) variance per channel
};

// Train-mode batch norm over a batch of tensors. Writes xhat (normalized
// input) and y = gamma * xhat + beta; returns the batch statistics.
template <class S>
BatchNormStats<S> batchnorm_forward_train(const std::vector<Tensor3<S>>& z, const S* gamma, const S* beta,
                                          S epsilon, std::vector<Tensor3<S>>& xhat,
                                          std::vector<Tensor3<S>>& y) {
    const int c = z[0].c, spatial = z[0].h * z[0].w;
    const std::size_t count = z.size() * static_cast<std::size_t>(spatial);
    BatchNormStats<S> stats;
    stats.mean.assign(c, S(0));
    stats.var.assign(c, S(0));
    for (int ch = 0; ch < c; ++ch) {
        S sum = S(0), sq = S(0);
        for (const auto& t : z) {
            const S* p = t.row(ch, 0);
            for (int i = 0; i < spatial; ++i) {
                sum += p[i];
                sq += p[i] * p[i];
            }
        }
        const S mean = sum / static_cast<S>(count);
        stats.mean[ch] = mean;
        stats.var[ch] = std::max(sq / static_cast<S>(count) - mean * mean, S(0));
    }
    xhat.assign(z.size(), Tensor3<S>(c, z[0].h, z[0].w));
    y.assign(z.size(), Tensor3<S>(c, z[0].h, z[0].w));
    for (int ch = 0; ch < c; ++ch) {
        const S inv_std = S(1) / std::sqrt(stats.var[ch] + epsilon);
        const S m = stats.mean[ch];
        for (std::size_t b = 0; b < z.size(); ++b) {
            const S* zp = z[b].row(ch, 0);
            S* xp = xhat[b].row(ch, 0);
            S* yp = y[b].row(ch, 0);
            for (int i = 0; i < spatial; ++i) {
                xp[i] = (zp[i] - m) * inv_std;
                yp[i] = gamma[ch] * xp[i] + beta[ch];
            }
        }
    }
    return stats;
}

// Eval-mode batch norm with running statistics.
template <class S>
void batchnorm_forward_eval(const std::vector<Tensor3<S>>& z, const S* gamma, const S* beta,
                            const S* run_mean, const S* run_var, S epsilon,
                            std::vector<Tensor3<S>>& xhat, std::vector<Tensor3<S>>& y) {
    const int c = z[0].c, spatial = z[0].h * z[0].w;
    xhat.assign(z.size(), Tensor3<S>(c, z[0].h, z[0].w));
    y.assign(z.size(), Tensor3<S>(c, z[0].h, z[0].w));
    for (int ch = 0; ch < c; ++ch) {
        const S inv_std = S(1) / std::sqrt(run_var[ch] + epsilon);
        const S m = run_mean[ch];
        for (std::size_t b = 0; b < z.size(); ++b) {
            const S* zp = z[b].row(ch, 0);
            S* xp = xhat[b].row(ch, 0);
            S* yp = y[b].row(ch, 0);
            for (int i = 0; i < spatial; ++i) {
                xp[i] = (zp[i] - m) * inv_std;
                yp[i] = gamma[ch] * xp[i] + beta[ch];
            }
        }
    }
}

// Train-mode backward; d_z gets the gradient through the batch statistics:
//   d_z = gamma/sqrt(var+eps) * (d_y - mean(d_y) - xhat * mean(d_y * xhat))
template <class S>
void batchnorm_backward_train(const std::vector<Tensor3<S>>& xhat, const std::vector<Tensor3<S>>& d_y,
                              const BatchNormStats<S>& stats, const S* gamma, S epsilon,
                              S* d_gamma, S* d_beta, std::vector<Tensor3<S>>& d_z) {
    const int c = xhat[0].c, spatial = xhat[0].h * xhat[0].w;
    const std::size_t count = xhat.size() * static_cast<std::size_t>(spatial);
    d_z.assign(xhat.size(), Tensor3<S>(c, xhat[0].h, xhat[0].w));
    for (int ch = 0; ch < c; ++ch) {
        S sum_dy = S(0), sum_dy_xhat = S(0);
        for (std::size_t b = 0; b < xhat.size(); ++b) {
            const S* xp = xhat[b].row(ch, 0);
            const S* dp = d_y[b].row(ch, 0);
            for (int i = 0; i < spatial; ++i) {
                sum_dy += dp[i];
                sum_dy_xhat += dp[i] * xp[i];
            }
        }
        d_gamma[ch] += sum_dy_xhat;
        d_beta[ch] += sum_dy;
        const S inv_std = S(1) / std::sqrt(stats.var[ch] + epsilon);
        const S mean_dy = sum_dy / static_cast<S>(count);
        const S mean_dy_xhat = sum_dy_xhat / static_cast<S>(count);
        const S scale = gamma[ch] * inv_std;
        for (std::size_t b = 0; b < xhat.size(); ++b) {
            const S* xp = xhat[b].row(ch, 0);
            const S* dp = d_y[b].row(ch, 0);
            S* dz = d_z[b].row(ch, 0);
            for (int i = 0; i < spatial; ++i) {
                dz[i] = scale * (dp[i] - mean_dy - xp[i] * mean_dy_xhat);
            }
        }
    }
}

template <class S>
void leaky_relu_forward(const Tensor3<S>& y, S slope, Tensor3<S>& a) {
    a = y;
    for (auto& x : a.v) x = x >= S(0) ? x : slope * x;
}

template <class S>
void leaky_relu_backward(const Tensor3<S>& y, const Tensor3<S>& d_a, S slope, Tensor3<S>& d_y) {
    d_y = d_a;
    for (std::size_t i = 0; i < d_y.v.size(); ++i) {
        if (y.v[i] < S(0)) d_y.v[i] *= slope;
    }
}

inline int pool_region_start(int i, int in, int grid) {
    return static_cast<int>(static_cast<long long>(i) * in / grid);
}
inline int pool_region_end(int i, int in, int grid) {
    return static_cast<int>((static_cast<long long>(i + 1) * in + grid - 1) / grid);
}

// Adaptive average pooling to (gh, gw); cell (i,j) averages the rectangle
// [floor(i H/gh), ceil((i+1) H/gh)) x [floor(j W/gw), ceil((j+1) W/gw)).
template <class S>
void adaptive_avg_pool_forward(const Tensor3<S>& in, int gh, int gw, Tensor3<S>& out) {
    out = Tensor3<S>(in.c, gh, gw);
    for (int ch = 0; ch < in.c; ++ch) {
        for (int i = 0; i < gh; ++i) {
            const int y0 = pool_region_start(i, in.h, gh), y1 = pool_region_end(i, in.h, gh);
            for (int j = 0; j < gw; ++j) {
                const int x0 = pool_region_start(j, in.w, gw), x1 = pool_region_end(j, in.w, gw);
                S acc = S(0);
                for (int y = y0; y < y1; ++y) {
                    const S* p = in.row(ch, y);
                    for (int x = x0; x < x1; ++x) acc += p[x];
                }
                out.at(ch, i, j) = acc / static_cast<S>((y1 - y0) * (x1 - x0));
            }
        }
    }
}

template <class S>
void adaptive_avg_pool_backward(int in_h, int in_w, const Tensor3<S>& d_out, Tensor3<S>& d_in) {
    d_in = Tensor3<S>(d_out.c, in_h, in_w);
    const int gh = d_out.h, gw = d_out.w;
    for (int ch = 0; ch < d_out.c; ++ch) {
        for (int i = 0; i < gh; ++i) {
            const int y0 = pool_region_start(i, in_h, gh), y1 = pool_region_end(i, in_h, gh);
            for (int j = 0; j < gw; ++j) {
                const int x0 = pool_region_start(j, in_w, gw), x1 = pool_region_end(j, in_w, gw);
                const S g = d_out.at(ch, i, j) / static_cast<S>((y1 - y0) * (x1 - x0));
                for (int y = y0; y < y1; ++y) {
                    S* p = d_in.row(ch, y);
                    for (int x = x0; x < x1; ++x) p[x] += g;
                }
            }
        }
    }
}

// y = W x + b with W stored row-major [out][in].
template <class S>
void fc_forward(const std::vector<S>& x, const S* weight, const S* bias, int out_dim, int in_dim,
                std::vector<S>& y) {
    y.assign(out_dim, S(0));
    for (int o = 0; o < out_dim; ++o) {
        const S* wrow = weight + static_cast<std::size_t>(o) * in_dim;
        S acc = bias[o];
        for (int i = 0; i < in_dim; ++i) acc += wrow[i] * x[i];
        y[o] = acc;
    }
}

template <class S>
void fc_backward(const std::vector<S>& x, const S* weight, int out_dim, int in_dim,
                 const std::vector<S>& d_y, S* d_weight, S* d_bias, std::vector<S>* d_x) {
    if (d_x) d_x->assign(in_dim, S(0));
    for (int o = 0; o < out_dim; ++o) {
        const S g = d_y[o];
        d_bias[o] += g;
        S* dwrow = d_weight + static_cast<std::size_t>(o) * in_dim;
        const S* wrow = weight + static_cast<std::size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) {
            dwrow[i] += g * x[i];
            if (d_x) (*d_x)[i] += wrow[i] * g;
        }
    }
}

}  // namespace uwamod
