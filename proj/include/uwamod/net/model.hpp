// model.hpp - the multi-resolution channel-to-modem network
//
// The channel matrix enters as a 2 x M' x M image (real and imaginary
// planes). Two parallel convolutional pathways process it: three 7x7 layers
// (high resolution) and three 3x3 layers (low resolution), each conv
// followed by batch normalization and leaky ReLU, with dense connectivity
// inside a pathway (layer i sees the pathway input concatenated with every
// earlier layer output). The two pathway outputs are concatenated, fused by
// a 1x1 conv + BN + leaky ReLU, average-pooled to a fixed grid, flattened,
// and passed through three fully connected layers; the last layer is linear
// and its 2(MN + NM') outputs become the real/imaginary parts of (Phi,
// Psi^H), which are energy-normalized inside the graph.
//
// Backward is exact reverse-mode differentiation of this computation,
// including the normalization head and train-mode batch statistics.
// Gradients at the modem outputs are taken with respect to real and
// imaginary parts, packed as complex (d/dRe + j d/dIm).

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "uwamod/config.hpp"
#include "uwamod/modem.hpp"
#include "uwamod/net/layers.hpp"
#include "uwamod/net/tensor.hpp"
#include "uwamod/rng.hpp"

namespace uwamod {

struct ArchConfig {
    int pathway_channels = 16;  // outputs of every pathway conv
    int fused_channels = 8;     // outputs of the 1x1 fusion conv
    int pool_grid = 16;         // target pooled size, clipped to input
    int fc_hidden1 = 2048;
    int fc_hidden2 = 2048;
    double leaky_slope = 0.3;
    double bn_momentum = 0.1;
    double bn_epsilon = 1e-5;
};

inline void validate(const ArchConfig& a) {
    if (a.pathway_channels < 1 || a.fused_channels < 1 || a.pool_grid < 1 || a.fc_hidden1 < 1 ||
        a.fc_hidden2 < 1)
        throw Error("arch: all counts must be at least 1");
    if (!(a.leaky_slope > 0.0 && a.leaky_slope < 1.0)) throw Error("arch: leaky slope must lie in (0, 1)");
    if (!(a.bn_momentum > 0.0 && a.bn_momentum <= 1.0)) throw Error("arch: bn momentum must lie in (0, 1]");
    if (!(a.bn_epsilon > 0.0)) throw Error("arch: bn epsilon must be positive");
}

template <class S>
struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<S> v;

    std::size_t size() const { return v.size(); }
};

template <class S>
struct NetworkParams {
    std::vector<ParamTensor<S>> learnable;  // kernels, BN scale/shift, FC weights/biases
    std::vector<ParamTensor<S>> running;    // BN running mean/variance
};

template <class S>
using ParamGrads = std::vector<std::vector<S>>;  // aligned with NetworkParams::learnable

namespace netdetail {

struct ConvSpec {
    const char* name;
    int k;
    int in_c;
    int out_c;
};

}  // namespace netdetail

template <class S = double>
class UwaModNet {
public:
    static constexpr int kNumConv = 7;  // hi1..3, lo1..3, fuse

    UwaModNet(const ArchConfig& arch, Dims dims, int n_subcarriers)
        : arch_(arch), dims_(dims), n_(n_subcarriers) {
        validate(arch);
        if (n_ < 1 || dims_.m < 1 || dims_.m_prime < dims_.m)
            throw Error("net: invalid dimensions");
        const int pc = arch_.pathway_channels;
        conv_[0] = {"hi1", 7, 2, pc};
        conv_[1] = {"hi2", 7, 2 + pc, pc};
        conv_[2] = {"hi3", 7, 2 + 2 * pc, pc};
        conv_[3] = {"lo1", 3, 2, pc};
        conv_[4] = {"lo2", 3, 2 + pc, pc};
        conv_[5] = {"lo3", 3, 2 + 2 * pc, pc};
        conv_[6] = {"fuse", 1, 2 * pc, arch_.fused_channels};
        pool_h_ = std::min(arch_.pool_grid, dims_.m_prime);
        pool_w_ = std::min(arch_.pool_grid, dims_.m);
        fc_in_ = arch_.fused_channels * pool_h_ * pool_w_;
        out_dim_ = 2 * (dims_.m * n_ + n_ * dims_.m_prime);
    }

    const ArchConfig& arch() const { return arch_; }
    Dims dims() const { return dims_; }
    int subcarriers() const { return n_; }
    int output_dim() const { return out_dim_; }
    int pooled_h() const { return pool_h_; }
    int pooled_w() const { return pool_w_; }

    NetworkParams<S> init_params(RandomStream& rs) const {
        NetworkParams<S> p;
        for (int i = 0; i < kNumConv; ++i) {
            const auto& cs = conv_[i];
            ParamTensor<S> kernel;
            kernel.name = std::string(cs.name) + ".kernel";
            kernel.shape = {cs.out_c, cs.in_c, cs.k, cs.k};
            kernel.v.resize(static_cast<std::size_t>(cs.out_c) * cs.in_c * cs.k * cs.k);
            const double bound = 1.0 / std::sqrt(static_cast<double>(cs.in_c) * cs.k * cs.k);
            for (auto& x : kernel.v) x = static_cast<S>(rs.uniform(-bound, bound));
            p.learnable.push_back(std::move(kernel));
            p.learnable.push_back({std::string(cs.name) + ".bn_gamma", {cs.out_c},
                                   std::vector<S>(cs.out_c, S(1))});
            p.learnable.push_back({std::string(cs.name) + ".bn_beta", {cs.out_c},
                                   std::vector<S>(cs.out_c, S(0))});
            p.running.push_back({std::string(cs.name) + ".bn_mean", {cs.out_c},
                                 std::vector<S>(cs.out_c, S(0))});
            p.running.push_back({std::string(cs.name) + ".bn_var", {cs.out_c},
                                 std::vector<S>(cs.out_c, S(1))});
        }
        const int fc_dims[3][2] = {{arch_.fc_hidden1, fc_in_},
                                   {arch_.fc_hidden2, arch_.fc_hidden1},
                                   {out_dim_, arch_.fc_hidden2}};
        const char* fc_names[3] = {"fc1", "fc2", "fc3"};
        for (int i = 0; i < 3; ++i) {
            ParamTensor<S> w;
            w.name = std::string(fc_names[i]) + ".weight";
            w.shape = {fc_dims[i][0], fc_dims[i][1]};
            w.v.resize(static_cast<std::size_t>(fc_dims[i][0]) * fc_dims[i][1]);
            const double bound = 1.0 / std::sqrt(static_cast<double>(fc_dims[i][1]));
            for (auto& x : w.v) x = static_cast<S>(rs.uniform(-bound, bound));
            p.learnable.push_back(std::move(w));
            p.learnable.push_back({std::string(fc_names[i]) + ".bias", {fc_dims[i][0]},
                                   std::vector<S>(fc_dims[i][0], S(0))});
        }
        return p;
    }

    std::size_t parameter_count() const {
        std::size_t count = 0;
        for (int i = 0; i < kNumConv; ++i) {
            const auto& cs = conv_[i];
            count += static_cast<std::size_t>(cs.out_c) * cs.in_c * cs.k * cs.k + 2 * cs.out_c;
        }
        count += static_cast<std::size_t>(arch_.fc_hidden1) * (fc_in_ + 1);
        count += static_cast<std::size_t>(arch_.fc_hidden2) * (arch_.fc_hidden1 + 1);
        count += static_cast<std::size_t>(out_dim_) * (arch_.fc_hidden2 + 1);
        return count;
    }

    struct ConvTrace {
        std::vector<Tensor3<S>> in;    // concatenated layer input, per sample
        std::vector<Tensor3<S>> xhat;  // BN-normalized conv output
        std::vector<Tensor3<S>> y;     // BN output (activation input)
        BatchNormStats<S> stats;       // statistics used by this pass
    };

    struct Record {
        bool train = false;
        int batch = 0;
        std::array<ConvTrace, kNumConv> conv;
        std::vector<std::vector<S>> pooled;              // fc input
        std::vector<std::vector<S>> u1, a1, u2, a2, out; // fc chain
        std::vector<CMat> phi_raw, psi_h_raw;
        std::vector<double> phi_norm, psi_norm;
        std::vector<CMat> phi, psi_h;                    // emitted modems
    };

    Record forward(const NetworkParams<S>& params, const std::vector<Tensor3<S>>& batch,
                   bool train) const {
        check_params(params);
        if (batch.empty()) throw Error("net: empty batch");
        for (const auto& t : batch) {
            if (t.c != 2 || t.h != dims_.m_prime || t.w != dims_.m)
                throw Error("net: input image must be 2 x M' x M");
        }
        Record rec;
        rec.train = train;
        rec.batch = static_cast<int>(batch.size());
        const std::size_t b = batch.size();

        // pathway activations kept for dense concatenation
        std::array<std::vector<Tensor3<S>>, kNumConv> acts;

        for (int li = 0; li < kNumConv; ++li) {
            ConvTrace& tr = rec.conv[li];
            tr.in.reserve(b);
            for (std::size_t s = 0; s < b; ++s) {
                tr.in.push_back(stage_input(li, batch[s], acts, s));
            }
            std::vector<Tensor3<S>> z(b);
            const auto& kernel = params.learnable[3 * li].v;
            for (std::size_t s = 0; s < b; ++s) {
                z[s] = Tensor3<S>(conv_[li].out_c, dims_.m_prime, dims_.m);
                conv2d_forward(tr.in[s], kernel.data(), conv_[li].out_c, conv_[li].k, z[s]);
            }
            const S* gamma = params.learnable[3 * li + 1].v.data();
            const S* beta = params.learnable[3 * li + 2].v.data();
            if (train) {
                tr.stats = batchnorm_forward_train(z, gamma, beta, static_cast<S>(arch_.bn_epsilon),
                                                   tr.xhat, tr.y);
            } else {
                const S* rm = params.running[2 * li].v.data();
                const S* rv = params.running[2 * li + 1].v.data();
                batchnorm_forward_eval(z, gamma, beta, rm, rv, static_cast<S>(arch_.bn_epsilon),
                                       tr.xhat, tr.y);
                tr.stats.mean.assign(rm, rm + conv_[li].out_c);
                tr.stats.var.assign(rv, rv + conv_[li].out_c);
            }
            acts[li].resize(b);
            for (std::size_t s = 0; s < b; ++s) {
                leaky_relu_forward(tr.y[s], static_cast<S>(arch_.leaky_slope), acts[li][s]);
            }
        }

        rec.pooled.resize(b);
        rec.u1.resize(b);
        rec.a1.resize(b);
        rec.u2.resize(b);
        rec.a2.resize(b);
        rec.out.resize(b);
        rec.phi_raw.resize(b);
        rec.psi_h_raw.resize(b);
        rec.phi_norm.resize(b);
        rec.psi_norm.resize(b);
        rec.phi.resize(b);
        rec.psi_h.resize(b);

        const auto& w1 = params.learnable[21].v;
        const auto& b1 = params.learnable[22].v;
        const auto& w2 = params.learnable[23].v;
        const auto& b2 = params.learnable[24].v;
        const auto& w3 = params.learnable[25].v;
        const auto& b3 = params.learnable[26].v;

        for (std::size_t s = 0; s < b; ++s) {
            Tensor3<S> pooled;
            adaptive_avg_pool_forward(acts[6][s], pool_h_, pool_w_, pooled);
            rec.pooled[s] = std::move(pooled.v);

            fc_forward(rec.pooled[s], w1.data(), b1.data(), arch_.fc_hidden1, fc_in_, rec.u1[s]);
            rec.a1[s] = rec.u1[s];
            for (auto& x : rec.a1[s]) x = x >= S(0) ? x : static_cast<S>(arch_.leaky_slope) * x;

            fc_forward(rec.a1[s], w2.data(), b2.data(), arch_.fc_hidden2, arch_.fc_hidden1, rec.u2[s]);
            rec.a2[s] = rec.u2[s];
            for (auto& x : rec.a2[s]) x = x >= S(0) ? x : static_cast<S>(arch_.leaky_slope) * x;

            fc_forward(rec.a2[s], w3.data(), b3.data(), out_dim_, arch_.fc_hidden2, rec.out[s]);

            emit_modem(rec.out[s], rec.phi_raw[s], rec.psi_h_raw[s], rec.phi_norm[s],
                       rec.psi_norm[s], rec.phi[s], rec.psi_h[s]);
        }
        return rec;
    }

    // Gradients of a scalar loss with respect to every learnable tensor, from
    // packed-complex upstream gradients at the emitted (Phi, Psi^H).
    ParamGrads<S> backward(const NetworkParams<S>& params, const Record& rec,
                           const std::vector<CMat>& d_phi, const std::vector<CMat>& d_psi_h) const {
        check_params(params);
        if (!rec.train) throw Error("net: backward requires a train-mode record");
        const std::size_t b = rec.pooled.size();
        if (d_phi.size() != b || d_psi_h.size() != b)
            throw Error("net: upstream gradient batch size mismatch");

        ParamGrads<S> grads(params.learnable.size());
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i].assign(params.learnable[i].size(), S(0));

        const auto& w1 = params.learnable[21].v;
        const auto& w2 = params.learnable[23].v;
        const auto& w3 = params.learnable[25].v;

        // activation-output gradient accumulators per conv stage
        std::array<std::vector<Tensor3<S>>, kNumConv> d_act;
        for (int li = 0; li < kNumConv; ++li) {
            d_act[li].assign(b, Tensor3<S>(conv_[li].out_c, dims_.m_prime, dims_.m));
        }

        for (std::size_t s = 0; s < b; ++s) {
            std::vector<S> d_out(out_dim_, S(0));
            head_backward(rec, s, d_phi[s], d_psi_h[s], d_out);

            std::vector<S> d_a2;
            fc_backward(rec.a2[s], w3.data(), out_dim_, arch_.fc_hidden2, d_out, grads[25].data(),
                        grads[26].data(), &d_a2);
            for (int i = 0; i < arch_.fc_hidden2; ++i)
                if (rec.u2[s][i] < S(0)) d_a2[i] *= static_cast<S>(arch_.leaky_slope);

            std::vector<S> d_a1;
            fc_backward(rec.a1[s], w2.data(), arch_.fc_hidden2, arch_.fc_hidden1, d_a2,
                        grads[23].data(), grads[24].data(), &d_a1);
            for (int i = 0; i < arch_.fc_hidden1; ++i)
                if (rec.u1[s][i] < S(0)) d_a1[i] *= static_cast<S>(arch_.leaky_slope);

            std::vector<S> d_pooled;
            fc_backward(rec.pooled[s], w1.data(), arch_.fc_hidden1, fc_in_, d_a1, grads[21].data(),
                        grads[22].data(), &d_pooled);

            Tensor3<S> d_pool_grid(arch_.fused_channels, pool_h_, pool_w_);
            d_pool_grid.v = std::move(d_pooled);
            adaptive_avg_pool_backward(dims_.m_prime, dims_.m, d_pool_grid, d_act[6][s]);
        }

        // conv stages in reverse, batch-coupled through BN statistics
        for (int li = kNumConv - 1; li >= 0; --li) {
            const ConvTrace& tr = rec.conv[li];
            std::vector<Tensor3<S>> d_y(b);
            for (std::size_t s = 0; s < b; ++s) {
                leaky_relu_backward(tr.y[s], d_act[li][s], static_cast<S>(arch_.leaky_slope), d_y[s]);
            }
            std::vector<Tensor3<S>> d_z;
            batchnorm_backward_train(tr.xhat, d_y, tr.stats,
                                     params.learnable[3 * li + 1].v.data(),
                                     static_cast<S>(arch_.bn_epsilon), grads[3 * li + 1].data(),
                                     grads[3 * li + 2].data(), d_z);
            const auto& kernel = params.learnable[3 * li].v;
            for (std::size_t s = 0; s < b; ++s) {
                Tensor3<S> d_in(conv_[li].in_c, dims_.m_prime, dims_.m);
                conv2d_backward(tr.in[s], kernel.data(), conv_[li].out_c, conv_[li].k, d_z[s],
                                grads[3 * li].data(), &d_in);
                route_input_gradient(li, d_in, d_act, s);
            }
        }
        return grads;
    }

    // Applies the momentum update of BN running statistics from a train pass.
    void update_running_stats(NetworkParams<S>& params, const Record& rec) const {
        if (!rec.train) throw Error("net: running stats update requires a train-mode record");
        const S mom = static_cast<S>(arch_.bn_momentum);
        const std::size_t count =
            rec.pooled.size() * static_cast<std::size_t>(dims_.m_prime) * dims_.m;
        // running variance stores the unbiased estimate
        const S correction = count > 1 ? static_cast<S>(count) / static_cast<S>(count - 1) : S(1);
        for (int li = 0; li < kNumConv; ++li) {
            auto& rm = params.running[2 * li].v;
            auto& rv = params.running[2 * li + 1].v;
            const auto& st = rec.conv[li].stats;
            for (int ch = 0; ch < conv_[li].out_c; ++ch) {
                rm[ch] = (S(1) - mom) * rm[ch] + mom * st.mean[ch];
                rv[ch] = (S(1) - mom) * rv[ch] + mom * st.var[ch] * correction;
            }
        }
    }

    const netdetail::ConvSpec& conv_spec(int i) const { return conv_[i]; }

private:
    void check_params(const NetworkParams<S>& p) const {
        if (p.learnable.size() != 27 || p.running.size() != 14)
            throw Error("net: parameter layout does not match this architecture");
    }

    // Dense connectivity: layer input = pathway input ++ earlier outputs.
    Tensor3<S> stage_input(int li, const Tensor3<S>& x0,
                           const std::array<std::vector<Tensor3<S>>, kNumConv>& acts,
                           std::size_t s) const {
        switch (li) {
            case 0: return x0;
            case 1: return concat_channels<S>({&x0, &acts[0][s]});
            case 2: return concat_channels<S>({&x0, &acts[0][s], &acts[1][s]});
            case 3: return x0;
            case 4: return concat_channels<S>({&x0, &acts[3][s]});
            case 5: return concat_channels<S>({&x0, &acts[3][s], &acts[4][s]});
            case 6: return concat_channels<S>({&acts[2][s], &acts[5][s]});
            default: throw Error("net: bad stage");
        }
    }

    // Splits a stage's input gradient back onto the producing activations.
    void route_input_gradient(int li, const Tensor3<S>& d_in,
                              std::array<std::vector<Tensor3<S>>, kNumConv>& d_act,
                              std::size_t s) const {
        const int pc = arch_.pathway_channels;
        auto add_slice = [&](Tensor3<S>& dst, int src_c0) {
            const std::size_t plane = static_cast<std::size_t>(dims_.m_prime) * dims_.m;
            const S* src = d_in.v.data() + static_cast<std::size_t>(src_c0) * plane;
            for (std::size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src[i];
        };
        switch (li) {
            case 0: case 3:
                break;  // only the network input remains; no gradient needed
            case 1: add_slice(d_act[0][s], 2); break;
            case 2: add_slice(d_act[0][s], 2); add_slice(d_act[1][s], 2 + pc); break;
            case 4: add_slice(d_act[3][s], 2); break;
            case 5: add_slice(d_act[3][s], 2); add_slice(d_act[4][s], 2 + pc); break;
            case 6: add_slice(d_act[2][s], 0); add_slice(d_act[5][s], pc); break;
            default: throw Error("net: bad stage");
        }
    }

    // Output layout: [Re Phi, Im Phi, Re Psi^H, Im Psi^H], matrices row-major.
    void emit_modem(const std::vector<S>& o, CMat& phi_raw, CMat& psi_h_raw, double& phi_norm,
                    double& psi_norm, CMat& phi, CMat& psi_h) const {
        const int mn = dims_.m * n_;
        const int nmp = n_ * dims_.m_prime;
        phi_raw.resize(dims_.m, n_);
        for (int i = 0; i < dims_.m; ++i)
            for (int j = 0; j < n_; ++j) {
                const int idx = i * n_ + j;
                phi_raw(i, j) = Cplx(static_cast<double>(o[idx]), static_cast<double>(o[mn + idx]));
            }
        psi_h_raw.resize(n_, dims_.m_prime);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < dims_.m_prime; ++j) {
                const int idx = i * dims_.m_prime + j;
                psi_h_raw(i, j) = Cplx(static_cast<double>(o[2 * mn + idx]),
                                       static_cast<double>(o[2 * mn + nmp + idx]));
            }
        phi_norm = phi_raw.norm();
        psi_norm = psi_h_raw.norm();
        if (phi_norm < 1e-30 || psi_norm < 1e-30)
            throw Error("net: raw modem output degenerated to zero");
        phi = phi_raw * (std::sqrt(phi_energy_target(n_)) / phi_norm);
        psi_h = psi_h_raw * (std::sqrt(psi_h_energy_target(n_, dims_.m, dims_.m_prime)) / psi_norm);
    }

    // Backward through the energy normalization: for P with norm n and
    // target c, the emitted matrix is s P with s = c/n, and
    //   dL/dP = s G - s Re<G, P> / n^2 * P.
    void head_backward(const Record& rec, std::size_t s, const CMat& g_phi, const CMat& g_psi_h,
                       std::vector<S>& d_out) const {
        const int mn = dims_.m * n_;
        const int nmp = n_ * dims_.m_prime;
        auto apply = [](const CMat& g, const CMat& raw, double norm, double target) {
            const double scale = std::sqrt(target) / norm;
            const double dot = g.real().cwiseProduct(raw.real()).sum() +
                               g.imag().cwiseProduct(raw.imag()).sum();
            return CMat(scale * g - (scale * dot / (norm * norm)) * raw);
        };
        const CMat d_phi_raw = apply(g_phi, rec.phi_raw[s], rec.phi_norm[s], phi_energy_target(n_));
        const CMat d_psi_raw = apply(g_psi_h, rec.psi_h_raw[s], rec.psi_norm[s],
                                     psi_h_energy_target(n_, dims_.m, dims_.m_prime));
        for (int i = 0; i < dims_.m; ++i)
            for (int j = 0; j < n_; ++j) {
                const int idx = i * n_ + j;
                d_out[idx] = static_cast<S>(d_phi_raw(i, j).real());
                d_out[mn + idx] = static_cast<S>(d_phi_raw(i, j).imag());
            }
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < dims_.m_prime; ++j) {
                const int idx = i * dims_.m_prime + j;
                d_out[2 * mn + idx] = static_cast<S>(d_psi_raw(i, j).real());
                d_out[2 * mn + nmp + idx] = static_cast<S>(d_psi_raw(i, j).imag());
            }
    }

    ArchConfig arch_;
    Dims dims_;
    int n_;
    std::array<netdetail::ConvSpec, kNumConv> conv_;
    int pool_h_ = 0, pool_w_ = 0;
    int fc_in_ = 0;
    int out_dim_ = 0;
};

// Elementwise leaky ReLU on a plain array (Eq.-style reference activation).
template <class S>
std::vector<S> leaky_relu(const std::vector<S>& x, S slope) {
    std::vector<S> y = x;
    for (auto& v : y) v = v >= S(0) ? v : slope * v;
    return y;
}

}  // namespace uwamod
