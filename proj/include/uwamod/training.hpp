// training.hpp - dataset generation and the two-stage training loop
//
// Stage I maximizes the criterion gap to ZP-OFDM (loss_1) with mini-batch
// Adam. Stage II starts from the Stage-I weights and adds the convergence
// penalty of loss_2: each step consumes one batch split into two halves,
// pairing sample i with sample i + B/2. After Stage II the per-channel
// outputs on the validation set are averaged and renormalized into the
// final fixed modem.

#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "uwamod/channel.hpp"
#include "uwamod/criterion.hpp"
#include "uwamod/modem.hpp"
#include "uwamod/net/adam.hpp"
#include "uwamod/net/model.hpp"
#include "uwamod/parallel.hpp"

namespace uwamod {

struct DatasetPair {
    CMat h;         // M' x M channel realization
    CMat h_e_ofdm;  // N x N equivalent channel under the ZP-OFDM modem
};

struct Dataset {
    SystemConfig config;
    std::vector<DatasetPair> pairs;

    int size() const { return static_cast<int>(pairs.size()); }
};

inline Tensor3<double> channel_image(const CMat& h) {
    Tensor3<double> t(2, static_cast<int>(h.rows()), static_cast<int>(h.cols()));
    for (int i = 0; i < h.rows(); ++i) {
        for (int j = 0; j < h.cols(); ++j) {
            t.at(0, i, j) = h(i, j).real();
            t.at(1, i, j) = h(i, j).imag();
        }
    }
    return t;
}

// Draws path sets sequentially from the stream (so the result is a pure
// function of the stream state and count), then assembles in parallel.
inline Dataset generate_dataset(const SystemConfig& cfg, int count, RandomStream& stream,
                                int threads = 1) {
    if (count < 0) throw Error("generate_dataset: negative count");
    validate(cfg);
    Dataset ds;
    ds.config = cfg;
    ds.pairs.resize(count);
    std::vector<PathSet> paths(count);
    for (int i = 0; i < count; ++i) paths[i] = sample_paths(cfg, stream);
    const Modem ofdm = zp_ofdm_modem(cfg);
    parallel_for(0, count, threads, [&](int i) {
        ds.pairs[i].h = assemble_channel(paths[i], cfg);
        ds.pairs[i].h_e_ofdm = equivalent_channel(ofdm, ds.pairs[i].h);
    });
    return ds;
}

struct TrainingPlan {
    int e1 = 400;       // Stage-I epochs
    int e2 = 400;       // Stage-II epochs
    int batch_size = 100;
    int n_train = 15000;
    int n_val = 5000;
    int n_test = 10000;
};

inline void validate(const TrainingPlan& p) {
    if (p.e1 < 0 || p.e2 < 0) throw Error("plan: epoch counts must be nonnegative");
    if (p.batch_size < 2 || p.batch_size % 2 != 0)
        throw Error("plan: batch size must be even and at least 2 (Stage II pairs halves)");
    if (p.n_train < 1 || p.n_val < 1 || p.n_test < 1)
        throw Error("plan: dataset sizes must be positive");
}

struct EpochStats {
    int stage = 1;
    int epoch = 0;           // 1-based within its stage
    double train_loss = 0;   // mean total loss over the epoch's steps
    double train_perf = 0;   // performance component
    double train_conv = 0;   // convergence component (zero in Stage I)
    double val_loss = 0;     // retention metric
    double val_perf = 0;     // mean loss_1 on the validation set
    double val_conv = 0;     // mean pairwise output distance on the validation set
};

struct TrainResult {
    NetworkParams<double> params;
    std::vector<EpochStats> history;
};

namespace traindetail {

inline std::vector<int> shuffled_indices(int count, RandomStream& rs) {
    std::vector<int> idx(count);
    for (int i = 0; i < count; ++i) idx[i] = i;
    for (int i = count - 1; i > 0; --i) {
        const int j = static_cast<int>(rs.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

struct ValSummary {
    double mean_loss1 = 0;
    double mean_pair_dist = 0;  // over consecutive disjoint pairs
};

// Eval-mode pass over the validation set; BN uses running statistics, so
// chunking does not change the outputs.
inline ValSummary validate_pass(const UwaModNet<double>& net, const NetworkParams<double>& params,
                                const Dataset& val, const Modem& ofdm, const NoiseModel& noise,
                                double k) {
    ValSummary out;
    std::vector<CMat> phis, psis;
    phis.reserve(val.size());
    psis.reserve(val.size());
    const int chunk = 64;
    double acc = 0.0;
    for (int start = 0; start < val.size(); start += chunk) {
        const int stop = std::min(val.size(), start + chunk);
        std::vector<Tensor3<double>> batch;
        batch.reserve(stop - start);
        for (int i = start; i < stop; ++i) batch.push_back(channel_image(val.pairs[i].h));
        const auto rec = net.forward(params, batch, false);
        for (int i = start; i < stop; ++i) {
            const int s = i - start;
            Modem md{rec.phi[s], rec.psi_h[s]};
            const CMat h_e = equivalent_channel(md, val.pairs[i].h);
            acc += loss_stage1(h_e, val.pairs[i].h_e_ofdm, md.psi_h, ofdm.psi_h, noise, k);
            phis.push_back(rec.phi[s]);
            psis.push_back(rec.psi_h[s]);
        }
    }
    out.mean_loss1 = acc / val.size();
    const int pairs = val.size() / 2;
    if (pairs > 0) {
        double dist = 0.0;
        for (int q = 0; q < pairs; ++q) {
            dist += (phis[2 * q] - phis[2 * q + 1]).norm() + (psis[2 * q] - psis[2 * q + 1]).norm();
        }
        out.mean_pair_dist = dist / pairs;
    }
    return out;
}

}  // namespace traindetail

// Stage I: mini-batch Adam on the batch-mean loss_1. Keeps the parameters
// of the epoch with the best validation mean loss_1.
inline TrainResult train_stage1(const UwaModNet<double>& net, NetworkParams<double> params,
                                const Dataset& train, const Dataset& val, const TrainingPlan& plan,
                                const SystemConfig& cfg) {
    if (train.size() == 0) throw Error("train_stage1: empty training set");
    const Modem ofdm = zp_ofdm_modem(cfg);
    const NoiseModel noise = snr_from_db(cfg.snr_train_db);
    RandomStream shuffle = spawn_stream(cfg.seed, "stage1-shuffle");
    AdamState<double> adam = AdamState<double>::init(params);

    TrainResult result;
    result.params = params;
    double best = std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= plan.e1; ++epoch) {
        const std::vector<int> order = traindetail::shuffled_indices(train.size(), shuffle);
        double epoch_loss = 0.0;
        int steps = 0;
        for (int start = 0; start < train.size(); start += plan.batch_size) {
            const int stop = std::min(train.size(), start + plan.batch_size);
            const int b = stop - start;
            std::vector<Tensor3<double>> batch;
            batch.reserve(b);
            for (int i = start; i < stop; ++i) batch.push_back(channel_image(train.pairs[order[i]].h));
            const auto rec = net.forward(params, batch, true);

            double batch_loss = 0.0;
            std::vector<CMat> d_phi(b), d_psi(b);
            for (int s = 0; s < b; ++s) {
                const DatasetPair& pair = train.pairs[order[start + s]];
                Modem md{rec.phi[s], rec.psi_h[s]};
                const CMat h_e = equivalent_channel(md, pair.h);
                batch_loss += loss_stage1(h_e, pair.h_e_ofdm, md.psi_h, ofdm.psi_h, noise, cfg.k);
                const ModemGradient g = criterion_gradient(pair.h, md, noise, cfg.k);
                d_phi[s] = (-1.0 / b) * g.d_phi;
                d_psi[s] = (-1.0 / b) * g.d_psi_h;
            }
            const auto grads = net.backward(params, rec, d_phi, d_psi);
            adam_step(params, grads, adam);
            net.update_running_stats(params, rec);
            epoch_loss += batch_loss / b;
            ++steps;
        }

        const auto vs = traindetail::validate_pass(net, params, val, ofdm, noise, cfg.k);
        EpochStats es;
        es.stage = 1;
        es.epoch = epoch;
        es.train_loss = steps > 0 ? epoch_loss / steps : 0.0;
        es.train_perf = es.train_loss;
        es.train_conv = 0.0;
        es.val_loss = vs.mean_loss1;
        es.val_perf = vs.mean_loss1;
        es.val_conv = vs.mean_pair_dist;
        result.history.push_back(es);

        if (vs.mean_loss1 < best) {
            best = vs.mean_loss1;
            result.params = params;
        }
    }
    if (plan.e1 == 0) result.params = std::move(params);
    return result;
}

// Stage II: each step pairs the two halves of one batch and descends the
// pair-mean loss_2. Retention uses the alpha-weighted validation loss_2.
inline TrainResult train_stage2(const UwaModNet<double>& net, NetworkParams<double> params,
                                const Dataset& train, const Dataset& val, const TrainingPlan& plan,
                                const SystemConfig& cfg) {
    if (train.size() == 0) throw Error("train_stage2: empty training set");
    const Modem ofdm = zp_ofdm_modem(cfg);
    const NoiseModel noise = snr_from_db(cfg.snr_train_db);
    RandomStream shuffle = spawn_stream(cfg.seed, "stage2-shuffle");
    AdamState<double> adam = AdamState<double>::init(params);
    const double alpha = cfg.alpha;

    TrainResult result;
    result.params = params;
    double best = std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= plan.e2; ++epoch) {
        const std::vector<int> order = traindetail::shuffled_indices(train.size(), shuffle);
        double epoch_loss = 0.0, epoch_perf = 0.0, epoch_conv = 0.0;
        int steps = 0;
        for (int start = 0; start + 1 < train.size(); start += plan.batch_size) {
            int b = std::min(train.size(), start + plan.batch_size) - start;
            if (b % 2 == 1) --b;  // pairs need an even count
            if (b < 2) break;
            const int half = b / 2;
            std::vector<Tensor3<double>> batch;
            batch.reserve(b);
            for (int i = start; i < start + b; ++i)
                batch.push_back(channel_image(train.pairs[order[i]].h));
            const auto rec = net.forward(params, batch, true);

            double perf = 0.0, conv = 0.0;
            std::vector<CMat> d_phi(b), d_psi(b);
            for (int s = 0; s < b; ++s) {
                const DatasetPair& pair = train.pairs[order[start + s]];
                Modem md{rec.phi[s], rec.psi_h[s]};
                const CMat h_e = equivalent_channel(md, pair.h);
                perf += loss_stage1(h_e, pair.h_e_ofdm, md.psi_h, ofdm.psi_h, noise, cfg.k);
                const ModemGradient g = criterion_gradient(pair.h, md, noise, cfg.k);
                d_phi[s] = (-alpha / half) * g.d_phi;
                d_psi[s] = (-alpha / half) * g.d_psi_h;
            }
            for (int q = 0; q < half; ++q) {
                const int i = q, j = q + half;
                const CMat phi_diff = rec.phi[i] - rec.phi[j];
                const CMat psi_diff = rec.psi_h[i] - rec.psi_h[j];
                const double pn = phi_diff.norm(), sn = psi_diff.norm();
                conv += pn + sn;
                if (pn > 0.0) {
                    d_phi[i] += ((1.0 - alpha) / half / pn) * phi_diff;
                    d_phi[j] -= ((1.0 - alpha) / half / pn) * phi_diff;
                }
                if (sn > 0.0) {
                    d_psi[i] += ((1.0 - alpha) / half / sn) * psi_diff;
                    d_psi[j] -= ((1.0 - alpha) / half / sn) * psi_diff;
                }
            }
            const auto grads = net.backward(params, rec, d_phi, d_psi);
            adam_step(params, grads, adam);
            net.update_running_stats(params, rec);

            epoch_perf += perf / b;
            epoch_conv += conv / half;
            epoch_loss += alpha * perf / half + (1.0 - alpha) * conv / half;
            ++steps;
        }

        const auto vs = traindetail::validate_pass(net, params, val, ofdm, noise, cfg.k);
        EpochStats es;
        es.stage = 2;
        es.epoch = epoch;
        es.train_loss = steps > 0 ? epoch_loss / steps : 0.0;
        es.train_perf = steps > 0 ? epoch_perf / steps : 0.0;
        es.train_conv = steps > 0 ? epoch_conv / steps : 0.0;
        es.val_perf = vs.mean_loss1;
        es.val_conv = vs.mean_pair_dist;
        es.val_loss = alpha * 2.0 * vs.mean_loss1 + (1.0 - alpha) * vs.mean_pair_dist;
        result.history.push_back(es);

        if (es.val_loss < best) {
            best = es.val_loss;
            result.params = params;
        }
    }
    if (plan.e2 == 0) result.params = std::move(params);
    return result;
}

// Eval-mode outputs on every validation channel, averaged elementwise and
// renormalized to the modem energy budgets.
inline Modem finalize_modem(const UwaModNet<double>& net, const NetworkParams<double>& params,
                            const Dataset& val) {
    if (val.size() == 0) throw Error("finalize_modem: empty validation set");
    const Dims d = net.dims();
    CMat phi_sum = CMat::Zero(d.m, net.subcarriers());
    CMat psi_sum = CMat::Zero(net.subcarriers(), d.m_prime);
    const int chunk = 64;
    for (int start = 0; start < val.size(); start += chunk) {
        const int stop = std::min(val.size(), start + chunk);
        std::vector<Tensor3<double>> batch;
        batch.reserve(stop - start);
        for (int i = start; i < stop; ++i) batch.push_back(channel_image(val.pairs[i].h));
        const auto rec = net.forward(params, batch, false);
        for (std::size_t s = 0; s < batch.size(); ++s) {
            phi_sum += rec.phi[s];
            psi_sum += rec.psi_h[s];
        }
    }
    return normalize_modem(phi_sum / val.size(), psi_sum / val.size());
}

}  // namespace uwamod
