// criterion.hpp - equivalent sub-channel rates, trade-off criterion, losses
//
// The criterion rewards both average and worst sub-channel rate:
//
//   f(H_e) = sum_n r_n + K N min_n r_n
//   r_n    = log2(1 + |He_nn|^2 / (sum_{k!=n} |He_nk|^2
//                                  + (sn^2/ss^2) sum_m' |Psi^H_nm'|^2))
//
// Gradients are taken with respect to the real and imaginary parts of the
// modem matrices and packed as complex numbers (d/dRe + j d/dIm). The min is
// non-smooth; ties route the subgradient through the smallest index so that
// training is reproducible.

#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "uwamod/config.hpp"
#include "uwamod/modem.hpp"

namespace uwamod {

struct CriterionValue {
    double f = 0.0;
    double min_rate = 0.0;
    int min_index = 0;
    double avg_rate = 0.0;
};

inline Eigen::VectorXd subchannel_rates(const CMat& h_e, const CMat& psi_h, const NoiseModel& noise) {
    if (h_e.rows() != h_e.cols()) throw Error("subchannel_rates: H_e must be square");
    if (psi_h.rows() != h_e.rows()) throw Error("subchannel_rates: Psi^H row count must be N");
    if (!(noise.sigma_n_sq > 0.0) || !(noise.sigma_s_sq > 0.0))
        throw Error("subchannel_rates: noise and symbol powers must be positive");
    const int n = static_cast<int>(h_e.rows());
    const double noise_ratio = noise.sigma_n_sq / noise.sigma_s_sq;
    const double inv_ln2 = 1.0 / std::log(2.0);
    Eigen::VectorXd rates(n);
    for (int i = 0; i < n; ++i) {
        const double signal = std::norm(h_e(i, i));
        const double row_energy = h_e.row(i).squaredNorm();
        const double interference = row_energy - signal;
        const double denom = interference + noise_ratio * psi_h.row(i).squaredNorm();
        if (signal == 0.0) {
            rates(i) = 0.0;
        } else if (denom <= 0.0) {
            throw Error("subchannel_rates: zero interference-plus-noise denominator");
        } else {
            rates(i) = std::log1p(signal / denom) * inv_ln2;
        }
    }
    return rates;
}

inline CriterionValue criterion_f(const Eigen::VectorXd& rates, double k) {
    if (rates.size() == 0) throw Error("criterion_f: empty rate vector");
    CriterionValue cv;
    cv.min_index = 0;
    cv.min_rate = rates(0);
    double sum = 0.0;
    for (int i = 0; i < rates.size(); ++i) {
        sum += rates(i);
        if (rates(i) < cv.min_rate) {
            cv.min_rate = rates(i);
            cv.min_index = i;
        }
    }
    cv.avg_rate = sum / static_cast<double>(rates.size());
    cv.f = sum + k * static_cast<double>(rates.size()) * cv.min_rate;
    return cv;
}

inline double criterion_of(const CMat& h_e, const CMat& psi_h, const NoiseModel& noise, double k) {
    return criterion_f(subchannel_rates(h_e, psi_h, noise), k).f;
}

// loss_1 = f(H_e,OFDM) - f(H_e); negative iff the learned modem wins.
inline double loss_stage1(const CMat& h_e, const CMat& h_e_ofdm, const CMat& psi_h,
                          const CMat& psi_h_ofdm, const NoiseModel& noise, double k) {
    return criterion_of(h_e_ofdm, psi_h_ofdm, noise, k) - criterion_of(h_e, psi_h, noise, k);
}

struct ModemPair {
    const CMat& h_e;
    const CMat& psi_h;
    const CMat& phi;
};

// loss_2 = alpha (loss_1(1) + loss_1(2))
//          + (1 - alpha) (||Phi1 - Phi2||_F + ||Psi1 - Psi2||_F)
inline double loss_stage2(const ModemPair& pair1, const ModemPair& pair2,
                          const CMat& h_e_ofdm_1, const CMat& h_e_ofdm_2,
                          const CMat& psi_h_ofdm, const NoiseModel& noise,
                          double k, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw Error("loss_stage2: alpha must lie in [0, 1]");
    const double perf = loss_stage1(pair1.h_e, h_e_ofdm_1, pair1.psi_h, psi_h_ofdm, noise, k) +
                        loss_stage1(pair2.h_e, h_e_ofdm_2, pair2.psi_h, psi_h_ofdm, noise, k);
    const double conv = (pair1.phi - pair2.phi).norm() + (pair1.psi_h - pair2.psi_h).norm();
    return alpha * perf + (1.0 - alpha) * conv;
}

struct ModemGradient {
    CMat d_phi;    // M x N, packed d/dRe + j d/dIm
    CMat d_psi_h;  // N x M'
};

// Analytic gradient of f(Psi^H H Phi) with respect to (Phi, Psi^H).
inline ModemGradient criterion_gradient(const CMat& h, const Modem& md, const NoiseModel& noise, double k) {
    const CMat h_e = equivalent_channel(md, h);
    const int n = static_cast<int>(h_e.rows());
    const double noise_ratio = noise.sigma_n_sq / noise.sigma_s_sq;
    const double inv_ln2 = 1.0 / std::log(2.0);

    const Eigen::VectorXd rates = subchannel_rates(h_e, md.psi_h, noise);
    const CriterionValue cv = criterion_f(rates, k);

    // Per-row sensitivities of f to the signal power and to the
    // interference-plus-noise denominator.
    Eigen::VectorXd d_signal(n), d_denom(n);
    for (int i = 0; i < n; ++i) {
        const double signal = std::norm(h_e(i, i));
        const double denom = h_e.row(i).squaredNorm() - signal + noise_ratio * md.psi_h.row(i).squaredNorm();
        if (denom <= 0.0) throw Error("criterion_gradient: zero interference-plus-noise denominator");
        const double weight = 1.0 + (i == cv.min_index ? k * static_cast<double>(n) : 0.0);
        const double common = weight * inv_ln2 / (denom + signal);
        d_signal(i) = common;
        d_denom(i) = -common * signal / denom;
    }

    CMat g_he(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            g_he(i, j) = 2.0 * h_e(i, j) * (i == j ? d_signal(i) : d_denom(i));
        }
    }

    ModemGradient g;
    g.d_phi = (md.psi_h * h).adjoint() * g_he;
    g.d_psi_h = g_he * (h * md.phi).adjoint();
    g.d_psi_h += 2.0 * noise_ratio * d_denom.asDiagonal() * md.psi_h;
    return g;
}

}  // namespace uwamod
