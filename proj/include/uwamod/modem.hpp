// modem.hpp - modem abstraction and the ZP-OFDM baseline
//
// A modem is the matrix pair (Phi: M x N, Psi^H: N x M'). Energy budgets are
// fixed: ||Phi||_F^2 = N and ||Psi^H||_F^2 = N M'/M, matching what the
// ZP-OFDM construction yields without any explicit scaling.

#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "uwamod/channel.hpp"
#include "uwamod/config.hpp"

namespace uwamod {

struct Modem {
    CMat phi;    // M x N modulation matrix
    CMat psi_h;  // N x M' demodulation matrix

    int m() const { return static_cast<int>(phi.rows()); }
    int n() const { return static_cast<int>(phi.cols()); }
    int m_prime() const { return static_cast<int>(psi_h.cols()); }
};

inline double phi_energy_target(int n) { return static_cast<double>(n); }
inline double psi_h_energy_target(int n, int m, int m_prime) {
    return static_cast<double>(n) * m_prime / m;
}

// Unitary DFT matrix, entry (i,j) = exp(-j 2 pi i j / M) / sqrt(M).
inline CMat dft_matrix(int m) {
    if (m < 1) throw Error("dft_matrix: size must be at least 1");
    CMat f(m, m);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            // reduce i*j mod m first so the phase argument stays small
            const long long ij = (static_cast<long long>(i) * j) % m;
            const double phase = -2.0 * M_PI * static_cast<double>(ij) / m;
            f(i, j) = Cplx(scale * std::cos(phase), scale * std::sin(phase));
        }
    }
    return f;
}

// Picks N of the M DFT bins, spread as evenly as the integer grid allows:
// k_n = floor(n M / N).
inline std::vector<int> subcarrier_indices(int m, int n) {
    if (n < 1 || m < 1) throw Error("subcarrier_indices: counts must be positive");
    if (n > m) throw Error("subcarrier_indices: N must not exceed M");
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) {
        idx[i] = static_cast<int>((static_cast<long long>(i) * m) / n);
    }
    return idx;
}

// Overlap-add matrix R (M x M'): keeps the middle M-L samples in place and
// folds the head and tail L samples together. Defined for any 0 <= L <= M.
inline Eigen::MatrixXd overlap_add_matrix(int m, int m_prime) {
    const int l = m_prime - m;
    if (l < 0) throw Error("overlap_add_matrix: M' must be at least M");
    if (l > m) throw Error("overlap_add_matrix: L = M' - M must not exceed M");
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m_prime);
    for (int i = 0; i < m - l; ++i) r(i, l + i) = 1.0;
    for (int j = 0; j < l; ++j) {
        r(m - l + j, j) = 1.0;
        r(m - l + j, m + j) = 1.0;
    }
    return r;
}

inline Modem zp_ofdm_modem(int m, int m_prime, int n) {
    const CMat f = dft_matrix(m);
    const std::vector<int> idx = subcarrier_indices(m, n);
    const Eigen::MatrixXd r = overlap_add_matrix(m, m_prime);

    Modem md;
    md.phi.resize(m, n);
    for (int c = 0; c < n; ++c) md.phi.col(c) = f.row(idx[c]).adjoint();

    CMat selected(n, m);
    for (int c = 0; c < n; ++c) selected.row(c) = f.row(idx[c]);
    md.psi_h = selected * r;
    return md;
}

inline Modem zp_ofdm_modem(const SystemConfig& cfg) {
    const Dims d = derive_dims(cfg);
    return zp_ofdm_modem(d.m, d.m_prime, cfg.n);
}

// Rescales each matrix by a positive scalar so the energy budgets hold.
inline Modem normalize_modem(const CMat& phi_raw, const CMat& psi_h_raw) {
    if (phi_raw.cols() != psi_h_raw.rows())
        throw Error("normalize_modem: Phi columns and Psi^H rows disagree on N");
    const int m = static_cast<int>(phi_raw.rows());
    const int n = static_cast<int>(phi_raw.cols());
    const int m_prime = static_cast<int>(psi_h_raw.cols());
    const double phi_norm = phi_raw.norm();
    const double psi_norm = psi_h_raw.norm();
    if (phi_norm <= 0.0 || psi_norm <= 0.0)
        throw Error("normalize_modem: zero matrix cannot be normalized");
    Modem md;
    md.phi = phi_raw * (std::sqrt(phi_energy_target(n)) / phi_norm);
    md.psi_h = psi_h_raw * (std::sqrt(psi_h_energy_target(n, m, m_prime)) / psi_norm);
    return md;
}

inline void check_modem_energy(const Modem& md, double rel_tol = 1e-9) {
    const double e_phi = md.phi.squaredNorm();
    const double e_psi = md.psi_h.squaredNorm();
    const double t_phi = phi_energy_target(md.n());
    const double t_psi = psi_h_energy_target(md.n(), md.m(), md.m_prime());
    if (std::abs(e_phi - t_phi) > rel_tol * t_phi)
        throw Error("modem: Phi energy deviates from N");
    if (std::abs(e_psi - t_psi) > rel_tol * t_psi)
        throw Error("modem: Psi^H energy deviates from N M'/M");
}

// H_e = Psi^H H Phi
inline CMat equivalent_channel(const Modem& md, const CMat& h) {
    if (h.rows() != md.psi_h.cols() || h.cols() != md.phi.rows())
        throw Error("equivalent_channel: channel dimensions do not match modem");
    return md.psi_h * h * md.phi;
}

inline CVec modulate(const Modem& md, const CVec& s) {
    if (s.size() != md.phi.cols()) throw Error("modulate: symbol vector length must be N");
    return md.phi * s;
}

inline CVec demodulate(const Modem& md, const CVec& r) {
    if (r.size() != md.psi_h.cols()) throw Error("demodulate: received vector length must be M'");
    return md.psi_h * r;
}

}  // namespace uwamod
