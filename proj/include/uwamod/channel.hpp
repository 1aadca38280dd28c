// channel.hpp - doubly dispersive underwater acoustic channel model
//
// A channel realization is a set of P paths (complex amplitude, delay,
// Doppler scaling factor). The discrete channel matrix H maps the M
// transmitted samples to M' received samples; entry (m', m) sums per-path
// contributions of the form
//
//   A_p e^{-j 2 pi f_c tau_p} e^{j 2 pi f_c a_p m'/F_s}
//       sinc(B gamma - m B/F_s),   gamma = (a_p + 1) m'/F_s - tau_p
//
// with a path's contribution to row m' zeroed whenever gamma falls outside
// [0, T] (the transmitted waveform only exists on that interval).

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "uwamod/config.hpp"
#include "uwamod/rng.hpp"

namespace uwamod {

using Cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

struct PathSet {
    std::vector<Cplx> amplitudes;  // A_p ~ CN(0,1)
    std::vector<double> delays;    // tau_p in [0, tau_max], seconds
    std::vector<double> doppler;   // a_p in [1/(1+a_max)-1, a_max]

    int size() const { return static_cast<int>(amplitudes.size()); }
};

inline PathSet sample_paths(const SystemConfig& cfg, RandomStream& stream) {
    if (cfg.p < 1) throw Error("sample_paths: path count must be at least 1");
    PathSet ps;
    ps.amplitudes.reserve(cfg.p);
    ps.delays.reserve(cfg.p);
    ps.doppler.reserve(cfg.p);
    for (int i = 0; i < cfg.p; ++i) ps.amplitudes.push_back(stream.complex_normal(1.0));
    for (int i = 0; i < cfg.p; ++i) ps.delays.push_back(stream.uniform(0.0, cfg.tau_max));
    const double a_lo = 1.0 / (1.0 + cfg.a_max) - 1.0;
    for (int i = 0; i < cfg.p; ++i) ps.doppler.push_back(stream.uniform(a_lo, cfg.a_max));
    return ps;
}

inline Cplx path_gain(Cplx amplitude, double tau, double f_c) {
    const double phase = -2.0 * M_PI * f_c * tau;
    return amplitude * Cplx(std::cos(phase), std::sin(phase));
}

// Builds H by accumulating one path at a time: the complex gain and the
// per-row Doppler phase are computed once per (path, row), then the sinc
// interpolation kernel is evaluated along the row.
inline CMat assemble_channel(const PathSet& paths, const SystemConfig& cfg) {
    const Dims d = derive_dims(cfg);
    if (paths.size() != cfg.p || paths.delays.size() != paths.amplitudes.size() ||
        paths.doppler.size() != paths.amplitudes.size()) {
        throw Error("assemble_channel: path set size does not match config");
    }
    CMat h = CMat::Zero(d.m_prime, d.m);
    const double ts = 1.0 / cfg.f_s;
    const double step = cfg.b * ts;
    for (int p = 0; p < paths.size(); ++p) {
        const Cplx xi = path_gain(paths.amplitudes[p], paths.delays[p], cfg.f_c);
        const double a = paths.doppler[p];
        for (int mp = 0; mp < d.m_prime; ++mp) {
            const double gamma = (a + 1.0) * mp * ts - paths.delays[p];
            if (gamma < 0.0 || gamma > cfg.t) continue;
            const double phase = 2.0 * M_PI * cfg.f_c * a * mp * ts;
            const Cplx coef = xi * Cplx(std::cos(phase), std::sin(phase));
            const double arg0 = cfg.b * gamma;
            for (int m = 0; m < d.m; ++m) {
                h(mp, m) += coef * sinc(arg0 - m * step);
            }
        }
    }
    return h;
}

// r = Hx + w, with w i.i.d. CN(0, sigma_n^2) per sample.
inline CVec apply_channel(const CMat& h, const CVec& x, const NoiseModel& noise, RandomStream& stream) {
    if (h.cols() != x.size()) throw Error("apply_channel: input length does not match channel");
    CVec r = h * x;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        r(i) += stream.complex_normal(noise.sigma_n_sq);
    }
    return r;
}

}  // namespace uwamod
