// link.hpp - Monte Carlo link evaluation: QPSK over the simulated channel
// with linear zero-forcing equalization, plus equivalent-rate sweeps
//
// The equalizer is given the true per-realization H_e (genie channel
// knowledge); "ici_aware" inverts all of H_e, "ici_ignorant" only its
// diagonal. Block randomness is keyed by (seed, snr index, block index), so
// two modems or equalizer modes evaluated with the same seed see identical
// paths, bits, and noise (paired comparison with common random numbers).

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "uwamod/channel.hpp"
#include "uwamod/criterion.hpp"
#include "uwamod/modem.hpp"
#include "uwamod/parallel.hpp"

namespace uwamod {

// Gray-coded QPSK: bit pair (b0, b1) -> ((1-2 b0) + j (1-2 b1)) / sqrt(2).
// Adjacent constellation points differ in exactly one bit.
inline CVec qpsk_map(const std::vector<std::uint8_t>& bits) {
    if (bits.size() % 2 != 0) throw Error("qpsk_map: bit vector length must be even");
    const double s = 1.0 / std::sqrt(2.0);
    CVec out(bits.size() / 2);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        out(i) = Cplx(s * (1.0 - 2.0 * bits[2 * i]), s * (1.0 - 2.0 * bits[2 * i + 1]));
    }
    return out;
}

// Hard decision by quadrant; inverse of qpsk_map on noiseless input.
inline std::vector<std::uint8_t> qpsk_demap(const CVec& symbols) {
    std::vector<std::uint8_t> bits(2 * symbols.size());
    for (Eigen::Index i = 0; i < symbols.size(); ++i) {
        bits[2 * i] = symbols(i).real() < 0.0 ? 1 : 0;
        bits[2 * i + 1] = symbols(i).imag() < 0.0 ? 1 : 0;
    }
    return bits;
}

// z = (H^H H)^-1 H^H y by column-pivoted QR. Refuses matrices whose
// R-diagonal spread indicates a condition number beyond 1e12.
inline CVec lzf_equalize(const CMat& h_hat, const CVec& y) {
    if (h_hat.rows() != y.size()) throw Error("lzf_equalize: shape mismatch");
    const Eigen::ColPivHouseholderQR<CMat> qr(h_hat);
    const auto& r = qr.matrixR();
    const int n = static_cast<int>(std::min(h_hat.rows(), h_hat.cols()));
    const double r_max = std::abs(r(0, 0));
    const double r_min = std::abs(r(n - 1, n - 1));
    if (!(r_min > 0.0) || r_max / r_min > 1e12) {
        throw SingularMatrixError("lzf_equalize: matrix is singular or numerically unusable");
    }
    return qr.solve(y);
}

enum class EqualizerMode { ici_aware, ici_ignorant };

inline const char* to_string(EqualizerMode m) {
    return m == EqualizerMode::ici_aware ? "ici_aware" : "ici_ignorant";
}

struct BerPoint {
    double snr_db = 0;
    long long bits = 0;
    long long errors = 0;
    double ber = 0;
    int skipped_blocks = 0;
};

struct BerCurve {
    std::string modem_label;
    EqualizerMode mode = EqualizerMode::ici_aware;
    double a_max_used = 0;
    std::vector<BerPoint> points;
};

// One QPSK block over a fresh channel realization: modulate, propagate,
// demodulate, equalize against the genie H_e, count bit errors.
inline BerCurve simulate_ber(const Modem& modem, const SystemConfig& cfg,
                             const std::vector<double>& snr_db_list, EqualizerMode mode, int blocks,
                             std::uint64_t seed, int threads = 1,
                             const std::string& label = "modem") {
    if (blocks < 1) throw Error("simulate_ber: block count must be at least 1");
    validate(cfg);
    const Dims d = derive_dims(cfg);
    if (modem.m() != d.m || modem.m_prime() != d.m_prime || modem.n() != cfg.n)
        throw Error("simulate_ber: modem does not match config dimensions");

    BerCurve curve;
    curve.modem_label = label;
    curve.mode = mode;
    curve.a_max_used = cfg.a_max;

    for (std::size_t si = 0; si < snr_db_list.size(); ++si) {
        const NoiseModel noise = snr_from_db(snr_db_list[si]);
        std::vector<long long> errors(blocks, 0);
        std::vector<std::uint8_t> skipped(blocks, 0);
        parallel_for(0, blocks, threads, [&](int blk) {
            RandomStream rs = spawn_stream(seed, "ber-block",
                                           si * static_cast<std::uint64_t>(blocks) + blk);
            const PathSet paths = sample_paths(cfg, rs);
            std::vector<std::uint8_t> bits(2 * cfg.n);
            for (auto& b : bits) b = static_cast<std::uint8_t>(rs.next_u64() & 1);
            const CMat h = assemble_channel(paths, cfg);
            const CVec x = modulate(modem, qpsk_map(bits));
            const CVec r = apply_channel(h, x, noise, rs);
            const CVec y = demodulate(modem, r);
            const CMat h_e = equivalent_channel(modem, h);
            CMat h_hat;
            if (mode == EqualizerMode::ici_aware) {
                h_hat = h_e;
            } else {
                h_hat = CMat(h_e.diagonal().asDiagonal());
            }
            try {
                const CVec z = lzf_equalize(h_hat, y);
                const std::vector<std::uint8_t> decided = qpsk_demap(z);
                long long e = 0;
                for (std::size_t i = 0; i < bits.size(); ++i) e += bits[i] != decided[i];
                errors[blk] = e;
            } catch (const SingularMatrixError&) {
                skipped[blk] = 1;
            }
        });
        BerPoint pt;
        pt.snr_db = snr_db_list[si];
        for (int blk = 0; blk < blocks; ++blk) {
            if (skipped[blk]) {
                ++pt.skipped_blocks;
            } else {
                pt.errors += errors[blk];
                pt.bits += 2 * cfg.n;
            }
        }
        pt.ber = pt.bits > 0 ? static_cast<double>(pt.errors) / pt.bits : 0.0;
        curve.points.push_back(pt);
    }
    return curve;
}

// Reference case for the Gaussian sanity check: identity equivalent channel,
// one QPSK symbol per use. The analytic BER is Q(sqrt(ss^2/sn^2)).
inline BerPoint awgn_qpsk_ber(double snr_db, long long symbol_count, RandomStream& rs) {
    const NoiseModel noise = snr_from_db(snr_db);
    BerPoint pt;
    pt.snr_db = snr_db;
    for (long long i = 0; i < symbol_count; ++i) {
        std::vector<std::uint8_t> bits = {static_cast<std::uint8_t>(rs.next_u64() & 1),
                                          static_cast<std::uint8_t>(rs.next_u64() & 1)};
        const CVec s = qpsk_map(bits);
        const Cplx received = s(0) + rs.complex_normal(noise.sigma_n_sq);
        CVec y(1);
        y(0) = received;
        const std::vector<std::uint8_t> decided = qpsk_demap(y);
        pt.errors += (decided[0] != bits[0]) + (decided[1] != bits[1]);
        pt.bits += 2;
    }
    pt.ber = static_cast<double>(pt.errors) / pt.bits;
    return pt;
}

inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

struct RateRow {
    double snr_db = 0;
    double avg_rate = 0;  // mean over channels of the mean sub-channel rate
    double min_rate = 0;  // mean over channels of the minimum sub-channel rate
};

struct RateReport {
    std::string modem_label;
    std::vector<RateRow> rows;
};

inline RateReport rate_sweep(const Modem& modem, const std::vector<CMat>& test_channels,
                             const std::vector<double>& snr_db_list,
                             const std::string& label = "modem") {
    if (test_channels.empty()) throw Error("rate_sweep: empty test set");
    RateReport report;
    report.modem_label = label;
    std::vector<CMat> equivalents;
    equivalents.reserve(test_channels.size());
    for (const CMat& h : test_channels) equivalents.push_back(equivalent_channel(modem, h));
    for (double snr : snr_db_list) {
        const NoiseModel noise = snr_from_db(snr);
        RateRow row;
        row.snr_db = snr;
        for (const CMat& h_e : equivalents) {
            const Eigen::VectorXd rates = subchannel_rates(h_e, modem.psi_h, noise);
            row.avg_rate += rates.mean();
            row.min_rate += rates.minCoeff();
        }
        row.avg_rate /= static_cast<double>(equivalents.size());
        row.min_rate /= static_cast<double>(equivalents.size());
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace uwamod
