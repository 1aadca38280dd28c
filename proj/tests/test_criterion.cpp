#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "uwamod/criterion.hpp"
#include "uwamod/rng.hpp"

using namespace uwamod;

namespace {

CMat random_cmat(int rows, int cols, RandomStream& rs) {
    CMat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rs.complex_normal(1.0);
    return m;
}

// Independent explicit-sum recomputation of the sub-channel rates.
Eigen::VectorXd rates_oracle(const CMat& h_e, const CMat& psi_h, const NoiseModel& noise) {
    const int n = static_cast<int>(h_e.rows());
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
        double interference = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j != i)
                interference += h_e(i, j).real() * h_e(i, j).real() + h_e(i, j).imag() * h_e(i, j).imag();
        }
        double noise_shape = 0.0;
        for (int j = 0; j < psi_h.cols(); ++j) {
            noise_shape += psi_h(i, j).real() * psi_h(i, j).real() + psi_h(i, j).imag() * psi_h(i, j).imag();
        }
        const double signal = h_e(i, i).real() * h_e(i, i).real() + h_e(i, i).imag() * h_e(i, i).imag();
        const double denom = interference + (noise.sigma_n_sq / noise.sigma_s_sq) * noise_shape;
        r(i) = signal == 0.0 ? 0.0 : std::log2(1.0 + signal / denom);
    }
    return r;
}

}  // namespace

TEST_CASE("subchannel_rates closed-form cases") {
    const int n = 2, m_prime = 5;
    CMat psi_h = CMat::Zero(n, m_prime);
    psi_h(0, 0) = 1.0;
    psi_h(1, 1) = 1.0;  // unit-energy rows
    const NoiseModel unit{1.0, 1.0};
    const Eigen::VectorXd r = subchannel_rates(CMat::Identity(n, n), psi_h, unit);
    CHECK(r(0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(r(1) == Catch::Approx(1.0).epsilon(1e-14));

    const Eigen::VectorXd rz = subchannel_rates(CMat::Zero(n, n), psi_h, unit);
    CHECK(rz.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("subchannel_rates matches the explicit-sum oracle") {
    RandomStream rs(5, "rates");
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 4, m_prime = 8;
        const CMat h_e = random_cmat(n, n, rs);
        const CMat psi_h = random_cmat(n, m_prime, rs);
        const NoiseModel nm = snr_from_db(rs.uniform(-5.0, 25.0));
        const Eigen::VectorXd got = subchannel_rates(h_e, psi_h, nm);
        const Eigen::VectorXd want = rates_oracle(h_e, psi_h, nm);
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("criterion_f arithmetic and tie-breaking") {
    Eigen::VectorXd r2(2);
    r2 << 1.0, 1.0;
    const CriterionValue a = criterion_f(r2, 10.0);
    CHECK(a.f == Catch::Approx(22.0).epsilon(1e-15));
    CHECK(a.min_index == 0);  // tie routes to the smallest index
    CHECK(a.min_rate == 1.0);
    CHECK(a.avg_rate == Catch::Approx(1.0));

    Eigen::VectorXd r05(2);
    r05 << 0.0, 5.0;
    const CriterionValue b = criterion_f(r05, 1.0);
    CHECK(b.f == Catch::Approx(5.0).epsilon(1e-15));
    CHECK(b.min_index == 0);

    Eigen::VectorXd req = Eigen::VectorXd::Constant(7, 0.37);
    const CriterionValue c = criterion_f(req, 4.0);
    CHECK(c.f == Catch::Approx((1.0 + 4.0) * 7 * 0.37).epsilon(1e-14));

    RandomStream rs(9, "argmin");
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd r(6);
        for (int i = 0; i < 6; ++i) r(i) = std::floor(rs.uniform(0.0, 4.0));  // frequent ties
        const CriterionValue cv = criterion_f(r, 2.0);
        int want = 0;
        for (int i = 1; i < 6; ++i)
            if (r(i) < r(want)) want = i;
        CHECK(cv.min_index == want);
        CHECK(cv.min_rate <= r.minCoeff());
    }
}

TEST_CASE("loss_stage1 sign convention") {
    RandomStream rs(13, "loss1");
    const int n = 4, m_prime = 8;
    const CMat h_e = random_cmat(n, n, rs);
    const CMat psi_h = random_cmat(n, m_prime, rs);
    const NoiseModel nm = snr_from_db(20.0);

    CHECK(loss_stage1(h_e, h_e, psi_h, psi_h, nm, 10.0) == 0.0);

    // doubling the diagonal strictly improves every SINR
    CMat better = h_e;
    for (int i = 0; i < n; ++i) better(i, i) *= 2.0;
    CHECK(loss_stage1(better, h_e, psi_h, psi_h, nm, 10.0) < 0.0);
}

TEST_CASE("loss_stage2 composition") {
    RandomStream rs(17, "loss2");
    const int n = 4, m = 6, m_prime = 8;
    const CMat h_e1 = random_cmat(n, n, rs);
    const CMat h_e2 = random_cmat(n, n, rs);
    const CMat ofdm1 = random_cmat(n, n, rs);
    const CMat ofdm2 = random_cmat(n, n, rs);
    const CMat psi1 = random_cmat(n, m_prime, rs);
    const CMat psi2 = random_cmat(n, m_prime, rs);
    const CMat psi_ofdm = random_cmat(n, m_prime, rs);
    const CMat phi1 = random_cmat(m, n, rs);
    const CMat phi2 = random_cmat(m, n, rs);
    const NoiseModel nm = snr_from_db(20.0);
    const double k = 10.0;

    // identical outputs: convergence term vanishes
    const double same = loss_stage2({h_e1, psi1, phi1}, {h_e1, psi1, phi1}, ofdm1, ofdm1, psi_ofdm, nm, k, 0.25);
    CHECK(same == Catch::Approx(0.25 * 2.0 * loss_stage1(h_e1, ofdm1, psi1, psi_ofdm, nm, k)).margin(1e-12));

    // alpha = 1 reduces to the two stage-I losses
    const double a1 = loss_stage2({h_e1, psi1, phi1}, {h_e2, psi2, phi2}, ofdm1, ofdm2, psi_ofdm, nm, k, 1.0);
    const double want = loss_stage1(h_e1, ofdm1, psi1, psi_ofdm, nm, k) + loss_stage1(h_e2, ofdm2, psi2, psi_ofdm, nm, k);
    CHECK(a1 == Catch::Approx(want).epsilon(1e-12));

    // alpha = 0 keeps only the Frobenius distances
    const double a0 = loss_stage2({h_e1, psi1, phi1}, {h_e2, psi2, phi2}, ofdm1, ofdm2, psi_ofdm, nm, k, 0.0);
    CHECK(a0 == Catch::Approx((phi1 - phi2).norm() + (psi1 - psi2).norm()).epsilon(1e-12));

    // alpha-weighting identity
    const double a = 0.01;
    const double mix = loss_stage2({h_e1, psi1, phi1}, {h_e2, psi2, phi2}, ofdm1, ofdm2, psi_ofdm, nm, k, a);
    CHECK(mix == Catch::Approx(a * want + (1 - a) * a0).epsilon(1e-12));
}

namespace {

// Central finite differences of f with respect to every real/imag component.
ModemGradient fd_gradient(const CMat& h, const Modem& md, const NoiseModel& nm, double k, double step) {
    ModemGradient g;
    g.d_phi = CMat::Zero(md.phi.rows(), md.phi.cols());
    g.d_psi_h = CMat::Zero(md.psi_h.rows(), md.psi_h.cols());
    auto eval = [&](const Modem& mm) {
        return criterion_of(equivalent_channel(mm, h), mm.psi_h, nm, k);
    };
    for (int i = 0; i < md.phi.rows(); ++i) {
        for (int j = 0; j < md.phi.cols(); ++j) {
            for (int part = 0; part < 2; ++part) {
                const Cplx delta = part == 0 ? Cplx(step, 0.0) : Cplx(0.0, step);
                Modem up = md, dn = md;
                up.phi(i, j) += delta;
                dn.phi(i, j) -= delta;
                const double d = (eval(up) - eval(dn)) / (2.0 * step);
                g.d_phi(i, j) += part == 0 ? Cplx(d, 0.0) : Cplx(0.0, d);
            }
        }
    }
    for (int i = 0; i < md.psi_h.rows(); ++i) {
        for (int j = 0; j < md.psi_h.cols(); ++j) {
            for (int part = 0; part < 2; ++part) {
                const Cplx delta = part == 0 ? Cplx(step, 0.0) : Cplx(0.0, step);
                Modem up = md, dn = md;
                up.psi_h(i, j) += delta;
                dn.psi_h(i, j) -= delta;
                const double d = (eval(up) - eval(dn)) / (2.0 * step);
                g.d_psi_h(i, j) += part == 0 ? Cplx(d, 0.0) : Cplx(0.0, d);
            }
        }
    }
    return g;
}

}  // namespace

TEST_CASE("criterion_gradient matches central finite differences") {
    RandomStream rs(21, "grad");
    const int m = 6, n = 4, m_prime = 8;
    for (double k : {10.0, 0.0}) {
        Modem md;
        md.phi = random_cmat(m, n, rs);
        md.psi_h = random_cmat(n, m_prime, rs);
        const CMat h = random_cmat(m_prime, m, rs);
        const NoiseModel nm = snr_from_db(20.0);

        const ModemGradient got = criterion_gradient(h, md, nm, k);
        const ModemGradient want = fd_gradient(h, md, nm, k, 1e-6);
        const double scale_phi = want.d_phi.norm();
        const double scale_psi = want.d_psi_h.norm();
        CHECK((got.d_phi - want.d_phi).norm() / scale_phi < 1e-6);
        CHECK((got.d_psi_h - want.d_psi_h).norm() / scale_psi < 1e-6);
    }
}

TEST_CASE("criterion_gradient is orthogonal to the joint phase orbit") {
    RandomStream rs(23, "phase");
    const int m = 6, n = 4, m_prime = 8;
    Modem md;
    md.phi = random_cmat(m, n, rs);
    md.psi_h = random_cmat(n, m_prime, rs);
    const CMat h = random_cmat(m_prime, m, rs);
    const ModemGradient g = criterion_gradient(h, md, snr_from_db(20.0), 10.0);

    // directional derivative along (j Phi, j Psi^H)
    double dot = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) dot += std::real(std::conj(g.d_phi(i, j)) * Cplx(0.0, 1.0) * md.phi(i, j));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m_prime; ++j)
            dot += std::real(std::conj(g.d_psi_h(i, j)) * Cplx(0.0, 1.0) * md.psi_h(i, j));
    const double scale = g.d_phi.norm() + g.d_psi_h.norm();
    CHECK(std::abs(dot) / scale < 1e-10);
}
