#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "uwamod/link.hpp"
#include "uwamod/training.hpp"

using namespace uwamod;

TEST_CASE("qpsk_map constellation and Gray property") {
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(qpsk_map({0, 0})(0) == Cplx(s, s));
    CHECK(qpsk_map({1, 1})(0) == Cplx(-s, -s));
    CHECK(qpsk_map({0, 1})(0) == Cplx(s, -s));
    CHECK(qpsk_map({1, 0})(0) == Cplx(-s, s));

    // unit average symbol energy
    for (std::uint8_t b0 : {0, 1})
        for (std::uint8_t b1 : {0, 1})
            CHECK(std::norm(qpsk_map({b0, b1})(0)) == Catch::Approx(1.0).epsilon(1e-15));

    // quadrant-adjacent symbols differ in exactly one bit
    auto bits_of = [&](double angle) {
        CVec v(1);
        v(0) = Cplx(std::cos(angle), std::sin(angle));
        return qpsk_demap(v);
    };
    const double quarter = M_PI / 2.0;
    for (int q = 0; q < 4; ++q) {
        const auto a = bits_of(M_PI / 4.0 + q * quarter);
        const auto b = bits_of(M_PI / 4.0 + (q + 1) * quarter);
        CHECK((a[0] != b[0]) + (a[1] != b[1]) == 1);
    }

    CHECK_THROWS_AS(qpsk_map({0, 1, 0}), Error);
}

TEST_CASE("qpsk_demap quadrant decisions and round trip") {
    CVec v(2);
    v << Cplx(0.9, 0.8), Cplx(-0.1, -2.0);
    const auto bits = qpsk_demap(v);
    CHECK(bits == std::vector<std::uint8_t>{0, 0, 1, 1});

    for (std::uint8_t b0 : {0, 1})
        for (std::uint8_t b1 : {0, 1}) {
            const auto round = qpsk_demap(qpsk_map({b0, b1}));
            CHECK(round[0] == b0);
            CHECK(round[1] == b1);
        }
}

TEST_CASE("lzf_equalize closed-form cases") {
    RandomStream rs(3, "lzf");
    CVec y(4);
    for (int i = 0; i < 4; ++i) y(i) = rs.complex_normal(1.0);

    CHECK((lzf_equalize(CMat::Identity(4, 4), y) - y).cwiseAbs().maxCoeff() < 1e-14);

    CMat diag = CMat::Zero(4, 4);
    for (int i = 0; i < 4; ++i) diag(i, i) = Cplx(0.5 + i, -0.25 * i);
    const CVec z = lzf_equalize(diag, y);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(z(i) - y(i) / diag(i, i)) < 1e-12);

    CMat h_e(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) h_e(i, j) = rs.complex_normal(1.0) + (i == j ? Cplx(2, 0) : Cplx(0, 0));
    CVec sym(3);
    for (int i = 0; i < 3; ++i) sym(i) = rs.complex_normal(1.0);
    const CVec recovered = lzf_equalize(h_e, h_e * sym);
    CHECK((recovered - sym).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("lzf_equalize rejects singular and near-singular matrices") {
    CMat zero_diag = CMat::Identity(3, 3);
    zero_diag(1, 1) = 0.0;
    CVec y = CVec::Ones(3);
    CHECK_THROWS_AS(lzf_equalize(zero_diag, y), SingularMatrixError);

    CMat bad = CMat::Identity(3, 3);
    bad(2, 2) = 1e-14;
    CHECK_THROWS_AS(lzf_equalize(bad, y), SingularMatrixError);
}

TEST_CASE("awgn qpsk ber follows the Gaussian tail") {
    RandomStream rs(17, "awgn");
    for (double snr : {0.0, 4.0}) {
        const long long symbols = 100000;
        const BerPoint pt = awgn_qpsk_ber(snr, symbols, rs);
        const double p = q_function(std::sqrt(snr_from_db(snr).snr_linear()));
        const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(pt.bits));
        CHECK(std::abs(pt.ber - p) < 3.0 * sigma);
    }

    // effectively noise-free: no errors over 1e4 blocks of 2 bits
    RandomStream clean(19, "awgn");
    CHECK(awgn_qpsk_ber(40.0, 10000, clean).errors == 0);
}

TEST_CASE("simulate_ber structure, determinism, and skip accounting") {
    const SystemConfig cfg = desk_config();
    const Modem ofdm = zp_ofdm_modem(cfg);
    const std::vector<double> snrs = {10.0, 20.0};

    const BerCurve a = simulate_ber(ofdm, cfg, snrs, EqualizerMode::ici_ignorant, 60, 77, 1, "zp-ofdm");
    const BerCurve b = simulate_ber(ofdm, cfg, snrs, EqualizerMode::ici_ignorant, 60, 77, 2, "zp-ofdm");
    REQUIRE(a.points.size() == 2);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        const BerPoint& pt = a.points[i];
        CHECK(pt.bits + 2LL * cfg.n * pt.skipped_blocks == 2LL * cfg.n * 60);
        CHECK(pt.ber == (pt.bits > 0 ? static_cast<double>(pt.errors) / pt.bits : 0.0));
        CHECK(pt.errors == b.points[i].errors);  // thread count must not matter
        CHECK(pt.bits == b.points[i].bits);
    }
    CHECK(a.points[0].ber >= a.points[1].ber);  // more SNR, fewer errors on average
}

TEST_CASE("rate_sweep closed form and monotonicity") {
    // selected-identity modem with top-block identity channel: H_e = I
    const int n = 4, m = 6, m_prime = 8;
    Modem sel;
    sel.phi = CMat::Zero(m, n);
    sel.phi.topRows(n) = CMat::Identity(n, n);
    sel.psi_h = CMat::Zero(n, m_prime);
    sel.psi_h.leftCols(n) = CMat::Identity(n, n);
    CMat h = CMat::Zero(m_prime, m);
    h.topRows(m) = CMat::Identity(m, m);

    const RateReport rep = rate_sweep(sel, {h}, {0.0});
    CHECK(rep.rows[0].avg_rate == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(rep.rows[0].min_rate == Catch::Approx(1.0).epsilon(1e-12));

    const SystemConfig cfg = desk_config();
    RandomStream ds = spawn_stream(21, "dataset");
    const Dataset test = generate_dataset(cfg, 10, ds);
    std::vector<CMat> channels;
    for (const auto& p : test.pairs) channels.push_back(p.h);
    const Modem ofdm = zp_ofdm_modem(cfg);
    const RateReport sweep = rate_sweep(ofdm, channels, {-5, 0, 5, 10, 15, 20});
    for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
        CHECK(sweep.rows[i].avg_rate >= sweep.rows[i].min_rate);
        CHECK(sweep.rows[i].min_rate >= 0.0);
        if (i > 0) {
            CHECK(sweep.rows[i].avg_rate >= sweep.rows[i - 1].avg_rate);
            CHECK(sweep.rows[i].min_rate >= sweep.rows[i - 1].min_rate);
        }
    }
}
