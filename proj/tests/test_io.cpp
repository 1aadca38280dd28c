#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "uwamod/io.hpp"
#include "uwamod/profiles.hpp"

using namespace uwamod;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path(temp_path(name)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("dataset files round-trip bit-exactly and deterministically") {
    SystemConfig cfg = desk_config();
    cfg.seed = 4242;
    RandomStream s1 = spawn_stream(cfg.seed, "dataset");
    const Dataset ds = generate_dataset(cfg, 7, s1);

    TempFile f1("uwamod_test_ds1.uwad"), f2("uwamod_test_ds2.uwad");
    save_dataset(f1.path, ds);
    save_dataset(f2.path, ds);
    CHECK(slurp(f1.path) == slurp(f2.path));  // identical invocations, identical bytes

    const Dataset back = load_dataset(f1.path);
    REQUIRE(back.size() == ds.size());
    CHECK(config_to_json(back.config) == config_to_json(ds.config));
    for (int i = 0; i < ds.size(); ++i) {
        CHECK(back.pairs[i].h == ds.pairs[i].h);
        CHECK(back.pairs[i].h_e_ofdm == ds.pairs[i].h_e_ofdm);
    }
}

TEST_CASE("dataset file size follows the encoding arithmetic") {
    SystemConfig cfg = desk_config();
    RandomStream s = spawn_stream(1, "dataset");
    const int count = 3;
    const Dataset ds = generate_dataset(cfg, count, s);
    TempFile f("uwamod_test_size.uwad");
    save_dataset(f.path, ds);

    const Dims d = derive_dims(cfg);
    const std::size_t json_len = config_to_json(cfg).dump().size();
    const std::size_t header = 4 + 4 + 8 + json_len + 8;
    const std::size_t payload =
        static_cast<std::size_t>(count) *
        (static_cast<std::size_t>(d.m_prime) * d.m + static_cast<std::size_t>(cfg.n) * cfg.n) * 16;
    CHECK(std::filesystem::file_size(f.path) == header + payload);

    // empty dataset is still a valid file
    Dataset empty;
    empty.config = cfg;
    TempFile fe("uwamod_test_empty.uwad");
    save_dataset(fe.path, empty);
    CHECK(load_dataset(fe.path).size() == 0);
}

TEST_CASE("modem files round-trip and enforce energy on load") {
    const Modem md = zp_ofdm_modem(desk_config());
    TempFile f("uwamod_test_modem.uwmd");
    save_modem(f.path, md);
    const Modem back = load_modem(f.path);
    CHECK(back.phi == md.phi);
    CHECK(back.psi_h == md.psi_h);

    // corrupt the stored energy: loader must refuse
    Modem bad = md;
    bad.phi *= 3.0;
    TempFile fb("uwamod_test_badmodem.uwmd");
    {
        auto os = iodetail::open_out(fb.path);
        iodetail::write_bytes(os, "UWMD", 4);
        iodetail::write_u32(os, kModemVersion);
        iodetail::write_u64(os, bad.m());
        iodetail::write_u64(os, bad.n());
        iodetail::write_u64(os, bad.m_prime());
        iodetail::write_cmat(os, bad.phi);
        iodetail::write_cmat(os, bad.psi_h);
    }
    CHECK_THROWS_AS(load_modem(fb.path), Error);
}

TEST_CASE("checkpoint files round-trip parameters and adam state") {
    const Profile prof = desk_profile();
    const Dims dims = derive_dims(prof.config);
    ArchConfig arch = prof.arch;
    const UwaModNet<double> net(arch, dims, prof.config.n);
    RandomStream init = spawn_stream(77, "init");

    Checkpoint ck;
    ck.arch = arch;
    ck.dims = dims;
    ck.n_subcarriers = prof.config.n;
    ck.params = net.init_params(init);
    AdamState<double> st = AdamState<double>::init(ck.params);
    st.t = 12;
    st.m[0][0] = 0.25;
    st.v[0][0] = 1e-4;
    ck.adam = st;

    TempFile f("uwamod_test_ck.uwnp");
    save_checkpoint(f.path, ck);
    const Checkpoint back = load_checkpoint(f.path);

    CHECK(back.dims.m == dims.m);
    CHECK(back.n_subcarriers == prof.config.n);
    CHECK(arch_to_json(back.arch) == arch_to_json(arch));
    REQUIRE(back.params.learnable.size() == ck.params.learnable.size());
    for (std::size_t i = 0; i < ck.params.learnable.size(); ++i) {
        CHECK(back.params.learnable[i].name == ck.params.learnable[i].name);
        CHECK(back.params.learnable[i].v == ck.params.learnable[i].v);
    }
    for (std::size_t i = 0; i < ck.params.running.size(); ++i)
        CHECK(back.params.running[i].v == ck.params.running[i].v);
    REQUIRE(back.adam.has_value());
    CHECK(back.adam->t == 12);
    CHECK(back.adam->m[0][0] == 0.25);
    CHECK(back.adam->v[0][0] == 1e-4);

    // without adam state the flag round-trips too
    ck.adam.reset();
    TempFile f2("uwamod_test_ck2.uwnp");
    save_checkpoint(f2.path, ck);
    CHECK_FALSE(load_checkpoint(f2.path).adam.has_value());
}

TEST_CASE("inspect reports types and rejects damaged files") {
    const Modem md = zp_ofdm_modem(desk_config());
    TempFile f("uwamod_test_inspect.uwmd");
    save_modem(f.path, md);
    const std::string info = inspect_file(f.path);
    CHECK(info.find("modem") != std::string::npos);
    CHECK(info.find("M=16") != std::string::npos);

    // truncation yields a distinct error message
    const std::string whole = slurp(f.path);
    TempFile ft("uwamod_test_trunc.uwmd");
    {
        std::ofstream os(ft.path, std::ios::binary);
        os.write(whole.data(), static_cast<std::streamsize>(whole.size() / 2));
    }
    try {
        (void)inspect_file(ft.path);
        FAIL("expected truncation error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }

    TempFile fu("uwamod_test_unknown.bin");
    {
        std::ofstream os(fu.path, std::ios::binary);
        os << "NOPE and some trailing bytes";
    }
    try {
        (void)inspect_file(fu.path);
        FAIL("expected unknown-magic error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("unknown magic") != std::string::npos);
    }
}

TEST_CASE("csv outputs carry a provenance comment and parse cleanly") {
    SystemConfig cfg = desk_config();
    cfg.seed = 31;

    RateReport rep;
    rep.modem_label = "zp-ofdm";
    rep.rows = {{0.0, 1.25, 0.5}, {10.0, 3.5, 1.0}};
    TempFile fr("uwamod_test_rate.csv");
    write_rate_csv(fr.path, {rep}, cfg);

    std::ifstream is(fr.path);
    std::string line;
    std::getline(is, line);
    CHECK(line.rfind("# config_hash=", 0) == 0);
    CHECK(line.find("seed=31") != std::string::npos);
    std::getline(is, line);
    CHECK(line == "modem,snr_db,avg_rate,min_rate");
    int rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        CHECK(std::count(line.begin(), line.end(), ',') == 3);
        ++rows;
    }
    CHECK(rows == 2);

    // round-trip a value through the formatter
    CHECK(std::stod(format_double(0.1234567890123456789)) == 0.1234567890123456789);

    BerCurve curve;
    curve.modem_label = "learned";
    curve.mode = EqualizerMode::ici_ignorant;
    curve.points = {{20.0, 100000, 37, 37.0 / 100000, 2}};
    TempFile fb("uwamod_test_ber.csv");
    write_ber_csv(fb.path, {curve}, cfg);
    const std::string content = slurp(fb.path);
    CHECK(content.find("a_max=") != std::string::npos);
    CHECK(content.find("learned,ici_ignorant,20,100000,37,") != std::string::npos);

    std::vector<EpochStats> hist(2);
    hist[0].stage = 1;
    hist[0].epoch = 1;
    hist[1].stage = 2;
    hist[1].epoch = 1;
    TempFile fh("uwamod_test_hist.csv");
    write_history_csv(fh.path, hist, cfg);
    CHECK(slurp(fh.path).find("stage,epoch,train_loss") != std::string::npos);
}

TEST_CASE("config hash distinguishes configs") {
    SystemConfig a = desk_config();
    SystemConfig b = a;
    CHECK(config_hash(a) == config_hash(b));
    b.seed += 1;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.a_max *= 2.0;
    CHECK(config_hash(a) != config_hash(b));
}
