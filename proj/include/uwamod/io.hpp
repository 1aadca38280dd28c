// io.hpp - bit-exact persistence for datasets, modems, and checkpoints,
// plus the CSV result formats
//
// All binary formats are little-endian with fixed-width headers so files
// written on one platform load on any other:
//
//   dataset    "UWAD" | version u32 | config-JSON (u64 length + bytes)
//              | pair count u64 | per pair: H (M' x M), H_e,OFDM (N x N),
//              row-major complex128 (real, imag) values
//   modem      "UWMD" | version u32 | M, N, M' as u64 | Phi | Psi^H,
//              row-major complex128
//   checkpoint "UWNP" | version u32 | header JSON (arch + dims)
//              | section count u64 | named shape-tagged f64 sections
//              (learnable tensors, then BN running stats)
//              | adam flag u8 | optional Adam state (t, hyper, moments)

#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwamod/config.hpp"
#include "uwamod/link.hpp"
#include "uwamod/modem.hpp"
#include "uwamod/net/adam.hpp"
#include "uwamod/net/model.hpp"
#include "uwamod/training.hpp"

namespace uwamod {

namespace iodetail {

inline void write_bytes(std::ostream& os, const void* data, std::size_t len) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    write_bytes(os, b, 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    write_bytes(os, b, 8);
}

inline void write_f64(std::ostream& os, double v) {
    write_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline void read_bytes(std::istream& is, void* data, std::size_t len, const char* what) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (static_cast<std::size_t>(is.gcount()) != len)
        throw Error(std::string("truncated file while reading ") + what);
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
    unsigned char b[4];
    read_bytes(is, b, 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t read_u64(std::istream& is, const char* what) {
    unsigned char b[8];
    read_bytes(is, b, 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double read_f64(std::istream& is, const char* what) {
    return std::bit_cast<double>(read_u64(is, what));
}

inline void write_cmat(std::ostream& os, const CMat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            write_f64(os, m(i, j).real());
            write_f64(os, m(i, j).imag());
        }
    }
}

inline CMat read_cmat(std::istream& is, int rows, int cols, const char* what) {
    CMat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double re = read_f64(is, what);
            const double im = read_f64(is, what);
            m(i, j) = Cplx(re, im);
        }
    }
    return m;
}

inline std::string read_string(std::istream& is, const char* what) {
    const std::uint64_t len = read_u64(is, what);
    if (len > (1ULL << 30)) throw Error(std::string("implausible string length in ") + what);
    std::string s(len, '\0');
    if (len > 0) read_bytes(is, s.data(), len, what);
    return s;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    write_bytes(os, s.data(), s.size());
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    return os;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open '" + path + "' for reading");
    return is;
}

inline std::string read_magic(std::istream& is) {
    char m[4];
    read_bytes(is, m, 4, "magic");
    return std::string(m, 4);
}

}  // namespace iodetail

inline std::string config_hash(const SystemConfig& cfg) {
    const std::string text = config_to_json(cfg).dump();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(text)));
    return std::string(buf);
}

// Hash of the physics and hyperparameters only; datasets drawn with
// different seeds from the same configuration compare equal.
inline std::string seedless_config_hash(const SystemConfig& cfg) {
    nlohmann::ordered_json j = config_to_json(cfg);
    j.erase("seed");
    const std::string text = j.dump();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(text)));
    return std::string(buf);
}

// ---------------------------------------------------------------- dataset

inline constexpr std::uint32_t kDatasetVersion = 1;

inline void save_dataset(const std::string& path, const Dataset& ds) {
    auto os = iodetail::open_out(path);
    iodetail::write_bytes(os, "UWAD", 4);
    iodetail::write_u32(os, kDatasetVersion);
    iodetail::write_string(os, config_to_json(ds.config).dump());
    iodetail::write_u64(os, static_cast<std::uint64_t>(ds.size()));
    for (const auto& pair : ds.pairs) {
        iodetail::write_cmat(os, pair.h);
        iodetail::write_cmat(os, pair.h_e_ofdm);
    }
    if (!os) throw Error("write failure on '" + path + "'");
}

inline Dataset load_dataset(const std::string& path) {
    auto is = iodetail::open_in(path);
    if (iodetail::read_magic(is) != "UWAD") throw Error("'" + path + "' is not a dataset file");
    const std::uint32_t version = iodetail::read_u32(is, "dataset version");
    if (version != kDatasetVersion) throw Error("unsupported dataset version");
    Dataset ds;
    ds.config = config_from_json_text(iodetail::read_string(is, "dataset config"));
    const Dims d = derive_dims(ds.config);
    const std::uint64_t count = iodetail::read_u64(is, "pair count");
    ds.pairs.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        DatasetPair pair;
        pair.h = iodetail::read_cmat(is, d.m_prime, d.m, "channel matrix");
        pair.h_e_ofdm = iodetail::read_cmat(is, ds.config.n, ds.config.n, "equivalent channel");
        ds.pairs.push_back(std::move(pair));
    }
    return ds;
}

// ------------------------------------------------------------------ modem

inline constexpr std::uint32_t kModemVersion = 1;

inline void save_modem(const std::string& path, const Modem& md) {
    auto os = iodetail::open_out(path);
    iodetail::write_bytes(os, "UWMD", 4);
    iodetail::write_u32(os, kModemVersion);
    iodetail::write_u64(os, static_cast<std::uint64_t>(md.m()));
    iodetail::write_u64(os, static_cast<std::uint64_t>(md.n()));
    iodetail::write_u64(os, static_cast<std::uint64_t>(md.m_prime()));
    iodetail::write_cmat(os, md.phi);
    iodetail::write_cmat(os, md.psi_h);
    if (!os) throw Error("write failure on '" + path + "'");
}

inline Modem load_modem(const std::string& path) {
    auto is = iodetail::open_in(path);
    if (iodetail::read_magic(is) != "UWMD") throw Error("'" + path + "' is not a modem file");
    if (iodetail::read_u32(is, "modem version") != kModemVersion)
        throw Error("unsupported modem version");
    const int m = static_cast<int>(iodetail::read_u64(is, "M"));
    const int n = static_cast<int>(iodetail::read_u64(is, "N"));
    const int m_prime = static_cast<int>(iodetail::read_u64(is, "M'"));
    if (m < 1 || n < 1 || m_prime < m) throw Error("modem file has invalid dimensions");
    Modem md;
    md.phi = iodetail::read_cmat(is, m, n, "Phi");
    md.psi_h = iodetail::read_cmat(is, n, m_prime, "Psi^H");
    check_modem_energy(md);
    return md;
}

// ------------------------------------------------------------- checkpoint

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline nlohmann::ordered_json arch_to_json(const ArchConfig& a) {
    nlohmann::ordered_json j;
    j["pathway_channels"] = a.pathway_channels;
    j["fused_channels"] = a.fused_channels;
    j["pool_grid"] = a.pool_grid;
    j["fc_hidden1"] = a.fc_hidden1;
    j["fc_hidden2"] = a.fc_hidden2;
    j["leaky_slope"] = a.leaky_slope;
    j["bn_momentum"] = a.bn_momentum;
    j["bn_epsilon"] = a.bn_epsilon;
    return j;
}

inline ArchConfig arch_from_json(const nlohmann::json& j) {
    ArchConfig a;
    for (const auto& [key, value] : j.items()) {
        if (key == "pathway_channels") a.pathway_channels = value.get<int>();
        else if (key == "fused_channels") a.fused_channels = value.get<int>();
        else if (key == "pool_grid") a.pool_grid = value.get<int>();
        else if (key == "fc_hidden1") a.fc_hidden1 = value.get<int>();
        else if (key == "fc_hidden2") a.fc_hidden2 = value.get<int>();
        else if (key == "leaky_slope") a.leaky_slope = value.get<double>();
        else if (key == "bn_momentum") a.bn_momentum = value.get<double>();
        else if (key == "bn_epsilon") a.bn_epsilon = value.get<double>();
        else throw Error("arch: unknown key '" + key + "'");
    }
    validate(a);
    return a;
}

struct Checkpoint {
    ArchConfig arch;
    Dims dims{};
    int n_subcarriers = 0;
    NetworkParams<double> params;
    std::optional<AdamState<double>> adam;
};

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    auto os = iodetail::open_out(path);
    iodetail::write_bytes(os, "UWNP", 4);
    iodetail::write_u32(os, kCheckpointVersion);
    nlohmann::ordered_json header;
    header["arch"] = arch_to_json(ck.arch);
    header["m"] = ck.dims.m;
    header["m_prime"] = ck.dims.m_prime;
    header["l"] = ck.dims.l;
    header["n_subcarriers"] = ck.n_subcarriers;
    iodetail::write_string(os, header.dump());

    auto write_section = [&os](const ParamTensor<double>& t) {
        iodetail::write_string(os, t.name);
        iodetail::write_u32(os, static_cast<std::uint32_t>(t.shape.size()));
        for (int s : t.shape) iodetail::write_u64(os, static_cast<std::uint64_t>(s));
        for (double x : t.v) iodetail::write_f64(os, x);
    };
    iodetail::write_u64(os, ck.params.learnable.size() + ck.params.running.size());
    for (const auto& t : ck.params.learnable) write_section(t);
    for (const auto& t : ck.params.running) write_section(t);

    const std::uint8_t has_adam = ck.adam.has_value() ? 1 : 0;
    iodetail::write_bytes(os, &has_adam, 1);
    if (ck.adam) {
        iodetail::write_u64(os, static_cast<std::uint64_t>(ck.adam->t));
        iodetail::write_f64(os, ck.adam->hyper.beta1);
        iodetail::write_f64(os, ck.adam->hyper.beta2);
        iodetail::write_f64(os, ck.adam->hyper.lr);
        iodetail::write_f64(os, ck.adam->hyper.epsilon);
        for (const auto& arr : ck.adam->m)
            for (double x : arr) iodetail::write_f64(os, x);
        for (const auto& arr : ck.adam->v)
            for (double x : arr) iodetail::write_f64(os, x);
    }
    if (!os) throw Error("write failure on '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    auto is = iodetail::open_in(path);
    if (iodetail::read_magic(is) != "UWNP") throw Error("'" + path + "' is not a checkpoint file");
    if (iodetail::read_u32(is, "checkpoint version") != kCheckpointVersion)
        throw Error("unsupported checkpoint version");
    Checkpoint ck;
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(iodetail::read_string(is, "checkpoint header"));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("checkpoint header is not valid JSON: ") + e.what());
    }
    ck.arch = arch_from_json(header.at("arch"));
    ck.dims.m = header.at("m").get<int>();
    ck.dims.m_prime = header.at("m_prime").get<int>();
    ck.dims.l = header.at("l").get<int>();
    ck.n_subcarriers = header.at("n_subcarriers").get<int>();

    // the expected layout pins every section name and shape
    const UwaModNet<double> net(ck.arch, ck.dims, ck.n_subcarriers);
    RandomStream dummy(0, "layout");
    ck.params = net.init_params(dummy);

    const std::uint64_t sections = iodetail::read_u64(is, "section count");
    if (sections != ck.params.learnable.size() + ck.params.running.size())
        throw Error("checkpoint section count does not match the architecture");
    auto read_section = [&is](ParamTensor<double>& expect) {
        const std::string name = iodetail::read_string(is, "section name");
        if (name != expect.name)
            throw Error("checkpoint section '" + name + "' does not match expected '" + expect.name + "'");
        const std::uint32_t ndim = iodetail::read_u32(is, "section rank");
        if (ndim != expect.shape.size()) throw Error("checkpoint section rank mismatch");
        for (std::size_t i = 0; i < ndim; ++i) {
            if (iodetail::read_u64(is, "section shape") != static_cast<std::uint64_t>(expect.shape[i]))
                throw Error("checkpoint section shape mismatch in '" + name + "'");
        }
        for (auto& x : expect.v) x = iodetail::read_f64(is, "section data");
    };
    for (auto& t : ck.params.learnable) read_section(t);
    for (auto& t : ck.params.running) read_section(t);

    std::uint8_t has_adam = 0;
    iodetail::read_bytes(is, &has_adam, 1, "adam flag");
    if (has_adam) {
        AdamState<double> st = AdamState<double>::init(ck.params);
        st.t = static_cast<long long>(iodetail::read_u64(is, "adam step"));
        st.hyper.beta1 = iodetail::read_f64(is, "adam beta1");
        st.hyper.beta2 = iodetail::read_f64(is, "adam beta2");
        st.hyper.lr = iodetail::read_f64(is, "adam lr");
        st.hyper.epsilon = iodetail::read_f64(is, "adam epsilon");
        for (auto& arr : st.m)
            for (auto& x : arr) x = iodetail::read_f64(is, "adam m");
        for (auto& arr : st.v)
            for (auto& x : arr) x = iodetail::read_f64(is, "adam v");
        ck.adam = std::move(st);
    }
    return ck;
}

// ---------------------------------------------------------------- inspect

inline std::string inspect_file(const std::string& path) {
    auto is = iodetail::open_in(path);
    const std::string magic = iodetail::read_magic(is);
    is.close();
    std::ostringstream out;
    if (magic == "UWAD") {
        const Dataset ds = load_dataset(path);
        const Dims d = derive_dims(ds.config);
        out << "dataset v" << kDatasetVersion << "\n"
            << "  pairs: " << ds.size() << "\n"
            << "  dims: M=" << d.m << " M'=" << d.m_prime << " N=" << ds.config.n << "\n"
            << "  config: " << config_to_json(ds.config).dump() << "\n";
    } else if (magic == "UWMD") {
        const Modem md = load_modem(path);
        out << "modem v" << kModemVersion << "\n"
            << "  dims: M=" << md.m() << " N=" << md.n() << " M'=" << md.m_prime() << "\n"
            << "  energy |Phi|_F^2 = " << md.phi.squaredNorm() << " (target " << md.n() << ")\n"
            << "  energy |Psi^H|_F^2 = " << md.psi_h.squaredNorm() << " (target "
            << psi_h_energy_target(md.n(), md.m(), md.m_prime()) << ")\n";
    } else if (magic == "UWNP") {
        const Checkpoint ck = load_checkpoint(path);
        std::size_t params = 0;
        for (const auto& t : ck.params.learnable) params += t.size();
        out << "checkpoint v" << kCheckpointVersion << "\n"
            << "  dims: M=" << ck.dims.m << " M'=" << ck.dims.m_prime << " N=" << ck.n_subcarriers
            << "\n"
            << "  learnable parameters: " << params << "\n"
            << "  arch: " << arch_to_json(ck.arch).dump() << "\n"
            << "  adam state: " << (ck.adam ? "present" : "absent") << "\n";
    } else {
        throw Error("'" + path + "' has unknown magic");
    }
    return out.str();
}

// -------------------------------------------------------------------- csv

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

inline void write_history_csv(const std::string& path, const std::vector<EpochStats>& history,
                              const SystemConfig& cfg) {
    auto os = iodetail::open_out(path);
    os << "# config_hash=" << config_hash(cfg) << " seed=" << cfg.seed << "\n";
    os << "stage,epoch,train_loss,train_perf,train_conv,val_loss,val_perf,val_conv\n";
    for (const auto& e : history) {
        os << e.stage << ',' << e.epoch << ',' << format_double(e.train_loss) << ','
           << format_double(e.train_perf) << ',' << format_double(e.train_conv) << ','
           << format_double(e.val_loss) << ',' << format_double(e.val_perf) << ','
           << format_double(e.val_conv) << "\n";
    }
    if (!os) throw Error("write failure on '" + path + "'");
}

inline void write_rate_csv(const std::string& path, const std::vector<RateReport>& reports,
                           const SystemConfig& cfg) {
    auto os = iodetail::open_out(path);
    os << "# config_hash=" << config_hash(cfg) << " seed=" << cfg.seed << "\n";
    os << "modem,snr_db,avg_rate,min_rate\n";
    for (const auto& rep : reports) {
        for (const auto& row : rep.rows) {
            os << rep.modem_label << ',' << format_double(row.snr_db) << ','
               << format_double(row.avg_rate) << ',' << format_double(row.min_rate) << "\n";
        }
    }
    if (!os) throw Error("write failure on '" + path + "'");
}

inline void write_ber_csv(const std::string& path, const std::vector<BerCurve>& curves,
                          const SystemConfig& cfg) {
    auto os = iodetail::open_out(path);
    os << "# config_hash=" << config_hash(cfg) << " seed=" << cfg.seed
       << " a_max=" << format_double(cfg.a_max) << "\n";
    os << "modem,mode,snr_db,bits,errors,ber,skipped_blocks\n";
    for (const auto& curve : curves) {
        for (const auto& pt : curve.points) {
            os << curve.modem_label << ',' << to_string(curve.mode) << ','
               << format_double(pt.snr_db) << ',' << pt.bits << ',' << pt.errors << ','
               << format_double(pt.ber) << ',' << pt.skipped_blocks << "\n";
        }
    }
    if (!os) throw Error("write failure on '" + path + "'");
}

}  // namespace uwamod
