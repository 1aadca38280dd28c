// config.hpp - system configuration, derived dimensions, noise model
//
// SystemConfig carries every physical and learning hyperparameter shared by
// the channel, modem, criterion, network and evaluation code. It is immutable
// after validation and safe to share across threads.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "uwamod/error.hpp"

namespace uwamod {

struct Dims {
    int m;        // transmit samples per block, floor(F_s * T)
    int m_prime;  // receive samples per block, floor(F_s * (T + T_g))
    int l;        // guard samples, m_prime - m
};

struct SystemConfig {
    double f_c = 15000.0;        // carrier frequency, Hz
    double b = 10000.0;          // bandwidth, Hz
    double f_s = 10000.0;        // sampling rate, Hz
    int n = 70;                  // subcarrier count
    double t = 0.0128;           // symbol duration, s
    double t_g = 0.010;          // guard interval, s
    double tau_max = 0.010;      // maximum path delay, s
    double a_max = 0.001;        // maximum Doppler scaling factor
    int p = 20;                  // path count
    double k = 10.0;             // worst-subchannel amplification factor
    double alpha = 0.01;         // stage-II balance parameter
    double snr_train_db = 20.0;  // training SNR, dB
    std::uint64_t seed = 1;      // master random seed
};

namespace detail {

// Sample counts come from products like F_s * T where both factors are short
// decimals; the rounded product can land a hair below the intended integer.
// The slack is far above representation noise and far below any real fraction.
inline int floor_samples(double x) {
    return static_cast<int>(std::floor(x + 1e-9));
}

}  // namespace detail

inline Dims derive_dims(const SystemConfig& cfg) {
    if (!(cfg.t > 0.0)) throw Error("derive_dims: symbol duration T must be positive");
    if (cfg.t_g < 0.0) throw Error("derive_dims: guard interval T_g must be nonnegative");
    if (!(cfg.f_s > 0.0)) throw Error("derive_dims: sampling rate F_s must be positive");
    Dims d;
    d.m = detail::floor_samples(cfg.f_s * cfg.t);
    d.m_prime = detail::floor_samples(cfg.f_s * cfg.t + cfg.f_s * cfg.t_g);
    d.l = d.m_prime - d.m;
    if (cfg.n > d.m) throw Error("derive_dims: subcarrier count N exceeds M");
    return d;
}

inline void validate(const SystemConfig& cfg) {
    if (!(cfg.b > 0.0)) throw Error("config: bandwidth B must be positive");
    if (cfg.f_s < cfg.b) throw Error("config: sampling rate F_s must be at least B");
    if (cfg.n < 1) throw Error("config: subcarrier count N must be at least 1");
    if (cfg.p < 1) throw Error("config: path count P must be at least 1");
    if (cfg.tau_max < 0.0) throw Error("config: tau_max must be nonnegative");
    if (cfg.tau_max > cfg.t_g + 1e-12) throw Error("config: tau_max must not exceed the guard interval T_g");
    if (cfg.a_max < 0.0) throw Error("config: a_max must be nonnegative");
    if (cfg.k < 1.0) throw Error("config: amplification factor K must be at least 1");
    if (cfg.alpha < 0.0 || cfg.alpha > 1.0) throw Error("config: alpha must lie in [0, 1]");
    if (!std::isfinite(cfg.snr_train_db)) throw Error("config: snr_train_db must be finite");
    derive_dims(cfg);  // throws on bad durations or N > M
}

struct NoiseModel {
    double sigma_s_sq = 1.0;  // symbol power, fixed to 1 by convention
    double sigma_n_sq = 1.0;  // per-sample complex noise power

    double snr_linear() const { return sigma_s_sq / sigma_n_sq; }
};

inline NoiseModel snr_from_db(double snr_db) {
    if (!std::isfinite(snr_db)) throw Error("snr_from_db: SNR must be finite");
    return NoiseModel{1.0, std::pow(10.0, -snr_db / 10.0)};
}

// Table-1 parameters; this is also the default-constructed SystemConfig.
inline SystemConfig paper_config() { return SystemConfig{}; }

// Reduced instance for fast experiments: M=16, M'=24, N=10. The Doppler
// bound scales with the F_s ratio (10x) so a block sees the same phase
// drift as the full-size system.
inline SystemConfig desk_config() {
    SystemConfig cfg;
    cfg.f_c = 1500.0;
    cfg.b = 1000.0;
    cfg.f_s = 1000.0;
    cfg.n = 10;
    cfg.t = 0.016;
    cfg.t_g = 0.008;
    cfg.tau_max = 0.008;
    cfg.a_max = 0.01;
    cfg.p = 4;
    return cfg;
}

inline nlohmann::ordered_json config_to_json(const SystemConfig& cfg) {
    nlohmann::ordered_json j;
    j["f_c"] = cfg.f_c;
    j["b"] = cfg.b;
    j["f_s"] = cfg.f_s;
    j["n"] = cfg.n;
    j["t"] = cfg.t;
    j["t_g"] = cfg.t_g;
    j["tau_max"] = cfg.tau_max;
    j["a_max"] = cfg.a_max;
    j["p"] = cfg.p;
    j["k"] = cfg.k;
    j["alpha"] = cfg.alpha;
    j["snr_train_db"] = cfg.snr_train_db;
    j["seed"] = cfg.seed;
    return j;
}

// Parses a config document. Missing keys keep the values of `base`;
// unknown keys are rejected.
inline SystemConfig config_from_json(const nlohmann::json& j, const SystemConfig& base = SystemConfig{}) {
    SystemConfig cfg = base;
    if (!j.is_object()) throw Error("config: JSON document must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "f_c") cfg.f_c = value.get<double>();
        else if (key == "b") cfg.b = value.get<double>();
        else if (key == "f_s") cfg.f_s = value.get<double>();
        else if (key == "n") cfg.n = value.get<int>();
        else if (key == "t") cfg.t = value.get<double>();
        else if (key == "t_g") cfg.t_g = value.get<double>();
        else if (key == "tau_max") cfg.tau_max = value.get<double>();
        else if (key == "a_max") cfg.a_max = value.get<double>();
        else if (key == "p") cfg.p = value.get<int>();
        else if (key == "k") cfg.k = value.get<double>();
        else if (key == "alpha") cfg.alpha = value.get<double>();
        else if (key == "snr_train_db") cfg.snr_train_db = value.get<double>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else throw Error("config: unknown key '" + key + "'");
    }
    validate(cfg);
    return cfg;
}

inline SystemConfig config_from_json_text(const std::string& text, const SystemConfig& base = SystemConfig{}) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("config: JSON parse error: ") + e.what());
    }
    return config_from_json(j, base);
}

}  // namespace uwamod
