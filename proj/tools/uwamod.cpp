// uwamod - command-line front end
//
//   uwamod gen-dataset   draw channel realizations and store {H, H_e,OFDM} pairs
//   uwamod train         two-stage training; writes checkpoint, modem, history CSV
//   uwamod eval-rate     equivalent sub-channel rate sweep over a stored test set
//   uwamod eval-ber      Monte Carlo QPSK bit error rate with LZF equalization
//   uwamod inspect       summarize any uwamod binary file
//
// Global flags: --profile {desk,paper} picks named defaults, --config overlays
// a JSON document, --seed overrides the stream seed, --threads parallelizes
// dataset assembly and BER blocks. The special modem name "zp-ofdm"
// constructs the baseline for the active dimensions.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uwamod/io.hpp"
#include "uwamod/link.hpp"
#include "uwamod/profiles.hpp"
#include "uwamod/training.hpp"

namespace {

using namespace uwamod;

struct GlobalOpts {
    std::string profile = "paper";
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
};

SystemConfig resolve_config(const GlobalOpts& g) {
    Profile prof = profile_by_name(g.profile);
    SystemConfig cfg = prof.config;
    if (!g.config_path.empty()) {
        std::ifstream is(g.config_path);
        if (!is) throw Error("cannot open config '" + g.config_path + "'");
        std::ostringstream ss;
        ss << is.rdbuf();
        cfg = config_from_json_text(ss.str(), cfg);
    }
    if (g.seed_set) cfg.seed = g.seed;
    validate(cfg);
    return cfg;
}

std::string label_of(const std::string& modem_arg) {
    if (modem_arg == "zp-ofdm") return "zp-ofdm";
    return std::filesystem::path(modem_arg).stem().string();
}

Modem resolve_modem(const std::string& arg, const SystemConfig& cfg) {
    if (arg == "zp-ofdm") return zp_ofdm_modem(cfg);
    Modem md = load_modem(arg);
    const Dims d = derive_dims(cfg);
    if (md.m() != d.m || md.m_prime() != d.m_prime || md.n() != cfg.n)
        throw Error("modem '" + arg + "' does not match the active dimensions");
    return md;
}

int cmd_gen_dataset(const GlobalOpts& g, int count, const std::string& out) {
    const SystemConfig cfg = resolve_config(g);
    RandomStream stream = spawn_stream(cfg.seed, "dataset");
    const Dataset ds = generate_dataset(cfg, count, stream, g.threads);
    save_dataset(out, ds);
    std::cout << "wrote " << ds.size() << " pairs to " << out << " (config " << config_hash(cfg)
              << ", seed " << cfg.seed << ")\n";
    return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& train_path, const std::string& val_path,
              const std::string& out_ck, const std::string& out_modem, std::string history_path,
              int e1, int e2, int batch) {
    const Dataset train = load_dataset(train_path);
    const Dataset val = load_dataset(val_path);
    if (seedless_config_hash(train.config) != seedless_config_hash(val.config))
        throw Error("training and validation datasets were generated from different configs");

    SystemConfig cfg = train.config;
    if (g.seed_set) cfg.seed = g.seed;

    Profile prof = profile_by_name(g.profile);
    TrainingPlan plan = prof.plan;
    if (e1 >= 0) plan.e1 = e1;
    if (e2 >= 0) plan.e2 = e2;
    if (batch > 0) plan.batch_size = batch;
    plan.n_train = std::max(1, train.size());
    plan.n_val = std::max(1, val.size());
    validate(plan);

    const Dims dims = derive_dims(cfg);
    const UwaModNet<double> net(prof.arch, dims, cfg.n);
    RandomStream init = spawn_stream(cfg.seed, "init");
    NetworkParams<double> params = net.init_params(init);

    std::cout << "training: M=" << dims.m << " M'=" << dims.m_prime << " N=" << cfg.n
              << ", train " << train.size() << " / val " << val.size() << ", E1=" << plan.e1
              << " E2=" << plan.e2 << " batch " << plan.batch_size << "\n";

    TrainResult stage1 = train_stage1(net, std::move(params), train, val, plan, cfg);
    std::vector<EpochStats> history = stage1.history;
    if (!history.empty())
        std::cout << "stage I done, last val loss1 = " << history.back().val_perf << "\n";

    TrainResult stage2 = train_stage2(net, std::move(stage1.params), train, val, plan, cfg);
    history.insert(history.end(), stage2.history.begin(), stage2.history.end());
    if (!stage2.history.empty())
        std::cout << "stage II done, last val pair distance = " << stage2.history.back().val_conv
                  << "\n";

    const Modem modem = finalize_modem(net, stage2.params, val);
    save_modem(out_modem, modem);

    Checkpoint ck;
    ck.arch = prof.arch;
    ck.dims = dims;
    ck.n_subcarriers = cfg.n;
    ck.params = std::move(stage2.params);
    save_checkpoint(out_ck, ck);

    if (history_path.empty()) {
        history_path = std::filesystem::path(out_ck).replace_extension(".history.csv").string();
    }
    write_history_csv(history_path, history, cfg);

    std::cout << "wrote modem " << out_modem << ", checkpoint " << out_ck << ", history "
              << history_path << "\n";
    return 0;
}

int cmd_eval_rate(const GlobalOpts& g, const std::vector<std::string>& modem_args,
                  const std::string& dataset_path, std::vector<double> snrs,
                  const std::string& out) {
    (void)g;
    const Dataset ds = load_dataset(dataset_path);
    if (ds.size() == 0) throw Error("eval-rate: dataset is empty");
    std::vector<CMat> channels;
    channels.reserve(ds.size());
    for (const auto& p : ds.pairs) channels.push_back(p.h);

    std::vector<RateReport> reports;
    for (const auto& arg : modem_args) {
        const Modem md = resolve_modem(arg, ds.config);
        reports.push_back(rate_sweep(md, channels, snrs, label_of(arg)));
    }
    write_rate_csv(out, reports, ds.config);
    std::cout << "wrote " << out << " (" << reports.size() << " modem(s), " << snrs.size()
              << " SNR points, " << ds.size() << " channels)\n";
    return 0;
}

int cmd_eval_ber(const GlobalOpts& g, const std::vector<std::string>& modem_args,
                 std::vector<double> snrs, const std::string& mode, int blocks, double a_max_override,
                 const std::string& out) {
    SystemConfig cfg = resolve_config(g);
    if (blocks < 1) throw Error("eval-ber: --blocks must be at least 1");
    if (a_max_override >= 0.0) {
        cfg.a_max = a_max_override;
        validate(cfg);
    }

    std::vector<EqualizerMode> modes;
    if (mode == "aware") modes = {EqualizerMode::ici_aware};
    else if (mode == "ignorant") modes = {EqualizerMode::ici_ignorant};
    else if (mode == "both") modes = {EqualizerMode::ici_aware, EqualizerMode::ici_ignorant};
    else throw Error("eval-ber: --mode must be aware, ignorant, or both");

    std::vector<BerCurve> curves;
    for (const auto& arg : modem_args) {
        const Modem md = resolve_modem(arg, cfg);
        for (EqualizerMode m : modes) {
            curves.push_back(simulate_ber(md, cfg, snrs, m, blocks, cfg.seed, g.threads, label_of(arg)));
        }
    }
    write_ber_csv(out, curves, cfg);
    std::cout << "wrote " << out << " (" << curves.size() << " curve(s), " << blocks
              << " blocks/point, a_max " << cfg.a_max << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"underwater acoustic modem toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--profile", g.profile, "named defaults: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--config", g.config_path, "JSON config overlay");
    auto* seed_opt = app.add_option("--seed", g.seed, "override the config seed");
    app.add_option("--threads", g.threads, "worker threads for dataset assembly and BER blocks")
        ->check(CLI::PositiveNumber);

    auto* gen = app.add_subcommand("gen-dataset", "generate {H, H_e,OFDM} pairs");
    int gen_count = 0;
    std::string gen_out;
    gen->add_option("--count", gen_count, "number of pairs")->required()->check(CLI::NonNegativeNumber);
    gen->add_option("--out", gen_out, "output file")->required();

    auto* train = app.add_subcommand("train", "two-stage training");
    std::string train_path, val_path, out_ck, out_modem, history_path;
    int e1 = -1, e2 = -1, batch = -1;
    train->add_option("--train", train_path, "training dataset")->required();
    train->add_option("--val", val_path, "validation dataset")->required();
    train->add_option("--out-checkpoint", out_ck, "checkpoint output")->required();
    train->add_option("--out-modem", out_modem, "modem output")->required();
    train->add_option("--history", history_path, "history CSV (default: alongside checkpoint)");
    train->add_option("--e1", e1, "Stage-I epochs (default from profile)");
    train->add_option("--e2", e2, "Stage-II epochs (default from profile)");
    train->add_option("--batch", batch, "batch size (default from profile)");

    auto* rate = app.add_subcommand("eval-rate", "equivalent sub-channel rate sweep");
    std::vector<std::string> rate_modems;
    std::string rate_dataset, rate_out;
    std::vector<double> rate_snrs;
    rate->add_option("--modem", rate_modems, "modem file or 'zp-ofdm'")->required();
    rate->add_option("--dataset", rate_dataset, "test dataset")->required();
    rate->add_option("--snr", rate_snrs, "SNR points in dB")->required()->delimiter(',');
    rate->add_option("--out", rate_out, "output CSV")->required();

    auto* ber = app.add_subcommand("eval-ber", "Monte Carlo QPSK BER");
    std::vector<std::string> ber_modems;
    std::string ber_mode = "both", ber_out;
    std::vector<double> ber_snrs;
    int ber_blocks = 1000;
    double ber_a_max = -1.0;
    ber->add_option("--modem", ber_modems, "modem file or 'zp-ofdm'")->required();
    ber->add_option("--snr", ber_snrs, "SNR points in dB")->required()->delimiter(',');
    ber->add_option("--mode", ber_mode, "aware, ignorant, or both");
    ber->add_option("--blocks", ber_blocks, "blocks per SNR point");
    ber->add_option("--a-max", ber_a_max, "override a_max (robustness evaluation)");
    ber->add_option("--out", ber_out, "output CSV")->required();

    auto* inspect = app.add_subcommand("inspect", "describe a uwamod file");
    std::string inspect_path;
    inspect->add_option("file", inspect_path, "file to inspect")->required();

    CLI11_PARSE(app, argc, argv);
    g.seed_set = seed_opt->count() > 0;

    try {
        if (gen->parsed()) return cmd_gen_dataset(g, gen_count, gen_out);
        if (train->parsed())
            return cmd_train(g, train_path, val_path, out_ck, out_modem, history_path, e1, e2, batch);
        if (rate->parsed()) return cmd_eval_rate(g, rate_modems, rate_dataset, rate_snrs, rate_out);
        if (ber->parsed())
            return cmd_eval_ber(g, ber_modems, ber_snrs, ber_mode, ber_blocks, ber_a_max, ber_out);
        if (inspect->parsed()) {
            std::cout << inspect_file(inspect_path);
            return 0;
        }
    } catch (const uwamod::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
