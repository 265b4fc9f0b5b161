// codedfl: run experiments, print theory tables, verify code properties.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "codedfl/cli/config.hpp"
#include "codedfl/cli/output.hpp"
#include "codedfl/cli/report.hpp"
#include "codedfl/dnc_code.hpp"
#include "codedfl/fl/dataset.hpp"
#include "codedfl/protocol.hpp"

namespace {

using namespace codedfl;

enum Exit { kOk = 0, kConfigError = 1, kRunFailure = 2, kVerifyFailure = 3 };

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, sep);) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

// "1-10" or "2,4,8".
std::vector<std::size_t> parse_counts(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& part : split(text, ',')) {
        const auto dash = part.find('-');
        if (dash == std::string::npos) {
            out.push_back(std::stoul(part));
        } else {
            const std::size_t lo = std::stoul(part.substr(0, dash));
            const std::size_t hi = std::stoul(part.substr(dash + 1));
            for (std::size_t v = lo; v <= hi; ++v) {
                out.push_back(v);
            }
        }
    }
    return out;
}

std::vector<double> parse_reals(const std::string& text) {
    std::vector<double> out;
    for (const auto& part : split(text, ',')) {
        out.push_back(std::stod(part));
    }
    return out;
}

struct RunArgs {
    std::string config;
    std::string preset;
    std::string manifest;
    std::string out = "results";
    std::optional<double> snr, snr_db, rate, sigma2, p_e;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials, rounds, clients, threads;
    std::string methods;
    bool no_relay = false;
    bool wall_time = false;
};

protocol::ExperimentConfig resolve_config(const RunArgs& a, std::string& expected_hash) {
    protocol::ExperimentConfig c;
    if (!a.manifest.empty()) {
        std::ifstream in(a.manifest);
        if (!in) {
            throw cli::ConfigError(fmt::format("cannot read manifest {}", a.manifest));
        }
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw cli::ConfigError(fmt::format("{}: {}", a.manifest, e.what()));
        }
        const auto m = cli::RunManifest::from_json(j);
        c = cli::config_from_json(m.config);
        expected_hash = m.config_hash;
        if (cli::config_hash(c) != expected_hash) {
            throw cli::ConfigError(fmt::format("{}: config does not match its recorded hash", a.manifest));
        }
    } else {
        if (!a.preset.empty()) {
            c = cli::preset(a.preset);
        }
        if (!a.config.empty()) {
            c = cli::load_config_file(a.config, c);
        }
        if (const char* env = std::getenv("CODED_FL_SEED")) {
            try {
                c.seed = std::stoull(env);
            } catch (const std::exception&) {
                throw cli::ConfigError(fmt::format("CODED_FL_SEED must be an unsigned integer, got '{}'", env));
            }
        }
        if (a.snr) c.channel.snr = *a.snr;
        if (a.snr_db) c.channel.snr = channel::db_to_linear(*a.snr_db);
        if (a.rate) c.channel.rate = *a.rate;
        if (a.sigma2) c.channel.sigma2 = *a.sigma2;
        if (a.p_e) c.p_e_override = *a.p_e;
        if (a.seed) c.seed = *a.seed;
        if (a.trials) c.trials = *a.trials;
        if (a.rounds) c.training.rounds = *a.rounds;
        if (a.clients) c.clients = *a.clients;
        if (!a.methods.empty()) {
            c.methods.clear();
            for (const auto& name : split(a.methods, ',')) {
                c.methods.push_back(protocol::method_from_string(name));
            }
        }
        if (a.no_relay) c.relaying = false;
        if (a.wall_time) c.record_wall_time = true;
    }
    if (a.threads) c.threads = *a.threads;
    try {
        c.validate();
        gf::GaloisField field(c.field);
        if (field.order() < c.clients * c.clients) {
            throw std::invalid_argument(fmt::format("{} is too small for {} clients", c.field.describe(), c.clients));
        }
    } catch (const std::invalid_argument& e) {
        throw cli::ConfigError(e.what());
    }
    return c;
}

int cmd_run(const RunArgs& args) {
    std::string expected_hash;
    protocol::ExperimentConfig config;
    try {
        config = resolve_config(args, expected_hash);
    } catch (const cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    std::vector<protocol::MetricRecord> records;
    try {
        const auto data = protocol::load_data(config);
        std::cerr << fmt::format("M={} T={} trials={} p_e={:.6f} train={} test={}\n", config.clients,
                                 config.training.rounds, config.trials, config.p_e(), data.train.size(),
                                 data.test.size());
        records = protocol::run_experiment(config, data);
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kRunFailure;
    }

    const std::filesystem::path out(args.out);
    std::filesystem::create_directories(out);
    {
        std::ofstream f(out / "metrics.csv", std::ios::binary);
        cli::write_metrics_csv(f, records);
    }
    {
        std::ofstream f(out / "summary.csv", std::ios::binary);
        cli::write_summary_csv(f, records);
    }
    cli::RunManifest manifest;
    manifest.config = cli::to_json(config);
    manifest.config_hash = cli::config_hash(config);
    manifest.seed = config.seed;
    manifest.tool_version = CODEDFL_VERSION;
    manifest.timestamp = cli::utc_timestamp();
    manifest.outputs = {(out / "metrics.csv").string(), (out / "summary.csv").string()};
    {
        std::ofstream f(out / "manifest.json", std::ios::binary);
        f << manifest.to_json().dump(2) << '\n';
    }

    std::size_t failed = 0;
    for (const auto& r : records) {
        if (r.round == config.training.rounds) {
            std::cout << fmt::format("trial {} {:<10} accuracy {:.4f} loss {:.4f}\n", r.trial,
                                     protocol::to_string(r.method), r.test_accuracy, r.train_loss);
        }
        failed += r.failed ? 1 : 0;
    }
    std::cout << fmt::format("wrote {}\n", out.string());
    if (!records.empty() && failed == records.size()) {
        std::cerr << "every round failed\n";
        return kRunFailure;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coded cooperative federated learning simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", CODEDFL_VERSION);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment and write metrics.csv, summary.csv, manifest.json");
    auto* opt_config = run_cmd->add_option("--config", run.config, "TOML configuration file");
    auto* opt_preset = run_cmd->add_option("--preset", run.preset, "paper-v, paper-v-5cls or paper-v-1cl");
    run_cmd->add_option("--manifest", run.manifest, "Re-run the configuration recorded in a manifest")
        ->excludes(opt_config)
        ->excludes(opt_preset);
    run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
    auto* opt_snr = run_cmd->add_option("--snr", run.snr, "Linear SNR");
    run_cmd->add_option("--snr-db", run.snr_db, "SNR in dB")->excludes(opt_snr);
    run_cmd->add_option("--rate", run.rate, "Transmission rate R");
    run_cmd->add_option("--sigma2", run.sigma2, "Rayleigh variance");
    run_cmd->add_option("--p-e", run.p_e, "Outage probability, bypassing the channel model");
    run_cmd->add_option("--seed", run.seed, "Master seed (overrides CODED_FL_SEED)");
    run_cmd->add_option("--trials", run.trials, "Number of trials");
    run_cmd->add_option("--rounds", run.rounds, "Communication rounds T");
    run_cmd->add_option("--clients", run.clients, "Client count M");
    run_cmd->add_option("--methods", run.methods, "Comma-separated subset of proposed,qfl_ideal,anon,non_anon");
    run_cmd->add_option("--threads", run.threads, "Worker threads (0 = all cores)");
    run_cmd->add_flag("--no-relay", run.no_relay, "Disable D2D relaying");
    run_cmd->add_flag("--record-wall-time", run.wall_time, "Fill wall_time_ms (makes the CSV run-dependent)");

    std::string th_clients = "1-10", th_pes = "0,0.1,0.1945,0.3", th_out;
    theory::AssumptionConstants th;
    th.T = 20;
    th.I = 5;
    th.b = 1024;
    th.gap = 1.0;
    double th_d = 0.0, th_j2 = 0.0;
    auto* th_cmd = app.add_subcommand("theory", "Print outage, participation and bound values");
    th_cmd->add_option("--clients", th_clients, "Client counts, e.g. 1-10 or 2,4,8")->capture_default_str();
    th_cmd->add_option("--p-e", th_pes, "Outage probabilities, comma-separated")->capture_default_str();
    th_cmd->add_option("--L", th.L, "Smoothness constant")->capture_default_str();
    th_cmd->add_option("--gap", th.gap, "Initial optimality gap")->capture_default_str();
    th_cmd->add_option("--sigma2", th.sigma2, "Gradient noise variance")->capture_default_str();
    th_cmd->add_option("--D", th_d, "Dissimilarity bound, same for every client")->capture_default_str();
    th_cmd->add_option("--j2", th_j2, "Per-round quantization bound J^2")->capture_default_str();
    th_cmd->add_option("--T", th.T, "Rounds")->capture_default_str();
    th_cmd->add_option("--I", th.I, "Local iterations")->capture_default_str();
    th_cmd->add_option("--b", th.b, "Batch size")->capture_default_str();
    th_cmd->add_option("--out", th_out, "Write the table here instead of stdout");

    cli::VerifyOptions vo;
    auto* vf_cmd = app.add_subcommand("verify", "Run the property checks; exit 3 on failure");
    vf_cmd->add_option("--seed", vo.seed, "Seed")->capture_default_str();
    vf_cmd->add_option("--mds-budget", vo.mds_budget, "Subsets per MDS check")->capture_default_str();
    vf_cmd->add_option("--participation-draws", vo.participation_draws, "Draws per participation check")->capture_default_str();
    vf_cmd->add_option("--outage-trials", vo.outage_trials, "Trials per outage check")->capture_default_str();

    std::size_t dump_clients = 10;
    std::string dump_field = "binary", dump_out;
    unsigned dump_width = 8;
    std::optional<std::uint32_t> dump_poly;
    std::uint32_t dump_modulus = 0;
    auto* dc_cmd = app.add_subcommand("dump-code", "Write the encoding matrix as CSV of symbol values");
    dc_cmd->add_option("--clients", dump_clients, "Client count M")->capture_default_str();
    dc_cmd->add_option("--field", dump_field, "binary or prime")->capture_default_str();
    dc_cmd->add_option("--width", dump_width, "w for GF(2^w)")->capture_default_str();
    dc_cmd->add_option("--polynomial", dump_poly, "Reduction polynomial (default per width)");
    dc_cmd->add_option("--modulus", dump_modulus, "p for GF(p)");
    dc_cmd->add_option("--out", dump_out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run_cmd) {
            return cmd_run(run);
        }
        if (*th_cmd) {
            th.D.assign(1, th_d);
            std::vector<std::size_t> ms;
            std::vector<double> ps;
            try {
                ms = parse_counts(th_clients);
                ps = parse_reals(th_pes);
            } catch (const std::exception&) {
                std::cerr << "config error: cannot parse --clients or --p-e\n";
                return kConfigError;
            }
            th.j2_sum = 0.0;
            std::vector<cli::TheoryRow> rows;
            for (std::size_t m : ms) {
                theory::AssumptionConstants c = th;
                c.j2_sum = theory::AssumptionConstants::quantization_sum(th.T, m, th_j2);
                auto part = cli::theory_table({m}, ps, c);
                rows.insert(rows.end(), part.begin(), part.end());
            }
            if (th_out.empty()) {
                cli::write_theory_table(std::cout, rows);
            } else {
                std::ofstream f(th_out, std::ios::binary);
                cli::write_theory_table(f, rows);
            }
            return kOk;
        }
        if (*vf_cmd) {
            bool ok = true;
            for (const auto& r : cli::run_verification(vo)) {
                std::cout << fmt::format("{} {}: {}\n", r.passed ? "PASS" : "FAIL", r.name, r.detail);
                ok = ok && r.passed;
            }
            return ok ? kOk : kVerifyFailure;
        }
        if (*dc_cmd) {
            gf::FieldSpec spec;
            if (dump_field == "binary") {
                spec = gf::FieldSpec::binary(dump_width,
                                             dump_poly ? *dump_poly : gf::FieldSpec::default_polynomial(dump_width));
            } else if (dump_field == "prime") {
                spec = gf::FieldSpec::prime(dump_modulus);
            } else {
                std::cerr << "config error: --field must be binary or prime\n";
                return kConfigError;
            }
            const gf::GaloisField field(spec);
            const auto code = dnc::build_encoding_matrix(dump_clients, field);
            std::ofstream file;
            std::ostream& out = dump_out.empty() ? std::cout : (file.open(dump_out, std::ios::binary), file);
            const auto& a = code.matrix();
            for (std::size_t r = 0; r < a.rows(); ++r) {
                for (std::size_t c = 0; c < a.cols(); ++c) {
                    out << (c ? "," : "") << a(r, c).value();
                }
                out << '\n';
            }
            return kOk;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRunFailure;
    }
    return kOk;
}
