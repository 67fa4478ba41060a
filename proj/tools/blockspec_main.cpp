#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "blockspec/estimator.hpp"
#include "blockspec/experiments.hpp"
#include "blockspec/json_io.hpp"
#include "blockspec/version.hpp"

namespace {

using namespace blockspec;

BlockPrior parse_bands(const std::string& spec) {
    std::vector<FrequencyBand> bands;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("band must look like lo:hi, got '" + item + "'");
        const double lo = std::stod(item.substr(0, colon));
        const double hi = std::stod(item.substr(colon + 1));
        bands.emplace_back(lo, hi);
    }
    if (bands.empty()) throw std::invalid_argument("empty band list");
    return BlockPrior(std::move(bands));
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

int cmd_simulate(int n, int s, int m, const std::string& bands, std::uint64_t seed,
                 const std::string& out_path) {
    const BlockPrior prior = parse_bands(bands);
    Rng rng(seed);
    const LineSpectralSignal signal = random_signal(rng, s, prior);
    const SampleSet mask = random_mask(rng, n, m);
    const Observation obs = sample(synthesize(signal, n), mask);
    write_file(out_path, dump_json(instance_to_json(signal, prior, obs)));
    return 0;
}

int cmd_estimate(const std::string& in_path, const std::string& out_path, bool no_prior,
                 const std::string& dualpoly_path, double eps, int max_iter, int grid) {
    const nlohmann::json j = read_json_file(in_path);
    const Observation obs = observation_from_json(j);
    std::optional<BlockPrior> prior;
    if (!no_prior) prior = prior_from_json(j);

    SolverConfig scfg;
    scfg.eps_abs = scfg.eps_rel = eps;
    scfg.max_iter = max_iter;
    LocalizationConfig lcfg;
    lcfg.grid_size = grid;

    const RecoveredSpectrum rec = estimate(obs, prior, scfg, lcfg);
    write_file(out_path, dump_json(spectrum_to_json(rec)));
    if (!dualpoly_path.empty()) {
        std::ostringstream csv;
        write_dual_poly_csv(rec, csv);
        write_file(dualpoly_path, csv.str());
    }
    return rec.status == SolveStatus::Solved ? 0 : 2;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path, int threads) {
    const SweepConfig cfg = sweep_config_from_json(read_json_file(config_path));
    const SweepResult result = sweep(cfg, threads);
    std::ostringstream csv;
    write_sweep_csv(result, csv);
    write_file(out_path, csv.str());
    return 0;
}

int cmd_selftest(bool verbose) {
    const SelftestReport report = run_selftest();
    for (const auto& e : report.entries) {
        if (verbose || !e.pass) {
            std::printf("%-28s %s  (%.3f s)%s%s\n", e.name.c_str(), e.pass ? "PASS" : "FAIL",
                        e.seconds, e.detail.empty() ? "" : "  ", e.detail.c_str());
        }
    }
    std::printf("selftest: %zu checks, %s\n", report.entries.size(),
                report.all_pass() ? "all passed" : "FAILURES");
    return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Off-the-grid line spectrum estimation with block frequency priors"};
    app.set_version_flag("--version", std::string("blockspec ") + blockspec::kVersion);
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "Draw a random sparse signal and an observation mask");
    int n = 64, s = 5, m = 20, max_iter = 50000, grid = 1 << 16, threads = 0;
    double eps = 1e-7;
    std::uint64_t seed = 0;
    std::string bands, out_path, in_path, dualpoly_path, config_path;
    bool no_prior = false, verbose = false;
    sim->add_option("--n", n, "regular sample count")->required();
    sim->add_option("--s", s, "number of frequency components")->required();
    sim->add_option("--m", m, "observed sample count")->required();
    sim->add_option("--bands", bands, "prior bands, lo:hi[,lo:hi...]")->required();
    sim->add_option("--seed", seed, "64-bit RNG seed")->required();
    sim->add_option("--out", out_path, "output JSON path")->required();

    auto* est = app.add_subcommand("estimate", "Recover frequencies from an instance file");
    est->add_option("--in", in_path, "instance JSON from simulate")->required();
    est->add_option("--out", out_path, "recovered spectrum JSON path")->required();
    est->add_flag("--no-prior", no_prior, "ignore the prior bands in the input");
    est->add_option("--dualpoly", dualpoly_path, "write |Q_f| trace CSV here");
    est->add_option("--eps", eps, "solver tolerance (abs and rel)");
    est->add_option("--max-iter", max_iter, "solver iteration cap");
    est->add_option("--grid", grid, "localization grid size");

    auto* swp = app.add_subcommand("sweep", "Monte-Carlo recovery-probability grid");
    swp->add_option("--config", config_path, "sweep config JSON")->required();
    swp->add_option("--out", out_path, "output CSV path")->required();
    swp->add_option("--threads", threads, "worker threads (default: hardware)");

    auto* st = app.add_subcommand("selftest", "Run the fast invariant suite");
    st->add_flag("--verbose", verbose, "print per-check timing");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return cmd_simulate(n, s, m, bands, seed, out_path);
        if (est->parsed())
            return cmd_estimate(in_path, out_path, no_prior, dualpoly_path, eps, max_iter, grid);
        if (swp->parsed()) {
            if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
            if (threads <= 0) threads = 1;
            return cmd_sweep(config_path, out_path, threads);
        }
        if (st->parsed()) return cmd_selftest(verbose);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
