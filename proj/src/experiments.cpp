#include "blockspec/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace blockspec {

const char* to_string(Method method) {
    return method == Method::BlockPrior ? "BLOCK_PRIOR" : "NO_PRIOR";
}

Method method_from_string(const std::string& name) {
    if (name == "BLOCK_PRIOR") return Method::BlockPrior;
    if (name == "NO_PRIOR") return Method::NoPrior;
    throw std::invalid_argument("unknown method: " + name);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_stream(std::uint64_t base_seed, std::uint64_t s, std::uint64_t m,
                            std::uint64_t trial) {
    std::uint64_t h = splitmix64(base_seed);
    h = splitmix64(h ^ s);
    h = splitmix64(h ^ m);
    h = splitmix64(h ^ trial);
    return h;
}

void SweepConfig::validate() const {
    if (n < 2) throw std::invalid_argument("SweepConfig: n must be >= 2");
    if (trials < 1) throw std::invalid_argument("SweepConfig: trials must be >= 1");
    if (s_values.empty() || m_values.empty() || methods.empty())
        throw std::invalid_argument("SweepConfig: s_values, m_values, methods must be nonempty");
    for (int s : s_values)
        if (s < 1) throw std::invalid_argument("SweepConfig: s values must be >= 1");
    for (int m : m_values)
        if (m < 1 || m > n) throw std::invalid_argument("SweepConfig: m values must lie in [1, n]");
}

TrialResult run_trial(std::uint64_t base_seed, int trial_index, int n, int s, int m,
                      const BlockPrior& prior, Method method, const SolverConfig& solver_cfg,
                      const LocalizationConfig& loc_cfg) {
    TrialResult out;
    const std::uint64_t stream = derive_stream(base_seed, static_cast<std::uint64_t>(s),
                                               static_cast<std::uint64_t>(m),
                                               static_cast<std::uint64_t>(trial_index));
    Rng rng(stream);
    const LineSpectralSignal signal = random_signal(rng, s, prior);
    const SampleSet mask = random_mask(rng, n, m);
    const Observation obs = sample(synthesize(signal, n), mask);

    const auto t0 = std::chrono::steady_clock::now();
    try {
        const std::optional<BlockPrior> maybe_prior =
            method == Method::BlockPrior ? std::optional<BlockPrior>(prior) : std::nullopt;
        const RecoveredSpectrum rec = estimate(obs, maybe_prior, solver_cfg, loc_cfg);
        out.status = rec.status;
        out.dual_value = rec.dual_value;
        out.success = rec.status == SolveStatus::Solved && verdict(signal, rec, loc_cfg.match_tol);
    } catch (const std::exception& e) {
        out.error = e.what();
        out.success = false;
    }
    out.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

SweepResult sweep(const SweepConfig& config, int threads) {
    config.validate();
    if (threads < 1) threads = 1;

    struct CellSpec {
        Method method;
        int s, m;
    };
    std::vector<CellSpec> cells;
    for (Method method : config.methods)
        for (int s : config.s_values)
            for (int m : config.m_values) cells.push_back({method, s, m});

    const std::size_t total_tasks = cells.size() * static_cast<std::size_t>(config.trials);
    std::vector<TrialResult> trial_results(total_tasks);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= total_tasks) return;
            const std::size_t cell = task / static_cast<std::size_t>(config.trials);
            const int trial = static_cast<int>(task % static_cast<std::size_t>(config.trials));
            const CellSpec& spec = cells[cell];
            trial_results[task] = run_trial(config.base_seed, trial, config.n, spec.s, spec.m,
                                            config.prior, spec.method);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    SweepResult result;
    for (std::size_t cell = 0; cell < cells.size(); ++cell) {
        SweepCell agg;
        agg.method = cells[cell].method;
        agg.s = cells[cell].s;
        agg.m = cells[cell].m;
        agg.trials = config.trials;
        double seconds = 0.0;
        for (int trial = 0; trial < config.trials; ++trial) {
            const TrialResult& tr =
                trial_results[cell * static_cast<std::size_t>(config.trials) +
                              static_cast<std::size_t>(trial)];
            if (tr.success) ++agg.successes;
            if (tr.status != SolveStatus::Solved) ++agg.solver_failures;
            seconds += tr.solve_seconds;
        }
        agg.p = static_cast<double>(agg.successes) / config.trials;
        agg.mean_solve_seconds = seconds / config.trials;
        result.cells.push_back(agg);
    }
    std::sort(result.cells.begin(), result.cells.end(), [](const SweepCell& a, const SweepCell& b) {
        const int cmp = std::string(to_string(a.method)).compare(to_string(b.method));
        if (cmp != 0) return cmp < 0;
        if (a.s != b.s) return a.s < b.s;
        return a.m < b.m;
    });
    return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& os) {
    os << "method,s,m,trials,successes,P,mean_solve_seconds\n";
    char buf[64];
    for (const auto& c : result.cells) {
        os << to_string(c.method) << ',' << c.s << ',' << c.m << ',' << c.trials << ','
           << c.successes << ',';
        std::snprintf(buf, sizeof buf, "%.17g", c.p);
        os << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", c.mean_solve_seconds);
        os << buf << '\n';
    }
}

bool SelftestReport::all_pass() const {
    for (const auto& e : entries)
        if (!e.pass) return false;
    return !entries.empty();
}

namespace {

SelftestEntry timed(const std::string& name, bool (*fn)(std::string&)) {
    SelftestEntry entry;
    entry.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        entry.pass = fn(entry.detail);
    } catch (const std::exception& e) {
        entry.pass = false;
        entry.detail = e.what();
    }
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return entry;
}

bool check_rank_one_identity(std::string& detail) {
    Rng rng(0x5e1f7e57u);
    const int n = 16;
    for (int rep = 0; rep < 10; ++rep) {
        DualVector q;
        q.q.resize(n);
        for (auto& v : q.q) v = cplx(rng.normal(), rng.normal());
        Eigen::MatrixXcd qq(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) qq(i, j) = q.q[i] * std::conj(q.q[j]);
        std::vector<cplx> c(n);
        for (int k = 0; k < n; ++k) c[k] = theta_trace(qq, k);
        for (int t = 0; t < 100; ++t) {
            const double f = rng.uniform();
            cplx acc = c[0];
            for (int k = 1; k < n; ++k)
                acc += 2.0 * (c[k] * std::exp(cplx(0.0, -2.0 * M_PI * f * k))).real();
            const double direct = std::norm(eval_dual_poly(q, f));
            if (std::abs(acc.real() - direct) > 1e-9 * std::max(1.0, direct)) {
                detail = "mismatch at f=" + std::to_string(f);
                return false;
            }
        }
    }
    return true;
}

bool check_d_sign(std::string& detail) {
    Rng rng(0xd51c4u);
    for (int rep = 0; rep < 1000; ++rep) {
        const double lo = rng.uniform(-M_PI + 0.01, M_PI - 0.03);
        const double hi = rng.uniform(lo + 0.02, M_PI - 0.01);
        const AngleBand band(lo, hi);
        const DCoefficients d = d_coeffs(band);
        for (int j = 0; j < 200; ++j) {
            const double w = lo + (hi - lo) * j / 199.0;
            if (d_eval(d, w) < -1e-10) {
                detail = "negative inside band";
                return false;
            }
        }
        const double out = rng.uniform(-M_PI, M_PI);
        if ((out < lo - 1e-3 || out > hi + 1e-3) && d_eval(d, out) > -1e-10) {
            detail = "nonnegative outside band";
            return false;
        }
    }
    return true;
}

bool check_analytic_sdps(std::string& detail) {
    {
        // maximize x subject to [[1, x],[x, 1]] >= 0 -> x* = 1
        ConicProgram prog;
        prog.add_psd_block(2);
        prog.objective.assign(prog.num_vars, 0.0);
        prog.objective[Svec::idx(2, 1, 0)] = M_SQRT1_2;  // svec stores sqrt(2) x
        Equality e0;
        e0.terms = {{Svec::idx(2, 0, 0), 1.0}};
        e0.rhs = 1.0;
        Equality e1;
        e1.terms = {{Svec::idx(2, 1, 1), 1.0}};
        e1.rhs = 1.0;
        prog.equalities = {e0, e1};
        const SolverResult res = solve(prog);
        const double x = res.v[Svec::idx(2, 1, 0)] * M_SQRT1_2;
        if (res.status != SolveStatus::Solved || std::abs(x - 1.0) > 1e-6) {
            detail = "max-x SDP off";
            return false;
        }
    }
    {
        // minimize t subject to [[t, 1],[1, t]] >= 0 -> t* = 1
        ConicProgram prog;
        prog.add_psd_block(2);
        prog.objective.assign(prog.num_vars, 0.0);
        prog.objective[Svec::idx(2, 0, 0)] = -1.0;  // maximize -t
        Equality tie;
        tie.terms = {{Svec::idx(2, 0, 0), 1.0}, {Svec::idx(2, 1, 1), -1.0}};
        tie.rhs = 0.0;
        Equality pin;
        pin.terms = {{Svec::idx(2, 1, 0), 1.0}};
        pin.rhs = M_SQRT2;
        prog.equalities = {tie, pin};
        const SolverResult res = solve(prog);
        const double t = res.v[Svec::idx(2, 0, 0)];
        if (res.status != SolveStatus::Solved || std::abs(t - 1.0) > 1e-6) {
            detail = "min-t SDP off";
            return false;
        }
    }
    return true;
}

bool check_small_strong_duality(std::string& detail) {
    const int n = 8;
    for (int rep = 0; rep < 3; ++rep) {
        Rng rng(derive_stream(0xac5e57ULL, n, 6, static_cast<std::uint64_t>(rep)));
        const BlockPrior full{{FrequencyBand(0.0, 1.0)}};
        const LineSpectralSignal sig = random_signal(rng, 2, full);
        const SampleSet mask = random_mask(rng, n, 6);
        const Observation obs = sample(synthesize(sig, n), mask);
        const BuiltProblem primal = build_primal_sdp(n, obs);
        const BuiltProblem dual = build_global_dual(n, obs);
        const SolverResult rp = solve(primal.program);
        const SolverResult rd = solve(dual.program);
        const double vp = reported_value(primal, rp.objective);
        const double vd = reported_value(dual, rd.objective);
        if (rp.status != SolveStatus::Solved || rd.status != SolveStatus::Solved ||
            std::abs(vp - vd) > 1e-4) {
            detail = "primal " + std::to_string(vp) + " vs dual " + std::to_string(vd);
            return false;
        }
    }
    return true;
}

}  // namespace

SelftestReport run_selftest() {
    SelftestReport report;
    report.entries.push_back(timed("rank_one_gram_identity", check_rank_one_identity));
    report.entries.push_back(timed("band_indicator_sign", check_d_sign));
    report.entries.push_back(timed("analytic_sdps", check_analytic_sdps));
    report.entries.push_back(timed("small_strong_duality", check_small_strong_duality));
    return report;
}

}  // namespace blockspec
