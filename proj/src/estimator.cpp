#include "blockspec/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace blockspec {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kGolden = 0.61803398874989484820;

double circ_dist(double a, double b) {
    double d = std::abs(a - b);
    d = std::fmod(d, 1.0);
    return std::min(d, 1.0 - d);
}

double abs_q_at(const DualVector& q, double f) {
    double fw = std::fmod(f, 1.0);
    if (fw < 0.0) fw += 1.0;
    return std::abs(eval_dual_poly(q, fw));
}

/// Golden-section maximization of |Q_f| on [a, b] (a < b, possibly unwrapped
/// past 1 for circular runs).
double refine_peak(const DualVector& q, double a, double b, int iters) {
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double g1 = abs_q_at(q, x1);
    double g2 = abs_q_at(q, x2);
    for (int it = 0; it < iters; ++it) {
        if (g1 < g2) {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + kGolden * (b - a);
            g2 = abs_q_at(q, x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - kGolden * (b - a);
            g1 = abs_q_at(q, x1);
        }
    }
    return 0.5 * (a + b);
}

struct Run {
    double lo, hi;  // grid-point frequencies (hi may exceed 1 for wrap runs)
    int points;
};

void check_loc_config(const LocalizationConfig& cfg, int n) {
    if (cfg.grid_size < 4 * n)
        throw std::invalid_argument("localize: grid_size must be >= 4n");
    if (!(cfg.peak_threshold > 0.0 && cfg.peak_threshold < 1.0))
        throw std::invalid_argument("localize: peak_threshold must lie in (0,1)");
    if (!(cfg.match_tol > 0.0) || cfg.refine_iters < 1)
        throw std::invalid_argument("localize: bad match_tol or refine_iters");
}

}  // namespace

std::vector<double> localize(const DualVector& q, const std::optional<BlockPrior>& region,
                             const LocalizationConfig& cfg) {
    check_loc_config(cfg, q.n());
    const int G = cfg.grid_size;
    const double step = 1.0 / G;
    const std::vector<cplx> grid = eval_dual_poly_grid(q, G);
    auto above = [&](int j) { return std::abs(grid[static_cast<std::size_t>(j)]) >= cfg.peak_threshold; };

    const double region_measure = region ? region->total_width() : 1.0;
    std::vector<Run> runs;

    if (region) {
        for (const auto& band : region->bands) {
            const int j_lo = static_cast<int>(std::ceil(band.f_lo * G - 1e-9));
            const int j_hi = std::min(G - 1, static_cast<int>(std::floor(band.f_hi * G + 1e-9)));
            int j = j_lo;
            while (j <= j_hi) {
                if (!above(j)) {
                    ++j;
                    continue;
                }
                const int start = j;
                while (j <= j_hi && above(j)) ++j;
                Run r;
                r.points = j - start;
                r.lo = std::max(band.f_lo, (start - 1) * step);
                r.hi = std::min(band.f_hi, j * step);
                runs.push_back(r);
            }
        }
    } else {
        // Full circle: runs are maximal on the cyclic grid.
        std::vector<bool> mask(static_cast<std::size_t>(G));
        bool any_below = false;
        for (int j = 0; j < G; ++j) {
            mask[static_cast<std::size_t>(j)] = above(j);
            any_below = any_below || !mask[static_cast<std::size_t>(j)];
        }
        if (!any_below)
            throw std::runtime_error("flat dual polynomial - no isolated peaks");
        // Start scanning just past a below-threshold point so runs never split.
        int origin = 0;
        while (mask[static_cast<std::size_t>(origin)]) ++origin;
        int count = 0;
        while (count < G) {
            const int j = (origin + count) % G;
            if (!mask[static_cast<std::size_t>(j)]) {
                ++count;
                continue;
            }
            const int start_count = count;
            while (count < G && mask[static_cast<std::size_t>((origin + count) % G)]) ++count;
            Run r;
            r.points = count - start_count;
            const int start = (origin + start_count) % G;
            r.lo = (start - 1) * step;
            r.hi = r.lo + (r.points + 1) * step;
            runs.push_back(r);
        }
    }

    for (const auto& r : runs)
        if (r.points * step > 0.1 * region_measure)
            throw std::runtime_error("flat dual polynomial - no isolated peaks");

    struct Peak {
        double f;
        double value;
    };
    std::vector<Peak> peaks;
    for (const auto& r : runs) {
        double f = refine_peak(q, r.lo, r.hi, cfg.refine_iters);
        f = std::fmod(f, 1.0);
        if (f < 0.0) f += 1.0;
        peaks.push_back({f, abs_q_at(q, f)});
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.f < b.f; });

    // Merge refined peaks closer than 2/G, keeping the larger modulus.
    const double merge_tol = 2.0 * step;
    std::vector<Peak> merged;
    for (const auto& p : peaks) {
        if (!merged.empty() && circ_dist(merged.back().f, p.f) < merge_tol) {
            if (p.value > merged.back().value) merged.back() = p;
        } else {
            merged.push_back(p);
        }
    }
    if (!region && merged.size() > 1 &&
        circ_dist(merged.front().f, merged.back().f) < merge_tol) {
        if (merged.back().value > merged.front().value) merged.front() = merged.back();
        merged.pop_back();
    }
    std::sort(merged.begin(), merged.end(), [](const Peak& a, const Peak& b) { return a.f < b.f; });

    std::vector<double> freqs;
    freqs.reserve(merged.size());
    for (const auto& p : merged) freqs.push_back(p.f);
    return freqs;
}

std::vector<cplx> recover_amplitudes(const std::vector<double>& freqs, const Observation& obs) {
    const int s = static_cast<int>(freqs.size());
    const int m = static_cast<int>(obs.values.size());
    if (s == 0) return {};
    if (s > m) throw std::invalid_argument("recover_amplitudes: more frequencies than samples");
    for (int a = 0; a < s; ++a)
        for (int b = a + 1; b < s; ++b)
            if (freqs[static_cast<std::size_t>(a)] == freqs[static_cast<std::size_t>(b)])
                throw std::invalid_argument("recover_amplitudes: duplicate frequency");

    Eigen::MatrixXcd E(m, s);
    Eigen::VectorXcd x(m);
    for (int j = 0; j < m; ++j) {
        const double l = obs.sample_set.observed[static_cast<std::size_t>(j)];
        for (int k = 0; k < s; ++k)
            E(j, k) = std::exp(cplx(0.0, kTwoPi * freqs[static_cast<std::size_t>(k)] * l));
        x[j] = obs.values[static_cast<std::size_t>(j)];
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(E, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smin = svd.singularValues()(s - 1);
    const double smax = svd.singularValues()(0);
    if (!(smin > 0.0) || smax / smin > 1e12)
        throw std::runtime_error("recover_amplitudes: design matrix is rank deficient");
    const Eigen::VectorXcd c = svd.solve(x);
    return std::vector<cplx>(c.data(), c.data() + s);
}

std::vector<cplx> reconstruct(const std::vector<double>& freqs, const std::vector<cplx>& coeffs,
                              int n) {
    std::vector<cplx> x(static_cast<std::size_t>(n), cplx{0.0, 0.0});
    for (std::size_t k = 0; k < freqs.size(); ++k)
        for (int l = 0; l < n; ++l)
            x[static_cast<std::size_t>(l)] +=
                coeffs[k] * std::exp(cplx(0.0, kTwoPi * freqs[k] * l));
    return x;
}

RecoveredSpectrum estimate(const Observation& observation, const std::optional<BlockPrior>& prior,
                           const SolverConfig& solver_cfg, const LocalizationConfig& loc_cfg) {
    const int n = observation.sample_set.n;
    BuiltProblem built = prior ? build_block_dual(n, observation, *prior)
                              : build_global_dual(n, observation);
    const SolverResult res = solve(built.program, solver_cfg);

    RecoveredSpectrum out;
    out.status = res.status;
    out.n = n;
    out.dual_value = res.objective;
    if (res.status == SolveStatus::InfeasibleLikely) return out;

    const ExtractedSolution ex = extract_solution(built, res.v);
    DualVector q;
    q.q = ex.q;
    // Entries off the observed set are pinned to zero by the program;
    // make them exact in the reported dual vector.
    std::size_t next = 0;
    for (int l = 0; l < n; ++l) {
        if (next < observation.sample_set.observed.size() &&
            observation.sample_set.observed[next] == l) {
            ++next;
            continue;
        }
        q.q[static_cast<std::size_t>(l)] = cplx{0.0, 0.0};
    }

    const int trace_size = 2048;
    const std::vector<cplx> trace = eval_dual_poly_grid(q, trace_size);
    out.dual_poly_grid.reserve(static_cast<std::size_t>(trace_size));
    for (int j = 0; j < trace_size; ++j)
        out.dual_poly_grid.emplace_back(static_cast<double>(j) / trace_size,
                                        std::abs(trace[static_cast<std::size_t>(j)]));

    if (res.status != SolveStatus::Solved) return out;

    out.freqs = localize(q, prior, loc_cfg);
    out.coeffs = recover_amplitudes(out.freqs, observation);
    return out;
}

bool verdict(const LineSpectralSignal& truth, const RecoveredSpectrum& recovered,
             double match_tol) {
    const int s = truth.sparsity();
    if (static_cast<int>(recovered.freqs.size()) != s) return false;

    std::vector<double> t = truth.freqs;
    std::sort(t.begin(), t.end());
    // Greedy nearest matching; exact when the tolerance balls are disjoint.
    std::vector<bool> used(recovered.freqs.size(), false);
    for (double ft : t) {
        int best = -1;
        double best_d = match_tol;
        for (std::size_t j = 0; j < recovered.freqs.size(); ++j) {
            if (used[j]) continue;
            const double d = circ_dist(ft, recovered.freqs[j]);
            if (d <= best_d) {
                best_d = d;
                best = static_cast<int>(j);
            }
        }
        if (best < 0) return false;
        used[static_cast<std::size_t>(best)] = true;
    }

    const int n = recovered.n > 0 ? recovered.n : 2 * s;
    const std::vector<cplx> x_true = synthesize(truth, n);
    const std::vector<cplx> x_rec = reconstruct(recovered.freqs, recovered.coeffs, n);
    double err2 = 0.0, ref2 = 0.0;
    for (int l = 0; l < n; ++l) {
        err2 += std::norm(x_rec[static_cast<std::size_t>(l)] - x_true[static_cast<std::size_t>(l)]);
        ref2 += std::norm(x_true[static_cast<std::size_t>(l)]);
    }
    if (ref2 == 0.0) return err2 <= 1e-24;
    return std::sqrt(err2 / ref2) <= 1e-3;
}

}  // namespace blockspec
