#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "blockspec/estimator.hpp"

namespace blockspec {

enum class Method { BlockPrior, NoPrior };

const char* to_string(Method method);
Method method_from_string(const std::string& name);

std::uint64_t splitmix64(std::uint64_t x);

/// Independent per-trial RNG stream seed. The method is deliberately not part
/// of the hash so the two pipelines see identical instances.
std::uint64_t derive_stream(std::uint64_t base_seed, std::uint64_t s, std::uint64_t m,
                            std::uint64_t trial);

struct SweepConfig {
    int n = 64;
    std::vector<int> s_values;
    std::vector<int> m_values;
    int trials = 50;
    BlockPrior prior;
    std::uint64_t base_seed = 0;
    std::vector<Method> methods{Method::BlockPrior, Method::NoPrior};

    void validate() const;
};

struct SweepCell {
    Method method;
    int s = 0;
    int m = 0;
    int trials = 0;
    int successes = 0;
    double p = 0.0;
    double mean_solve_seconds = 0.0;
    int solver_failures = 0;  // MAX_ITER / INFEASIBLE_LIKELY trials, diagnostic only
};

struct SweepResult {
    std::vector<SweepCell> cells;  // sorted by (method name, s, m)
};

struct TrialResult {
    bool success = false;
    SolveStatus status = SolveStatus::MaxIter;
    int iterations = 0;
    double solve_seconds = 0.0;
    double dual_value = 0.0;
    std::string error;  // set when the pipeline raised instead of finishing
};

/// Solver settings used by the Monte-Carlo harness: type defaults except for
/// a larger initial penalty, which roughly halves iteration counts on the
/// n = 64 instance family.
inline SolverConfig harness_solver_config() {
    SolverConfig cfg;
    cfg.rho = 10.0;
    return cfg;
}

/// One seeded end-to-end trial: draw signal and mask from the derived stream,
/// run the chosen pipeline, judge with verdict. Solver non-convergence is a
/// failure, not an error.
TrialResult run_trial(std::uint64_t base_seed, int trial_index, int n, int s, int m,
                      const BlockPrior& prior, Method method,
                      const SolverConfig& solver_cfg = harness_solver_config(),
                      const LocalizationConfig& loc_cfg = {});

/// All cells x trials, embarrassingly parallel; the aggregate is independent
/// of thread count and scheduling.
SweepResult sweep(const SweepConfig& config, int threads = 1);

/// CSV with header `method,s,m,trials,successes,P,mean_solve_seconds`.
void write_sweep_csv(const SweepResult& result, std::ostream& os);

struct SelftestEntry {
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    std::string detail;
};

struct SelftestReport {
    std::vector<SelftestEntry> entries;
    bool all_pass() const;
};

/// Fast invariant suite (rank-one Gram identity, band indicator sign pattern,
/// analytic SDPs, small-scale primal/dual agreement).
SelftestReport run_selftest();

}  // namespace blockspec
